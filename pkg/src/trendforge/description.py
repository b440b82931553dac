"""Trend descriptions: deterministic rule-based describer and a chat-completion client."""

from __future__ import annotations

import os
import threading
import time
from dataclasses import dataclass, replace
from typing import Sequence

import httpx
import numpy as np

from .trend_summary import TrendSummary


class DescriptionError(Exception):
    pass


class TemplateSlotMissing(DescriptionError):
    pass


class AuthError(DescriptionError):
    pass


class RateLimited(DescriptionError):
    pass


class EmptyCompletion(DescriptionError):
    pass


class CompletionFailed(DescriptionError):
    pass


# ---------------------------------------------------------------------------
# Prompt construction


@dataclass(frozen=True)
class PromptTemplate:
    text: str
    version: str

    def __post_init__(self) -> None:
        if self.text.count("{values}") != 1:
            raise TemplateSlotMissing("template must contain {values} exactly once")


DEFAULT_TEMPLATE = PromptTemplate(
    text=(
        "The following is the smoothed trend of a time series, sampled at 25 "
        "evenly spaced points: {values}. Describe the overall trend of this "
        "time series in plain language. Do not repeat the numbers."
    ),
    version="v1",
)

REPHRASE_TEMPLATE = (
    "Rephrase the following description of a time-series trend so its meaning "
    "is unchanged but the wording differs: {text}"
)


def format_value(value: float) -> str:
    return f"{value + 0.0:.1f}"


def build_prompt(summary: TrendSummary, template: PromptTemplate = DEFAULT_TEMPLATE) -> str:
    rendered = "[" + ", ".join(format_value(v) for v in summary.values) + "]"
    return template.text.replace("{values}", rendered)


@dataclass(frozen=True)
class TrendDescription:
    text: str
    generator: str  # "llm" | "rules" | "llm_rephrased"
    model_id: str
    summary_id: str = ""

    def __post_init__(self) -> None:
        if not self.text.strip():
            raise ValueError("description text must be non-empty")


# ---------------------------------------------------------------------------
# Rule-based describer

MAX_SPLITS = 3
MIN_SEGMENT = 2
FLAT_FRACTION = 0.05
SPLIT_IMPROVEMENT = 0.25

_PHRASES = {
    ("up", "slight"): "edges up slightly",
    ("up", "moderate"): "increases steadily",
    ("up", "steep"): "climbs steeply",
    ("down", "slight"): "dips slightly",
    ("down", "moderate"): "decreases steadily",
    ("down", "steep"): "drops sharply",
    ("flat", None): "stays roughly flat",
}

FLAT_SENTENCE = "The series stays essentially flat, holding a stable value of {value} throughout."


@dataclass(frozen=True)
class Segment:
    start: int
    end: int  # exclusive
    slope: float
    label: str  # up | down | flat
    magnitude: str | None  # slight | moderate | steep; None for flat


def _line_fit_tables(values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(sse, slope) of the least-squares line over every span [a, b), b-a >= 2.

    Closed form via prefix sums; entries outside the valid triangle are inf/0.
    """
    m = values.size
    y = values - values.mean()  # centering keeps the sums well conditioned
    x = np.arange(m, dtype=float)
    p1 = np.concatenate([[0.0], np.cumsum(x)])
    p2 = np.concatenate([[0.0], np.cumsum(x * x)])
    py = np.concatenate([[0.0], np.cumsum(y)])
    pxy = np.concatenate([[0.0], np.cumsum(x * y)])
    pyy = np.concatenate([[0.0], np.cumsum(y * y)])
    sse = np.full((m + 1, m + 1), np.inf)
    slope = np.zeros((m + 1, m + 1))
    for a in range(m - MIN_SEGMENT + 1):
        b = np.arange(a + MIN_SEGMENT, m + 1)
        n = (b - a).astype(float)
        s1 = p1[b] - p1[a]
        s2 = p2[b] - p2[a]
        sy = py[b] - py[a]
        sxy = pxy[b] - pxy[a]
        syy = pyy[b] - pyy[a]
        beta = (n * sxy - s1 * sy) / (n * s2 - s1 * s1)
        alpha = (sy - beta * s1) / n
        sse[a, b] = np.maximum(syy - alpha * sy - beta * sxy, 0.0)
        slope[a, b] = beta
    return sse, slope


def _best_splits(values: np.ndarray, sse: np.ndarray) -> list[int]:
    """Exact piecewise-linear fit with at most MAX_SPLITS change points.

    The additive objective makes the exact optimum reachable by dynamic
    programming over segment boundaries.  Split counts grow one at a time and
    only while each extra split trims the squared error by at least
    SPLIT_IMPROVEMENT of the previous best.
    """
    m = values.size
    scale = float(np.var(values)) * m + 1e-30
    # dp[k][j]: best SSE covering [0, j) with exactly k splits
    dp = [sse[0].copy()]
    back: list[np.ndarray] = [np.zeros(m + 1, dtype=int)]
    for k in range(1, MAX_SPLITS + 1):
        prev = dp[k - 1]
        cur = np.full(m + 1, np.inf)
        arg = np.zeros(m + 1, dtype=int)
        for j in range(MIN_SEGMENT * (k + 1), m + 1):
            cand = prev[: j - MIN_SEGMENT + 1] + sse[: j - MIN_SEGMENT + 1, j]
            i = int(np.argmin(cand))
            cur[j], arg[j] = cand[i], i
        dp.append(cur)
        back.append(arg)

    chosen = 0
    for k in range(1, MAX_SPLITS + 1):
        if dp[chosen][m] <= 1e-12 * scale:
            break
        if dp[k][m] < dp[chosen][m] * (1.0 - SPLIT_IMPROVEMENT):
            chosen = k
        else:
            break
    splits: list[int] = []
    j = m
    for k in range(chosen, 0, -1):
        j = int(back[k][j])
        splits.append(j)
    return sorted(splits)


def segment_summary(values: Sequence[float]) -> list[Segment]:
    """Change-point segments with range-relative direction labels.

    Adjacent segments sharing a label are merged, so the segment list reads as
    the shape of the curve: each entry is one sustained movement.
    """
    y = np.asarray(values, dtype=float)
    m = y.size
    if m < 2:
        raise ValueError("need at least 2 summary values")
    value_range = float(y.max() - y.min())
    if value_range == 0.0:
        return [Segment(0, m, 0.0, "flat", None)]
    threshold = FLAT_FRACTION * value_range / 25.0
    sse, slope_table = _line_fit_tables(y)
    bounds = [0, *_best_splits(y, sse), m]

    def label_of(slope: float) -> str:
        if abs(slope) <= threshold:
            return "flat"
        return "up" if slope > 0 else "down"

    merged: list[tuple[int, int, str]] = []
    for a, b in zip(bounds, bounds[1:]):
        label = label_of(float(slope_table[a, b]))
        if merged and merged[-1][2] == label:
            merged[-1] = (merged[-1][0], b, label)
        else:
            merged.append((a, b, label))

    steps = np.abs(np.diff(y))
    mean_abs_slope = float(steps.mean()) if steps.size else 0.0
    segments = []
    for a, b, label in merged:
        slope = float(slope_table[a, b])
        if label == "flat":
            magnitude = None
        else:
            ratio = abs(slope) / mean_abs_slope if mean_abs_slope > 0 else 1.0
            magnitude = "slight" if ratio < 1.0 else ("moderate" if ratio <= 3.0 else "steep")
        segments.append(Segment(a, b, slope, label, magnitude))
    return segments


def direction_signature(values: Sequence[float]) -> tuple[str, ...]:
    """Merged up/down/flat labels, the shape fingerprint used by invariants."""
    return tuple(seg.label for seg in segment_summary(values))


def describe_rules(summary: TrendSummary) -> TrendDescription:
    """Deterministic English paragraph describing the summarized trend."""
    values = summary.values
    if len(values) < 2:
        raise ValueError("summary needs at least 2 values")
    if max(values) == min(values):
        text = FLAT_SENTENCE.format(value=format_value(values[0]))
        return TrendDescription(text, "rules", "rules-v1", summary.window_id)
    segments = segment_summary(values)
    phrases = [_PHRASES[(seg.label, seg.magnitude)] for seg in segments]
    text = (
        f"The series starts around {format_value(values[0])}, "
        + ", then ".join(phrases)
        + f", and ends near {format_value(values[-1])}."
    )
    return TrendDescription(text, "rules", "rules-v1", summary.window_id)


# ---------------------------------------------------------------------------
# Deterministic paraphrasing (offline stand-in for the rephrasing model)

_OPENERS = (
    "Overall,",
    "In short,",
    "Broadly speaking,",
    "Taken as a whole,",
    "On the whole,",
    "All in all,",
    "Viewed end to end,",
    "In summary,",
    "Looking at the full span,",
    "Across the window,",
)

_SYNONYMS = {
    "starts around": ("begins near", "opens close to", "sets off around"),
    "ends near": ("finishes around", "closes close to", "winds up near"),
    "increases steadily": ("rises at a steady pace", "climbs consistently", "grows steadily"),
    "decreases steadily": ("falls at a steady pace", "declines consistently", "shrinks steadily"),
    "edges up slightly": ("creeps upward a little", "inches higher", "drifts gently upward"),
    "dips slightly": ("eases down a little", "softens marginally", "drifts gently lower"),
    "climbs steeply": ("surges upward", "shoots up sharply", "rises abruptly"),
    "drops sharply": ("plunges", "falls abruptly", "sinks steeply"),
    "stays roughly flat": ("holds fairly level", "remains mostly unchanged", "keeps a near-constant level"),
    "stays essentially flat": ("is essentially unchanging", "holds perfectly level", "barely moves"),
}


def paraphrase_rules(text: str, variant: int) -> str:
    """Deterministic paraphrase by synonym rotation; distinct for 10+ variants."""
    out = text
    for phrase, alternatives in _SYNONYMS.items():
        if phrase in out:
            out = out.replace(phrase, alternatives[variant % len(alternatives)])
    opener = _OPENERS[variant % len(_OPENERS)]
    return f"{opener} {out[0].lower()}{out[1:]}"


# ---------------------------------------------------------------------------
# Chat-completion client (generic HTTP JSON contract)


@dataclass
class LlmConfig:
    base_url: str
    model: str = "gpt-4"
    api_key_env: str = "TRENDFORGE_API_KEY"
    timeout: float = 30.0
    max_attempts: int = 3
    backoff: float = 1.0
    requests_per_minute: float = 60.0
    temperature: float = 0.7
    system_prompt: str = "You are an expert time-series analyst."


class LlmClient:
    """Minimal chat-completion client with retries and a request-rate budget."""

    def __init__(self, config: LlmConfig, transport: httpx.BaseTransport | None = None):
        self.config = config
        self._http = httpx.Client(
            base_url=config.base_url, timeout=config.timeout, transport=transport
        )
        self._lock = threading.Lock()
        self._next_slot = 0.0
        self.last_usage: dict | None = None

    def close(self) -> None:
        self._http.close()

    def _pace(self) -> None:
        if self.config.requests_per_minute <= 0:
            return
        interval = 60.0 / self.config.requests_per_minute
        with self._lock:
            now = time.monotonic()
            wait = self._next_slot - now
            self._next_slot = max(now, self._next_slot) + interval
        if wait > 0:
            time.sleep(wait)

    def complete(self, prompt: str) -> tuple[str, str]:
        """Send one user message; returns (assistant text, model id)."""
        api_key = os.environ.get(self.config.api_key_env, "")
        headers = {"Authorization": f"Bearer {api_key}"} if api_key else {}
        body = {
            "model": self.config.model,
            "temperature": self.config.temperature,
            "messages": [
                {"role": "system", "content": self.config.system_prompt},
                {"role": "user", "content": prompt},
            ],
        }
        last_error: Exception | None = None
        rate_limited = False
        for attempt in range(self.config.max_attempts):
            if attempt:
                time.sleep(self.config.backoff * 2 ** (attempt - 1))
            self._pace()
            try:
                response = self._http.post("/chat/completions", json=body, headers=headers)
            except httpx.TransportError as exc:
                last_error = exc
                continue
            if response.status_code in (401, 403):
                raise AuthError(f"endpoint rejected credentials ({response.status_code})")
            if response.status_code == 429:
                rate_limited = True
                last_error = CompletionFailed("429 from endpoint")
                continue
            if response.status_code >= 500:
                last_error = CompletionFailed(f"{response.status_code} from endpoint")
                continue
            if response.status_code != 200:
                raise CompletionFailed(
                    f"unexpected status {response.status_code}: {response.text[:200]}"
                )
            payload = response.json()
            try:
                text = payload["choices"][0]["message"]["content"]
                model_id = payload.get("model", self.config.model)
            except (KeyError, IndexError, TypeError) as exc:
                raise CompletionFailed(f"malformed completion payload: {exc}") from exc
            self.last_usage = payload.get("usage")
            if not (text or "").strip():
                raise EmptyCompletion("endpoint returned an empty completion")
            return text, model_id
        if rate_limited:
            raise RateLimited(
                f"still throttled after {self.config.max_attempts} attempts"
            )
        raise CompletionFailed(f"request failed after retries: {last_error}")


def describe_llm(client: LlmClient, prompt: str, summary_id: str = "") -> TrendDescription:
    text, model_id = client.complete(prompt)
    return TrendDescription(text.strip(), "llm", model_id, summary_id)


def rephrase_llm(
    client: LlmClient | None, description: TrendDescription, variant: int = 0
) -> TrendDescription:
    """Paraphrase a description; offline (client=None) uses the rules paraphraser."""
    if description.generator not in ("llm", "rules"):
        raise ValueError("only original descriptions are rephrased")
    if client is None:
        text = paraphrase_rules(description.text, variant)
        return replace(description, text=text, generator="llm_rephrased")
    prompt = REPHRASE_TEMPLATE.replace("{text}", description.text)
    text, model_id = client.complete(prompt)
    return replace(
        description, text=text.strip(), generator="llm_rephrased", model_id=model_id
    )
