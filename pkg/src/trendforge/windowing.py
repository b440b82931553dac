"""Reproducible random sampling of description-ready windows from a corpus."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np
from numpy.random import Generator, Philox, SeedSequence

from .ingest import Corpus, Granularity, SeriesRecord, Split

DEFAULT_TAU_RANGE = (30, 500)


class WindowingError(Exception):
    pass


class NoEligibleSeries(WindowingError):
    pass


@dataclass(frozen=True)
class WindowSource:
    corpus: str
    series_id: str
    start_index: int
    granularity: Granularity


@dataclass(frozen=True)
class Window:
    """A contiguous, gap-free slice of one series."""

    values: tuple[float, ...]
    source: WindowSource
    split: Split
    seed: int

    def __post_init__(self) -> None:
        if any(not math.isfinite(v) for v in self.values):
            raise ValueError("window contains missing or non-finite values")

    @property
    def length(self) -> int:
        return len(self.values)

    def to_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)


def rng_from(*parts: int) -> Generator:
    """Counter-based RNG keyed by integers; order-independent and replayable."""
    return Generator(Philox(SeedSequence(parts)))


def derive_seed(*parts: int) -> int:
    """64-bit seed deterministically derived from a key tuple."""
    state = SeedSequence(parts).generate_state(2, np.uint32)
    return int(state[0]) << 32 | int(state[1])


def _nonmissing_runs(record: SeriesRecord) -> list[tuple[int, int]]:
    """(start, length) of maximal runs without missing values."""
    runs = []
    start = None
    for i, missing in enumerate(record.missing_mask):
        if missing:
            if start is not None:
                runs.append((start, i - start))
                start = None
        elif start is None:
            start = i
    if start is not None:
        runs.append((start, len(record) - start))
    return runs


def sample_window(
    corpus: Corpus,
    rng_seed: int,
    tau_range: tuple[int, int] = DEFAULT_TAU_RANGE,
) -> Window:
    """Draw one window: uniform eligible series, uniform length, uniform offset.

    Eligibility requires a contiguous missing-free span of at least
    ``tau_range[0]`` steps; windows never cross missing gaps.  The same
    (corpus, seed) always yields the identical window.
    """
    tau_min, tau_max = tau_range
    if tau_min < 2 or tau_max < tau_min:
        raise ValueError(f"bad tau range {tau_range}")
    eligible: list[tuple[SeriesRecord, list[tuple[int, int]]]] = []
    for rec in corpus.records:
        runs = [r for r in _nonmissing_runs(rec) if r[1] >= tau_min]
        if runs:
            eligible.append((rec, runs))
    if not eligible:
        raise NoEligibleSeries(
            f"corpus {corpus.name!r}: no series with a gap-free span >= {tau_min}"
        )
    rng = rng_from(rng_seed)
    rec, runs = eligible[int(rng.integers(len(eligible)))]
    longest = max(length for _, length in runs)
    tau = int(rng.integers(tau_min, min(tau_max, longest) + 1))
    offsets = [(start, length - tau + 1) for start, length in runs if length >= tau]
    total = sum(n for _, n in offsets)
    pick = int(rng.integers(total))
    for run_start, n in offsets:
        if pick < n:
            start = run_start + pick
            break
        pick -= n
    values = rec.values[start : start + tau]
    return Window(
        values=tuple(values),
        source=WindowSource(corpus.name, rec.series_id, start, rec.granularity),
        split=corpus.split,
        seed=rng_seed,
    )


def sample_batch(
    corpus: Corpus,
    n: int,
    rng_seed: int,
    tau_range: tuple[int, int] = DEFAULT_TAU_RANGE,
) -> list[Window]:
    """n windows with per-index seeds derived from the batch seed."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return [
        sample_window(corpus, derive_seed(rng_seed, i), tau_range) for i in range(n)
    ]


def sample_across(
    corpora: Sequence[Corpus],
    n: int,
    rng_seed: int,
    tau_range: tuple[int, int] = DEFAULT_TAU_RANGE,
) -> list[Window]:
    """Spread n draws across corpora (near-even allocation, name-sorted)."""
    if not corpora:
        raise NoEligibleSeries("no corpora given")
    ordered = sorted(corpora, key=lambda c: c.name)
    k = len(ordered)
    counts = [n // k + (1 if i < n % k else 0) for i in range(k)]
    windows: list[Window] = []
    for i, (corpus, count) in enumerate(zip(ordered, counts)):
        if count:
            windows.extend(
                sample_batch(corpus, count, derive_seed(rng_seed, i), tau_range)
            )
    return windows


def batch_manifest(windows: Iterable[Window]) -> dict:
    """Per (dataset, granularity) sample counts plus the grand total."""
    counts: dict[tuple[str, str], int] = {}
    for w in windows:
        key = (w.source.corpus, w.source.granularity.value)
        counts[key] = counts.get(key, 0) + 1
    rows = [
        {"dataset": dataset, "granularity": gran, "samples": count}
        for (dataset, gran), count in sorted(counts.items())
    ]
    return {"rows": rows, "total": sum(r["samples"] for r in rows)}


def window_to_json(window: Window) -> dict:
    return {
        "values": list(window.values),
        "corpus": window.source.corpus,
        "series_id": window.source.series_id,
        "start_index": window.source.start_index,
        "granularity": window.source.granularity.value,
        "split": window.split.value,
        "seed": window.seed,
    }


def window_from_json(obj: dict) -> Window:
    return Window(
        values=tuple(float(v) for v in obj["values"]),
        source=WindowSource(
            obj["corpus"],
            obj["series_id"],
            int(obj["start_index"]),
            Granularity(obj["granularity"]),
        ),
        split=Split(obj["split"]),
        seed=int(obj["seed"]),
    )


def with_values(window: Window, values: Sequence[float]) -> Window:
    """Copy a window with new values, keeping provenance."""
    return replace(window, values=tuple(float(v) for v in values))
