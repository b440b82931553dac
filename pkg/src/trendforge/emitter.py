"""Instruction-sample assembly, line-plot rendering, and dataset serialization."""

from __future__ import annotations

import io
import json
import re
import threading
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .augmentation import AugmentationSpec
from .windowing import Window

WINDOW_TOKEN = "<window>"
DEFAULT_QUESTION = "Please describe the trend of this time series."

QUESTION_POOL = (
    DEFAULT_QUESTION,
    "Describe the trend of this time series.",
    "What is the overall trend in this time series?",
    "How would you characterize the trend of this series?",
    "Summarize the trend shown by this time series.",
)

PLOT_SIZE_PX = 336
_PLOT_LOCK = threading.Lock()  # matplotlib is not thread-safe


class EmitError(Exception):
    pass


class EmptyField(EmitError):
    pass


class TooShort(EmitError):
    pass


class DuplicateId(EmitError):
    pass


class SinkFailure(EmitError):
    pass


class MultiplicityViolation(EmitError):
    pass


def format_instruction(
    question: str, answer: str, window_token: str = WINDOW_TOKEN
) -> str:
    """Single-round Human/Assistant layout with literal <STOP> markers."""
    if not question.strip() or not answer.strip():
        raise EmptyField("question and answer must be non-empty")
    return f"Human: {window_token}\n{question} <STOP>\nAssistant: {answer} <STOP>\n"


_INSTRUCTION_RE = re.compile(
    r"\AHuman: (?P<window>.*)\n(?P<question>.*) <STOP>\n"
    r"Assistant: (?P<answer>.*) <STOP>\n\Z"
)


def parse_instruction(text: str) -> tuple[str, str, str]:
    """Recover (window token, question, answer) from the serialized layout."""
    match = _INSTRUCTION_RE.match(text)
    if match is None:
        raise EmitError("text does not match the instruction layout")
    return match.group("window"), match.group("question"), match.group("answer")


def render_plot(window: Window) -> bytes:
    """Deterministic 336x336 PNG line plot of a window.

    Single series, fixed margins, min/max tick labels, white background, no
    title; identical values always produce identical bytes.
    """
    values = window.to_array()
    if values.size < 2:
        raise TooShort("plots need at least 2 points")
    lo, hi = float(values.min()), float(values.max())
    span = hi - lo
    pad = 0.05 * span if span > 0 else max(0.5, 0.05 * abs(lo))
    with _PLOT_LOCK:
        fig = plt.figure(figsize=(PLOT_SIZE_PX / 100.0, PLOT_SIZE_PX / 100.0), dpi=100)
        try:
            ax = fig.add_axes((0.18, 0.10, 0.76, 0.84))
            ax.plot(values, color="#1f62ab", linewidth=1.2)
            ax.set_xlim(0, values.size - 1)
            ax.set_ylim(lo - pad, hi + pad)
            ax.set_xticks([0, values.size - 1])
            ax.set_yticks([lo, hi])
            ax.set_yticklabels([f"{lo:g}", f"{hi:g}"])
            ax.tick_params(labelsize=8)
            ax.set_facecolor("white")
            fig.patch.set_facecolor("white")
            buffer = io.BytesIO()
            fig.savefig(buffer, format="png", metadata={"Software": None})
        finally:
            plt.close(fig)
    return buffer.getvalue()


@dataclass(frozen=True)
class InstructionSample:
    sample_id: str
    window: Window
    question: str
    answer: str
    formatted: str
    template_version: str = ""
    augmentation: AugmentationSpec | None = None
    original_id: str | None = None  # set on augmented samples
    image_path: str | None = None

    def to_json(self) -> dict:
        return {
            "sample_id": self.sample_id,
            "question": self.question,
            "answer": self.answer,
            "formatted": self.formatted,
            "image_path": self.image_path,
            "split": self.window.split.value,
            "provenance": {
                "corpus": self.window.source.corpus,
                "series_id": self.window.source.series_id,
                "start_index": self.window.source.start_index,
                "granularity": self.window.source.granularity.value,
                "tau": self.window.length,
                "seed": self.window.seed,
            },
            "augmentation": self.augmentation.to_json() if self.augmentation else [],
            "original_id": self.original_id,
            "template_version": self.template_version,
        }


def make_sample(
    sample_id: str,
    window: Window,
    question: str,
    answer: str,
    template_version: str = "",
    augmentation: AugmentationSpec | None = None,
    original_id: str | None = None,
) -> InstructionSample:
    return InstructionSample(
        sample_id=sample_id,
        window=window,
        question=question,
        answer=answer,
        formatted=format_instruction(question, answer),
        template_version=template_version,
        augmentation=augmentation,
        original_id=original_id,
    )


def _check_multiplicity(samples: Sequence[InstructionSample]) -> None:
    augmented_of: dict[str, int] = {}
    originals = set()
    for s in samples:
        if s.original_id is None:
            originals.add(s.sample_id)
        else:
            augmented_of[s.original_id] = augmented_of.get(s.original_id, 0) + 1
    if not augmented_of:
        return
    for original in originals:
        count = augmented_of.get(original, 0)
        if count != 9:
            raise MultiplicityViolation(
                f"original {original!r} has {count} augmented copies, expected 9"
            )
    orphans = set(augmented_of) - originals
    if orphans:
        raise MultiplicityViolation(f"augmented samples reference unknown originals: {sorted(orphans)[:3]}")


def emit_dataset(
    samples: Iterable[InstructionSample],
    out_dir: str | Path,
    write_images: bool = True,
    check_multiplicity: bool = True,
) -> dict:
    """Write samples.jsonl, images/, and manifest.json; returns the manifest.

    Samples are sorted by id; duplicate ids fail.  When any augmented samples
    are present, every original must carry exactly nine of them.
    """
    ordered = sorted(samples, key=lambda s: s.sample_id)
    seen: set[str] = set()
    for s in ordered:
        if s.sample_id in seen:
            raise DuplicateId(f"duplicate sample id {s.sample_id!r}")
        seen.add(s.sample_id)
    if check_multiplicity:
        _check_multiplicity(ordered)

    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        images_dir = out / "images"
        if write_images:
            images_dir.mkdir(exist_ok=True)
        counts: dict[tuple[str, str, str], int] = {}
        with open(out / "samples.jsonl", "w", encoding="utf-8") as sink:
            for s in ordered:
                if write_images:
                    png = render_plot(s.window)
                    image_rel = f"images/{s.sample_id}.png"
                    (out / image_rel).write_bytes(png)
                    s = replace(s, image_path=image_rel)
                kind = "original" if s.original_id is None else "augmented"
                key = (s.window.source.corpus, s.window.source.granularity.value, kind)
                counts[key] = counts.get(key, 0) + 1
                sink.write(json.dumps(s.to_json()) + "\n")
        manifest = {
            "total": len(ordered),
            "rows": [
                {"dataset": d, "granularity": g, "kind": k, "samples": c}
                for (d, g, k), c in sorted(counts.items())
            ],
        }
        with open(out / "manifest.json", "w", encoding="utf-8") as fh:
            json.dump(manifest, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        raise SinkFailure(f"could not write dataset: {exc}") from exc
    return manifest
