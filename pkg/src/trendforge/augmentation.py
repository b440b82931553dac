"""Trend-preserving random augmentations: jitter, scale, shift, smooth, downsample."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.random import Generator

from .windowing import Window, rng_from, with_values

OP_ORDER = ("jitter", "scale", "shift", "smooth", "downsample")

JITTER_ROLLING = 4
SCALE_RANGE = (0.25, 4.0)
SHIFT_SIGMAS = 2.0
SMOOTH_MAX = 15
MIN_WINDOW = 30


class AugmentationError(Exception):
    pass


class TooShort(AugmentationError):
    pass


class OutputTooShort(AugmentationError):
    pass


class CannotAugment(AugmentationError):
    pass


@dataclass(frozen=True)
class AugOp:
    kind: str
    value: float | int  # noise seed, scale c, shift b, kernel size, or stride


@dataclass(frozen=True)
class AugmentationSpec:
    ops: tuple[AugOp, ...]
    seed: int

    def __post_init__(self) -> None:
        kinds = [op.kind for op in self.ops]
        if len(set(kinds)) != len(kinds):
            raise ValueError("an op kind may appear at most once per spec")
        order = {k: i for i, k in enumerate(OP_ORDER)}
        if kinds != sorted(kinds, key=order.__getitem__):
            raise ValueError(f"ops must follow the fixed order {OP_ORDER}")

    def to_json(self) -> list[dict]:
        return [{"kind": op.kind, "value": op.value} for op in self.ops]


def rolling_stdev(values: Sequence[float], size: int = JITTER_ROLLING) -> np.ndarray:
    """Trailing-window sample standard deviation, current point included.

    Early positions fall back to the available prefix, widened to at least
    two points so the estimate is always defined.
    """
    x = np.asarray(values, dtype=float)
    out = np.empty_like(x)
    for t in range(x.size):
        lo = max(0, t - size + 1)
        hi = max(t, 1)  # at least the first two points
        out[t] = np.std(x[lo : hi + 1], ddof=1)
    return out


def jitter(window: Window, noise_seed: int) -> Window:
    """Add Gaussian noise with per-step sigma from the trailing rolling stdev."""
    if window.length < JITTER_ROLLING:
        raise TooShort(f"jitter needs >= {JITTER_ROLLING} steps")
    sigma = rolling_stdev(window.values)
    noise = rng_from(noise_seed).standard_normal(window.length) * sigma
    return with_values(window, window.to_array() + noise)


def scale(window: Window, c: float) -> Window:
    if not (math.isfinite(c) and c > 0):
        raise ValueError(f"scale constant must be positive, got {c}")
    return with_values(window, window.to_array() * c)


def shift(window: Window, b: float) -> Window:
    if not math.isfinite(b):
        raise ValueError(f"shift constant must be finite, got {b}")
    return with_values(window, window.to_array() + b)


def smooth_aug(window: Window, kernel_size: int) -> Window:
    """Moving average with boundary indices clamped; length preserved."""
    if kernel_size % 2 == 0 or kernel_size < 3:
        raise ValueError(f"kernel size must be odd and >= 3, got {kernel_size}")
    if window.length < kernel_size:
        raise TooShort(f"smoothing kernel {kernel_size} exceeds window length")
    x = window.to_array()
    half = kernel_size // 2
    idx = np.clip(
        np.arange(x.size)[:, None] + np.arange(-half, half + 1)[None, :], 0, x.size - 1
    )
    return with_values(window, x[idx].mean(axis=1))


def downsample_aug(window: Window, k: int) -> Window:
    """Keep every k-th step starting at index 0."""
    if k < 2:
        raise ValueError(f"downsample stride must be >= 2, got {k}")
    if window.length // k < MIN_WINDOW:
        raise OutputTooShort(
            f"downsampling {window.length} steps by {k} breaks the {MIN_WINDOW}-step floor"
        )
    return with_values(window, window.to_array()[::k])


_APPLY = {
    "jitter": lambda w, v: jitter(w, int(v)),
    "scale": lambda w, v: scale(w, float(v)),
    "shift": lambda w, v: shift(w, float(v)),
    "smooth": lambda w, v: smooth_aug(w, int(v)),
    "downsample": lambda w, v: downsample_aug(w, int(v)),
}


def apply_spec(window: Window, spec: AugmentationSpec) -> Window:
    for op in spec.ops:
        window = _APPLY[op.kind](window, op.value)
    return window


def applicable_ops(window: Window) -> tuple[str, ...]:
    ops = []
    if window.length >= JITTER_ROLLING:
        ops.append("jitter")
    ops.extend(["scale", "shift"])
    if window.length >= 3:
        ops.append("smooth")
    if window.length // 2 >= MIN_WINDOW:
        ops.append("downsample")
    return tuple(ops)


def draw_spec(window: Window, rng: Generator, seed: int = 0) -> AugmentationSpec | None:
    """One draw: each applicable op joins independently with probability 1/2.

    Returns None when no op was included (callers redraw).
    """
    candidates = applicable_ops(window)
    included = [op for op in candidates if rng.random() < 0.5]
    if not included:
        return None
    ops = []
    for kind in OP_ORDER:
        if kind not in included:
            continue
        if kind == "jitter":
            value: float | int = int(rng.integers(0, 2**62))
        elif kind == "scale":
            value = float(np.exp(rng.uniform(np.log(SCALE_RANGE[0]), np.log(SCALE_RANGE[1]))))
        elif kind == "shift":
            sigma = float(np.std(window.to_array()))
            value = float(rng.uniform(-SHIFT_SIGMAS * sigma, SHIFT_SIGMAS * sigma))
        elif kind == "smooth":
            top = min(SMOOTH_MAX, window.length)
            sizes = np.arange(3, top + 1, 2)
            value = int(rng.choice(sizes))
        else:  # downsample
            value = int(rng.integers(2, window.length // MIN_WINDOW + 1))
        ops.append(AugOp(kind, value))
    return AugmentationSpec(ops=tuple(ops), seed=seed)


def make_augmented_set(
    window: Window, n: int = 9, seed: int = 0, max_redraws: int = 100
) -> list[tuple[Window, AugmentationSpec]]:
    """n distinct trend-preserving variants of a window.

    Draws are redrawn when empty or when they duplicate an earlier spec of the
    same set; everything is a pure function of (window, seed).
    """
    if not applicable_ops(window):
        raise CannotAugment(f"window of {window.length} steps supports no augmentation")
    rng = rng_from(seed)
    out: list[tuple[Window, AugmentationSpec]] = []
    seen: set[tuple[AugOp, ...]] = set()
    for _ in range(n):
        spec = None
        for _ in range(max_redraws):
            candidate = draw_spec(window, rng, seed=seed)
            if candidate is not None and candidate.ops not in seen:
                spec = candidate
                break
        if spec is None:
            raise CannotAugment("could not draw a fresh non-empty augmentation spec")
        seen.add(spec.ops)
        out.append((apply_spec(window, spec), spec))
    return out
