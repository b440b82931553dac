"""Gaussian smoothing, stride downsampling, and one-decimal rounding of trends."""

from __future__ import annotations

from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from typing import Sequence

import numpy as np

SUMMARY_POINTS = 25


class SummaryError(Exception):
    pass


class EvenKernel(SummaryError):
    pass


class StrideTooLarge(SummaryError):
    pass


@dataclass(frozen=True)
class TrendSummary:
    """Smoothed, downsampled, one-decimal-rounded trend values."""

    values: tuple[float, ...]
    kernel_size: int
    stride: int
    window_id: str = ""


def default_stride(tau: int) -> int:
    """Stride so that tau // stride lands at the 25-point standard summary."""
    stride = tau // SUMMARY_POINTS
    if stride < 1:
        raise StrideTooLarge(f"trend of {tau} steps is too short to downsample")
    return stride


def default_kernel_size(stride: int) -> int:
    """Largest odd kernel not exceeding max(3, stride + 1)."""
    size = max(3, stride + 1)
    return size if size % 2 == 1 else size - 1


def gaussian_kernel(size: int) -> np.ndarray:
    """Symmetric normalized weights from a Gaussian with sigma = size/6 (min 0.5)."""
    if size < 1 or size % 2 == 0:
        raise EvenKernel(f"kernel size must be odd and positive, got {size}")
    sigma = max(size / 6.0, 0.5)
    center = (size - 1) / 2.0
    offsets = np.arange(size, dtype=float) - center
    weights = np.exp(-(offsets**2) / (2.0 * sigma**2))
    return weights / weights.sum()


def smooth_downsample(
    trend: Sequence[float], kernel_size: int, stride: int
) -> np.ndarray:
    """Gaussian-weighted samples at every ``stride``-th position.

    Output i (1-based) combines trend points at positions stride*i - j for
    j in [-size//2, size//2]; positions outside [1, tau] clamp to the nearest
    boundary, which keeps constant inputs exactly constant at the edges.
    """
    values = np.asarray(trend, dtype=float)
    tau = values.size
    if stride < 1:
        raise ValueError(f"stride must be >= 1, got {stride}")
    count = tau // stride
    if count == 0:
        raise StrideTooLarge(f"stride {stride} leaves no samples for {tau} steps")
    if kernel_size > tau:
        raise ValueError(f"kernel size {kernel_size} exceeds trend length {tau}")
    weights = gaussian_kernel(kernel_size)
    half = kernel_size // 2
    i = np.arange(1, count + 1)
    j = np.arange(-half, half + 1)
    positions = np.clip(stride * i[:, None] - j[None, :], 1, tau)
    return (values[positions - 1] * weights[half + j][None, :]).sum(axis=1)


def round_one_decimal(value: float) -> float:
    """Half-away-from-zero rounding to one decimal; -0.0 normalizes to 0.0."""
    rounded = float(Decimal(repr(float(value))).quantize(Decimal("0.1"), ROUND_HALF_UP))
    return rounded + 0.0


def round_summary(values: Sequence[float]) -> tuple[float, ...]:
    return tuple(round_one_decimal(v) for v in values)


def summarize(
    trend: Sequence[float],
    window_id: str = "",
    stride: int | None = None,
    kernel_size: int | None = None,
) -> TrendSummary:
    """Smooth, downsample, and round a trend with the standard defaults."""
    tau = len(trend)
    stride = default_stride(tau) if stride is None else stride
    kernel_size = default_kernel_size(stride) if kernel_size is None else kernel_size
    smoothed = smooth_downsample(trend, kernel_size, stride)
    return TrendSummary(
        values=round_summary(smoothed),
        kernel_size=kernel_size,
        stride=stride,
        window_id=window_id,
    )


def summary_to_json(summary: TrendSummary) -> dict:
    return {
        "window_id": summary.window_id,
        "s": summary.stride,
        "w": summary.kernel_size,
        "values": list(summary.values),
    }
