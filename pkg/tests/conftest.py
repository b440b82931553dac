from __future__ import annotations

from datetime import datetime

import numpy as np
import pytest

from trendforge.ingest import Corpus, Granularity, SeriesRecord, Split
from trendforge.windowing import Window, WindowSource


def make_record(
    values,
    series_id: str = "s1",
    granularity: Granularity = Granularity.DAILY,
    missing=None,
) -> SeriesRecord:
    values = [float(v) if v is not None else float("nan") for v in values]
    if missing is None:
        missing = [not np.isfinite(v) for v in values]
    return SeriesRecord(
        series_id=series_id,
        start=datetime(2020, 1, 1),
        granularity=granularity,
        values=tuple(values),
        missing_mask=tuple(bool(m) for m in missing),
    )


def make_corpus(*value_lists, name="toy", granularity=Granularity.DAILY, split=Split.FULL):
    records = tuple(
        make_record(vals, series_id=f"s{i}", granularity=granularity)
        for i, vals in enumerate(value_lists)
    )
    return Corpus(name=name, records=records, split=split)


def make_window(
    values,
    granularity: Granularity = Granularity.DAILY,
    split: Split = Split.TRAIN,
    seed: int = 0,
) -> Window:
    return Window(
        values=tuple(float(v) for v in values),
        source=WindowSource("toy", "s0", 0, granularity),
        split=split,
        seed=seed,
    )


def trial_window(rng) -> Window:
    """Piecewise-linear shapes with mild noise; amplitudes keep one-decimal
    rounding fine-grained relative to the window's range."""
    tau = int(rng.integers(100, 241))
    n_seg = int(rng.integers(1, 4))
    min_len = tau // 4
    bounds = [0]
    for _ in range(n_seg - 1):
        lo = bounds[-1] + min_len
        hi = tau - min_len * (n_seg - len(bounds))
        if lo >= hi:
            break
        bounds.append(int(rng.integers(lo, hi + 1)))
    bounds.append(tau)
    level = rng.uniform(0, 50)
    vals = np.empty(tau)
    for a, b in zip(bounds, bounds[1:]):
        slope = rng.uniform(0.5, 2.5) * rng.choice([-1.0, 1.0])
        seg = level + slope * np.arange(b - a)
        vals[a:b] = seg
        level = seg[-1]
    vals = vals + rng.standard_normal(tau) * 0.02 * (vals.max() - vals.min())
    return make_window(vals)


@pytest.fixture
def seasonal_window() -> Window:
    t = np.arange(140)
    vals = 0.05 * t + np.sin(2 * np.pi * t / 7)
    return make_window(vals)


@pytest.fixture
def noise_window() -> Window:
    vals = np.random.default_rng(3).standard_normal(120)
    return make_window(vals)
