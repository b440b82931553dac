"""Corpus ingestion: tsf/CSV parsing, temporal splitting, granularity aggregation."""

from __future__ import annotations

import io
import json
import math
import warnings
from dataclasses import dataclass, replace
from datetime import datetime
from enum import Enum
from typing import IO, Sequence

import numpy as np
import pandas as pd


class IngestError(Exception):
    """Base class for corpus ingestion failures."""


class MalformedHeader(IngestError):
    pass


class BadValue(IngestError):
    pass


class UnknownFrequency(IngestError):
    pass


class NonMonotoneTimestamps(IngestError):
    pass


class SchemaMismatch(IngestError):
    pass


class EmptySeries(IngestError):
    pass


class FactorTooLarge(IngestError):
    pass


class EmptySeriesWarning(UserWarning):
    """A series whose temporal split left one side with zero steps."""


class Granularity(str, Enum):
    HALF_HOURLY = "half-hourly"
    HOURLY = "hourly"
    TWO_HOURLY = "two-hourly"
    THREE_HOURLY = "three-hourly"
    FOUR_HOURLY = "four-hourly"
    SIX_HOURLY = "six-hourly"
    EIGHT_HOURLY = "eight-hourly"
    TWICE_DAILY = "twice-daily"
    DAILY = "daily"
    TRIDAILY = "tridaily"
    WEEKLY = "weekly"
    MONTHLY = "monthly"
    QUARTERLY = "quarterly"
    YEARLY = "yearly"


# Fixed step durations.  Sub-monthly granularities are exact in minutes;
# calendar granularities are exact in months.  The two regimes never mix
# when rescaling (weekly * 4 is not a calendar month).
_STEP_MINUTES = {
    Granularity.HALF_HOURLY: 30,
    Granularity.HOURLY: 60,
    Granularity.TWO_HOURLY: 120,
    Granularity.THREE_HOURLY: 180,
    Granularity.FOUR_HOURLY: 240,
    Granularity.SIX_HOURLY: 360,
    Granularity.EIGHT_HOURLY: 480,
    Granularity.TWICE_DAILY: 720,
    Granularity.DAILY: 1440,
    Granularity.TRIDAILY: 3 * 1440,
    Granularity.WEEKLY: 7 * 1440,
}
_STEP_MONTHS = {
    Granularity.MONTHLY: 1,
    Granularity.QUARTERLY: 3,
    Granularity.YEARLY: 12,
}

# Natural seasonal cycle lengths (steps per day / week / year) used to seed
# period detection.  Only integer cycles are listed.
_SEASONAL_CYCLES = {
    Granularity.HALF_HOURLY: (48, 336),
    Granularity.HOURLY: (24, 168),
    Granularity.TWO_HOURLY: (12, 84),
    Granularity.THREE_HOURLY: (8, 56),
    Granularity.FOUR_HOURLY: (6, 42),
    Granularity.SIX_HOURLY: (4, 28),
    Granularity.EIGHT_HOURLY: (3, 21),
    Granularity.TWICE_DAILY: (2, 14),
    Granularity.DAILY: (7, 365),
    Granularity.TRIDAILY: (),
    Granularity.WEEKLY: (52,),
    Granularity.MONTHLY: (12,),
    Granularity.QUARTERLY: (4,),
    Granularity.YEARLY: (),
}


def seasonal_cycles(granularity: Granularity) -> tuple[int, ...]:
    """Candidate seasonal periods implied by a sampling granularity."""
    return _SEASONAL_CYCLES[granularity]


def scale_granularity(granularity: Granularity, factor: int) -> Granularity:
    """Granularity whose step is ``factor`` times longer, e.g. half-hourly*2 -> hourly."""
    if factor == 1:
        return granularity
    if granularity in _STEP_MINUTES:
        target = _STEP_MINUTES[granularity] * factor
        for g, m in _STEP_MINUTES.items():
            if m == target:
                return g
    else:
        target = _STEP_MONTHS[granularity] * factor
        for g, m in _STEP_MONTHS.items():
            if m == target:
                return g
    raise UnknownFrequency(
        f"no granularity corresponds to {granularity.value} x {factor}"
    )


class Split(str, Enum):
    TRAIN = "train"
    TEST = "test"
    HOLDOUT = "holdout"
    FULL = "full"


def _values_equal(a: tuple[float, ...], b: tuple[float, ...]) -> bool:
    if len(a) != len(b):
        return False
    return all(
        x == y or (math.isnan(x) and math.isnan(y)) for x, y in zip(a, b)
    )


@dataclass(frozen=True, eq=False)
class SeriesRecord:
    """One named univariate series.

    ``values`` holds NaN at positions flagged in ``missing_mask``; everywhere
    else entries are finite.  Timestamps are implicit: point ``i`` sits at
    ``start + i`` granularity steps.
    """

    series_id: str
    start: datetime
    granularity: Granularity
    values: tuple[float, ...]
    missing_mask: tuple[bool, ...]

    def __post_init__(self) -> None:
        if len(self.values) != len(self.missing_mask):
            raise ValueError("values and missing_mask lengths differ")
        for v, m in zip(self.values, self.missing_mask):
            if not m and not math.isfinite(v):
                raise BadValue(
                    f"series {self.series_id!r}: non-finite value outside missing mask"
                )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SeriesRecord):
            return NotImplemented
        return (
            self.series_id == other.series_id
            and self.start == other.start
            and self.granularity == other.granularity
            and self.missing_mask == other.missing_mask
            and _values_equal(self.values, other.values)
        )

    def __len__(self) -> int:
        return len(self.values)

    def to_array(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)


@dataclass(frozen=True)
class Corpus:
    name: str
    records: tuple[SeriesRecord, ...]
    split: Split = Split.FULL

    def __post_init__(self) -> None:
        grans = {r.granularity for r in self.records}
        if len(grans) > 1:
            raise ValueError(f"corpus {self.name!r} mixes granularities: {grans}")

    @property
    def granularity(self) -> Granularity | None:
        return self.records[0].granularity if self.records else None


def _series_record(
    series_id: str,
    start: datetime,
    granularity: Granularity,
    raw_values: Sequence[float | None],
) -> SeriesRecord:
    values = []
    mask = []
    for v in raw_values:
        if v is None or (isinstance(v, float) and math.isnan(v)):
            values.append(math.nan)
            mask.append(True)
        else:
            values.append(float(v))
            mask.append(False)
    return SeriesRecord(series_id, start, granularity, tuple(values), tuple(mask))


# ---------------------------------------------------------------------------
# .tsf parsing (Monash forecasting archive text format)

_TSF_FREQUENCIES = {
    "half_hourly": Granularity.HALF_HOURLY,
    "hourly": Granularity.HOURLY,
    "daily": Granularity.DAILY,
    "weekly": Granularity.WEEKLY,
    "monthly": Granularity.MONTHLY,
    "quarterly": Granularity.QUARTERLY,
    "yearly": Granularity.YEARLY,
}
# canonical names are accepted too
_TSF_FREQUENCIES.update({g.value: g for g in Granularity})

_TSF_DATE_FORMAT = "%Y-%m-%d %H-%M-%S"

_DEFAULT_START = datetime(1970, 1, 1)


def _decode(source: bytes | str | IO) -> str:
    if isinstance(source, str):
        return source
    if isinstance(source, bytes):
        return source.decode("cp1252")
    data = source.read()
    if isinstance(data, bytes):
        return data.decode("cp1252")
    return data


def parse_tsf(source: bytes | str | IO, name: str = "corpus") -> Corpus:
    """Parse a Monash-archive style ``.tsf`` document into a Corpus.

    Header lines declare per-series attributes (``@attribute <name> <type>``)
    and dataset metadata (``@frequency`` etc.); after ``@data``, each line is
    ``attr1:attr2:...:v1,v2,...`` with ``?`` marking missing values.
    """
    text = _decode(source)
    attr_names: list[str] = []
    attr_types: list[str] = []
    granularity: Granularity | None = None
    in_data = False
    records: list[SeriesRecord] = []

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("@"):
            if in_data:
                raise MalformedHeader(f"line {lineno}: header tag after @data")
            parts = line.split(" ")
            tag = parts[0].lower()
            if tag == "@attribute":
                if len(parts) != 3:
                    raise MalformedHeader(f"line {lineno}: bad @attribute line")
                attr_names.append(parts[1])
                attr_types.append(parts[2])
            elif tag == "@frequency":
                if len(parts) != 2:
                    raise MalformedHeader(f"line {lineno}: bad @frequency line")
                key = parts[1].lower()
                if key not in _TSF_FREQUENCIES:
                    raise UnknownFrequency(f"unsupported frequency {parts[1]!r}")
                granularity = _TSF_FREQUENCIES[key]
            elif tag == "@data":
                in_data = True
            else:
                # @horizon, @missing, @equallength, ... are not needed here
                continue
        else:
            if not in_data:
                raise MalformedHeader(
                    f"line {lineno}: series data before the @data tag"
                )
            if granularity is None:
                raise UnknownFrequency("header declares no @frequency")
            fields = line.split(":")
            if len(fields) != len(attr_names) + 1:
                raise MalformedHeader(
                    f"line {lineno}: expected {len(attr_names)} attribute fields"
                )
            series_id = f"T{len(records) + 1}"
            start = _DEFAULT_START
            for attr, typ, field in zip(attr_names, attr_types, fields):
                if attr == "series_name":
                    series_id = field
                elif typ == "date":
                    try:
                        start = datetime.strptime(field, _TSF_DATE_FORMAT)
                    except ValueError as exc:
                        raise BadValue(f"line {lineno}: bad date {field!r}") from exc
            raw_values: list[float | None] = []
            for tok in fields[-1].split(","):
                tok = tok.strip()
                if tok == "?":
                    raw_values.append(None)
                else:
                    try:
                        raw_values.append(float(tok))
                    except ValueError as exc:
                        raise BadValue(
                            f"line {lineno}: non-numeric value {tok!r}"
                        ) from exc
            if not raw_values:
                raise BadValue(f"line {lineno}: empty series")
            records.append(_series_record(series_id, start, granularity, raw_values))

    if not in_data:
        raise MalformedHeader("document has no @data tag")
    return Corpus(name=name, records=tuple(records), split=Split.FULL)


# ---------------------------------------------------------------------------
# CSV parsing


@dataclass(frozen=True)
class CsvSchema:
    """Column mapping for CSV corpora.

    ``layout`` is ``"wide"`` (one series per column) or ``"long"``
    (id/value rows).  A ``time_column``, when present, must be strictly
    increasing per series; it supplies the start timestamp.
    """

    granularity: Granularity
    layout: str = "wide"
    time_column: str | None = None
    id_column: str | None = None
    value_column: str | None = None
    value_columns: tuple[str, ...] | None = None
    start: datetime = _DEFAULT_START


def _check_monotone(times: pd.Series, series_id: str) -> None:
    stamps = pd.to_datetime(times, errors="coerce")
    if stamps.isna().any():
        raise BadValue(f"series {series_id!r}: unparseable timestamp")
    if not stamps.is_monotonic_increasing or stamps.duplicated().any():
        raise NonMonotoneTimestamps(
            f"series {series_id!r}: timestamps not strictly increasing"
        )


def parse_csv(source: bytes | str | IO, schema: CsvSchema, name: str = "corpus") -> Corpus:
    text = _decode(source)
    try:
        frame = pd.read_csv(io.StringIO(text))
    except Exception as exc:
        raise BadValue(f"unreadable CSV: {exc}") from exc

    records: list[SeriesRecord] = []
    if schema.layout == "long":
        needed = [schema.id_column, schema.value_column]
        if any(c is None for c in needed):
            raise SchemaMismatch("long layout needs id_column and value_column")
        for col in [c for c in needed + [schema.time_column] if c]:
            if col not in frame.columns:
                raise SchemaMismatch(f"column {col!r} not in CSV")
        for series_id, group in frame.groupby(schema.id_column, sort=True):
            if schema.time_column:
                _check_monotone(group[schema.time_column], str(series_id))
                start = pd.to_datetime(group[schema.time_column].iloc[0]).to_pydatetime()
            else:
                start = schema.start
            vals = pd.to_numeric(group[schema.value_column], errors="coerce")
            bad = vals.isna() & group[schema.value_column].notna()
            if bad.any():
                raise BadValue(f"series {series_id!r}: non-numeric value")
            records.append(
                _series_record(
                    str(series_id), start, schema.granularity,
                    [None if pd.isna(v) else float(v) for v in vals],
                )
            )
    elif schema.layout == "wide":
        value_cols = list(schema.value_columns or [])
        if not value_cols:
            value_cols = [c for c in frame.columns if c != schema.time_column]
        for col in value_cols:
            if col not in frame.columns:
                raise SchemaMismatch(f"column {col!r} not in CSV")
        if schema.time_column:
            if schema.time_column not in frame.columns:
                raise SchemaMismatch(f"column {schema.time_column!r} not in CSV")
            _check_monotone(frame[schema.time_column], "<all>")
            start = pd.to_datetime(frame[schema.time_column].iloc[0]).to_pydatetime()
        else:
            start = schema.start
        for col in value_cols:
            vals = pd.to_numeric(frame[col], errors="coerce")
            bad = vals.isna() & frame[col].notna()
            if bad.any():
                raise BadValue(f"series {col!r}: non-numeric value")
            records.append(
                _series_record(
                    str(col), start, schema.granularity,
                    [None if pd.isna(v) else float(v) for v in vals],
                )
            )
    else:
        raise SchemaMismatch(f"unknown layout {schema.layout!r}")
    return Corpus(name=name, records=tuple(records), split=Split.FULL)


# ---------------------------------------------------------------------------
# Splitting and aggregation


def train_split(corpus: Corpus, ratio: float = 0.7) -> tuple[Corpus, Corpus]:
    """Split every series at floor(ratio * T): temporal prefix vs remainder.

    A series whose prefix would be empty stays in the train corpus with zero
    steps and triggers an EmptySeriesWarning, so that train ++ test always
    reproduces the original corpus series-by-series.
    """
    if not 0.0 < ratio < 1.0:
        raise ValueError(f"ratio must be in (0, 1), got {ratio}")
    train_records = []
    test_records = []
    for rec in corpus.records:
        t = len(rec)
        if t == 0:
            raise EmptySeries(f"series {rec.series_id!r} has no steps")
        cut = math.floor(ratio * t)
        if cut == 0:
            warnings.warn(
                f"series {rec.series_id!r}: train side of the {ratio:.0%} split is empty",
                EmptySeriesWarning,
                stacklevel=2,
            )
        train_records.append(
            replace(rec, values=rec.values[:cut], missing_mask=rec.missing_mask[:cut])
        )
        test_records.append(
            replace(rec, values=rec.values[cut:], missing_mask=rec.missing_mask[cut:])
        )
    return (
        Corpus(corpus.name, tuple(train_records), Split.TRAIN),
        Corpus(corpus.name, tuple(test_records), Split.TEST),
    )


def aggregate(record: SeriesRecord, factor: int, reducer: str = "mean") -> SeriesRecord:
    """Merge every ``factor`` consecutive steps into one.

    The trailing remainder is dropped so each output bucket summarizes exactly
    ``factor`` steps.  A bucket is missing iff all constituent steps are
    missing; otherwise it reduces over the present steps only.
    """
    if factor < 1:
        raise ValueError(f"factor must be >= 1, got {factor}")
    if reducer not in ("mean", "sum"):
        raise ValueError(f"reducer must be 'mean' or 'sum', got {reducer!r}")
    t = len(record)
    if factor > t:
        raise FactorTooLarge(f"factor {factor} exceeds series length {t}")
    if factor == 1:
        return record
    buckets = t // factor
    vals = record.to_array()[: buckets * factor].reshape(buckets, factor)
    mask = np.asarray(record.missing_mask[: buckets * factor]).reshape(buckets, factor)
    all_missing = mask.all(axis=1)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)  # empty-slice buckets
        reduced = np.nanmean(vals, axis=1) if reducer == "mean" else np.nansum(vals, axis=1)
    out: list[float | None] = [
        None if dead else float(v) for v, dead in zip(reduced, all_missing)
    ]
    return _series_record(
        record.series_id,
        record.start,
        scale_granularity(record.granularity, factor),
        out,
    )


def aggregate_corpus(corpus: Corpus, factor: int, reducer: str = "mean") -> Corpus:
    records = tuple(
        aggregate(rec, factor, reducer) for rec in corpus.records if len(rec) >= factor
    )
    return Corpus(corpus.name, records, corpus.split)


# ---------------------------------------------------------------------------
# Canonical corpus serialization (line-delimited JSON)


def dump_corpus(corpus: Corpus) -> str:
    lines = [json.dumps({"corpus": corpus.name, "split": corpus.split.value})]
    for rec in corpus.records:
        lines.append(
            json.dumps(
                {
                    "series_id": rec.series_id,
                    "start": rec.start.isoformat(),
                    "granularity": rec.granularity.value,
                    "values": [
                        None if m else v for v, m in zip(rec.values, rec.missing_mask)
                    ],
                }
            )
        )
    return "\n".join(lines) + "\n"


def load_corpus(source: bytes | str | IO, name: str | None = None) -> Corpus:
    text = _decode(source)
    corpus_name = name or "corpus"
    split = Split.FULL
    records: list[SeriesRecord] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        obj = json.loads(line)
        if "corpus" in obj and "series_id" not in obj:
            corpus_name = obj["corpus"] if name is None else name
            split = Split(obj.get("split", "full"))
            continue
        records.append(
            _series_record(
                obj["series_id"],
                datetime.fromisoformat(obj["start"]),
                Granularity(obj["granularity"]),
                obj["values"],
            )
        )
    return Corpus(corpus_name, tuple(records), split)


def write_corpus(corpus: Corpus, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dump_corpus(corpus))


def read_corpus(path) -> Corpus:
    with open(path, "rb") as fh:
        return load_corpus(fh)
