from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from trendforge.ingest import (
    BadValue,
    Corpus,
    CsvSchema,
    EmptySeries,
    EmptySeriesWarning,
    FactorTooLarge,
    Granularity,
    MalformedHeader,
    NonMonotoneTimestamps,
    SchemaMismatch,
    Split,
    UnknownFrequency,
    aggregate,
    dump_corpus,
    load_corpus,
    parse_csv,
    parse_tsf,
    scale_granularity,
    train_split,
)

from conftest import make_corpus, make_record

TSF_HEADER = (
    "@relation toy\n"
    "@attribute series_name string\n"
    "@attribute start_timestamp date\n"
    "@frequency monthly\n"
    "@data\n"
)


def test_parse_tsf_minimal():
    doc = TSF_HEADER + "s1:2020-01-01 00-00-00:1.0,2.0,3.0\n"
    corpus = parse_tsf(doc.encode())
    assert len(corpus.records) == 1
    rec = corpus.records[0]
    assert rec.series_id == "s1"
    assert rec.values == (1.0, 2.0, 3.0)
    assert rec.granularity is Granularity.MONTHLY
    assert rec.start.year == 2020


def test_parse_tsf_missing_token_sets_mask():
    doc = TSF_HEADER + "s1:2020-01-01 00-00-00:1.0,?,3.0\n"
    rec = parse_tsf(doc).records[0]
    assert rec.missing_mask == (False, True, False)
    assert math.isnan(rec.values[1])


def test_parse_tsf_series_count_matches_data_section():
    # oracle: the record count must equal an independent count of body lines
    lines = [
        f"series{i}:2019-06-0{1 + i % 9} 00-00-00:" + ",".join(
            str(round(float(v), 3)) for v in np.random.default_rng(i).normal(size=5 + i)
        )
        for i in range(41)
    ]
    doc = TSF_HEADER + "\n".join(lines) + "\n"
    expected = len(doc.split("@data\n", 1)[1].strip().splitlines())
    corpus = parse_tsf(doc)
    assert len(corpus.records) == expected == 41


def test_parse_tsf_errors():
    with pytest.raises(MalformedHeader):
        parse_tsf("@frequency daily\ns1:1.0,2.0\n")  # data before @data tag
    with pytest.raises(BadValue):
        parse_tsf(TSF_HEADER + "s1:2020-01-01 00-00-00:1.0,oops\n")
    with pytest.raises(UnknownFrequency):
        parse_tsf(TSF_HEADER.replace("monthly", "4_seconds") + "s1:2020-01-01 00-00-00:1.0\n")
    with pytest.raises(MalformedHeader):
        parse_tsf("@attribute series_name string\n@frequency daily\n")  # no @data


def test_parse_csv_single_column():
    schema = CsvSchema(granularity=Granularity.DAILY)
    corpus = parse_csv(b"load\n5\n5\n5\n", schema)
    assert len(corpus.records) == 1
    assert corpus.records[0].values == (5.0, 5.0, 5.0)


def test_parse_csv_duplicate_timestamp_rejected():
    doc = b"time,load\n2020-01-01,1\n2020-01-01,2\n"
    schema = CsvSchema(granularity=Granularity.DAILY, time_column="time")
    with pytest.raises(NonMonotoneTimestamps):
        parse_csv(doc, schema)


def test_parse_csv_long_format_two_ids():
    doc = b"id,val\na,1\na,2\nb,3\nb,4\n"
    schema = CsvSchema(
        granularity=Granularity.DAILY, layout="long", id_column="id", value_column="val"
    )
    corpus = parse_csv(doc, schema)
    assert len(corpus.records) == 2
    assert {r.series_id for r in corpus.records} == {"a", "b"}


def test_parse_csv_schema_mismatch():
    schema = CsvSchema(granularity=Granularity.DAILY, layout="long", id_column="id", value_column="nope")
    with pytest.raises(SchemaMismatch):
        parse_csv(b"id,val\na,1\n", schema)


def test_train_split_lengths():
    corpus = make_corpus(list(range(10)))
    train, test = train_split(corpus)
    assert (len(train.records[0]), len(test.records[0])) == (7, 3)
    assert train.split is Split.TRAIN and test.split is Split.TEST


def test_train_split_half():
    train, test = train_split(make_corpus(list(range(100))), ratio=0.5)
    assert (len(train.records[0]), len(test.records[0])) == (50, 50)


def test_train_split_degenerate_warns():
    corpus = make_corpus([1.0])
    with pytest.warns(EmptySeriesWarning):
        train, test = train_split(corpus)
    assert (len(train.records[0]), len(test.records[0])) == (0, 1)


def test_train_split_empty_series_raises():
    corpus = Corpus("bad", (make_record([]),))
    with pytest.raises(EmptySeries):
        train_split(corpus)


@given(
    st.integers(min_value=1, max_value=200),
    st.floats(min_value=0.05, max_value=0.95),
)
@settings(max_examples=60, deadline=None)
def test_train_split_concat_property(t, ratio):
    values = list(np.arange(t, dtype=float))
    corpus = make_corpus(values)
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", EmptySeriesWarning)
        train, test = train_split(corpus, ratio)
    assert len(train.records[0]) == math.floor(ratio * t)
    assert train.records[0].values + test.records[0].values == corpus.records[0].values


def test_aggregate_mean():
    rec = make_record([1, 2, 3, 4], granularity=Granularity.HALF_HOURLY)
    out = aggregate(rec, 2, "mean")
    assert out.values == (1.5, 3.5)
    assert out.granularity is Granularity.HOURLY


def test_aggregate_identity():
    rec = make_record([1, 2, 3])
    assert aggregate(rec, 1) is rec


def test_aggregate_half_hourly_to_daily():
    rec = make_record(list(range(96)), granularity=Granularity.HALF_HOURLY)
    out = aggregate(rec, 48, "mean")
    assert out.granularity is Granularity.DAILY
    assert len(out) == 2


def test_aggregate_granularity_ladder():
    # the elecdemand progression: half-hourly -> ... -> daily
    ladder = [
        (2, Granularity.HOURLY),
        (4, Granularity.TWO_HOURLY),
        (6, Granularity.THREE_HOURLY),
        (8, Granularity.FOUR_HOURLY),
        (12, Granularity.SIX_HOURLY),
        (16, Granularity.EIGHT_HOURLY),
        (24, Granularity.TWICE_DAILY),
        (48, Granularity.DAILY),
    ]
    for factor, expected in ladder:
        assert scale_granularity(Granularity.HALF_HOURLY, factor) is expected
    assert scale_granularity(Granularity.MONTHLY, 3) is Granularity.QUARTERLY
    assert scale_granularity(Granularity.MONTHLY, 12) is Granularity.YEARLY
    with pytest.raises(UnknownFrequency):
        scale_granularity(Granularity.WEEKLY, 4)


def test_aggregate_factor_too_large():
    with pytest.raises(FactorTooLarge):
        aggregate(make_record([1, 2]), 3)


def test_aggregate_missing_bucket_rule():
    rec = make_record(
        [1.0, None, None, None],
        granularity=Granularity.HALF_HOURLY,
        missing=[False, True, True, True],
    )
    out = aggregate(rec, 2, "mean")
    assert out.values[0] == 1.0 and out.missing_mask == (False, True)


# factors that lead from half-hourly to another named granularity
_VALID_FACTORS = (1, 2, 4, 6, 8, 12, 16, 24, 48, 144, 336)


@given(st.sampled_from(_VALID_FACTORS), st.integers(min_value=1, max_value=400))
@settings(max_examples=80, deadline=None)
def test_aggregate_length_law(factor, t):
    if factor > t:
        return
    rec = make_record(list(np.linspace(0, 1, t)), granularity=Granularity.HALF_HOURLY)
    out = aggregate(rec, factor)
    assert len(out) == t // factor


def test_aggregate_constant_series_stays_constant():
    rec = make_record([3.25] * 31, granularity=Granularity.MONTHLY)
    out = aggregate(rec, 3, "mean")
    assert len(out) == 10
    assert all(v == 3.25 for v in out.values)


def test_corpus_roundtrip_identical():
    doc = TSF_HEADER + (
        "s1:2020-01-01 00-00-00:1.0,?,3.25,-4.5e-3\n"
        "s2:2021-03-05 06-00-00:7.125,8.0\n"
    )
    corpus = parse_tsf(doc, name="roundtrip")
    text = dump_corpus(corpus)
    again = load_corpus(text)
    assert again.name == corpus.name and again.split == corpus.split
    assert len(again.records) == len(corpus.records)
    for a, b in zip(again.records, corpus.records):
        assert a == b


def test_corpus_rejects_mixed_granularity():
    r1 = make_record([1.0], granularity=Granularity.DAILY)
    r2 = make_record([1.0], series_id="s2", granularity=Granularity.WEEKLY)
    with pytest.raises(ValueError):
        Corpus("bad", (r1, r2))
