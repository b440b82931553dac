from __future__ import annotations

import json

import numpy as np
from click.testing import CliRunner

from trendforge.cli import main
from trendforge.ingest import dump_corpus, read_corpus

from conftest import make_corpus

TSF_DOC = (
    "@relation toy\n"
    "@attribute series_name string\n"
    "@attribute start_timestamp date\n"
    "@frequency daily\n"
    "@data\n"
    "s1:2020-01-01 00-00-00:" + ",".join(str(float(i)) for i in range(80)) + "\n"
    "s2:2020-01-01 00-00-00:" + ",".join(str(float(i % 7)) for i in range(90)) + "\n"
)


def test_convert_and_sample_and_split(tmp_path):
    runner = CliRunner()
    tsf = tmp_path / "toy.tsf"
    tsf.write_text(TSF_DOC)
    corpus_path = tmp_path / "toy.jsonl"
    result = runner.invoke(main, ["convert", "--tsf", str(tsf), "--out", str(corpus_path)])
    assert result.exit_code == 0, result.output
    assert read_corpus(corpus_path).name == "toy"

    windows_path = tmp_path / "windows.jsonl"
    manifest_path = tmp_path / "sample-manifest.json"
    result = runner.invoke(
        main,
        [
            "sample", "--corpus", str(corpus_path), "--n", "5", "--seed", "3",
            "--tau-min", "30", "--tau-max", "60",
            "--out", str(windows_path), "--manifest", str(manifest_path),
        ],
    )
    assert result.exit_code == 0, result.output
    assert len(windows_path.read_text().splitlines()) == 5
    assert json.loads(manifest_path.read_text())["total"] == 5

    result = runner.invoke(
        main,
        [
            "split", "--corpus", str(corpus_path),
            "--train-out", str(tmp_path / "train.jsonl"),
            "--test-out", str(tmp_path / "test.jsonl"),
        ],
    )
    assert result.exit_code == 0, result.output
    train = read_corpus(tmp_path / "train.jsonl")
    assert len(train.records[0]) == 56  # floor(0.7 * 80)


def test_forge_command(tmp_path):
    runner = CliRunner()
    corpus_dir = tmp_path / "corpora"
    corpus_dir.mkdir()
    rng = np.random.default_rng(1)
    values = [list(50 + rng.normal(size=150).cumsum()) for _ in range(2)]
    (corpus_dir / "drift.jsonl").write_text(dump_corpus(make_corpus(*values, name="drift")))
    out = tmp_path / "out"
    result = runner.invoke(
        main,
        [
            "forge", "--corpus-dir", str(corpus_dir), "--n", "2", "--seed", "5",
            "--tau-min", "30", "--tau-max", "80", "--no-images", "--out", str(out),
        ],
    )
    assert result.exit_code == 0, result.output
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["total"] == 20


def test_eval_build_and_summary(tmp_path):
    runner = CliRunner()
    windows_path = tmp_path / "windows.jsonl"
    entries = []
    for i in range(2):
        entries.append(
            {
                "values": list(np.arange(30.0) + i),
                "corpus": "toy",
                "series_id": "s0",
                "start_index": 0,
                "granularity": "daily",
                "split": "test",
                "seed": i,
            }
        )
    windows_path.write_text("\n".join(json.dumps(e) for e in entries) + "\n")
    outputs_path = tmp_path / "outputs.json"
    outputs_path.write_text(json.dumps({"m1": ["a", "b"], "m2": ["c", "d"]}))
    evalset_path = tmp_path / "evalset.json"
    result = runner.invoke(
        main,
        [
            "eval", "build", "--windows", str(windows_path),
            "--outputs", str(outputs_path), "--seed", "4", "--out", str(evalset_path),
        ],
    )
    assert result.exit_code == 0, result.output

    store_path = tmp_path / "scores.jsonl"
    result = runner.invoke(
        main,
        ["eval", "summary", "--evalset", str(evalset_path), "--store", str(store_path)],
    )
    assert result.exit_code == 1
    assert "incomplete" in result.output

    from trendforge.evaluation import ScoreRecord, ScoreStore

    store = ScoreStore(store_path)
    for item in ("item-0000", "item-0001"):
        for model in ("m1", "m2"):
            store.record(ScoreRecord(item, "r1", model, 2, "A", 0.0))
    result = runner.invoke(
        main,
        ["eval", "summary", "--evalset", str(evalset_path), "--store", str(store_path)],
    )
    assert result.exit_code == 0, result.output
    assert "m1" in result.output and "1.000" in result.output
