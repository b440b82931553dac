from __future__ import annotations

import json

import numpy as np
import pytest

from trendforge.augmentation import AugmentationSpec, AugOp
from trendforge.emitter import (
    WINDOW_TOKEN,
    DuplicateId,
    EmptyField,
    MultiplicityViolation,
    TooShort,
    emit_dataset,
    format_instruction,
    make_sample,
    parse_instruction,
    render_plot,
)
from trendforge.ingest import Split

from conftest import make_window


def test_format_matches_exact_layout():
    formatted = format_instruction("Describe the trend.", "It rises.")
    assert formatted == "Human: <window>\nDescribe the trend. <STOP>\nAssistant: It rises. <STOP>\n"


def test_format_rejects_empty_fields():
    with pytest.raises(EmptyField):
        format_instruction("Q?", "   ")
    with pytest.raises(EmptyField):
        format_instruction("", "A.")


def test_format_parse_roundtrip():
    cases = [
        ("Describe the trend.", "It rises."),
        ("What happens?", "The series starts around 1.0, dips slightly, and ends near 0.5."),
    ]
    for question, answer in cases:
        token, q, a = parse_instruction(format_instruction(question, answer))
        assert (token, q, a) == (WINDOW_TOKEN, question, answer)


def test_render_plot_deterministic():
    window = make_window(np.sin(np.arange(50) / 3.0))
    assert render_plot(window) == render_plot(window)


def test_render_plot_shape_and_format():
    from PIL import Image
    import io

    window = make_window(np.arange(40.0))
    png = render_plot(window)
    image = Image.open(io.BytesIO(png))
    assert image.size == (336, 336)
    assert image.format == "PNG"


def test_render_constant_series():
    png = render_plot(make_window([3.0] * 30))
    assert png[:8] == b"\x89PNG\r\n\x1a\n"


def test_render_too_short():
    with pytest.raises(TooShort):
        render_plot(make_window([1.0]))


def _sample(sample_id, original_id=None, values=None):
    window = make_window(values if values is not None else np.arange(30.0), split=Split.TRAIN)
    spec = None
    if original_id is not None:
        spec = AugmentationSpec((AugOp("scale", 2.0),), seed=1)
    return make_sample(
        sample_id,
        window,
        "Please describe the trend of this time series.",
        "It rises.",
        template_version="v1",
        augmentation=spec,
        original_id=original_id,
    )


def test_emit_counts_and_manifest(tmp_path):
    samples = []
    for i in range(3):
        samples.append(_sample(f"w{i}-orig"))
        samples.extend(_sample(f"w{i}-aug{j}", original_id=f"w{i}-orig") for j in range(9))
    manifest = emit_dataset(samples, tmp_path, write_images=False)
    assert manifest["total"] == 30
    lines = (tmp_path / "samples.jsonl").read_text().splitlines()
    assert len(lines) == sum(row["samples"] for row in manifest["rows"]) == 30
    kinds = {row["kind"]: row["samples"] for row in manifest["rows"]}
    assert kinds == {"original": 3, "augmented": 27}


def test_emit_writes_images(tmp_path):
    samples = [_sample("a"), _sample("b")]
    emit_dataset(samples, tmp_path, write_images=True, check_multiplicity=False)
    for line in (tmp_path / "samples.jsonl").read_text().splitlines():
        record = json.loads(line)
        assert (tmp_path / record["image_path"]).exists()


def test_emit_duplicate_id(tmp_path):
    with pytest.raises(DuplicateId):
        emit_dataset([_sample("x"), _sample("x")], tmp_path, write_images=False)


def test_emit_empty_input(tmp_path):
    manifest = emit_dataset([], tmp_path, write_images=False)
    assert manifest["total"] == 0
    assert (tmp_path / "samples.jsonl").read_text() == ""


def test_emit_multiplicity_violation(tmp_path):
    samples = [_sample("w0-orig")] + [
        _sample(f"w0-aug{j}", original_id="w0-orig") for j in range(8)
    ]
    with pytest.raises(MultiplicityViolation):
        emit_dataset(samples, tmp_path, write_images=False)


def test_emitted_formatted_strings_parse(tmp_path):
    samples = [_sample(f"s{i}") for i in range(5)]
    emit_dataset(samples, tmp_path, write_images=False, check_multiplicity=False)
    for line in (tmp_path / "samples.jsonl").read_text().splitlines():
        record = json.loads(line)
        token, question, answer = parse_instruction(record["formatted"])
        assert question == record["question"]
        assert answer == record["answer"]
