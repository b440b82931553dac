"""End-to-end forging: corpus -> windows -> trends -> descriptions -> dataset."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .augmentation import make_augmented_set
from .decomposition import (
    GpFitConfig,
    StlConfig,
    decompose,
    decomposition_to_json,
)
from .description import (
    DEFAULT_TEMPLATE,
    LlmClient,
    LlmConfig,
    PromptTemplate,
    build_prompt,
    describe_llm,
    describe_rules,
    rephrase_llm,
)
from .emitter import DEFAULT_QUESTION, InstructionSample, emit_dataset, make_sample
from .ingest import Corpus, train_split
from .trend_summary import summarize, summary_to_json
from .windowing import (
    DEFAULT_TAU_RANGE,
    batch_manifest,
    derive_seed,
    sample_across,
)


@dataclass
class ForgeConfig:
    n: int
    seed: int
    tau_range: tuple[int, int] = DEFAULT_TAU_RANGE
    describer: str = "rules"  # "rules" | "llm"
    augmentations: int = 9
    use_train_split: bool = True
    train_ratio: float = 0.7
    write_images: bool = True
    question: str = DEFAULT_QUESTION
    template: PromptTemplate = field(default_factory=lambda: DEFAULT_TEMPLATE)
    llm: LlmConfig | None = None
    stl: StlConfig = field(default_factory=StlConfig)
    gp: GpFitConfig = field(default_factory=GpFitConfig)


def forge(corpora: Sequence[Corpus], config: ForgeConfig, out_dir: str | Path) -> dict:
    """Forge an instruction dataset from corpora into ``out_dir``.

    Per window: extract the trend, summarize it, describe it once, then attach
    a rephrased copy of that description to each augmented variant.  Output is
    samples.jsonl, manifest.json, decompositions.jsonl, summaries.jsonl and,
    unless disabled, one PNG per sample.
    """
    if config.describer not in ("rules", "llm"):
        raise ValueError(f"unknown describer {config.describer!r}")
    client = None
    if config.describer == "llm":
        if config.llm is None:
            raise ValueError("llm describer requested but no LlmConfig given")
        client = LlmClient(config.llm)

    if config.use_train_split:
        corpora = [train_split(c, config.train_ratio)[0] for c in corpora]

    windows = sample_across(corpora, config.n, derive_seed(config.seed, 0), config.tau_range)

    samples: list[InstructionSample] = []
    decomposition_records: list[dict] = []
    summary_records: list[dict] = []
    try:
        for i, window in enumerate(windows):
            window_id = f"w{i:05d}"
            decomp = decompose(window, config.stl, config.gp)
            summary = summarize(decomp.trend, window_id)
            decomposition_records.append(decomposition_to_json(decomp, window_id))
            summary_records.append(summary_to_json(summary))

            if client is None:
                description = describe_rules(summary)
            else:
                prompt = build_prompt(summary, config.template)
                description = describe_llm(client, prompt, window_id)
            samples.append(
                make_sample(
                    f"{window_id}-orig",
                    window,
                    config.question,
                    description.text,
                    template_version=config.template.version,
                )
            )
            if config.augmentations:
                variants = make_augmented_set(
                    window, config.augmentations, derive_seed(config.seed, 1, i)
                )
                for j, (augmented, spec) in enumerate(variants):
                    rephrased = rephrase_llm(client, description, variant=j)
                    samples.append(
                        make_sample(
                            f"{window_id}-aug{j}",
                            augmented,
                            config.question,
                            rephrased.text,
                            template_version=config.template.version,
                            augmentation=spec,
                            original_id=f"{window_id}-orig",
                        )
                    )
    finally:
        if client is not None:
            client.close()

    out = Path(out_dir)
    manifest = emit_dataset(
        samples,
        out,
        write_images=config.write_images,
        check_multiplicity=config.augmentations == 9,
    )
    manifest["windows"] = batch_manifest(windows)
    manifest["seed"] = config.seed
    manifest["describer"] = config.describer
    with open(out / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(out / "decompositions.jsonl", "w", encoding="utf-8") as fh:
        for record in decomposition_records:
            fh.write(json.dumps(record) + "\n")
    with open(out / "summaries.jsonl", "w", encoding="utf-8") as fh:
        for record in summary_records:
            fh.write(json.dumps(record) + "\n")
    return manifest
