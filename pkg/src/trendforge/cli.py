"""Command-line entry points; thin wrappers over the library and the service."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import __version__
from .description import LlmConfig
from .ingest import (
    Corpus,
    CsvSchema,
    Granularity,
    aggregate_corpus,
    parse_csv,
    parse_tsf,
    read_corpus,
    train_split,
    write_corpus,
)
from .pipeline import ForgeConfig, forge
from .windowing import batch_manifest, sample_batch, window_from_json, window_to_json


@click.group()
@click.version_option(__version__)
def main() -> None:
    """Forge trend-description datasets and run the blind scoring service."""


@main.command()
@click.option("--tsf", type=click.Path(exists=True, path_type=Path), help=".tsf input")
@click.option("--csv", "csv_path", type=click.Path(exists=True, path_type=Path), help="CSV input")
@click.option("--layout", type=click.Choice(["wide", "long"]), default="wide")
@click.option("--granularity", type=click.Choice([g.value for g in Granularity]))
@click.option("--time-col", default=None)
@click.option("--id-col", default=None)
@click.option("--value-col", default=None)
@click.option("--name", default=None, help="corpus name (default: file stem)")
@click.option("--aggregate", "factor", type=int, default=1, help="merge this many steps into one")
@click.option("--reducer", type=click.Choice(["mean", "sum"]), default="mean")
@click.option("--out", type=click.Path(path_type=Path), required=True)
def convert(tsf, csv_path, layout, granularity, time_col, id_col, value_col, name, factor, reducer, out):
    """Convert a raw corpus file to the canonical line-delimited format."""
    if (tsf is None) == (csv_path is None):
        raise click.UsageError("give exactly one of --tsf / --csv")
    if tsf is not None:
        corpus = parse_tsf(tsf.read_bytes(), name=name or tsf.stem)
    else:
        if granularity is None:
            raise click.UsageError("--granularity is required for CSV input")
        schema = CsvSchema(
            granularity=Granularity(granularity),
            layout=layout,
            time_column=time_col,
            id_column=id_col,
            value_column=value_col,
        )
        corpus = parse_csv(csv_path.read_bytes(), schema, name=name or csv_path.stem)
    if factor > 1:
        corpus = aggregate_corpus(corpus, factor, reducer)
    write_corpus(corpus, out)
    click.echo(f"wrote {len(corpus.records)} series to {out}")


@main.command()
@click.option("--corpus", "corpus_path", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--ratio", type=float, default=0.7, show_default=True)
@click.option("--train-out", type=click.Path(path_type=Path), required=True)
@click.option("--test-out", type=click.Path(path_type=Path), required=True)
def split(corpus_path, ratio, train_out, test_out):
    """Temporal train/test split of a canonical corpus."""
    corpus = read_corpus(corpus_path)
    train, test = train_split(corpus, ratio)
    write_corpus(train, train_out)
    write_corpus(test, test_out)
    click.echo(f"split {corpus.name}: train -> {train_out}, test -> {test_out}")


@main.command()
@click.option("--corpus", "corpus_path", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--n", type=int, required=True)
@click.option("--seed", type=int, required=True)
@click.option("--tau-min", type=int, default=30, show_default=True)
@click.option("--tau-max", type=int, default=500, show_default=True)
@click.option("--out", type=click.Path(path_type=Path), required=True)
@click.option("--manifest", "manifest_path", type=click.Path(path_type=Path), default=None)
def sample(corpus_path, n, seed, tau_min, tau_max, out, manifest_path):
    """Sample description-ready windows from a corpus."""
    corpus = read_corpus(corpus_path)
    windows = sample_batch(corpus, n, seed, (tau_min, tau_max))
    with open(out, "w", encoding="utf-8") as fh:
        for window in windows:
            fh.write(json.dumps(window_to_json(window)) + "\n")
    manifest = batch_manifest(windows)
    if manifest_path:
        manifest_path.write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    click.echo(f"sampled {manifest['total']} windows -> {out}")


@main.command(name="forge")
@click.option("--corpus-dir", type=click.Path(exists=True, file_okay=False, path_type=Path), required=True)
@click.option("--n", type=int, required=True)
@click.option("--seed", type=int, required=True)
@click.option("--describer", type=click.Choice(["rules", "llm"]), default="rules", show_default=True)
@click.option("--llm-base-url", default=None)
@click.option("--llm-model", default="gpt-4", show_default=True)
@click.option("--tau-min", type=int, default=30, show_default=True)
@click.option("--tau-max", type=int, default=500, show_default=True)
@click.option("--augmentations", type=int, default=9, show_default=True)
@click.option("--full-series/--train-split", "use_full", default=False,
              help="sample from whole series instead of the temporal train part")
@click.option("--images/--no-images", default=True, show_default=True)
@click.option("--out", type=click.Path(path_type=Path), required=True)
def forge_cmd(corpus_dir, n, seed, describer, llm_base_url, llm_model,
              tau_min, tau_max, augmentations, use_full, images, out):
    """Forge an instruction dataset from every corpus file in a directory."""
    corpora: list[Corpus] = []
    for path in sorted(corpus_dir.glob("*.jsonl")) + sorted(corpus_dir.glob("*.tsf")):
        if path.suffix == ".tsf":
            corpora.append(parse_tsf(path.read_bytes(), name=path.stem))
        else:
            corpora.append(read_corpus(path))
    if not corpora:
        raise click.UsageError(f"no .jsonl or .tsf corpora in {corpus_dir}")
    llm = None
    if describer == "llm":
        if not llm_base_url:
            raise click.UsageError("--llm-base-url is required with --describer llm")
        llm = LlmConfig(base_url=llm_base_url, model=llm_model)
    config = ForgeConfig(
        n=n,
        seed=seed,
        tau_range=(tau_min, tau_max),
        describer=describer,
        augmentations=augmentations,
        use_train_split=not use_full,
        write_images=images,
        llm=llm,
    )
    manifest = forge(corpora, config, out)
    click.echo(f"forged {manifest['total']} samples -> {out}")


@main.group(name="eval")
def eval_group() -> None:
    """Build, serve, and summarize blind human evaluations."""


@eval_group.command(name="build")
@click.option("--windows", "windows_path", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--outputs", "outputs_path", type=click.Path(exists=True, path_type=Path), required=True,
              help='JSON file: {"model_id": ["description per window", ...]}')
@click.option("--seed", type=int, required=True)
@click.option("--out", type=click.Path(path_type=Path), required=True)
def eval_build(windows_path, outputs_path, seed, out):
    """Assemble an evaluation set from windows and per-model descriptions."""
    from .evaluation import build_eval_set, eval_set_to_json

    windows = [
        window_from_json(json.loads(line))
        for line in windows_path.read_text(encoding="utf-8").splitlines()
        if line.strip()
    ]
    outputs = json.loads(outputs_path.read_text(encoding="utf-8"))
    eval_set = build_eval_set(windows, outputs, seed)
    out.write_text(json.dumps(eval_set_to_json(eval_set), indent=2) + "\n", encoding="utf-8")
    click.echo(f"built {len(eval_set.items)} items -> {out}")


@eval_group.command(name="serve")
@click.option("--evalset", "evalset_path", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--store", "store_path", type=click.Path(path_type=Path), required=True)
@click.option("--port", type=int, default=8000, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--allow-overwrite", is_flag=True, default=False)
@click.option("--ui", "ui_dir", type=click.Path(path_type=Path), default=None,
              help="directory of static assets for the annotation UI")
def eval_serve(evalset_path, store_path, port, host, allow_overwrite, ui_dir):
    """Run the scoring service for human raters."""
    import uvicorn

    from .evaluation import ScoreStore, eval_set_from_json
    from .service import create_app

    eval_set = eval_set_from_json(json.loads(evalset_path.read_text(encoding="utf-8")))
    store = ScoreStore(store_path)
    app = create_app(
        eval_set, store, allow_overwrite=allow_overwrite, static_dir=ui_dir
    )
    uvicorn.run(app, host=host, port=port, log_level="warning")


@eval_group.command(name="summary")
@click.option("--evalset", "evalset_path", type=click.Path(path_type=Path), default=None)
@click.option("--store", "store_path", type=click.Path(path_type=Path), default=None)
@click.option("--url", default=None, help="query a running service instead of local files")
def eval_summary(evalset_path, store_path, url):
    """Normalized scores per model per split, or progress while incomplete."""
    if url:
        import httpx

        payload = httpx.get(f"{url.rstrip('/')}/api/summary", timeout=10.0).json()
        click.echo(json.dumps(payload, indent=2))
        return
    if not (evalset_path and store_path):
        raise click.UsageError("give --evalset and --store, or --url")

    from .evaluation import IncompleteScores, ScoreStore, eval_set_from_json, progress, summary_scores

    eval_set = eval_set_from_json(json.loads(evalset_path.read_text(encoding="utf-8")))
    store = ScoreStore(store_path)
    try:
        results = summary_scores(eval_set, store)
    except IncompleteScores as exc:
        click.echo(f"incomplete: {exc}")
        click.echo(json.dumps(progress(eval_set, store), indent=2))
        sys.exit(1)
    for model_id, by_split in sorted(results.items()):
        for split_name, value in sorted(by_split.items()):
            click.echo(f"{model_id:24s} {split_name:8s} {value:.3f}")


if __name__ == "__main__":
    main()
