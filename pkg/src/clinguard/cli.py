"""Command-line interface.

Groups mirror the subsystems: taxonomy inspection, the dataset pipeline
(ingest/label/augment/sample/export plus synthesize for demo pools), the
evaluation harness (evaluate/confusion/bench/experiment), and serve.
"""
from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import yaml

from . import synthetic
from .backends import validate_prediction
from .evaluation import (
    ExperimentConfig,
    benchmark_latency,
    confusion as confusion_matrix,
    evaluate,
    export_confusion,
    read_predictions_file,
    run_experiment,
)
from .evaluation.experiments import standalone_backend
from .gateway import AnnotationStore, GatewayConfig, create_app
from .pipeline import (
    DatasetSplit,
    QueryPool,
    RemoteQueryGenerator,
    SamplingPlan,
    augment_to_parity,
    export_split,
    ingest,
    llm_label,
    sample,
    write_corpus_file,
)
from .backends.base import HttpJsonTransport
from .taxonomy import (
    canonical_taxonomy,
    load_taxonomy_file,
    validate_canonical_shape,
)


def _load_taxonomy(path: str | None):
    if path:
        return load_taxonomy_file(path)
    return canonical_taxonomy()


def _load_backend_spec(path: str):
    spec = yaml.safe_load(Path(path).read_text("utf-8"))
    if not isinstance(spec, dict):
        raise click.ClickException("backend config must be a mapping")
    return spec


@click.group()
def main() -> None:
    """Clinical chatbot safety gateway toolkit."""


# ---- taxonomy ----


@main.group()
def taxonomy() -> None:
    """Inspect and validate taxonomy definition files."""


@taxonomy.command("validate")
@click.option("--file", "path", type=click.Path(exists=True), default=None)
@click.option("--canonical", is_flag=True, help="Also check the 21-leaf partition shape.")
def taxonomy_validate(path: str | None, canonical: bool) -> None:
    tax = _load_taxonomy(path)
    if canonical or path is None:
        validate_canonical_shape(tax)
    click.echo(f"ok: {len(tax)} leaves, version {tax.version}, digest {tax.source_digest[:12]}")


@taxonomy.command("show")
@click.option("--file", "path", type=click.Path(exists=True), default=None)
def taxonomy_show(path: str | None) -> None:
    tax = _load_taxonomy(path)
    for leaf in tax.leaves:
        click.echo(f"{leaf.id:32s} {'/'.join(leaf.path)}")


# ---- dataset pipeline ----


@main.group()
def dataset() -> None:
    """Dataset construction pipeline."""


@dataset.command("synthesize")
@click.option("--taxonomy", "taxonomy_path", type=click.Path(exists=True), default=None)
@click.option("--out", type=click.Path(), required=True)
@click.option("--per-class", type=int, default=None, help="Equal count per class.")
@click.option("--skewed-total", type=int, default=None, help="Skewed pool of ~N items.")
@click.option("--seed", type=int, default=0)
@click.option("--corpus", is_flag=True, help="Write a raw corpus file instead of a pool.")
def dataset_synthesize(
    taxonomy_path: str | None,
    out: str,
    per_class: int | None,
    skewed_total: int | None,
    seed: int,
    corpus: bool,
) -> None:
    """Generate a synthetic labeled pool (or corpus) for demos and tests."""
    if (per_class is None) == (skewed_total is None):
        raise click.ClickException("give exactly one of --per-class / --skewed-total")
    tax = _load_taxonomy(taxonomy_path)
    counts = per_class if per_class else synthetic.skewed_counts(tax, skewed_total)
    records = synthetic.synthesize_records(tax, counts, seed=seed)
    if corpus:
        write_corpus_file(out, records, source="synthetic-corpus")
    else:
        pool = QueryPool()
        for record in records:
            pool.add_text(
                record["text"],
                label_id=record["label_id"],
                source=record["source"],
                provenance="synthetic",
            )
        pool.save(out)
    click.echo(f"wrote {len(records)} records to {out}")


@dataset.command("ingest")
@click.argument("files", nargs=-1, required=True, type=click.Path(exists=True))
@click.option("--out", type=click.Path(), required=True)
def dataset_ingest(files: tuple[str, ...], out: str) -> None:
    result = ingest(list(files))
    result.pool.save(out)
    click.echo(
        f"pool {out}: {result.accepted} accepted, "
        f"{result.duplicates} duplicates, {result.skipped} skipped"
    )


@dataset.command("label")
@click.option("--pool", "pool_path", type=click.Path(exists=True), required=True)
@click.option("--taxonomy", "taxonomy_path", type=click.Path(exists=True), default=None)
@click.option("--backend", "backend_path", type=click.Path(exists=True), required=True)
@click.option("--state", type=click.Path(), default=None)
def dataset_label(pool_path: str, taxonomy_path: str | None, backend_path: str, state: str | None) -> None:
    tax = _load_taxonomy(taxonomy_path)
    pool = QueryPool.load(pool_path)
    backend = standalone_backend(_load_backend_spec(backend_path), tax)
    result = llm_label(pool, backend, tax, pool_path=pool_path, state_path=state)
    click.echo(
        f"labeled {result.labeled}, already labeled {result.already_labeled}, "
        f"failed {len(result.failed_ids)}"
    )


@dataset.command("augment")
@click.option("--pool", "pool_path", type=click.Path(exists=True), required=True)
@click.option("--taxonomy", "taxonomy_path", type=click.Path(exists=True), default=None)
@click.option("--endpoint", required=True, help="Completion endpoint for generation.")
@click.option("--model", required=True)
@click.option("--credentials-env", default=None)
@click.option("--temperature", type=float, default=0.7)
@click.option("--seed", type=int, default=0)
def dataset_augment(
    pool_path: str,
    taxonomy_path: str | None,
    endpoint: str,
    model: str,
    credentials_env: str | None,
    temperature: float,
    seed: int,
) -> None:
    tax = _load_taxonomy(taxonomy_path)
    pool = QueryPool.load(pool_path)
    generator = RemoteQueryGenerator(
        HttpJsonTransport(endpoint, credentials_env), model=model, temperature=temperature
    )
    result = augment_to_parity(pool, generator, tax, seed=seed)
    pool.save(pool_path)
    click.echo(f"target {result.target}: added {result.total_added}, shortfall {result.shortfall}")


@dataset.command("sample")
@click.option("--pool", "pool_path", type=click.Path(exists=True), default=None)
@click.option("--store", "store_dir", type=click.Path(exists=True), default=None)
@click.option("--taxonomy", "taxonomy_path", type=click.Path(exists=True), default=None)
@click.option("--plan", "plan_path", type=click.Path(exists=True), required=True)
@click.option("--seed", type=int, default=None, help="Override the plan file's seed.")
@click.option("--out", type=click.Path(), required=True)
def dataset_sample(
    pool_path: str | None,
    store_dir: str | None,
    taxonomy_path: str | None,
    plan_path: str,
    seed: int | None,
    out: str,
) -> None:
    """Sample a split from a pool file or a live annotation store."""
    if (pool_path is None) == (store_dir is None):
        raise click.ClickException("give exactly one of --pool / --store")
    tax = _load_taxonomy(taxonomy_path)
    if store_dir:
        pool = AnnotationStore(store_dir, tax).pool
    else:
        pool = QueryPool.load(pool_path)
    plan_data = yaml.safe_load(Path(plan_path).read_text("utf-8"))
    if seed is not None:
        plan_data["seed"] = seed
    plan = SamplingPlan.from_dict(plan_data)
    split = sample(pool, plan, tax)
    Path(out).write_text(json.dumps(split.to_dict(), indent=2, sort_keys=True) + "\n")
    click.echo(
        f"split {out}: train {len(split.train)}, "
        f"validation {len(split.validation)}, test {len(split.test)}"
    )


@dataset.command("export")
@click.option("--pool", "pool_path", type=click.Path(exists=True), default=None)
@click.option("--store", "store_dir", type=click.Path(exists=True), default=None)
@click.option("--taxonomy", "taxonomy_path", type=click.Path(exists=True), default=None)
@click.option("--split", "split_path", type=click.Path(exists=True), required=True)
@click.option("--out-dir", type=click.Path(), required=True)
@click.option("--basename", default="dataset")
def dataset_export(
    pool_path: str | None,
    store_dir: str | None,
    taxonomy_path: str | None,
    split_path: str,
    out_dir: str,
    basename: str,
) -> None:
    """Export a split from a pool file or a live annotation store."""
    if (pool_path is None) == (store_dir is None):
        raise click.ClickException("give exactly one of --pool / --store")
    if store_dir:
        tax = _load_taxonomy(taxonomy_path)
        pool = AnnotationStore(store_dir, tax).pool
    else:
        pool = QueryPool.load(pool_path)
    split = DatasetSplit.from_dict(json.loads(Path(split_path).read_text("utf-8")))
    paths = export_split(split, pool, out_dir, basename=basename)
    for part, path in paths.items():
        click.echo(f"{part}: {path}")


# ---- evaluation harness ----


@main.group(name="eval")
def eval_group() -> None:
    """Evaluation harness."""


@eval_group.command("evaluate")
@click.option("--predictions", "predictions_path", type=click.Path(exists=True), required=True)
@click.option("--taxonomy", "taxonomy_path", type=click.Path(exists=True), default=None)
@click.option("--groups", "groups_path", type=click.Path(exists=True), default=None)
@click.option("--out", type=click.Path(), default=None)
def eval_evaluate(
    predictions_path: str, taxonomy_path: str | None, groups_path: str | None, out: str | None
) -> None:
    tax = _load_taxonomy(taxonomy_path)
    _, gold, predictions = read_predictions_file(predictions_path)
    for prediction in predictions:
        validate_prediction(tax, prediction)
    groups = None
    if groups_path:
        groups = yaml.safe_load(Path(groups_path).read_text("utf-8"))
    report = evaluate(gold, predictions, tax, groups=groups)
    payload = json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n"
    if out:
        Path(out).write_text(payload)
    click.echo(
        f"n={report.n_items} accuracy={report.accuracy:.4f} "
        f"macro_f1={report.macro_f1:.4f} macro_auprc={report.macro_auprc:.4f}"
    )


@eval_group.command("confusion")
@click.option("--predictions", "predictions_path", type=click.Path(exists=True), required=True)
@click.option("--taxonomy", "taxonomy_path", type=click.Path(exists=True), default=None)
@click.option("--grid", type=click.Path(), required=True)
@click.option("--plot", type=click.Path(), required=True)
def eval_confusion(predictions_path: str, taxonomy_path: str | None, grid: str, plot: str) -> None:
    tax = _load_taxonomy(taxonomy_path)
    _, gold, predictions = read_predictions_file(predictions_path)
    matrix = confusion_matrix(gold, [p.label_id for p in predictions], tax)
    export_confusion(matrix, tax, grid, plot)
    click.echo(f"confusion over {int(matrix.sum())} items -> {grid}, {plot}")


@eval_group.command("bench")
@click.option("--backend", "backend_path", type=click.Path(exists=True), required=True)
@click.option("--taxonomy", "taxonomy_path", type=click.Path(exists=True), default=None)
@click.option("--queries", "queries_path", type=click.Path(exists=True), required=True)
@click.option("--warmup", type=int, default=5)
@click.option("--out", type=click.Path(), default=None)
def eval_bench(
    backend_path: str, taxonomy_path: str | None, queries_path: str, warmup: int, out: str | None
) -> None:
    """Benchmark a backend over a file of queries (one per line)."""
    tax = _load_taxonomy(taxonomy_path)
    backend = standalone_backend(_load_backend_spec(backend_path), tax)
    queries = [
        line.strip() for line in Path(queries_path).read_text("utf-8").splitlines() if line.strip()
    ]
    report = benchmark_latency(backend, tax, queries, warmup=warmup)
    if out:
        Path(out).write_text(json.dumps(report.to_dict(), indent=2, sort_keys=True) + "\n")
    click.echo(
        f"{report.backend_id}: n={len(report.samples_s)} "
        f"p50={report.p50_s:.6f}s p95={report.p95_s:.6f}s failures={report.n_failures}"
    )


@eval_group.command("experiment")
@click.option("--config", "config_path", type=click.Path(exists=True), required=True)
def eval_experiment(config_path: str) -> None:
    config = ExperimentConfig.from_file(config_path)
    bundle_dir = run_experiment(config)
    click.echo(f"bundle: {bundle_dir}")


# ---- gateway ----


@main.command("serve")
@click.option("--config", "config_path", type=click.Path(exists=True), required=True)
def serve(config_path: str) -> None:
    """Run the gateway service (fails fast on invalid configuration)."""
    import uvicorn

    try:
        config = GatewayConfig.from_file(config_path)
        app = create_app(config)
    except Exception as exc:
        click.echo(f"startup validation failed: {exc}", err=True)
        sys.exit(2)
    uvicorn.run(app, host=config.host, port=config.port, log_level="info")


if __name__ == "__main__":
    main()
