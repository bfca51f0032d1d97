from __future__ import annotations

import json

import pytest
import yaml
from click.testing import CliRunner

from clinguard.backends.base import Prediction, one_hot
from clinguard.cli import main
from clinguard.evaluation import write_predictions_file
from clinguard.pipeline import QueryPool
from clinguard.taxonomy import canonical_taxonomy, packaged_data_path


@pytest.fixture()
def runner():
    return CliRunner()


def test_taxonomy_validate(runner):
    result = runner.invoke(main, ["taxonomy", "validate"])
    assert result.exit_code == 0
    assert "21 leaves" in result.output


def test_taxonomy_show(runner):
    result = runner.invoke(main, ["taxonomy", "show"])
    assert result.exit_code == 0
    assert "self_harm" in result.output and "unsafe/clinical" in result.output


def test_dataset_synthesize_and_sample_and_export(runner, tmp_path):
    pool_path = tmp_path / "pool.jsonl"
    result = runner.invoke(
        main,
        ["dataset", "synthesize", "--per-class", "12", "--seed", "4", "--out", str(pool_path)],
    )
    assert result.exit_code == 0, result.output
    pool = QueryPool.load(pool_path)
    assert len(pool) == 12 * 21

    plan_path = tmp_path / "plan.yaml"
    plan_path.write_text(
        yaml.safe_dump({"kind": "balanced", "seed": 1, "n_per_class": 8})
    )
    split_path = tmp_path / "split.json"
    result = runner.invoke(
        main,
        [
            "dataset", "sample",
            "--pool", str(pool_path),
            "--plan", str(plan_path),
            "--out", str(split_path),
        ],
    )
    assert result.exit_code == 0, result.output
    assert "train 168" in result.output

    out_dir = tmp_path / "export"
    result = runner.invoke(
        main,
        [
            "dataset", "export",
            "--pool", str(pool_path),
            "--split", str(split_path),
            "--out-dir", str(out_dir),
        ],
    )
    assert result.exit_code == 0, result.output
    first = (out_dir / "dataset.train.jsonl").read_bytes()

    result = runner.invoke(
        main,
        [
            "dataset", "export",
            "--pool", str(pool_path),
            "--split", str(split_path),
            "--out-dir", str(out_dir),
        ],
    )
    assert result.exit_code == 0
    assert (out_dir / "dataset.train.jsonl").read_bytes() == first


def test_dataset_ingest(runner, tmp_path):
    corpus = tmp_path / "corpus.jsonl"
    with corpus.open("w") as fh:
        fh.write(json.dumps({"schema": "clinguard.corpus/1"}) + "\n")
        for i in range(5):
            fh.write(json.dumps({"text": f"record {i}"}) + "\n")
    result = runner.invoke(
        main, ["dataset", "ingest", str(corpus), "--out", str(tmp_path / "pool.jsonl")]
    )
    assert result.exit_code == 0
    assert "5 accepted" in result.output


def test_eval_evaluate_and_confusion(runner, tmp_path):
    taxonomy = canonical_taxonomy()
    rows = []
    for leaf in taxonomy.leaves:
        prediction = Prediction(
            leaf.id, one_hot(taxonomy.index_of(leaf.id), 21), 0.0, "t"
        )
        rows.append((f"id-{leaf.id}", leaf.id, prediction))
    predictions_path = tmp_path / "preds.jsonl"
    write_predictions_file(predictions_path, rows, backend_id="t")

    report_path = tmp_path / "report.json"
    result = runner.invoke(
        main,
        ["eval", "evaluate", "--predictions", str(predictions_path), "--out", str(report_path)],
    )
    assert result.exit_code == 0, result.output
    assert "accuracy=1.0000" in result.output
    assert json.loads(report_path.read_text())["n_items"] == 21

    result = runner.invoke(
        main,
        [
            "eval", "confusion",
            "--predictions", str(predictions_path),
            "--grid", str(tmp_path / "cm.tsv"),
            "--plot", str(tmp_path / "cm.json"),
        ],
    )
    assert result.exit_code == 0, result.output
    assert (tmp_path / "cm.tsv").exists()


def test_eval_bench_keyword(runner, tmp_path):
    queries = tmp_path / "queries.txt"
    queries.write_text("\n".join(f"query number {i}" for i in range(30)))
    backend = tmp_path / "backend.yaml"
    backend.write_text(yaml.safe_dump({"id": "kw", "kind": "keyword"}))
    result = runner.invoke(
        main,
        [
            "eval", "bench",
            "--backend", str(backend),
            "--queries", str(queries),
            "--warmup", "3",
            "--out", str(tmp_path / "latency.json"),
        ],
    )
    assert result.exit_code == 0, result.output
    report = json.loads((tmp_path / "latency.json").read_text())
    assert report["n_samples"] == 27


def test_eval_experiment(runner, tmp_path):
    pool_path = tmp_path / "pool.jsonl"
    runner.invoke(
        main,
        ["dataset", "synthesize", "--per-class", "12", "--out", str(pool_path)],
    )
    config = {
        "kind": "distribution",
        "taxonomy": str(packaged_data_path("clinical_intent_21.yaml")),
        "pool": str(pool_path),
        "output_dir": str(tmp_path / "bundles"),
        "backends": [{"id": "bow", "kind": "bag_of_words"}],
        "seeds": [1],
        "plans": {"test_per_class": 2, "balanced_per_class": 4, "imbalanced_total": 84},
    }
    config_path = tmp_path / "experiment.yaml"
    config_path.write_text(yaml.safe_dump(config))
    result = runner.invoke(main, ["eval", "experiment", "--config", str(config_path)])
    assert result.exit_code == 0, result.output
    assert "bundle:" in result.output


def test_serve_rejects_invalid_config(runner, tmp_path):
    config_path = tmp_path / "gateway.yaml"
    config_path.write_text(yaml.safe_dump({"taxonomy": "missing.yaml"}))
    result = runner.invoke(main, ["serve", "--config", str(config_path)])
    assert result.exit_code == 2
    assert "startup validation failed" in result.output


def test_dataset_synthesize_corpus_then_ingest(runner, tmp_path):
    corpus_path = tmp_path / "corpus.jsonl"
    result = runner.invoke(
        main,
        [
            "dataset", "synthesize",
            "--per-class", "3",
            "--corpus",
            "--out", str(corpus_path),
        ],
    )
    assert result.exit_code == 0, result.output
    result = runner.invoke(
        main, ["dataset", "ingest", str(corpus_path), "--out", str(tmp_path / "pool.jsonl")]
    )
    assert result.exit_code == 0
    assert "63 accepted" in result.output
