"""Experiment runner: the three replication studies as config-driven runs.

  under_specificity  few-shot sweep of prompted backends vs trained locals on
                     the information-seeking subset
  over_specificity   fine-grained vs collapsed toxic labeling, evaluated in a
                     shared coarse frame after prediction collapse
  distribution       balanced vs imbalanced vs imbalanced-large training data

Each run writes one report bundle named by the config digest. With the same
seeds and inputs, all bundle contents except latency files are reproduced
byte-for-byte.
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Sequence

import yaml

from ..backends import (
    BackendConfig,
    BagOfWordsBackend,
    ClassifierBackend,
    EncoderBackend,
    EncoderStubBackend,
    KeywordBackend,
    Prediction,
    PromptSpec,
    PromptedBackend,
    REPLICATION_SHOT_COUNTS,
    default_keyword_backend,
    load_keyword_backend,
)
from ..pipeline import QueryPool, SamplingPlan, materialize, sample
from ..taxonomy import (
    LabelMapping,
    Taxonomy,
    collapse_labels,
    load_mapping_file,
    load_taxonomy_file,
    restrict_taxonomy,
    validate_mapping,
)
from .bundles import config_digest, write_bundle
from .latency import summarize_latencies
from .metrics import EvalReport, confusion, evaluate

logger = logging.getLogger(__name__)

EXPERIMENT_KINDS = ("under_specificity", "over_specificity", "distribution")


class ExperimentError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    kind: str
    taxonomy_path: str
    pool_path: str
    output_dir: str
    backends: list[dict]
    seeds: tuple[int, ...] = (0,)
    shots: tuple[int, ...] = ()
    plans: dict = field(default_factory=dict)
    replication: bool = False

    def __post_init__(self):
        if self.kind not in EXPERIMENT_KINDS:
            raise ExperimentError(f"unknown experiment kind {self.kind!r}")
        if not self.backends:
            raise ExperimentError("at least one backend is required")
        if self.replication and not set(self.shots) <= set(REPLICATION_SHOT_COUNTS):
            raise ExperimentError(
                f"replication shot sweep must be within {REPLICATION_SHOT_COUNTS}"
            )

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "taxonomy": self.taxonomy_path,
            "pool": self.pool_path,
            "output_dir": self.output_dir,
            "backends": self.backends,
            "seeds": list(self.seeds),
            "shots": list(self.shots),
            "plans": self.plans,
            "replication": self.replication,
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "ExperimentConfig":
        return cls(
            kind=data["kind"],
            taxonomy_path=str(data["taxonomy"]),
            pool_path=str(data["pool"]),
            output_dir=str(data["output_dir"]),
            backends=list(data.get("backends", [])),
            seeds=tuple(data.get("seeds", (0,))),
            shots=tuple(data.get("shots", ())),
            plans=dict(data.get("plans", {})),
            replication=bool(data.get("replication", False)),
        )

    @classmethod
    def from_file(cls, path: str | Path) -> "ExperimentConfig":
        return cls.from_dict(yaml.safe_load(Path(path).read_text("utf-8")))


BackendFactory = Callable[..., ClassifierBackend]


def default_backend_factory(
    spec: Mapping,
    taxonomy: Taxonomy,
    prompt_spec: PromptSpec | None = None,
) -> ClassifierBackend:
    kind = spec.get("kind")
    backend_id = spec.get("id", kind)
    if kind == "keyword":
        if spec.get("rules"):
            return load_keyword_backend(spec["rules"], backend_id=backend_id)
        return default_keyword_backend()
    if kind == "encoder_stub":
        return EncoderStubBackend(taxonomy, backend_id=backend_id)
    if kind == "bag_of_words":
        return BagOfWordsBackend(backend_id=backend_id, alpha=float(spec.get("alpha", 1.0)))
    if kind == "encoder":
        return EncoderBackend(
            BackendConfig(
                backend_id=backend_id,
                endpoint=spec["endpoint"],
                credentials_env=spec.get("credentials_env"),
                timeout_s=float(spec.get("timeout_s", 30.0)),
                retries=int(spec.get("retries", 2)),
            )
        )
    if kind == "prompted":
        if prompt_spec is None:
            raise ExperimentError("prompted backends need a prompt spec from the runner")
        return PromptedBackend(
            BackendConfig(
                backend_id=backend_id,
                endpoint=spec["endpoint"],
                credentials_env=spec.get("credentials_env"),
                timeout_s=float(spec.get("timeout_s", 30.0)),
                retries=int(spec.get("retries", 2)),
            ),
            prompt_spec,
            model=spec.get("model", backend_id),
        )
    raise ExperimentError(f"unknown backend kind {kind!r}")


def standalone_backend(spec: Mapping, taxonomy: Taxonomy) -> ClassifierBackend:
    """Build a backend outside an experiment run (gateway, labeling, bench).

    Prompted specs get their prompt built here: shot count and seed from the
    spec, exemplars from an exported dataset file when one is named.
    """
    prompt_spec = None
    if spec.get("kind") == "prompted":
        from ..pipeline.io import read_dataset_file

        exemplars: tuple = ()
        if spec.get("exemplars_file"):
            records = read_dataset_file(spec["exemplars_file"])
            exemplars = tuple((r["text"], r["label_id"]) for r in records)
        prompt_spec = PromptSpec(
            taxonomy,
            shots=int(spec.get("shots", 0)),
            seed=int(spec.get("seed", 0)),
            exemplars=exemplars,
        )
    return default_backend_factory(spec, taxonomy=taxonomy, prompt_spec=prompt_spec)


def collapse_prediction(
    prediction: Prediction,
    source_taxonomy: Taxonomy,
    target_taxonomy: Taxonomy,
    mapping: LabelMapping,
) -> Prediction:
    """Project a fine-grained prediction onto the coarse frame.

    The label follows the mapping (the evaluation protocol maps predicted
    labels); score mass is summed per target class. After collapse, label
    and score-argmax can legitimately disagree, so collapsed predictions are
    not re-validated against the backend contract.
    """
    scores = [0.0] * len(target_taxonomy)
    for i, source_id in enumerate(source_taxonomy.ids()):
        scores[target_taxonomy.index_of(mapping.entries[source_id])] += prediction.scores[i]
    label = collapse_labels(mapping, [prediction.label_id])[0]
    return Prediction(
        label_id=label,
        scores=tuple(scores),
        latency_s=prediction.latency_s,
        backend_id=prediction.backend_id,
    )


def _classify_all(
    backend: ClassifierBackend, taxonomy: Taxonomy, texts: Sequence[str]
) -> tuple[list[Prediction], list[float]]:
    predictions = []
    wall: list[float] = []
    for text in texts:
        started = time.perf_counter()
        predictions.append(backend.classify(taxonomy, text))
        wall.append(time.perf_counter() - started)
    return predictions, wall


def _fit_if_trainable(backend: ClassifierBackend, rows, taxonomy: Taxonomy) -> None:
    if hasattr(backend, "fit"):
        backend.fit([(text, label) for _, text, label in rows], taxonomy)


def _run_under_specificity(
    config: ExperimentConfig, factory: BackendFactory
) -> tuple[dict, dict]:
    taxonomy = load_taxonomy_file(config.taxonomy_path)
    subset = tuple(config.plans.get("subset") or taxonomy.information_seeking_ids())
    taxonomy = restrict_taxonomy(taxonomy, subset, name="is%d" % len(subset))
    pool = QueryPool.load(config.pool_path)
    seed = config.seeds[0]
    plan = SamplingPlan(
        kind="per_class_fixed",
        seed=seed,
        n_per_class=int(config.plans.get("exemplars_per_class", 200)),
        subset=subset,
        fractions=tuple(config.plans.get("fractions", (0.8, 0.1, 0.1))),
    )
    split = sample(pool, plan, taxonomy)
    exemplars = materialize(split, pool, "train")
    test_rows = materialize(split, pool, "test")
    gold = [label for _, _, label in test_rows]
    texts = [text for _, text, _ in test_rows]
    exemplar_pairs = tuple((text, label) for _, text, label in exemplars)

    files: dict[str, object] = {}
    sweep_points: dict[str, list[dict]] = {}
    for spec in config.backends:
        backend_id = spec.get("id", spec.get("kind"))
        sweep_points[backend_id] = []
        shot_counts: Sequence[int | None]
        if spec.get("kind") == "prompted":
            shot_counts = list(config.shots) or [0]
        else:
            shot_counts = [None]
        for k in shot_counts:
            prompt_spec = (
                PromptSpec(taxonomy, shots=k, seed=seed, exemplars=exemplar_pairs)
                if k is not None
                else None
            )
            backend = factory(spec, taxonomy=taxonomy, prompt_spec=prompt_spec)
            _fit_if_trainable(backend, exemplars, taxonomy)
            predictions, wall = _classify_all(backend, taxonomy, texts)
            report = evaluate(gold, predictions, taxonomy)
            suffix = f"{backend_id}_{k}shot" if k is not None else backend_id
            files[f"metrics/under_{suffix}.json"] = report.to_dict()
            files[f"latency/under_{suffix}.json"] = summarize_latencies(
                backend_id, wall, shots=k
            ).to_dict()
            sweep_points[backend_id].append(
                {
                    "shots": k,
                    "accuracy": report.accuracy,
                    "macro_f1": report.macro_f1,
                    "macro_auprc": report.macro_auprc,
                }
            )
    files["plots/shot_sweep.json"] = {"subset": list(subset), "series": sweep_points}
    extra_manifest = {"subset": list(subset), "n_test": len(test_rows)}
    return files, extra_manifest


def _table1_row(report: EvalReport) -> dict:
    def block_cells(block) -> dict:
        return {
            "accuracy": block.accuracy,
            "macro_f1": block.macro_f1,
            "weighted_f1": block.weighted_f1,
            "macro_auprc": block.macro_auprc,
        }

    row = {
        "total": {
            "accuracy": report.accuracy,
            "macro_f1": report.macro_f1,
            "weighted_f1": report.weighted_f1,
            "macro_auprc": report.macro_auprc,
        }
    }
    for name, block in report.group_breakdowns.items():
        row[name] = block_cells(block)
    return row


def _run_over_specificity(
    config: ExperimentConfig, factory: BackendFactory
) -> tuple[dict, dict]:
    plans = config.plans
    separate_taxonomy = load_taxonomy_file(plans["separate_taxonomy"])
    total_taxonomy = load_taxonomy_file(config.taxonomy_path)
    mapping = load_mapping_file(plans["mapping"])
    validate_mapping(mapping, separate_taxonomy, total_taxonomy)
    collapsed_label = plans.get("collapsed_label", "toxic")
    toxic_sources = tuple(
        source for source, target in mapping.entries.items() if target == collapsed_label
    )
    pool = QueryPool.load(config.pool_path)
    seed = config.seeds[0]
    test_n = int(plans.get("test_per_class", 100))
    train_n = int(plans.get("train_per_class", 100))

    test_plan = SamplingPlan(
        kind="toxic_total",
        seed=seed + 1,
        n_per_class=test_n,
        fractions=(1.0, 0.0, 0.0),
        toxic_source_labels=toxic_sources,
        collapsed_label=collapsed_label,
    )
    test_split = sample(pool, test_plan, total_taxonomy)
    test_rows = materialize(test_split, pool, "train")
    gold = [label for _, _, label in test_rows]
    texts = [text for _, text, _ in test_rows]
    remaining = pool.without(test_split.train)

    total_split = sample(
        remaining,
        SamplingPlan(
            kind="toxic_total",
            seed=seed,
            n_per_class=train_n,
            fractions=(1.0, 0.0, 0.0),
            toxic_source_labels=toxic_sources,
            collapsed_label=collapsed_label,
        ),
        total_taxonomy,
    )
    separate_split = sample(
        remaining,
        SamplingPlan(
            kind="toxic_separate", seed=seed, n_per_class=train_n, fractions=(1.0, 0.0, 0.0)
        ),
        separate_taxonomy,
    )
    groups = {
        "toxic": {collapsed_label},
        "non_toxic": set(total_taxonomy.ids()) - {collapsed_label},
    }

    files: dict[str, object] = {}
    comparison: list[dict] = []
    for spec in config.backends:
        backend_id = spec.get("id", spec.get("kind"))

        total_backend = factory(spec, taxonomy=total_taxonomy)
        _fit_if_trainable(total_backend, materialize(total_split, remaining, "train"), total_taxonomy)
        total_predictions, _ = _classify_all(total_backend, total_taxonomy, texts)
        total_report = evaluate(gold, total_predictions, total_taxonomy, groups=groups)

        separate_backend = factory(spec, taxonomy=separate_taxonomy)
        _fit_if_trainable(
            separate_backend, materialize(separate_split, remaining, "train"), separate_taxonomy
        )
        fine_predictions, _ = _classify_all(separate_backend, separate_taxonomy, texts)
        collapsed_predictions = [
            collapse_prediction(p, separate_taxonomy, total_taxonomy, mapping)
            for p in fine_predictions
        ]
        separate_report = evaluate(gold, collapsed_predictions, total_taxonomy, groups=groups)

        files[f"metrics/over_{backend_id}_total.json"] = total_report.to_dict()
        files[f"metrics/over_{backend_id}_separate.json"] = separate_report.to_dict()
        comparison.append(
            {"backend": backend_id, "scheme": "total", **_table1_row(total_report)}
        )
        comparison.append(
            {"backend": backend_id, "scheme": "separate", **_table1_row(separate_report)}
        )
    files["tables/granularity_comparison.json"] = {
        "blocks": ["total", "toxic", "non_toxic"],
        "n_test": len(test_rows),
        "rows": comparison,
    }
    extra_manifest = {
        "n_test": len(test_rows),
        "separate_classes": len(separate_taxonomy),
        "total_classes": len(total_taxonomy),
    }
    return files, extra_manifest


def _run_distribution(config: ExperimentConfig, factory: BackendFactory) -> tuple[dict, dict]:
    taxonomy = load_taxonomy_file(config.taxonomy_path)
    pool = QueryPool.load(config.pool_path)
    plans = config.plans
    seed = config.seeds[0]
    test_plan = SamplingPlan(
        kind="balanced",
        seed=seed + 1,
        n_per_class=int(plans.get("test_per_class", 100)),
        fractions=(1.0, 0.0, 0.0),
    )
    test_split = sample(pool, test_plan, taxonomy)
    test_rows = materialize(test_split, pool, "train")
    gold = [label for _, _, label in test_rows]
    texts = [text for _, text, _ in test_rows]
    remaining = pool.without(test_split.train)

    train_plans = {
        "balanced": SamplingPlan(
            kind="balanced",
            seed=seed,
            n_per_class=int(plans.get("balanced_per_class", 500)),
            fractions=(1.0, 0.0, 0.0),
        ),
        "imbalanced": SamplingPlan(
            kind="imbalanced",
            seed=seed,
            total=int(plans.get("imbalanced_total", 10500)),
            fractions=(1.0, 0.0, 0.0),
        ),
        "imbalanced_large": SamplingPlan(
            kind="imbalanced_large",
            seed=seed,
            total=int(plans.get("imbalanced_total", 10500)),
            fractions=(1.0, 0.0, 0.0),
        ),
    }

    files: dict[str, object] = {}
    rows = []
    for spec in config.backends:
        backend_id = spec.get("id", spec.get("kind"))
        for plan_name, plan in train_plans.items():
            split = sample(remaining, plan, taxonomy)
            backend = factory(spec, taxonomy=taxonomy)
            _fit_if_trainable(backend, materialize(split, remaining, "train"), taxonomy)
            predictions, _ = _classify_all(backend, taxonomy, texts)
            report = evaluate(gold, predictions, taxonomy)
            name = f"dist_{backend_id}_{plan_name}"
            files[f"metrics/{name}.json"] = report.to_dict()
            matrix = confusion(gold, [p.label_id for p in predictions], taxonomy)
            files[f"confusion/{name}.json"] = {
                "labels": list(taxonomy.ids()),
                "counts": matrix.astype(int).tolist(),
            }
            rows.append(
                {
                    "backend": backend_id,
                    "plan": plan_name,
                    "train_size": len(split.train),
                    "accuracy": report.accuracy,
                    "macro_f1": report.macro_f1,
                    "macro_auprc": report.macro_auprc,
                }
            )
    files["plots/distribution_metrics.json"] = {"rows": rows}
    return files, {"n_test": len(test_rows)}


def run_experiment(
    config: ExperimentConfig, backend_factory: BackendFactory | None = None
) -> Path:
    """Run one experiment and write its report bundle; returns the bundle dir."""
    factory = backend_factory or default_backend_factory
    runners = {
        "under_specificity": _run_under_specificity,
        "over_specificity": _run_over_specificity,
        "distribution": _run_distribution,
    }
    files, extra_manifest = runners[config.kind](config, factory)
    digest = config_digest(config.to_dict())
    manifest = {
        "kind": config.kind,
        "seeds": list(config.seeds),
        "config": config.to_dict(),
        **extra_manifest,
    }
    bundle_dir = write_bundle(config.output_dir, digest, manifest, files)
    logger.info("experiment %s -> %s", config.kind, bundle_dir)
    return bundle_dir
