"""Evaluation harness: metrics, latency, experiments, report bundles."""

from .bundles import (
    BUNDLE_SCHEMA,
    BundleError,
    bundle_files,
    config_digest,
    list_bundles,
    read_bundle_file,
    write_bundle,
)
from .experiments import (
    EXPERIMENT_KINDS,
    ExperimentConfig,
    ExperimentError,
    collapse_prediction,
    default_backend_factory,
    run_experiment,
)
from .files import PREDICTIONS_SCHEMA, PredictionFileError, read_predictions_file, write_predictions_file
from .latency import LatencyReport, benchmark_latency, summarize_latencies
from .metrics import (
    ClassMetrics,
    EvalReport,
    EvaluationError,
    MetricBlock,
    average_precision,
    confusion,
    evaluate,
    export_confusion,
    group_metrics,
)

__all__ = [
    "BUNDLE_SCHEMA",
    "BundleError",
    "ClassMetrics",
    "EXPERIMENT_KINDS",
    "EvalReport",
    "EvaluationError",
    "ExperimentConfig",
    "ExperimentError",
    "LatencyReport",
    "MetricBlock",
    "PREDICTIONS_SCHEMA",
    "PredictionFileError",
    "average_precision",
    "benchmark_latency",
    "bundle_files",
    "collapse_prediction",
    "config_digest",
    "confusion",
    "default_backend_factory",
    "evaluate",
    "export_confusion",
    "group_metrics",
    "list_bundles",
    "read_bundle_file",
    "read_predictions_file",
    "run_experiment",
    "summarize_latencies",
    "write_bundle",
    "write_predictions_file",
]
