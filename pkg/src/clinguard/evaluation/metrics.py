"""Classification metrics: accuracy, macro F1, macro AUPRC, confusion.

Conventions, fixed here and mirrored by the test oracles:
  * Per-class precision/recall treat 0/0 as 0; F1 is 0 when P + R = 0.
  * Macro means run over classes present in gold; taxonomy classes with no
    gold support are excluded (their recall would be undefined).
  * A support-weighted F1 is reported alongside the unweighted macro since
    group summaries are often quoted both ways.
  * Per-class AUPRC is average-precision summation over the one-vs-rest
    precision-recall step curve, with tied scores entering as one group; no
    interpolation.
  * Group breakdowns restrict the item set to the group's gold labels; a
    group's AUPRC is reported only when at least two gold classes remain,
    otherwise scores cannot discriminate and the value is omitted.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Collection, Mapping, Sequence

import numpy as np

from ..backends.base import Prediction
from ..taxonomy import Taxonomy


class EvaluationError(ValueError):
    pass


@dataclass(frozen=True)
class ClassMetrics:
    precision: float
    recall: float
    f1: float
    auprc: float | None
    support: int


@dataclass
class MetricBlock:
    accuracy: float
    macro_f1: float
    weighted_f1: float
    macro_auprc: float | None
    per_class: dict[str, ClassMetrics]
    n_items: int

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "macro_f1": self.macro_f1,
            "weighted_f1": self.weighted_f1,
            "macro_auprc": self.macro_auprc,
            "n_items": self.n_items,
            "per_class": {
                label: {
                    "precision": m.precision,
                    "recall": m.recall,
                    "f1": m.f1,
                    "auprc": m.auprc,
                    "support": m.support,
                }
                for label, m in self.per_class.items()
            },
        }


@dataclass
class EvalReport:
    accuracy: float
    macro_f1: float
    weighted_f1: float
    macro_auprc: float | None
    per_class: dict[str, ClassMetrics]
    confusion_matrix: list[list[int]]
    group_breakdowns: dict[str, MetricBlock]
    n_items: int
    labels: tuple[str, ...]
    taxonomy_digest: str = ""

    def to_dict(self) -> dict:
        out = MetricBlock(
            self.accuracy,
            self.macro_f1,
            self.weighted_f1,
            self.macro_auprc,
            self.per_class,
            self.n_items,
        ).to_dict()
        out["labels"] = list(self.labels)
        out["confusion_matrix"] = self.confusion_matrix
        out["groups"] = {name: block.to_dict() for name, block in self.group_breakdowns.items()}
        out["taxonomy_digest"] = self.taxonomy_digest
        return out


def average_precision(y_true: np.ndarray, y_score: np.ndarray) -> float:
    """AP = sum over score groups of (R_n - R_{n-1}) * P_n, descending scores."""
    y_true = np.asarray(y_true, dtype=bool)
    y_score = np.asarray(y_score, dtype=float)
    total_pos = int(y_true.sum())
    if total_pos == 0:
        raise EvaluationError("average precision needs at least one positive")
    order = np.argsort(-y_score, kind="stable")
    sorted_true = y_true[order]
    sorted_score = y_score[order]
    # Inclusive end index of each distinct-score group.
    ends = np.append(np.nonzero(np.diff(sorted_score))[0], len(sorted_score) - 1)
    cum_tp = np.cumsum(sorted_true)[ends]
    recalls = cum_tp / total_pos
    precisions = cum_tp / (ends + 1)
    previous = np.concatenate(([0.0], recalls[:-1]))
    return float(np.sum((recalls - previous) * precisions))


def confusion(
    gold: Sequence[str], predicted: Sequence[str], taxonomy: Taxonomy
) -> np.ndarray:
    """Counts indexed (gold, predicted) in canonical leaf order."""
    if len(gold) != len(predicted):
        raise EvaluationError(f"length mismatch: {len(gold)} gold vs {len(predicted)} predicted")
    n = len(taxonomy)
    matrix = np.zeros((n, n), dtype=np.int64)
    for g, p in zip(gold, predicted):
        matrix[taxonomy.index_of(g), taxonomy.index_of(p)] += 1
    return matrix


def export_confusion(
    matrix: np.ndarray, taxonomy: Taxonomy, grid_path: str | Path, plot_path: str | Path
) -> None:
    """Write the matrix as a TSV grid and as plot-ready JSON."""
    grid_path, plot_path = Path(grid_path), Path(plot_path)
    grid_path.parent.mkdir(parents=True, exist_ok=True)
    plot_path.parent.mkdir(parents=True, exist_ok=True)
    labels = taxonomy.ids()
    lines = ["gold\\predicted\t" + "\t".join(labels)]
    for i, label in enumerate(labels):
        lines.append(label + "\t" + "\t".join(str(int(v)) for v in matrix[i]))
    grid_path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    plot_path.write_text(
        json.dumps(
            {"labels": list(labels), "counts": matrix.astype(int).tolist()},
            indent=2,
            sort_keys=True,
        )
        + "\n",
        encoding="utf-8",
    )


def _block(
    gold_idx: np.ndarray,
    pred_idx: np.ndarray,
    scores: np.ndarray | None,
    class_indices: Sequence[int],
    labels: Sequence[str],
    min_gold_classes_for_auprc: int = 1,
) -> MetricBlock:
    n_items = len(gold_idx)
    accuracy = float(np.mean(gold_idx == pred_idx)) if n_items else 0.0
    per_class: dict[str, ClassMetrics] = {}
    f1_values: list[float] = []
    ap_values: list[float] = []
    supports: list[int] = []

    present = [c for c in class_indices if int(np.sum(gold_idx == c)) > 0]
    auprc_allowed = scores is not None and len(present) >= min_gold_classes_for_auprc

    for c in present:
        gold_c = gold_idx == c
        pred_c = pred_idx == c
        tp = int(np.sum(gold_c & pred_c))
        fp = int(np.sum(~gold_c & pred_c))
        fn = int(np.sum(gold_c & ~pred_c))
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        ap = average_precision(gold_c, scores[:, c]) if auprc_allowed else None
        support = int(np.sum(gold_c))
        per_class[labels[c]] = ClassMetrics(precision, recall, f1, ap, support)
        f1_values.append(f1)
        supports.append(support)
        if ap is not None:
            ap_values.append(ap)

    macro_f1 = float(np.mean(f1_values)) if f1_values else 0.0
    weighted_f1 = (
        float(np.average(f1_values, weights=supports)) if f1_values and sum(supports) else 0.0
    )
    macro_auprc = float(np.mean(ap_values)) if ap_values and auprc_allowed else None
    return MetricBlock(accuracy, macro_f1, weighted_f1, macro_auprc, per_class, n_items)


def _scores_matrix(predictions: Sequence[Prediction], n_classes: int) -> np.ndarray:
    matrix = np.empty((len(predictions), n_classes), dtype=float)
    for i, prediction in enumerate(predictions):
        if len(prediction.scores) != n_classes:
            raise EvaluationError(
                f"prediction {i} has score arity {len(prediction.scores)}, expected {n_classes}"
            )
        matrix[i] = prediction.scores
    return matrix


def group_metrics(
    gold: Sequence[str],
    predictions: Sequence[Prediction],
    taxonomy: Taxonomy,
    groups: Mapping[str, Collection[str]],
) -> dict[str, MetricBlock]:
    """Metric blocks over item subsets selected by gold label groups."""
    for name, members in groups.items():
        unknown = set(members) - set(taxonomy.ids())
        if unknown:
            raise EvaluationError(f"group {name!r} has unknown labels: {sorted(unknown)}")
    gold_idx = np.array([taxonomy.index_of(g) for g in gold], dtype=np.int64)
    pred_idx = np.array([taxonomy.index_of(p.label_id) for p in predictions], dtype=np.int64)
    scores = _scores_matrix(predictions, len(taxonomy))

    blocks: dict[str, MetricBlock] = {}
    for name, members in groups.items():
        class_indices = [taxonomy.index_of(m) for m in members]
        mask = np.isin(gold_idx, class_indices)
        blocks[name] = _block(
            gold_idx[mask],
            pred_idx[mask],
            scores[mask],
            sorted(class_indices),
            taxonomy.ids(),
            min_gold_classes_for_auprc=2,
        )
    return blocks


def evaluate(
    gold: Sequence[str],
    predictions: Sequence[Prediction],
    taxonomy: Taxonomy,
    groups: Mapping[str, Collection[str]] | None = None,
) -> EvalReport:
    """Full report: overall metrics, per-class table, confusion, group blocks."""
    if len(gold) != len(predictions):
        raise EvaluationError(
            f"length mismatch: {len(gold)} gold vs {len(predictions)} predictions"
        )
    if not gold:
        raise EvaluationError("nothing to evaluate")
    gold_idx = np.array([taxonomy.index_of(g) for g in gold], dtype=np.int64)
    pred_idx = np.array([taxonomy.index_of(p.label_id) for p in predictions], dtype=np.int64)
    scores = _scores_matrix(predictions, len(taxonomy))

    top = _block(gold_idx, pred_idx, scores, range(len(taxonomy)), taxonomy.ids())
    matrix = confusion(gold, [p.label_id for p in predictions], taxonomy)
    breakdowns = group_metrics(gold, predictions, taxonomy, groups) if groups else {}
    return EvalReport(
        accuracy=top.accuracy,
        macro_f1=top.macro_f1,
        weighted_f1=top.weighted_f1,
        macro_auprc=top.macro_auprc,
        per_class=top.per_class,
        confusion_matrix=matrix.astype(int).tolist(),
        group_breakdowns=breakdowns,
        n_items=top.n_items,
        labels=taxonomy.ids(),
        taxonomy_digest=taxonomy.source_digest,
    )
