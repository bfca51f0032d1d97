"""Seeded sampling plans over a labeled pool.

Plan kinds:
  balanced(n)            n items per taxonomy leaf
  per_class_fixed(k)     k items per listed class (or a total budget split as
                         evenly as the class count allows)
  imbalanced(N)          N items total, per-class counts proportional to the
                         pool (within +-1 via largest-remainder apportionment)
  imbalanced_large(N)    exactly the imbalanced rule at 2N
  toxic_total(n)         n per class where one designated class is drawn from
                         a set of fine-grained source labels and relabeled to
                         the collapsed class
  toxic_separate(n)      n per class over the fine-grained frame

Plan counts size the train part; validation/test are drawn from the same
strata at the configured fraction ratios. Sampling is deterministic given
(pool contents, plan).
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from ..taxonomy import Taxonomy
from .pool import QueryPool

PLAN_KINDS = (
    "balanced",
    "imbalanced",
    "imbalanced_large",
    "per_class_fixed",
    "toxic_total",
    "toxic_separate",
)

DEFAULT_FRACTIONS = (0.8, 0.1, 0.1)


class SamplingError(ValueError):
    pass


@dataclass(frozen=True)
class SamplingPlan:
    kind: str
    seed: int
    n_per_class: int | None = None
    total: int | None = None
    total_budget: int | None = None
    subset: tuple[str, ...] | None = None
    fractions: tuple[float, float, float] = DEFAULT_FRACTIONS
    toxic_source_labels: tuple[str, ...] | None = None
    collapsed_label: str | None = None

    def __post_init__(self):
        if self.kind not in PLAN_KINDS:
            raise SamplingError(f"unknown plan kind {self.kind!r}")
        train_f, val_f, test_f = self.fractions
        if train_f <= 0 or min(val_f, test_f) < 0 or abs(sum(self.fractions) - 1.0) > 1e-9:
            raise SamplingError(f"bad split fractions {self.fractions!r}")
        if self.kind in ("balanced", "toxic_separate") and not self.n_per_class:
            raise SamplingError(f"{self.kind} plan needs n_per_class")
        if self.kind == "per_class_fixed" and not (self.n_per_class or self.total_budget):
            raise SamplingError("per_class_fixed plan needs n_per_class or total_budget")
        if self.kind in ("imbalanced", "imbalanced_large") and not self.total:
            raise SamplingError(f"{self.kind} plan needs a total size")
        if self.kind == "toxic_total":
            if not self.n_per_class:
                raise SamplingError("toxic_total plan needs n_per_class")
            if not self.toxic_source_labels or not self.collapsed_label:
                raise SamplingError(
                    "toxic_total plan needs toxic_source_labels and collapsed_label"
                )

    def to_dict(self) -> dict:
        out = {k: v for k, v in self.__dict__.items() if v is not None}
        out["fractions"] = list(self.fractions)
        if self.subset is not None:
            out["subset"] = list(self.subset)
        if self.toxic_source_labels is not None:
            out["toxic_source_labels"] = list(self.toxic_source_labels)
        return out

    @classmethod
    def from_dict(cls, data: Mapping) -> "SamplingPlan":
        kwargs = dict(data)
        for key in ("subset", "toxic_source_labels"):
            if kwargs.get(key) is not None:
                kwargs[key] = tuple(kwargs[key])
        if "fractions" in kwargs:
            kwargs["fractions"] = tuple(kwargs["fractions"])
        return cls(**kwargs)


@dataclass(frozen=True)
class DatasetSplit:
    train: tuple[str, ...]
    validation: tuple[str, ...]
    test: tuple[str, ...]
    plan: SamplingPlan
    label_overrides: Mapping[str, str] = field(default_factory=dict)

    def all_ids(self) -> tuple[str, ...]:
        return self.train + self.validation + self.test

    def to_dict(self) -> dict:
        return {
            "train": list(self.train),
            "validation": list(self.validation),
            "test": list(self.test),
            "plan": self.plan.to_dict(),
            "label_overrides": dict(self.label_overrides),
        }

    @classmethod
    def from_dict(cls, data: Mapping) -> "DatasetSplit":
        return cls(
            train=tuple(data["train"]),
            validation=tuple(data["validation"]),
            test=tuple(data["test"]),
            plan=SamplingPlan.from_dict(data["plan"]),
            label_overrides=dict(data.get("label_overrides", {})),
        )


def largest_remainder(total: int, weights: Sequence[int]) -> list[int]:
    """Apportion total over weights; every count within 1 of its exact quota."""
    weight_sum = sum(weights)
    if weight_sum <= 0:
        raise SamplingError("cannot apportion over empty weights")
    quotas = [total * w / weight_sum for w in weights]
    counts = [math.floor(q) for q in quotas]
    shortfall = total - sum(counts)
    order = sorted(range(len(weights)), key=lambda i: (-(quotas[i] - counts[i]), i))
    for i in order[:shortfall]:
        counts[i] += 1
    return counts


def _derived_part_sizes(train_n: int, fractions: tuple[float, float, float]) -> tuple[int, int]:
    train_f, val_f, test_f = fractions
    return round(train_n * val_f / train_f), round(train_n * test_f / train_f)


def _train_targets(
    plan: SamplingPlan, taxonomy: Taxonomy, by_label: Mapping[str, list[str]]
) -> dict[str, int]:
    classes = list(plan.subset) if plan.subset else list(taxonomy.ids())
    unknown = set(classes) - set(taxonomy.ids())
    if unknown:
        raise SamplingError(f"plan subset has unknown labels: {sorted(unknown)}")
    if plan.kind in ("balanced", "toxic_separate"):
        return {c: plan.n_per_class for c in classes}
    if plan.kind == "per_class_fixed":
        if plan.n_per_class:
            return {c: plan.n_per_class for c in classes}
        base = plan.total_budget // len(classes)
        remainder = plan.total_budget % len(classes)
        # Budget remainder goes to the first classes in canonical order.
        return {c: base + (1 if i < remainder else 0) for i, c in enumerate(classes)}
    if plan.kind in ("imbalanced", "imbalanced_large"):
        total = plan.total * (2 if plan.kind == "imbalanced_large" else 1)
        weights = [len(by_label.get(c, [])) for c in classes]
        counts = largest_remainder(total, weights)
        return dict(zip(classes, counts))
    if plan.kind == "toxic_total":
        if plan.collapsed_label not in classes:
            raise SamplingError(
                f"collapsed label {plan.collapsed_label!r} is not in the active taxonomy"
            )
        return {c: plan.n_per_class for c in classes}
    raise SamplingError(f"unknown plan kind {plan.kind!r}")


def sample(pool: QueryPool, plan: SamplingPlan, taxonomy: Taxonomy) -> DatasetSplit:
    """Draw a stratified train/validation/test split per the plan.

    Strata are taxonomy classes; candidates within a stratum are shuffled by
    the plan seed over their stable id order, so equal (pool, plan) inputs
    give byte-equal splits.
    """
    by_label: dict[str, list[str]] = {}
    for query in pool.eligible():
        by_label.setdefault(query.label_id, []).append(query.id)

    targets = _train_targets(plan, taxonomy, by_label)
    rng = random.Random(plan.seed)
    train: list[str] = []
    validation: list[str] = []
    test: list[str] = []
    overrides: dict[str, str] = {}

    for label in taxonomy.ids():
        if label not in targets:
            continue
        if plan.kind == "toxic_total" and label == plan.collapsed_label:
            candidates = sorted(
                item_id
                for source in plan.toxic_source_labels
                for item_id in by_label.get(source, [])
            )
        else:
            candidates = list(by_label.get(label, []))
        train_n = targets[label]
        val_n, test_n = _derived_part_sizes(train_n, plan.fractions)
        need = train_n + val_n + test_n
        if len(candidates) < need:
            raise SamplingError(
                f"stratum {label!r}: plan needs {need} items, pool has {len(candidates)}"
            )
        rng.shuffle(candidates)
        picked = candidates[:need]
        if plan.kind == "toxic_total" and label == plan.collapsed_label:
            overrides.update({item_id: plan.collapsed_label for item_id in picked})
        train.extend(picked[:train_n])
        validation.extend(picked[train_n : train_n + val_n])
        test.extend(picked[train_n + val_n : need])

    return DatasetSplit(
        train=tuple(train),
        validation=tuple(validation),
        test=tuple(test),
        plan=plan,
        label_overrides=overrides,
    )


def materialize(split: DatasetSplit, pool: QueryPool, part: str) -> list[tuple[str, str, str]]:
    """(id, text, label) rows for one part, stable id order, overrides applied.

    Raises on ids that are missing from the pool or were removed after
    sampling: removed items must never reach an export.
    """
    if part not in ("train", "validation", "test"):
        raise SamplingError(f"unknown split part {part!r}")
    rows = []
    for item_id in sorted(getattr(split, part)):
        if item_id not in pool:
            raise SamplingError(f"dangling id {item_id!r}: not in pool")
        query = pool.get(item_id)
        if query.removed:
            raise SamplingError(f"dangling id {item_id!r}: item was removed")
        label = split.label_overrides.get(item_id, query.label_id)
        if label is None:
            raise SamplingError(f"dangling id {item_id!r}: item has no label")
        rows.append((item_id, query.text, label))
    return rows
