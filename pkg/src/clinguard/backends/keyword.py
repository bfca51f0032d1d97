"""Deterministic keyword baseline classifier.

Ordered substring rules, first match wins, one-hot scores. Useful as a
latency floor, a smoke-test classifier, and a last-resort fallback; not a
quality baseline.
"""
from __future__ import annotations

import time
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import yaml

from ..taxonomy import Taxonomy, packaged_data_path
from .base import ClassificationError, ClassifierBackend, Prediction, one_hot


@dataclass(frozen=True)
class KeywordRule:
    phrase: str
    label_id: str


class KeywordBackend(ClassifierBackend):
    def __init__(
        self,
        rules: Sequence[KeywordRule],
        fallback_label: str = "gibberish",
        backend_id: str = "keyword-baseline",
    ):
        self.rules = tuple(KeywordRule(r.phrase.lower(), r.label_id) for r in rules)
        self.fallback_label = fallback_label
        self.backend_id = backend_id

    def classify(self, taxonomy: Taxonomy, query_text: str) -> Prediction:
        started = time.perf_counter()
        lowered = query_text.lower()
        label = None
        for rule in self.rules:
            # Rules whose label is outside the active subset are skipped so the
            # same rule file works for restricted taxonomies.
            if rule.label_id in taxonomy and rule.phrase in lowered:
                label = rule.label_id
                break
        if label is None:
            if self.fallback_label not in taxonomy:
                raise ClassificationError(
                    f"fallback label {self.fallback_label!r} is not in the active taxonomy"
                )
            label = self.fallback_label
        index = taxonomy.index_of(label)
        return Prediction(
            label_id=label,
            scores=one_hot(index, len(taxonomy)),
            latency_s=time.perf_counter() - started,
            backend_id=self.backend_id,
        )


def load_keyword_rules(document: str) -> tuple[list[KeywordRule], str]:
    doc = yaml.safe_load(document)
    if not isinstance(doc, dict) or not isinstance(doc.get("rules"), list):
        raise ValueError("keyword document must be a mapping with a 'rules' list")
    rules = []
    for i, raw in enumerate(doc["rules"]):
        if not isinstance(raw, dict) or "phrase" not in raw or "label" not in raw:
            raise ValueError(f"rules[{i}] must have 'phrase' and 'label'")
        rules.append(KeywordRule(str(raw["phrase"]), str(raw["label"])))
    fallback = str(doc.get("fallback", "gibberish"))
    return rules, fallback


def load_keyword_backend(path: str | Path, backend_id: str = "keyword-baseline") -> KeywordBackend:
    rules, fallback = load_keyword_rules(Path(path).read_text("utf-8"))
    return KeywordBackend(rules, fallback_label=fallback, backend_id=backend_id)


def default_keyword_backend() -> KeywordBackend:
    return load_keyword_backend(packaged_data_path("keywords_default.yaml"))
