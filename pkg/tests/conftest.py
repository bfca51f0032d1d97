from __future__ import annotations

import pytest
import yaml

from clinguard.backends.base import Prediction, one_hot
from clinguard.pipeline import QueryPool
from clinguard.synthetic import synthesize_records
from clinguard.taxonomy import Taxonomy, canonical_taxonomy, load_taxonomy


@pytest.fixture(scope="session")
def canonical() -> Taxonomy:
    return canonical_taxonomy()


def make_taxonomy(ids: list[str], version: str = "test/1") -> Taxonomy:
    """Small ad-hoc taxonomy over generic safe/non-clinical leaves."""
    leaves = [
        {
            "id": leaf_id,
            "display_name": leaf_id.replace("_", " ").title(),
            "path": ["safe", "non_clinical"],
            "description": {"en": f"test class {leaf_id}"},
            "examples": {"en": [f"example query for {leaf_id}"]},
        }
        for leaf_id in ids
    ]
    doc = yaml.safe_dump({"version": version, "default_locale": "en", "leaves": leaves})
    return load_taxonomy(doc)


def make_prediction(
    taxonomy: Taxonomy, label: str, scores=None, backend_id: str = "test"
) -> Prediction:
    if scores is None:
        scores = one_hot(taxonomy.index_of(label), len(taxonomy))
    return Prediction(label_id=label, scores=tuple(scores), latency_s=0.0, backend_id=backend_id)


def synthetic_pool(taxonomy: Taxonomy, counts, seed: int = 0) -> QueryPool:
    pool = QueryPool()
    for record in synthesize_records(taxonomy, counts, seed=seed):
        pool.add_text(
            record["text"],
            label_id=record["label_id"],
            source=record["source"],
            provenance="synthetic",
        )
    return pool
