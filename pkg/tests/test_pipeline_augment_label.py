from __future__ import annotations

import json

import pytest

from clinguard.backends import ClassificationError, ClassifierBackend, TransportError
from clinguard.backends.base import Prediction, one_hot
from clinguard.pipeline import (
    AugmentError,
    QueryGenerator,
    QueryPool,
    augment_to_parity,
    llm_label,
)

from conftest import make_taxonomy


class StubGenerator(QueryGenerator):
    """Deterministic generator: numbered variations of an exemplar."""

    def __init__(self):
        self.counter = 0

    def generate(self, leaf, exemplars, n):
        out = []
        for _ in range(n):
            self.counter += 1
            out.append(f"{exemplars[0]} generated variation {self.counter}")
        return out


class DuplicateGenerator(QueryGenerator):
    """Always returns the same text; exercises the shortfall path."""

    def generate(self, leaf, exemplars, n):
        return [f"always the same for {leaf.id}"] * n


class OracleBackend(ClassifierBackend):
    """Labels by reading the class name planted in the query text."""

    backend_id = "oracle"

    def __init__(self, taxonomy, fail_texts=(), transport_fail_texts=()):
        self.taxonomy = taxonomy
        self.fail_texts = set(fail_texts)
        self.transport_fail_texts = set(transport_fail_texts)
        self.calls = 0

    def classify(self, taxonomy, query_text):
        self.calls += 1
        if query_text in self.fail_texts:
            raise ClassificationError("unparseable")
        if query_text in self.transport_fail_texts:
            raise TransportError("endpoint down")
        for leaf in taxonomy.leaves:
            if leaf.id in query_text:
                index = taxonomy.index_of(leaf.id)
                return Prediction(leaf.id, one_hot(index, len(taxonomy)), 0.0, self.backend_id)
        raise ClassificationError("no marker")


@pytest.fixture()
def tiny():
    return make_taxonomy(["alpha", "beta", "gamma"])


def _pool_with_counts(taxonomy, counts):
    pool = QueryPool()
    for label, n in counts.items():
        for i in range(n):
            pool.add_text(f"{label} seed text {i}", label_id=label, provenance="collected")
    return pool


def test_augment_reaches_parity(tiny):
    pool = _pool_with_counts(tiny, {"alpha": 5, "beta": 2, "gamma": 5})
    result = augment_to_parity(pool, StubGenerator(), tiny, seed=0)
    assert result.target == 5
    assert result.added == {"alpha": 0, "beta": 3, "gamma": 0}
    assert pool.counts_by_label(tiny) == {"alpha": 5, "beta": 5, "gamma": 5}
    assert not result.shortfall
    synthetic = [q for q in pool.eligible(tiny) if q.provenance == "synthetic"]
    assert len(synthetic) == 3
    assert all(q.label_id == "beta" for q in synthetic)


def test_augment_balanced_pool_is_noop(tiny):
    pool = _pool_with_counts(tiny, {"alpha": 4, "beta": 4, "gamma": 4})
    result = augment_to_parity(pool, StubGenerator(), tiny)
    assert result.total_added == 0
    assert pool.counts_by_label(tiny) == {"alpha": 4, "beta": 4, "gamma": 4}


def test_augment_never_exceeds_target(tiny):
    pool = _pool_with_counts(tiny, {"alpha": 7, "beta": 1, "gamma": 3})
    augment_to_parity(pool, StubGenerator(), tiny)
    counts = pool.counts_by_label(tiny)
    assert max(counts.values()) == 7
    assert set(counts.values()) == {7}


def test_augment_requires_seed_exemplars(tiny):
    pool = _pool_with_counts(tiny, {"alpha": 3, "beta": 2})
    with pytest.raises(AugmentError, match="gamma"):
        augment_to_parity(pool, StubGenerator(), tiny)


def test_augment_reports_shortfall_on_duplicate_generation(tiny):
    pool = _pool_with_counts(tiny, {"alpha": 5, "beta": 1, "gamma": 5})
    result = augment_to_parity(pool, DuplicateGenerator(), tiny, max_rounds=3)
    assert result.added["beta"] == 1  # first generation is new, the rest are dupes
    assert result.shortfall == {"beta": 3}


def test_llm_label_labels_everything(tiny):
    pool = QueryPool()
    for i in range(10):
        pool.add_text(f"alpha mention {i}")
    backend = OracleBackend(tiny)
    result = llm_label(pool, backend, tiny)
    assert result.labeled == 10
    assert not result.failed_ids
    assert all(q.provenance == "llm_labeled" for q in pool.items())
    assert all(q.label_id == "alpha" for q in pool.items())


def test_llm_label_flags_failures_and_continues(tiny):
    pool = QueryPool()
    ids = {}
    for i in range(10):
        item_id, _ = pool.add_text(f"beta item number {i}")
        ids[i] = item_id
    failing_text = pool.get(ids[3]).text
    backend = OracleBackend(tiny, fail_texts={failing_text})
    result = llm_label(pool, backend, tiny)
    assert result.labeled == 9
    assert result.failed_ids == [ids[3]]
    assert pool.get(ids[3]).label_id is None


def test_llm_label_resume_skips_labeled(tiny, tmp_path):
    pool = QueryPool()
    for i in range(6):
        pool.add_text(f"gamma question {i}")
    pool_path = tmp_path / "pool.jsonl"
    state_path = tmp_path / "state.json"
    backend = OracleBackend(tiny)
    llm_label(pool, backend, tiny, pool_path=pool_path, state_path=state_path)
    first_calls = backend.calls

    resumed = QueryPool.load(pool_path)
    result = llm_label(resumed, backend, tiny, pool_path=pool_path, state_path=state_path)
    assert backend.calls == first_calls  # nothing re-sent
    assert result.labeled == 0
    assert result.already_labeled == 6
    state = json.loads(state_path.read_text())
    assert state["failed_ids"] == []


def test_llm_label_transport_failure_checkpoints_and_raises(tiny, tmp_path):
    pool = QueryPool()
    ids = []
    for i in range(5):
        item_id, _ = pool.add_text(f"alpha q {i}")
        ids.append(item_id)
    # fail on the third item in id order
    third_text = pool.items()[2].text
    backend = OracleBackend(tiny, transport_fail_texts={third_text})
    pool_path = tmp_path / "pool.jsonl"
    with pytest.raises(TransportError):
        llm_label(pool, backend, tiny, pool_path=pool_path, checkpoint_every=100)
    saved = QueryPool.load(pool_path)
    labeled = [q for q in saved.items() if q.label_id is not None]
    assert len(labeled) == 2  # progress before the outage was persisted
