"""Acceptance suite: one test per shipping criterion, strict tolerances.

Run with `pytest tests/test_acceptance.py -v -s` to see one PASS line per
criterion. Every expected value here is either structural (exact counts),
computed by an independent brute-force oracle, or a stated latency bound.
"""
from __future__ import annotations

import random
import time

import pytest
from fastapi.testclient import TestClient

from clinguard.backends import (
    BackendConfig,
    EncoderStubBackend,
    FailingBackend,
    PromptSpec,
    PromptedBackend,
    default_keyword_backend,
)
from clinguard.evaluation import (
    ExperimentConfig,
    benchmark_latency,
    collapse_prediction,
    evaluate,
    run_experiment,
)
from clinguard.gateway import GatewayConfig, create_app
from clinguard.pipeline import QueryPool, SamplingPlan, export_split, materialize, sample
from clinguard.pipeline.augment import QueryGenerator, augment_to_parity
from clinguard.routing import RoutingAction, default_policy, route
from clinguard.synthetic import synthesize_records
from clinguard.taxonomy import (
    ToolRequirement,
    canonical_taxonomy,
    collapse_labels,
    load_mapping_file,
    load_taxonomy_file,
    packaged_data_path,
    restrict_taxonomy,
    tool_requirements,
    validate_canonical_shape,
)

from conftest import make_prediction, synthetic_pool
from oracles import (
    oracle_accuracy,
    oracle_macro_auprc,
    oracle_macro_f1,
)


def _announce(line: str) -> None:
    print(f"\nACCEPTANCE PASS: {line}")


# -- criterion: taxonomy structure ------------------------------------------


def test_taxonomy_structure():
    started = time.perf_counter()
    taxonomy = canonical_taxonomy()
    validate_canonical_shape(taxonomy)
    assert len(taxonomy) == 21
    assert taxonomy.partition_counts() == {
        "unsafe/non_clinical": 5,
        "unsafe/clinical": 4,
        "safe/non_clinical": 2,
        "safe/clinical/non_information_seeking": 2,
        "safe/clinical/information_seeking": 8,
    }
    is_ids = taxonomy.information_seeking_ids()
    assert len(is_ids) == 8
    tool_sets = {tool_requirements(taxonomy, leaf_id) for leaf_id in is_ids}
    power_set = set()
    tools = list(ToolRequirement)
    for mask in range(8):
        power_set.add(frozenset(t for i, t in enumerate(tools) if mask & (1 << i)))
    assert tool_sets == power_set
    elapsed = time.perf_counter() - started
    assert elapsed < 1.0
    _announce(
        f"taxonomy structure: 21 leaves partitioned (5,4,2,2,8); "
        f"IS tool sets are a bijection onto the power set ({elapsed:.3f}s < 1s)"
    )


# -- criterion: metric oracles ----------------------------------------------


def test_metric_oracles():
    from conftest import make_taxonomy

    started = time.perf_counter()
    rng = random.Random(20250810)
    for trial in range(100):
        n_classes = rng.randint(2, 5)
        ids = [f"class_{chr(ord('a') + i)}" for i in range(n_classes)]
        taxonomy = make_taxonomy(ids)
        n_items = rng.randint(n_classes, 50)
        gold = [rng.choice(ids) for _ in range(n_items)]
        for i, label in enumerate(ids):
            gold[i] = label
        predictions = []
        for _ in range(n_items):
            if trial % 2:
                scores = [0.0] * n_classes
                scores[rng.randrange(n_classes)] = 1.0
            else:
                raw = [rng.random() for _ in range(n_classes)]
                if rng.random() < 0.3:
                    raw[rng.randrange(n_classes)] = raw[rng.randrange(n_classes)]
                total = sum(raw)
                scores = [v / total for v in raw]
            best = max(range(n_classes), key=lambda i: (scores[i], -i))
            predictions.append(make_prediction(taxonomy, ids[best], scores))
        report = evaluate(gold, predictions, taxonomy)
        predicted = [p.label_id for p in predictions]
        scores_rows = [list(p.scores) for p in predictions]
        assert abs(report.accuracy - oracle_accuracy(gold, predicted)) < 1e-9
        assert abs(report.macro_f1 - oracle_macro_f1(gold, predicted, ids)) < 1e-9
        assert abs(report.macro_auprc - oracle_macro_auprc(gold, scores_rows, ids)) < 1e-9
    elapsed = time.perf_counter() - started
    assert elapsed < 10.0
    _announce(
        f"metric oracles: accuracy/macro-F1/macro-AUPRC within 1e-9 of brute force "
        f"on 100 random instances ({elapsed:.2f}s < 10s)"
    )


# -- criterion: collapse protocol -------------------------------------------


def test_collapse_protocol(tmp_path):
    separate = load_taxonomy_file(packaged_data_path("toxic_study_separate_29.yaml"))
    total = load_taxonomy_file(packaged_data_path("toxic_study_total_21.yaml"))
    mapping = load_mapping_file(packaged_data_path("mapping_toxic_separate_to_total.tsv"))

    # field-identical evaluation after collapse vs pre-collapsed predictions
    rng = random.Random(99)
    fine_ids = list(separate.ids())
    gold_fine = [rng.choice(fine_ids) for _ in range(400)]
    fine_predictions = []
    for _ in range(400):
        raw = [rng.random() for _ in range(29)]
        norm = sum(raw)
        scores = [v / norm for v in raw]
        best = max(range(29), key=lambda i: (scores[i], -i))
        fine_predictions.append(make_prediction(separate, fine_ids[best], scores))
    gold_coarse = collapse_labels(mapping, gold_fine)
    collapsed = [collapse_prediction(p, separate, total, mapping) for p in fine_predictions]
    pre_collapsed = [
        make_prediction(total, p.label_id, p.scores, backend_id=p.backend_id)
        for p in collapsed
    ]
    groups = {"toxic": {"toxic"}, "non_toxic": set(total.ids()) - {"toxic"}}
    report_a = evaluate(gold_coarse, collapsed, total, groups=groups)
    report_b = evaluate(gold_coarse, pre_collapsed, total, groups=groups)
    assert report_a.to_dict() == report_b.to_dict()

    # the harness emits a Table-1-shaped comparison on an identical test frame
    pool = synthetic_pool(separate, 220, seed=8)
    config = ExperimentConfig(
        kind="over_specificity",
        taxonomy_path=str(packaged_data_path("toxic_study_total_21.yaml")),
        pool_path=str(pool.save(tmp_path / "study_pool.jsonl")),
        output_dir=str(tmp_path / "bundles"),
        backends=[{"id": "bow", "kind": "bag_of_words"}],
        seeds=(11,),
        plans={
            "separate_taxonomy": str(packaged_data_path("toxic_study_separate_29.yaml")),
            "mapping": str(packaged_data_path("mapping_toxic_separate_to_total.tsv")),
            "train_per_class": 100,
            "test_per_class": 100,
        },
    )
    bundle = run_experiment(config)
    import json

    table = json.loads((bundle / "tables/granularity_comparison.json").read_text())
    assert table["blocks"] == ["total", "toxic", "non_toxic"]
    assert table["n_test"] == 2100  # 100 x 21, shared by both schemes
    schemes = {(r["backend"], r["scheme"]) for r in table["rows"]}
    assert schemes == {("bow", "total"), ("bow", "separate")}
    for row in table["rows"]:
        for block in ("total", "toxic", "non_toxic"):
            assert {"accuracy", "macro_f1", "weighted_f1", "macro_auprc"} <= set(row[block])
    _announce(
        "collapse protocol: 29->21 collapsed evaluation is field-identical to "
        "pre-collapsed; Table-1-shaped comparison emitted with Total/Toxic/Non-Toxic "
        "blocks on a shared 2,100-item test frame"
    )


# -- criterion: sampling plans ----------------------------------------------


@pytest.fixture(scope="module")
def pool_50k():
    taxonomy = canonical_taxonomy()
    counts = {}
    for i, leaf in enumerate(taxonomy.leaves):
        counts[leaf.id] = 800 if i == 0 else 1200 + 120 * i
    records = synthesize_records(taxonomy, counts, seed=17)
    assert len(records) == 50_000
    pool = QueryPool()
    for record in records:
        pool.add_text(
            record["text"], label_id=record["label_id"], source="synthetic", provenance="synthetic"
        )
    assert len(pool) == 50_000
    return pool


def test_sampling_plans(pool_50k, tmp_path):
    taxonomy = canonical_taxonomy()
    started = time.perf_counter()

    balanced = sample(
        pool_50k, SamplingPlan(kind="balanced", seed=7, n_per_class=500), taxonomy
    )
    assert len(balanced.train) == 10_500

    is8 = restrict_taxonomy(taxonomy, taxonomy.information_seeking_ids(), name="is8")
    fixed = sample(
        pool_50k,
        SamplingPlan(
            kind="per_class_fixed",
            seed=7,
            n_per_class=200,
            subset=is8.ids(),
            fractions=(1.0, 0, 0),
        ),
        is8,
    )
    assert len(fixed.train) == 1_600

    imbalanced_plan = SamplingPlan(kind="imbalanced", seed=7, total=10_500, fractions=(1.0, 0, 0))
    imbalanced = sample(pool_50k, imbalanced_plan, taxonomy)
    assert len(imbalanced.train) == 10_500
    pool_counts = pool_50k.counts_by_label(taxonomy)
    pool_total = sum(pool_counts.values())
    sampled_counts: dict[str, int] = {}
    for _, _, label in materialize(imbalanced, pool_50k, "train"):
        sampled_counts[label] = sampled_counts.get(label, 0) + 1
    for label in taxonomy.ids():
        expected = 10_500 * pool_counts[label] / pool_total
        assert abs(sampled_counts.get(label, 0) - expected) < 1 + 1e-9

    # byte-determinism under a fixed seed
    balanced_again = sample(
        pool_50k, SamplingPlan(kind="balanced", seed=7, n_per_class=500), taxonomy
    )
    assert balanced_again == balanced
    first = export_split(balanced, pool_50k, tmp_path / "a", basename="d")
    second = export_split(balanced, pool_50k, tmp_path / "b", basename="d")
    assert all(first[p].read_bytes() == second[p].read_bytes() for p in first)
    elapsed = time.perf_counter() - started
    assert elapsed < 5.0

    # toxic_separate on the fine-grained study pool
    separate = load_taxonomy_file(packaged_data_path("toxic_study_separate_29.yaml"))
    study_pool = synthetic_pool(separate, 130, seed=9)
    toxic_split = sample(
        study_pool,
        SamplingPlan(kind="toxic_separate", seed=7, n_per_class=100, fractions=(1.0, 0, 0)),
        separate,
    )
    assert len(toxic_split.train) == 2_900
    labels = {label for _, _, label in materialize(toxic_split, study_pool, "train")}
    assert len(labels) == 29
    _announce(
        f"sampling plans: balanced(500)x21=10,500; per_class_fixed(200,IS-8)=1,600; "
        f"toxic_separate=2,900 over 29 labels; imbalanced within +-1 of pool "
        f"proportions; byte-deterministic ({elapsed:.2f}s < 5s on the 50K pool)"
    )


# -- criterion: augmentation parity ------------------------------------------


class _StubGenerator(QueryGenerator):
    def __init__(self):
        self.counter = 0

    def generate(self, leaf, exemplars, n):
        out = []
        for _ in range(n):
            self.counter += 1
            out.append(f"{exemplars[0]} synthetic fill {self.counter}")
        return out


def test_augmentation_parity():
    taxonomy = canonical_taxonomy()
    rng = random.Random(13)
    counts = {leaf.id: rng.randint(3, 40) for leaf in taxonomy.leaves}
    pool = synthetic_pool(taxonomy, counts, seed=13)
    before = pool.counts_by_label(taxonomy)
    target = max(before.values())
    result = augment_to_parity(pool, _StubGenerator(), taxonomy, seed=13)
    after = pool.counts_by_label(taxonomy)
    assert result.target == target
    assert set(after.values()) == {target}
    assert not result.shortfall
    assert sum(after.values()) - sum(before.values()) == result.total_added
    _announce(
        f"augmentation parity: every class raised to the pre-augmentation "
        f"maximum ({target}) exactly, never beyond"
    )


# -- criterion: routing table -------------------------------------------------


def test_routing_table():
    taxonomy = canonical_taxonomy()
    policy = default_policy()
    unsafe = 0
    for leaf in taxonomy.leaves:
        decision = route(taxonomy, policy, leaf.id)
        assert decision.label_id == leaf.id
        if leaf.is_unsafe:
            unsafe += 1
            assert decision.action is RoutingAction.BLOCK_WITH_WARNING
            assert decision.log_unsafe
        if decision.action is RoutingAction.ANSWER_WITH_TOOLS:
            assert decision.tools == tool_requirements(taxonomy, leaf.id)
        assert bool(decision.tools) == (decision.action is RoutingAction.ANSWER_WITH_TOOLS)
    assert unsafe == 9
    for leaf_id in taxonomy.information_seeking_ids():
        decision = route(taxonomy, policy, leaf_id)
        derived = tool_requirements(taxonomy, leaf_id)
        if derived:
            assert decision.action is RoutingAction.ANSWER_WITH_TOOLS
            assert decision.tools == derived
    # classifier-failure path fails closed
    failed = route(taxonomy, policy, "some_label_the_classifier_invented")
    assert failed.action is RoutingAction.BLOCK_WITH_WARNING
    _announce(
        "routing table: all 21 leaves route under the default policy; 9 unsafe "
        "leaves block and log; IS tool sets equal the taxonomy derivation; "
        "unresolvable labels fail closed"
    )


# -- criterion: latency harness ----------------------------------------------


class _InstantLLM:
    def post(self, path, payload):
        return {"completion": "General Inquiry"}


def test_latency_harness():
    taxonomy = canonical_taxonomy()
    queries = [f"routine benchmark query number {i}" for i in range(1_010)]
    report = benchmark_latency(default_keyword_backend(), taxonomy, queries, warmup=10)
    assert len(report.samples_s) == 1_000
    assert report.p50_s < 0.001, f"keyword p50 {report.p50_s * 1000:.3f}ms >= 1ms"

    is8 = restrict_taxonomy(taxonomy, taxonomy.information_seeking_ids())
    exemplars = tuple(
        (f"{leaf.id} exemplar {i}", leaf.id) for leaf in is8.leaves for i in range(3)
    )
    shot_reports = []
    for k in (0, 5, 10):
        backend = PromptedBackend(
            BackendConfig("prompt-bench", "http://fake"),
            PromptSpec(is8, shots=k, seed=0, exemplars=exemplars),
            model="fake",
            transport=_InstantLLM(),
        )
        shot_report = benchmark_latency(backend, is8, [f"q {i}" for i in range(20)], warmup=2)
        assert shot_report.shots == k
        assert shot_report.p50_s is not None
        shot_reports.append(shot_report)
    assert [r.shots for r in shot_reports] == [0, 5, 10]
    _announce(
        f"latency harness: keyword baseline p50 = {report.p50_s * 1e3:.4f}ms < 1ms over "
        f"1,000 queries; prompt-backend reports carry per-shot-count latency"
    )


# -- criterion: end-to-end gateway --------------------------------------------


def test_gateway_end_to_end(tmp_path):
    taxonomy = canonical_taxonomy()
    policy = default_policy()
    # exactly 100 queries: the first 16 classes contribute 5, the rest 4
    counts = {leaf.id: (5 if i < 16 else 4) for i, leaf in enumerate(taxonomy.leaves)}
    records = synthesize_records(taxonomy, counts, seed=23)
    assert len(records) == 100

    config = GatewayConfig.from_dict(
        {
            "taxonomy": str(packaged_data_path("clinical_intent_21.yaml")),
            "policy": str(packaged_data_path("policy_default.yaml")),
            "templates": str(packaged_data_path("templates_default.yaml")),
            "active_backend": "stub",
            "backends": [{"id": "stub", "kind": "encoder_stub"}],
            "audit_log": str(tmp_path / "audit.jsonl"),
            "dataset_store": str(tmp_path / "store"),
            "reports_dir": str(tmp_path / "reports"),
        }
    )
    app = create_app(config)
    client = TestClient(app)

    expected_unsafe: dict[str, int] = {}
    for record in records:
        gold = record["label_id"]
        response = client.post("/v1/classify-route", json={"text": record["text"]})
        assert response.status_code == 200
        body = response.json()
        assert body["label_id"] == gold
        expected_decision = route(taxonomy, policy, gold)
        assert body["decision"]["action"] == expected_decision.action.value
        assert body["decision"]["tools"] == sorted(
            t.value for t in expected_decision.tools
        )
        if expected_decision.action is RoutingAction.ANSWER_WITH_TOOLS:
            assert body["decision"]["tools"] == sorted(
                t.value for t in tool_requirements(taxonomy, gold)
            )
        if expected_decision.log_unsafe:
            expected_unsafe[gold] = expected_unsafe.get(gold, 0) + 1

    assert app.state.audit.counters() == expected_unsafe
    assert sum(expected_unsafe.values()) == sum(
        counts[leaf_id] for leaf_id in taxonomy.unsafe_ids()
    )

    # classifier failure fails closed end to end
    failing_app = create_app(config, backend_override=FailingBackend())
    failing_client = TestClient(failing_app)
    response = failing_client.post("/v1/classify-route", json={"text": "anything"})
    assert response.status_code == 502
    assert response.json()["decision"]["action"] == "block_with_warning"
    _announce(
        "end-to-end gateway: 100-query synthetic suite returns consistent "
        "label/action/tool-set triples; unsafe queries audited with correct "
        "per-category counters; classifier failure fails closed"
    )
