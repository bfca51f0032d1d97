"""Wall-clock latency benchmarking at the backend contract boundary.

Timing wraps the classify() call from the outside, so remote backends are
measured including network time and retries. Warmup calls run first and are
excluded from all statistics. Failures mid-run are counted, not fatal: a
partial report is more useful than none.
"""
from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..backends import ClassificationError, ClassifierBackend, TransportError
from ..taxonomy import Taxonomy


@dataclass
class LatencyReport:
    backend_id: str
    samples_s: list[float]
    p50_s: float | None
    p95_s: float | None
    mean_s: float | None
    warmup: int
    n_failures: int
    shots: int | None = None

    def to_dict(self) -> dict:
        return {
            "backend_id": self.backend_id,
            "n_samples": len(self.samples_s),
            "p50_s": self.p50_s,
            "p95_s": self.p95_s,
            "mean_s": self.mean_s,
            "warmup": self.warmup,
            "n_failures": self.n_failures,
            "shots": self.shots,
            "samples_s": self.samples_s,
        }


def summarize_latencies(
    backend_id: str,
    samples_s: Sequence[float],
    warmup: int = 0,
    n_failures: int = 0,
    shots: int | None = None,
) -> LatencyReport:
    samples = list(samples_s)
    if samples:
        p50, p95 = (float(v) for v in np.percentile(samples, [50, 95]))
        mean = float(np.mean(samples))
    else:
        p50 = p95 = mean = None
    return LatencyReport(
        backend_id=backend_id,
        samples_s=samples,
        p50_s=p50,
        p95_s=p95,
        mean_s=mean,
        warmup=warmup,
        n_failures=n_failures,
        shots=shots,
    )


def benchmark_latency(
    backend: ClassifierBackend,
    taxonomy: Taxonomy,
    queries: Sequence[str],
    warmup: int = 0,
) -> LatencyReport:
    if len(queries) < warmup + 1:
        raise ValueError(f"need at least warmup+1 queries, got {len(queries)} for warmup={warmup}")
    for query in queries[:warmup]:
        try:
            backend.classify(taxonomy, query)
        except (ClassificationError, TransportError):
            pass
    samples: list[float] = []
    failures = 0
    for query in queries[warmup:]:
        started = time.perf_counter()
        try:
            backend.classify(taxonomy, query)
        except (ClassificationError, TransportError):
            failures += 1
            continue
        samples.append(time.perf_counter() - started)
    return summarize_latencies(
        backend.backend_id,
        samples,
        warmup=warmup,
        n_failures=failures,
        shots=getattr(backend, "shots", None),
    )
