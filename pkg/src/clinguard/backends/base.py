"""Shared classifier contract: predictions, config, transport, validation.

Every backend, local or remote, returns the same Prediction shape: a label
plus a full score vector aligned to the canonical leaf order of the active
taxonomy. Probabilistic backends emit scores summing to one; rule-based ones
emit one-hot vectors. The argmax tie-break (lowest canonical index) is part
of the contract so results stay deterministic across backends.
"""
from __future__ import annotations

import os
import threading
import time
from dataclasses import dataclass
from typing import Sequence

import requests

from ..taxonomy import Taxonomy


class ClassificationError(RuntimeError):
    """The backend could not produce a usable label (e.g. unparseable output)."""


class TransportError(RuntimeError):
    """The remote endpoint could not be reached or answered abnormally."""


@dataclass(frozen=True)
class Prediction:
    label_id: str
    scores: tuple[float, ...]
    latency_s: float
    backend_id: str


@dataclass(frozen=True)
class BackendConfig:
    """Connection settings for a remote backend.

    credentials_env names an environment variable; the secret itself is
    resolved at call time and never stored on the config, so configs are
    safe to serialize into reports and logs.
    """

    backend_id: str
    endpoint: str = ""
    credentials_env: str | None = None
    timeout_s: float = 30.0
    retries: int = 2
    max_in_flight: int = 8


def argmax_lowest(scores: Sequence[float]) -> int:
    """Index of the maximum score; ties break to the lowest canonical index."""
    best = 0
    for i in range(1, len(scores)):
        if scores[i] > scores[best]:
            best = i
    return best


def one_hot(index: int, n: int) -> tuple[float, ...]:
    return tuple(1.0 if i == index else 0.0 for i in range(n))


def validate_prediction(taxonomy: Taxonomy, prediction: Prediction, tol: float = 1e-6) -> None:
    """Enforce the cross-backend prediction contract."""
    scores = prediction.scores
    if len(scores) != len(taxonomy):
        raise ClassificationError(
            f"score vector has arity {len(scores)}, taxonomy has {len(taxonomy)} leaves"
        )
    if any(s < 0 for s in scores):
        raise ClassificationError("scores must be non-negative")
    total = sum(scores)
    if abs(total - 1.0) > tol:
        raise ClassificationError(f"scores must sum to 1 (got {total!r})")
    expected = taxonomy.ids()[argmax_lowest(scores)]
    if prediction.label_id != expected:
        raise ClassificationError(
            f"label {prediction.label_id!r} disagrees with argmax {expected!r}"
        )


class ClassifierBackend:
    """Base class; concrete backends implement classify()."""

    backend_id: str = "backend"

    def classify(self, taxonomy: Taxonomy, query_text: str) -> Prediction:
        raise NotImplementedError


class HttpJsonTransport:
    """Small JSON-over-HTTP POST helper with bearer-token credentials.

    In-flight requests are bounded by a semaphore so concurrent classify
    calls cannot stampede the remote endpoint. A requests-compatible
    session can be injected for testing.
    """

    def __init__(
        self,
        endpoint: str,
        credentials_env: str | None = None,
        timeout_s: float = 30.0,
        session=None,
        max_in_flight: int = 8,
    ):
        self.endpoint = endpoint.rstrip("/")
        self.credentials_env = credentials_env
        self.timeout_s = timeout_s
        self._session = session or requests.Session()
        self._slots = threading.BoundedSemaphore(max_in_flight)

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        if self.credentials_env:
            token = os.environ.get(self.credentials_env)
            if not token:
                raise TransportError(
                    f"credentials variable {self.credentials_env!r} is not set"
                )
            headers["Authorization"] = f"Bearer {token}"
        return headers

    def post(self, path: str, payload: dict) -> dict:
        url = self.endpoint + path
        try:
            with self._slots:
                response = self._session.post(
                    url, json=payload, headers=self._headers(), timeout=self.timeout_s
                )
        except requests.RequestException as exc:
            raise TransportError(f"POST {url} failed: {exc}") from exc
        if response.status_code >= 400:
            raise TransportError(f"POST {url} returned HTTP {response.status_code}")
        try:
            data = response.json()
        except ValueError as exc:
            raise TransportError(f"POST {url} returned non-JSON body") from exc
        if not isinstance(data, dict):
            raise TransportError(f"POST {url} returned a non-object body")
        return data


def timed(fn):
    """Run fn() and return (result, wall_seconds)."""
    t0 = time.perf_counter()
    result = fn()
    return result, time.perf_counter() - t0
