"""Remote encoder scoring backend.

Speaks the encoder wire schema: POST {"text": ...} to the scoring path and
receive {"scores": [...], "model_version": ...} with scores aligned to the
canonical leaf order of the active taxonomy. The serving side (a fine-tuned
encoder checkpoint) implements the same schema.
"""
from __future__ import annotations

import time

from ..taxonomy import Taxonomy
from .base import (
    BackendConfig,
    ClassificationError,
    ClassifierBackend,
    HttpJsonTransport,
    Prediction,
    TransportError,
    argmax_lowest,
)

SCORE_PATH = "/v1/score"
SCORE_SUM_TOLERANCE = 1e-6


class EncoderBackend(ClassifierBackend):
    def __init__(self, config: BackendConfig, transport=None):
        self.config = config
        self.backend_id = config.backend_id
        self._transport = transport or HttpJsonTransport(
            config.endpoint,
            config.credentials_env,
            config.timeout_s,
            max_in_flight=config.max_in_flight,
        )

    def classify(self, taxonomy: Taxonomy, query_text: str) -> Prediction:
        started = time.perf_counter()
        last_error: TransportError | None = None
        data = None
        for _ in range(self.config.retries + 1):
            try:
                data = self._transport.post(SCORE_PATH, {"text": query_text})
                break
            except TransportError as exc:
                last_error = exc
        if data is None:
            assert last_error is not None
            raise last_error
        raw_scores = data.get("scores")
        if not isinstance(raw_scores, list):
            raise ClassificationError("encoder response is missing 'scores'")
        try:
            scores = tuple(float(s) for s in raw_scores)
        except (TypeError, ValueError) as exc:
            raise ClassificationError(f"non-numeric score in encoder response: {exc}") from exc
        if len(scores) != len(taxonomy):
            raise ClassificationError(
                f"encoder returned {len(scores)} scores for a {len(taxonomy)}-leaf taxonomy"
            )
        if any(s < 0 for s in scores):
            raise ClassificationError("encoder returned a negative score")
        if abs(sum(scores) - 1.0) > SCORE_SUM_TOLERANCE:
            raise ClassificationError(f"encoder scores sum to {sum(scores)!r}, not 1")
        label = taxonomy.ids()[argmax_lowest(scores)]
        return Prediction(
            label_id=label,
            scores=scores,
            latency_s=time.perf_counter() - started,
            backend_id=self.backend_id,
        )
