"""Local stand-in backends.

These let the full gateway, pipeline, and evaluation stack run with no
remote model: a lexicon scorer that mimics an encoder endpoint's output
shape, a trainable bag-of-words classifier for desk-scale experiment runs,
and a backend that always fails for exercising the fail-closed path.
"""
from __future__ import annotations

import math
import re
import time
from collections import Counter
from typing import Iterable, Mapping, Sequence

from ..taxonomy import Taxonomy
from .base import ClassificationError, ClassifierBackend, Prediction, argmax_lowest

_TOKEN_RE = re.compile(r"[a-z0-9']+")


def _tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


class EncoderStubBackend(ClassifierBackend):
    """Scores by lexicon overlap; probabilistic output, no network.

    The lexicon maps each label to phrases whose presence counts toward that
    class. By default it is built from the taxonomy's own example texts, so
    any query quoting a class example classifies to that class. Queries that
    match nothing score uniformly, which exercises the lowest-index
    tie-break.
    """

    def __init__(
        self,
        taxonomy: Taxonomy,
        lexicon: Mapping[str, Sequence[str]] | None = None,
        backend_id: str = "encoder-stub",
    ):
        if lexicon is None:
            lexicon = {leaf.id: list(leaf.examples) for leaf in taxonomy.leaves}
        unknown = set(lexicon) - set(taxonomy.ids())
        if unknown:
            raise ValueError(f"lexicon labels outside taxonomy: {sorted(unknown)}")
        self._lexicon = {
            label: tuple(p.lower() for p in phrases) for label, phrases in lexicon.items()
        }
        self._taxonomy = taxonomy
        self.backend_id = backend_id

    def classify(self, taxonomy: Taxonomy, query_text: str) -> Prediction:
        started = time.perf_counter()
        if taxonomy.ids() != self._taxonomy.ids():
            raise ClassificationError("active taxonomy does not match the stub's lexicon")
        lowered = query_text.lower()
        counts = [
            sum(1 for phrase in self._lexicon.get(label, ()) if phrase in lowered)
            for label in taxonomy.ids()
        ]
        total = sum(counts)
        n = len(taxonomy)
        if total == 0:
            scores = tuple(1.0 / n for _ in range(n))
        else:
            scores = tuple(c / total for c in counts)
        label = taxonomy.ids()[argmax_lowest(scores)]
        return Prediction(
            label_id=label,
            scores=scores,
            latency_s=time.perf_counter() - started,
            backend_id=self.backend_id,
        )


class NotFittedError(RuntimeError):
    pass


class BagOfWordsBackend(ClassifierBackend):
    """Multinomial naive-bayes text classifier over whitespace tokens.

    A deterministic, trainable stand-in for a fine-tuned encoder: fit() on
    (text, label) pairs, then classify() returns a normalized posterior over
    the fitted taxonomy's leaves. Used by the experiment runner when no
    remote backend is configured.
    """

    def __init__(self, backend_id: str = "bag-of-words", alpha: float = 1.0):
        self.backend_id = backend_id
        self.alpha = alpha
        self._taxonomy_ids: tuple[str, ...] | None = None
        self._log_prior: list[float] = []
        self._log_likelihood: list[dict[str, float]] = []
        self._log_unknown: list[float] = []

    def fit(self, examples: Iterable[tuple[str, str]], taxonomy: Taxonomy) -> "BagOfWordsBackend":
        ids = taxonomy.ids()
        index = {label: i for i, label in enumerate(ids)}
        token_counts: list[Counter] = [Counter() for _ in ids]
        class_counts = [0] * len(ids)
        vocabulary: set[str] = set()
        for text, label in examples:
            if label not in index:
                raise ValueError(f"training label {label!r} is not a taxonomy leaf")
            i = index[label]
            class_counts[i] += 1
            tokens = _tokenize(text)
            token_counts[i].update(tokens)
            vocabulary.update(tokens)
        if not any(class_counts):
            raise ValueError("no training examples")
        total = float(sum(class_counts))
        vocab_size = max(len(vocabulary), 1)
        self._taxonomy_ids = ids
        # Classes absent from training keep a tiny prior instead of -inf so
        # posteriors stay well-defined over the whole leaf set.
        self._log_prior = [
            math.log((c + self.alpha) / (total + self.alpha * len(ids))) for c in class_counts
        ]
        self._log_likelihood = []
        self._log_unknown = []
        for i in range(len(ids)):
            denominator = sum(token_counts[i].values()) + self.alpha * vocab_size
            self._log_likelihood.append(
                {
                    token: math.log((count + self.alpha) / denominator)
                    for token, count in token_counts[i].items()
                }
            )
            self._log_unknown.append(math.log(self.alpha / denominator))
        return self

    def classify(self, taxonomy: Taxonomy, query_text: str) -> Prediction:
        started = time.perf_counter()
        if self._taxonomy_ids is None:
            raise NotFittedError("fit() must run before classify()")
        if taxonomy.ids() != self._taxonomy_ids:
            raise ClassificationError("active taxonomy does not match the fitted classes")
        tokens = _tokenize(query_text)
        logs = []
        for i in range(len(taxonomy)):
            ll = self._log_likelihood[i]
            unknown = self._log_unknown[i]
            logs.append(self._log_prior[i] + sum(ll.get(t, unknown) for t in tokens))
        peak = max(logs)
        weights = [math.exp(v - peak) for v in logs]
        norm = sum(weights)
        scores = tuple(w / norm for w in weights)
        label = taxonomy.ids()[argmax_lowest(scores)]
        return Prediction(
            label_id=label,
            scores=scores,
            latency_s=time.perf_counter() - started,
            backend_id=self.backend_id,
        )


class FailingBackend(ClassifierBackend):
    """Always raises; used to exercise fail-closed handling."""

    def __init__(self, backend_id: str = "failing-stub"):
        self.backend_id = backend_id

    def classify(self, taxonomy: Taxonomy, query_text: str) -> Prediction:
        raise ClassificationError("backend configured to fail")
