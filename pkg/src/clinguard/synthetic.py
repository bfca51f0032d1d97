"""Synthetic labeled-query corpora.

Generates deterministic, clearly-artificial query variants from a taxonomy's
own example texts. Each variant embeds one class example verbatim plus
seeded filler, so lexicon-based stubs classify it correctly by construction
and trainable classifiers can learn the classes from token overlap. Used by
tests, demo configs, and desk-scale training runs; never a substitute for
real data.
"""
from __future__ import annotations

import random
from typing import Mapping

from .taxonomy import Taxonomy

_FILLER_WORDS = (
    "please",
    "thanks",
    "today",
    "again",
    "kindly",
    "really",
    "just",
    "maybe",
    "soon",
    "now",
)


def synthesize_records(
    taxonomy: Taxonomy,
    counts: int | Mapping[str, int],
    seed: int = 0,
    source: str = "synthetic-corpus",
    locale: str = "en",
) -> list[dict]:
    """Per-class query variants as plain corpus records.

    counts is either one count applied to every leaf or a per-label mapping.
    Output order is deterministic: canonical class order, then variant index.
    """
    if isinstance(counts, int):
        counts = {leaf.id: counts for leaf in taxonomy.leaves}
    unknown = set(counts) - set(taxonomy.ids())
    if unknown:
        raise ValueError(f"counts reference unknown labels: {sorted(unknown)}")
    records: list[dict] = []
    for leaf in taxonomy.leaves:
        n = counts.get(leaf.id, 0)
        rng = random.Random(f"{seed}:{leaf.id}")
        for i in range(n):
            example = leaf.examples[i % len(leaf.examples)]
            filler = " ".join(rng.choice(_FILLER_WORDS) for _ in range(2))
            records.append(
                {
                    "text": f"{example} ({filler} case {i:05d})",
                    "label_id": leaf.id,
                    "source": source,
                    "locale": locale,
                }
            )
    return records


def skewed_counts(taxonomy: Taxonomy, total: int, decay: float = 0.8) -> dict[str, int]:
    """Geometrically decaying per-class counts summing to ~total.

    Gives sampling and training experiments a naturally skewed pool shape
    without hand-tuned numbers. Every class gets at least one item.
    """
    if not 0 < decay < 1:
        raise ValueError("decay must be in (0, 1)")
    weights = [decay**i for i in range(len(taxonomy))]
    scale = total / sum(weights)
    return {leaf.id: max(1, round(w * scale)) for leaf, w in zip(taxonomy.leaves, weights)}
