"""Synthetic augmentation of underrepresented classes.

Every class is topped up with generated queries until its count equals the
largest class's pre-augmentation count, never more. Generated texts are
deduplicated against the pool; a generator that keeps producing duplicates
is cut off after a bounded number of rounds and the shortfall is reported
instead of looping forever.
"""
from __future__ import annotations

import logging
import random
from dataclasses import dataclass, field
from typing import Sequence

from ..backends.base import HttpJsonTransport
from ..taxonomy import ClassLabel, Taxonomy
from .pool import QueryPool

logger = logging.getLogger(__name__)

SEED_EXEMPLARS = 3


class AugmentError(ValueError):
    pass


class QueryGenerator:
    """Contract for synthetic query generation backends."""

    def generate(self, leaf: ClassLabel, exemplars: Sequence[str], n: int) -> list[str]:
        raise NotImplementedError


class RemoteQueryGenerator(QueryGenerator):
    """Generation via the single-turn completion endpoint, one query per call."""

    def __init__(self, transport: HttpJsonTransport, model: str, temperature: float = 0.7):
        self._transport = transport
        self.model = model
        self.temperature = temperature

    def _prompt(self, leaf: ClassLabel, exemplars: Sequence[str]) -> str:
        lines = [
            f"Category {leaf.id}: {leaf.description}",
            "Example queries of this category:",
            *[f"- {e}" for e in exemplars],
            "Write one new user query of this category, different from the examples.",
            "Output only the query text.",
        ]
        return "\n".join(lines)

    def generate(self, leaf: ClassLabel, exemplars: Sequence[str], n: int) -> list[str]:
        prompt = self._prompt(leaf, exemplars)
        out = []
        for _ in range(n):
            data = self._transport.post(
                "/v1/complete",
                {"model": self.model, "prompt": prompt, "temperature": self.temperature},
            )
            completion = data.get("completion")
            if isinstance(completion, str) and completion.strip():
                out.append(completion.strip())
        return out


@dataclass
class AugmentResult:
    target: int
    added: dict[str, int] = field(default_factory=dict)
    shortfall: dict[str, int] = field(default_factory=dict)

    @property
    def total_added(self) -> int:
        return sum(self.added.values())


def augment_to_parity(
    pool: QueryPool,
    generator: QueryGenerator,
    taxonomy: Taxonomy,
    seed: int = 0,
    max_rounds: int = 5,
) -> AugmentResult:
    """Generate synthetic items until every class matches the largest class.

    The parity target is fixed from the pre-augmentation counts, so already
    balanced pools are a no-op. Every class needs at least one labeled
    exemplar to seed its generation prompt.
    """
    counts = pool.counts_by_label(taxonomy)
    missing = [leaf.id for leaf in taxonomy.leaves if counts.get(leaf.id, 0) == 0]
    if missing:
        raise AugmentError(f"classes without seed exemplars: {missing}")
    target = max(counts.values())
    result = AugmentResult(target=target)

    for leaf in taxonomy.leaves:
        have = counts[leaf.id]
        result.added[leaf.id] = 0
        if have >= target:
            continue
        rng = random.Random(f"{seed}:{leaf.id}")
        exemplar_texts = sorted(
            q.text for q in pool.eligible(taxonomy) if q.label_id == leaf.id
        )
        rng.shuffle(exemplar_texts)
        seeds = exemplar_texts[:SEED_EXEMPLARS]
        added = 0
        rounds = 0
        while have + added < target and rounds < max_rounds:
            rounds += 1
            need = target - have - added
            for text in generator.generate(leaf, seeds, need):
                if have + added >= target:
                    break
                _, accepted = pool.add_text(
                    text, label_id=leaf.id, source="augmentation", provenance="synthetic"
                )
                if accepted:
                    added += 1
        result.added[leaf.id] = added
        if have + added < target:
            result.shortfall[leaf.id] = target - have - added
            logger.warning(
                "augmentation shortfall for %s: %d below target", leaf.id, target - have - added
            )
    return result
