"""Labeled-query pool: the unit of state the dataset pipeline operates on.

Items are keyed by a content-derived id (hash of normalized text), which
makes deduplication a set-membership question. Provenance moves forward
only: collected -> llm_labeled -> human_reviewed, with synthetic items
starting at synthetic. Removed items stay in the pool for audit but are
excluded from sampling and export.
"""
from __future__ import annotations

import hashlib
import json
import re
import threading
import unicodedata
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

from ..taxonomy import Taxonomy

POOL_SCHEMA = "clinguard.pool/1"

PROVENANCES = ("collected", "llm_labeled", "synthetic", "human_reviewed")
_PROVENANCE_RANK = {"collected": 0, "llm_labeled": 1, "synthetic": 1, "human_reviewed": 2}

REVIEW_ACTIONS = ("confirmed", "relabeled", "edited", "removed")

_WHITESPACE = re.compile(r"\s+")


class PoolError(ValueError):
    pass


class ProvenanceError(PoolError):
    """Backward provenance transitions are not allowed."""


def normalize_text(text: str) -> str:
    return _WHITESPACE.sub(" ", unicodedata.normalize("NFC", text)).strip()


def content_id(text: str) -> str:
    return hashlib.sha256(normalize_text(text).encode("utf-8")).hexdigest()[:16]


def check_provenance_transition(old: str, new: str) -> None:
    if new not in _PROVENANCE_RANK or old not in _PROVENANCE_RANK:
        raise ProvenanceError(f"unknown provenance {old!r} -> {new!r}")
    if _PROVENANCE_RANK[new] < _PROVENANCE_RANK[old]:
        raise ProvenanceError(f"provenance cannot move backward: {old!r} -> {new!r}")
    if old == "synthetic" and new == "llm_labeled":
        raise ProvenanceError("synthetic items are labeled at creation")


@dataclass
class ReviewEvent:
    annotator_id: str
    action: str
    timestamp: str


@dataclass
class LabeledQuery:
    id: str
    text: str
    label_id: str | None = None
    source: str = "unknown"
    provenance: str = "collected"
    locale: str = "en"
    removed: bool = False
    review: ReviewEvent | None = None
    revision: int = 0

    def to_record(self) -> dict:
        record = {
            "id": self.id,
            "text": self.text,
            "label_id": self.label_id,
            "source": self.source,
            "provenance": self.provenance,
            "locale": self.locale,
            "removed": self.removed,
            "revision": self.revision,
        }
        if self.review is not None:
            record["review"] = self.review.__dict__
        return record

    @classmethod
    def from_record(cls, record: dict) -> "LabeledQuery":
        review = record.get("review")
        return cls(
            id=record["id"],
            text=record["text"],
            label_id=record.get("label_id"),
            source=record.get("source", "unknown"),
            provenance=record.get("provenance", "collected"),
            locale=record.get("locale", "en"),
            removed=bool(record.get("removed", False)),
            review=ReviewEvent(**review) if review else None,
            revision=int(record.get("revision", 0)),
        )


class QueryPool:
    """Mutable collection of labeled queries with a single-writer lock."""

    def __init__(self):
        self._items: dict[str, LabeledQuery] = {}
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return len(self._items)

    def __contains__(self, item_id: str) -> bool:
        return item_id in self._items

    def get(self, item_id: str) -> LabeledQuery:
        return self._items[item_id]

    def add(self, query: LabeledQuery) -> bool:
        """Insert unless an item with the same content id exists."""
        with self._lock:
            if query.id in self._items:
                return False
            self._items[query.id] = query
            return True

    def add_text(
        self,
        text: str,
        label_id: str | None = None,
        source: str = "unknown",
        provenance: str = "collected",
        locale: str = "en",
    ) -> tuple[str, bool]:
        if provenance not in PROVENANCES:
            raise PoolError(f"unknown provenance {provenance!r}")
        normalized = normalize_text(text)
        if not normalized:
            raise PoolError("empty text")
        item_id = content_id(normalized)
        added = self.add(
            LabeledQuery(
                id=item_id,
                text=normalized,
                label_id=label_id,
                source=source,
                provenance=provenance,
                locale=locale,
            )
        )
        return item_id, added

    def items(self) -> list[LabeledQuery]:
        """All items in stable (id) order, including removed ones."""
        return [self._items[k] for k in sorted(self._items)]

    def eligible(self, taxonomy: Taxonomy | None = None) -> list[LabeledQuery]:
        """Labeled, non-removed items (restricted to a taxonomy's leaves if given)."""
        out = []
        for query in self.items():
            if query.removed or query.label_id is None:
                continue
            if taxonomy is not None and query.label_id not in taxonomy:
                continue
            out.append(query)
        return out

    def counts_by_label(self, taxonomy: Taxonomy | None = None) -> dict[str, int]:
        counts: dict[str, int] = {}
        for query in self.eligible(taxonomy):
            counts[query.label_id] = counts.get(query.label_id, 0) + 1
        return counts

    def digest(self) -> str:
        h = hashlib.sha256()
        for query in self.items():
            h.update(
                json.dumps(query.to_record(), sort_keys=True, ensure_ascii=False).encode("utf-8")
            )
            h.update(b"\n")
        return h.hexdigest()

    def without(self, ids: Iterable[str]) -> "QueryPool":
        """Copy of the pool minus the given ids (for held-out splits)."""
        drop = set(ids)
        sub = QueryPool()
        for query in self.items():
            if query.id not in drop:
                sub._items[query.id] = query
        return sub

    def save(self, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="utf-8") as fh:
            fh.write(json.dumps({"schema": POOL_SCHEMA}) + "\n")
            for query in self.items():
                fh.write(json.dumps(query.to_record(), sort_keys=True, ensure_ascii=False) + "\n")
        return path

    @classmethod
    def load(cls, path: str | Path) -> "QueryPool":
        pool = cls()
        with Path(path).open("r", encoding="utf-8") as fh:
            header = json.loads(fh.readline())
            if header.get("schema") != POOL_SCHEMA:
                raise PoolError(f"unexpected pool schema {header.get('schema')!r}")
            for line in fh:
                if line.strip():
                    query = LabeledQuery.from_record(json.loads(line))
                    pool._items[query.id] = query
        return pool

    def __iter__(self) -> Iterator[LabeledQuery]:
        return iter(self.items())
