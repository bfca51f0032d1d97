"""Annotation store: human review over a labeled pool, event-sourced.

Two append-only files: the base pool (imported items) and the revision log
(review actions). Current state is always base + replayed log, so replaying
the log reconstructs state exactly and nothing is ever edited in place.
Concurrent edits resolve first-writer-wins: an action must name the item
revision the annotator saw, and a stale revision gets an explicit conflict.
"""
from __future__ import annotations

import json
import threading
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

from ..pipeline.pool import (
    POOL_SCHEMA,
    LabeledQuery,
    QueryPool,
    ReviewEvent,
    REVIEW_ACTIONS,
    check_provenance_transition,
    normalize_text,
)
from ..taxonomy import Taxonomy

REVISIONS_SCHEMA = "clinguard.revisions/1"


class AnnotationError(ValueError):
    pass


class UnknownItemError(KeyError):
    pass


class ConflictError(Exception):
    """Another annotator's action landed first."""

    def __init__(self, current: LabeledQuery):
        self.current = current
        super().__init__(
            f"item {current.id} is at revision {current.revision}, not the submitted base"
        )


@dataclass(frozen=True)
class AnnotationRevision:
    sequence: int
    item_id: str
    annotator_id: str
    action: str
    base_revision: int
    timestamp: str
    new_label: str | None = None
    new_text: str | None = None

    def to_record(self) -> dict:
        record = {k: v for k, v in self.__dict__.items() if v is not None}
        return record

    @classmethod
    def from_record(cls, record: dict) -> "AnnotationRevision":
        return cls(
            sequence=int(record["sequence"]),
            item_id=record["item_id"],
            annotator_id=record["annotator_id"],
            action=record["action"],
            base_revision=int(record["base_revision"]),
            timestamp=record["timestamp"],
            new_label=record.get("new_label"),
            new_text=record.get("new_text"),
        )


def _apply_revision(pool: QueryPool, revision: AnnotationRevision) -> LabeledQuery:
    """Mutate the pool per one revision; shared by live apply and replay."""
    item = pool.get(revision.item_id)
    if revision.action == "relabeled":
        item.label_id = revision.new_label
    elif revision.action == "edited":
        item.text = normalize_text(revision.new_text)
    elif revision.action == "removed":
        item.removed = True
    elif revision.action != "confirmed":
        raise AnnotationError(f"unknown review action {revision.action!r}")
    check_provenance_transition(item.provenance, "human_reviewed")
    item.provenance = "human_reviewed"
    item.review = ReviewEvent(
        annotator_id=revision.annotator_id,
        action=revision.action,
        timestamp=revision.timestamp,
    )
    item.revision += 1
    return item


class AnnotationStore:
    def __init__(self, directory: str | Path, taxonomy: Taxonomy):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self.taxonomy = taxonomy
        self.pool_path = self.directory / "pool.jsonl"
        self.revisions_path = self.directory / "revisions.jsonl"
        self._lock = threading.Lock()
        self._sequence = 0
        self._progress: dict[str, int] = {}
        self.pool = self._replay()

    def _replay(self) -> QueryPool:
        pool = QueryPool.load(self.pool_path) if self.pool_path.exists() else QueryPool()
        if self.revisions_path.exists():
            with self.revisions_path.open("r", encoding="utf-8") as fh:
                header = json.loads(fh.readline())
                if header.get("schema") != REVISIONS_SCHEMA:
                    raise AnnotationError(
                        f"unexpected revisions schema {header.get('schema')!r}"
                    )
                for line in fh:
                    if not line.strip():
                        continue
                    revision = AnnotationRevision.from_record(json.loads(line))
                    _apply_revision(pool, revision)
                    self._sequence = max(self._sequence, revision.sequence)
                    self._progress[revision.annotator_id] = (
                        self._progress.get(revision.annotator_id, 0) + 1
                    )
        return pool

    def _append_base(self, items: list[LabeledQuery]) -> None:
        new_file = not self.pool_path.exists()
        with self.pool_path.open("a", encoding="utf-8") as fh:
            if new_file:
                fh.write(json.dumps({"schema": POOL_SCHEMA}) + "\n")
            for item in items:
                fh.write(json.dumps(item.to_record(), sort_keys=True, ensure_ascii=False) + "\n")

    def _append_revision(self, revision: AnnotationRevision) -> None:
        new_file = not self.revisions_path.exists()
        with self.revisions_path.open("a", encoding="utf-8") as fh:
            if new_file:
                fh.write(json.dumps({"schema": REVISIONS_SCHEMA}) + "\n")
            fh.write(json.dumps(revision.to_record(), sort_keys=True, ensure_ascii=False) + "\n")

    def add_records(self, records: list[dict]) -> list[str]:
        """Import items (e.g. a freshly labeled pool slice) into the store."""
        added: list[LabeledQuery] = []
        ids: list[str] = []
        with self._lock:
            for record in records:
                text = record.get("text", "")
                label = record.get("label_id")
                if label is not None and label not in self.taxonomy:
                    raise AnnotationError(f"label {label!r} is not a taxonomy leaf")
                item_id, accepted = self.pool.add_text(
                    text,
                    label_id=label,
                    source=str(record.get("source", "import")),
                    provenance=str(record.get("provenance", "llm_labeled")),
                    locale=str(record.get("locale", "en")),
                )
                ids.append(item_id)
                if accepted:
                    added.append(self.pool.get(item_id))
            if added:
                self._append_base(added)
        return ids

    def get(self, item_id: str) -> LabeledQuery:
        try:
            return self.pool.get(item_id)
        except KeyError:
            raise UnknownItemError(item_id) from None

    def list_items(
        self,
        provenance: str | None = None,
        label: str | None = None,
        source: str | None = None,
        pending_only: bool = False,
        include_removed: bool = False,
        offset: int = 0,
        limit: int = 50,
    ) -> tuple[list[LabeledQuery], int]:
        out = []
        for item in self.pool.items():
            if item.removed and not include_removed:
                continue
            if pending_only and item.provenance == "human_reviewed":
                continue
            if provenance and item.provenance != provenance:
                continue
            if label and item.label_id != label:
                continue
            if source and item.source != source:
                continue
            out.append(item)
        total = len(out)
        return out[offset : offset + limit], total

    def apply(
        self,
        item_id: str,
        annotator_id: str,
        action: str,
        base_revision: int,
        new_label: str | None = None,
        new_text: str | None = None,
    ) -> LabeledQuery:
        """Apply one review action; raises ConflictError on a stale base revision."""
        if action not in REVIEW_ACTIONS:
            raise AnnotationError(f"unknown review action {action!r}")
        if not annotator_id:
            raise AnnotationError("annotator id is required")
        with self._lock:
            item = self.get(item_id)
            if item.removed:
                raise AnnotationError(f"item {item_id} was removed")
            if item.revision != base_revision:
                raise ConflictError(item)
            if action == "relabeled":
                if not new_label or new_label not in self.taxonomy:
                    raise AnnotationError(f"relabel needs a taxonomy leaf, got {new_label!r}")
            if action == "edited" and not (new_text and new_text.strip()):
                raise AnnotationError("edit needs non-empty text")
            if action == "confirmed" and item.label_id is None:
                raise AnnotationError("cannot confirm an unlabeled item")
            self._sequence += 1
            revision = AnnotationRevision(
                sequence=self._sequence,
                item_id=item_id,
                annotator_id=annotator_id,
                action=action,
                base_revision=base_revision,
                timestamp=datetime.now(timezone.utc).isoformat(),
                new_label=new_label if action == "relabeled" else None,
                new_text=new_text if action == "edited" else None,
            )
            updated = _apply_revision(self.pool, revision)
            self._append_revision(revision)
            self._progress[annotator_id] = self._progress.get(annotator_id, 0) + 1
            return updated

    def progress(self) -> dict[str, int]:
        with self._lock:
            return dict(self._progress)
