"""Append-only audit log for unsafe query categories.

Each blocked query appends one line-delimited record carrying the label and
a digest of the query text, never the text itself. Per-category counters are
maintained in memory and snapshotted into the log periodically so operators
can tail category trends without replaying the whole file. Appends are
serialized internally; the log can be shared by concurrent request handlers.
"""
from __future__ import annotations

import hashlib
import json
import threading
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

from .routing import RoutingDecision

AUDIT_SCHEMA = "clinguard.audit/1"


class AuditError(RuntimeError):
    pass


class AuditPreconditionError(ValueError):
    """Raised when a decision that is not flagged for logging is recorded."""


@dataclass(frozen=True)
class UnsafeAuditRecord:
    timestamp: str
    label_id: str
    query_digest: str
    sequence: int


def query_digest(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


class AuditLog:
    """Durable append-only store of unsafe-routing records."""

    def __init__(self, path: str | Path, snapshot_every: int = 100):
        self.path = Path(path)
        self.snapshot_every = snapshot_every
        self._lock = threading.Lock()
        self._sequence = 0
        self._counters: dict[str, int] = {}
        self._recover()
        self.path.parent.mkdir(parents=True, exist_ok=True)
        if not self.path.exists():
            with self.path.open("w", encoding="utf-8") as fh:
                fh.write(json.dumps({"schema": AUDIT_SCHEMA}) + "\n")

    def _recover(self) -> None:
        if not self.path.exists():
            return
        with self.path.open("r", encoding="utf-8") as fh:
            header = fh.readline()
            if header:
                head = json.loads(header)
                if head.get("schema") != AUDIT_SCHEMA:
                    raise AuditError(f"unexpected audit schema: {head.get('schema')!r}")
            for line in fh:
                if not line.strip():
                    continue
                entry = json.loads(line)
                if entry.get("kind") != "record":
                    continue
                self._sequence = max(self._sequence, int(entry["sequence"]))
                label = entry["label_id"]
                self._counters[label] = self._counters.get(label, 0) + 1

    def record_unsafe(self, decision: RoutingDecision, query_text: str) -> UnsafeAuditRecord:
        """Append one record for a decision flagged log_unsafe.

        Only a content digest of the query is persisted, so records of the
        private-information classes can never leak the injected data.
        """
        if not decision.log_unsafe:
            raise AuditPreconditionError(
                f"decision for {decision.label_id!r} is not flagged for unsafe logging"
            )
        with self._lock:
            self._sequence += 1
            record = UnsafeAuditRecord(
                timestamp=datetime.now(timezone.utc).isoformat(),
                label_id=decision.label_id,
                query_digest=query_digest(query_text),
                sequence=self._sequence,
            )
            self._counters[decision.label_id] = self._counters.get(decision.label_id, 0) + 1
            try:
                with self.path.open("a", encoding="utf-8") as fh:
                    fh.write(json.dumps({"kind": "record", **record.__dict__}) + "\n")
                    if self._sequence % self.snapshot_every == 0:
                        fh.write(
                            json.dumps(
                                {
                                    "kind": "snapshot",
                                    "sequence": self._sequence,
                                    "counters": dict(sorted(self._counters.items())),
                                }
                            )
                            + "\n"
                        )
            except OSError as exc:
                raise AuditError(f"audit append failed: {exc}") from exc
            return record

    def counters(self) -> dict[str, int]:
        with self._lock:
            return dict(self._counters)

    def sequence(self) -> int:
        with self._lock:
            return self._sequence
