"""LLM labeling pass over a collected pool.

Labels each unlabeled item via a classifier backend over the full taxonomy.
Progress is checkpointed so an interrupted run resumes where it stopped:
already-labeled items are never re-sent. Items whose responses stay
unparseable past the backend's retry budget are flagged in the run state and
left unlabeled; a dead endpoint persists progress and re-raises.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

from ..backends import ClassificationError, ClassifierBackend, TransportError
from ..taxonomy import Taxonomy
from .pool import QueryPool, check_provenance_transition

logger = logging.getLogger(__name__)

LABEL_STATE_SCHEMA = "clinguard.labelstate/1"


@dataclass
class LabelRunResult:
    labeled: int = 0
    already_labeled: int = 0
    failed_ids: list[str] = field(default_factory=list)


def _write_state(state_path: Path | None, result: LabelRunResult) -> None:
    if state_path is None:
        return
    state_path.parent.mkdir(parents=True, exist_ok=True)
    state_path.write_text(
        json.dumps(
            {
                "schema": LABEL_STATE_SCHEMA,
                "labeled": result.labeled,
                "already_labeled": result.already_labeled,
                "failed_ids": sorted(result.failed_ids),
            },
            indent=2,
        )
        + "\n",
        encoding="utf-8",
    )


def llm_label(
    pool: QueryPool,
    backend: ClassifierBackend,
    taxonomy: Taxonomy,
    pool_path: str | Path | None = None,
    state_path: str | Path | None = None,
    checkpoint_every: int = 50,
) -> LabelRunResult:
    """Label every unlabeled, non-removed item in place.

    pool_path, when given, receives a pool snapshot every checkpoint_every
    successful labels and at the end, making the run resumable.
    """
    pool_path = Path(pool_path) if pool_path else None
    state_path = Path(state_path) if state_path else None
    result = LabelRunResult()
    since_checkpoint = 0

    def checkpoint() -> None:
        if pool_path is not None:
            pool.save(pool_path)
        _write_state(state_path, result)

    for query in pool.items():
        if query.removed:
            continue
        if query.label_id is not None:
            result.already_labeled += 1
            continue
        try:
            prediction = backend.classify(taxonomy, query.text)
        except ClassificationError:
            logger.warning("labeling failed for %s after retries", query.id)
            result.failed_ids.append(query.id)
            continue
        except TransportError:
            checkpoint()
            raise
        check_provenance_transition(query.provenance, "llm_labeled")
        query.label_id = prediction.label_id
        query.provenance = "llm_labeled"
        result.labeled += 1
        since_checkpoint += 1
        if since_checkpoint >= checkpoint_every:
            checkpoint()
            since_checkpoint = 0

    checkpoint()
    return result
