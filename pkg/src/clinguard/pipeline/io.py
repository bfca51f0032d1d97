"""Corpus ingestion and dataset export.

Both sides use line-delimited JSON with a one-line schema header. Ingest
normalizes text, assigns content-derived ids, and silently drops duplicates;
malformed records are skipped with a warning count rather than aborting a
large run. Exports are byte-deterministic: records sorted by id, keys
sorted, no timestamps.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .pool import LabeledQuery, QueryPool
from .sampling import DatasetSplit, materialize

logger = logging.getLogger(__name__)

CORPUS_SCHEMA = "clinguard.corpus/1"
DATASET_SCHEMA = "clinguard.dataset/1"


class IngestError(ValueError):
    pass


class ExportError(ValueError):
    pass


@dataclass
class IngestResult:
    pool: QueryPool
    files: int
    accepted: int
    duplicates: int
    skipped: int


def write_corpus_file(path: str | Path, records: Iterable[Mapping], source: str | None = None) -> Path:
    """Write raw corpus records (text plus optional label/source/locale)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        header: dict = {"schema": CORPUS_SCHEMA}
        if source:
            header["source"] = source
        fh.write(json.dumps(header) + "\n")
        for record in records:
            fh.write(json.dumps(dict(record), sort_keys=True, ensure_ascii=False) + "\n")
    return path


def ingest(paths: Sequence[str | Path], pool: QueryPool | None = None) -> IngestResult:
    """Read corpus files into a deduplicated pool with provenance=collected.

    Records may carry a label already (pre-labeled corpora keep their labels
    and are skipped by the LLM labeling pass).
    """
    pool = pool or QueryPool()
    accepted = duplicates = skipped = 0
    for path in paths:
        path = Path(path)
        with path.open("r", encoding="utf-8") as fh:
            first = fh.readline()
            if not first.strip():
                raise IngestError(f"{path}: empty corpus file")
            try:
                header = json.loads(first)
            except json.JSONDecodeError as exc:
                raise IngestError(f"{path}: bad header line: {exc}") from exc
            if header.get("schema") != CORPUS_SCHEMA:
                raise IngestError(f"{path}: unexpected schema {header.get('schema')!r}")
            default_source = header.get("source") or path.stem
            for lineno, line in enumerate(fh, start=2):
                if not line.strip():
                    continue
                try:
                    record = json.loads(line)
                except json.JSONDecodeError:
                    logger.warning("%s:%d: unparseable record skipped", path, lineno)
                    skipped += 1
                    continue
                text = record.get("text")
                if not isinstance(text, str) or not text.strip():
                    logger.warning("%s:%d: record missing text skipped", path, lineno)
                    skipped += 1
                    continue
                _, added = pool.add_text(
                    text,
                    label_id=record.get("label_id"),
                    source=str(record.get("source") or default_source),
                    provenance="collected",
                    locale=str(record.get("locale", "en")),
                )
                if added:
                    accepted += 1
                else:
                    duplicates += 1
    if len(pool) == 0:
        raise IngestError("ingest produced an empty pool")
    return IngestResult(
        pool=pool, files=len(paths), accepted=accepted, duplicates=duplicates, skipped=skipped
    )


def export_records(split: DatasetSplit, pool: QueryPool, part: str) -> list[dict]:
    """Resolved, export-shaped records for one split part, sorted by id."""
    rows = materialize(split, pool, part)
    return [
        {"id": item_id, "text": text, "label_id": label, "provenance": pool.get(item_id).provenance}
        for item_id, text, label in rows
    ]


def export_split(
    split: DatasetSplit,
    pool: QueryPool,
    directory: str | Path,
    basename: str = "dataset",
) -> dict[str, Path]:
    """Write train/validation/test files for a split.

    Empty parts are skipped. Re-exporting the same split and pool is
    byte-identical.
    """
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    out: dict[str, Path] = {}
    for part in ("train", "validation", "test"):
        ids = getattr(split, part)
        if not ids:
            continue
        records = export_records(split, pool, part)
        path = directory / f"{basename}.{part}.jsonl"
        with path.open("w", encoding="utf-8") as fh:
            fh.write(json.dumps({"schema": DATASET_SCHEMA, "part": part}) + "\n")
            for record in records:
                fh.write(json.dumps(record, sort_keys=True, ensure_ascii=False) + "\n")
        out[part] = path
    return out


def read_dataset_file(path: str | Path) -> list[dict]:
    """Read an exported dataset file back into records."""
    records = []
    with Path(path).open("r", encoding="utf-8") as fh:
        header = json.loads(fh.readline())
        if header.get("schema") != DATASET_SCHEMA:
            raise ExportError(f"{path}: unexpected schema {header.get('schema')!r}")
        for line in fh:
            if line.strip():
                records.append(json.loads(line))
    return records
