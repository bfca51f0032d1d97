"""Prediction input files.

Line-delimited records carrying id, gold label, predicted label, and the
full score vector, with a schema header. This is the interchange format
between scoring runs (local or remote) and the evaluate/confusion CLI.
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable, Sequence

from ..backends.base import Prediction

PREDICTIONS_SCHEMA = "clinguard.predictions/1"


class PredictionFileError(ValueError):
    pass


def write_predictions_file(
    path: str | Path,
    rows: Iterable[tuple[str, str, Prediction]],
    backend_id: str | None = None,
) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as fh:
        header: dict = {"schema": PREDICTIONS_SCHEMA}
        if backend_id:
            header["backend_id"] = backend_id
        fh.write(json.dumps(header) + "\n")
        for item_id, gold, prediction in rows:
            fh.write(
                json.dumps(
                    {
                        "id": item_id,
                        "gold": gold,
                        "predicted": prediction.label_id,
                        "scores": list(prediction.scores),
                    },
                    sort_keys=True,
                )
                + "\n"
            )
    return path


def read_predictions_file(
    path: str | Path,
) -> tuple[list[str], list[str], list[Prediction]]:
    ids: list[str] = []
    gold: list[str] = []
    predictions: list[Prediction] = []
    with Path(path).open("r", encoding="utf-8") as fh:
        header = json.loads(fh.readline())
        if header.get("schema") != PREDICTIONS_SCHEMA:
            raise PredictionFileError(f"{path}: unexpected schema {header.get('schema')!r}")
        backend_id = header.get("backend_id", "file")
        for lineno, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            record = json.loads(line)
            try:
                ids.append(str(record["id"]))
                gold.append(str(record["gold"]))
                predictions.append(
                    Prediction(
                        label_id=str(record["predicted"]),
                        scores=tuple(float(s) for s in record["scores"]),
                        latency_s=0.0,
                        backend_id=backend_id,
                    )
                )
            except (KeyError, TypeError, ValueError) as exc:
                raise PredictionFileError(f"{path}:{lineno}: bad record: {exc}") from exc
    return ids, gold, predictions
