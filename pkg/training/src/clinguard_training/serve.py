"""Scoring endpoint for trained checkpoints.

Implements the gateway's encoder wire schema: POST /v1/score with
{"text": ...} returns {"scores": [...], "model_version": ...} with scores
in the taxonomy's canonical leaf order, summing to 1. Serving refuses to
start when the checkpoint's taxonomy digest does not match the taxonomy
file it is asked to serve against: a score vector in the wrong label order
is worse than no server.
"""
from __future__ import annotations

import json
from pathlib import Path

import torch
from fastapi import FastAPI
from pydantic import BaseModel, Field

from .data import encode, read_taxonomy_info
from .model import EncoderPreset, TextEncoderClassifier
from .train import BEST_NAME, MANIFEST_NAME


class ServeError(RuntimeError):
    pass


class ScoreRequest(BaseModel):
    text: str = Field(min_length=1)


class LoadedModel:
    def __init__(self, checkpoint_dir: str | Path):
        checkpoint_dir = Path(checkpoint_dir)
        manifest_path = checkpoint_dir / MANIFEST_NAME
        if not manifest_path.exists():
            raise ServeError(f"no manifest at {manifest_path}")
        self.manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
        blob = torch.load(checkpoint_dir / BEST_NAME, map_location="cpu", weights_only=False)
        self.vocab: dict[str, int] = blob["vocab"]
        self.labels: list[str] = blob["labels"]
        self.max_length: int = blob["max_length"]
        config = EncoderPreset(**blob["model_config"])
        self.model = TextEncoderClassifier(
            len(self.vocab), len(self.labels), config, self.max_length
        )
        self.model.load_state_dict(blob["state_dict"])
        self.model.eval()

    def score(self, text: str) -> list[float]:
        ids = encode(text, self.vocab, self.max_length)
        token_ids = torch.tensor([ids], dtype=torch.long)
        mask = torch.ones_like(token_ids, dtype=torch.bool)
        with torch.no_grad():
            logits = self.model(token_ids, mask)[0]
            probabilities = torch.softmax(logits.double(), dim=-1)
        scores = probabilities.tolist()
        total = sum(scores)
        return [s / total for s in scores]


def check_taxonomy_digest(loaded: LoadedModel, taxonomy_file: str | Path) -> None:
    info = read_taxonomy_info(taxonomy_file)
    if info.digest != loaded.manifest["taxonomy_digest"]:
        raise ServeError(
            "taxonomy digest mismatch: checkpoint was trained against "
            f"{loaded.manifest['taxonomy_digest'][:12]}, active file is {info.digest[:12]}"
        )
    if list(info.labels) != loaded.labels:
        raise ServeError("taxonomy leaf order does not match the checkpoint")


def create_scoring_app(checkpoint_dir: str | Path, taxonomy_file: str | Path) -> FastAPI:
    loaded = LoadedModel(checkpoint_dir)
    check_taxonomy_digest(loaded, taxonomy_file)
    app = FastAPI(title="clinguard encoder scoring")

    @app.get("/health")
    def health() -> dict:
        return {
            "status": "ok",
            "model_version": loaded.manifest["model_version"],
            "taxonomy_digest": loaded.manifest["taxonomy_digest"],
            "n_classes": len(loaded.labels),
        }

    @app.post("/v1/score")
    def score(body: ScoreRequest) -> dict:
        return {
            "scores": loaded.score(body.text),
            "model_version": loaded.manifest["model_version"],
        }

    return app
