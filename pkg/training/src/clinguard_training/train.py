"""Training loop with validation-loss checkpoint selection.

TrainRun defaults are the standard fine-tuning recipe this harness ships
with: batch size 256, max length 512, 30 epochs, linear learning-rate
schedule at 2e-5, weight decay 0.01. Desk-scale runs override some of these
(typically epochs and learning rate for randomly initialized encoders);
every override is recorded in the run manifest. The best checkpoint is
exactly the argmin of per-epoch validation loss, ties to the earliest
epoch.
"""
from __future__ import annotations

import json
import logging
import random
from dataclasses import dataclass, field
from pathlib import Path

import torch
from torch import nn

from .data import TaxonomyInfo, build_vocab, encode, read_dataset, read_taxonomy_info
from .model import TextEncoderClassifier, model_config_dict, preset

logger = logging.getLogger(__name__)

MANIFEST_NAME = "manifest.json"
BEST_NAME = "best.pt"

RECIPE_DEFAULTS = {
    "batch_size": 256,
    "max_length": 512,
    "epochs": 30,
    "learning_rate": 2e-5,
    "weight_decay": 0.01,
}


class TrainError(ValueError):
    pass


@dataclass
class TrainRun:
    train_file: str
    validation_file: str
    taxonomy_file: str
    checkpoint_dir: str
    base_model: str = "tiny"
    batch_size: int = 256
    max_length: int = 512
    epochs: int = 30
    learning_rate: float = 2e-5
    weight_decay: float = 0.01
    grad_accumulation: int = 1  # micro-batching fallback; effective batch preserved
    seed: int = 0

    def overrides(self) -> dict:
        return {
            key: getattr(self, key)
            for key, default in RECIPE_DEFAULTS.items()
            if getattr(self, key) != default
        }

    @classmethod
    def from_file(cls, path: str | Path) -> "TrainRun":
        import yaml

        data = yaml.safe_load(Path(path).read_text("utf-8"))
        return cls(**data)


@dataclass
class TrainResult:
    best_epoch: int
    validation_losses: list[float]
    checkpoint_dir: Path
    manifest: dict = field(default_factory=dict)

    @property
    def best_path(self) -> Path:
        return self.checkpoint_dir / BEST_NAME


def _batches(items: list, batch_size: int, rng: random.Random | None):
    order = list(range(len(items)))
    if rng is not None:
        rng.shuffle(order)
    for start in range(0, len(order), batch_size):
        yield [items[i] for i in order[start : start + batch_size]]


def _collate(batch, vocab, max_length, device):
    encoded = [encode(text, vocab, max_length) for text, _ in batch]
    width = max(len(e) for e in encoded)
    token_ids = torch.zeros(len(batch), width, dtype=torch.long, device=device)
    mask = torch.zeros(len(batch), width, dtype=torch.bool, device=device)
    for i, ids in enumerate(encoded):
        token_ids[i, : len(ids)] = torch.tensor(ids, device=device)
        mask[i, : len(ids)] = True
    return token_ids, mask


def _validate_labels(pairs, taxonomy: TaxonomyInfo, what: str) -> None:
    stray = {label for _, label in pairs} - set(taxonomy.labels)
    if stray:
        raise TrainError(f"{what} labels outside the taxonomy: {sorted(stray)}")


def evaluate_loss(model, pairs, vocab, taxonomy, max_length, batch_size, device) -> float:
    loss_fn = nn.CrossEntropyLoss(reduction="sum")
    model.eval()
    total = 0.0
    with torch.no_grad():
        for batch in _batches(pairs, batch_size, rng=None):
            token_ids, mask = _collate(batch, vocab, max_length, device)
            targets = torch.tensor(
                [taxonomy.index_of(label) for _, label in batch], device=device
            )
            total += loss_fn(model(token_ids, mask), targets).item()
    return total / len(pairs)


def train(run: TrainRun, device: str | None = None) -> TrainResult:
    device = device or ("cuda" if torch.cuda.is_available() else "cpu")
    torch.manual_seed(run.seed)
    rng = random.Random(run.seed)

    taxonomy = read_taxonomy_info(run.taxonomy_file)
    train_pairs = read_dataset(run.train_file)
    val_pairs = read_dataset(run.validation_file)
    _validate_labels(train_pairs, taxonomy, "train")
    _validate_labels(val_pairs, taxonomy, "validation")

    vocab = build_vocab([text for text, _ in train_pairs])
    config = preset(run.base_model)
    model = TextEncoderClassifier(len(vocab), len(taxonomy.labels), config, run.max_length)
    model.to(device)

    if run.batch_size % run.grad_accumulation:
        raise TrainError("grad_accumulation must divide batch_size")
    micro_batch = run.batch_size // run.grad_accumulation
    optimizer = torch.optim.AdamW(
        model.parameters(), lr=run.learning_rate, weight_decay=run.weight_decay
    )
    steps_per_epoch = max(1, (len(train_pairs) + run.batch_size - 1) // run.batch_size)
    total_steps = steps_per_epoch * run.epochs
    scheduler = torch.optim.lr_scheduler.LambdaLR(
        optimizer, lambda step: max(0.0, 1.0 - step / total_steps)
    )
    loss_fn = nn.CrossEntropyLoss()

    checkpoint_dir = Path(run.checkpoint_dir)
    checkpoint_dir.mkdir(parents=True, exist_ok=True)
    validation_losses: list[float] = []

    for epoch in range(run.epochs):
        model.train()
        epoch_batches = list(_batches(train_pairs, run.batch_size, rng))
        for batch in epoch_batches:
            optimizer.zero_grad()
            for start in range(0, len(batch), micro_batch):
                micro = batch[start : start + micro_batch]
                token_ids, mask = _collate(micro, vocab, run.max_length, device)
                targets = torch.tensor(
                    [taxonomy.index_of(label) for _, label in micro], device=device
                )
                loss = loss_fn(model(token_ids, mask), targets) * (len(micro) / len(batch))
                loss.backward()
            optimizer.step()
            scheduler.step()
        val_loss = evaluate_loss(
            model, val_pairs, vocab, taxonomy, run.max_length, run.batch_size, device
        )
        validation_losses.append(val_loss)
        logger.info("epoch %d: validation loss %.6f", epoch, val_loss)
        torch.save(
            {
                "state_dict": model.state_dict(),
                "vocab": vocab,
                "labels": list(taxonomy.labels),
                "model_config": model_config_dict(config),
                "max_length": run.max_length,
                "epoch": epoch,
            },
            checkpoint_dir / f"epoch{epoch}.pt",
        )

    best_epoch = min(range(len(validation_losses)), key=lambda i: (validation_losses[i], i))
    best_blob = torch.load(checkpoint_dir / f"epoch{best_epoch}.pt", weights_only=False)
    torch.save(best_blob, checkpoint_dir / BEST_NAME)

    manifest = {
        "base_model": run.base_model,
        "hyperparameters": {key: getattr(run, key) for key in RECIPE_DEFAULTS},
        "recipe_defaults": RECIPE_DEFAULTS,
        "overrides": run.overrides(),
        "grad_accumulation": run.grad_accumulation,
        "seed": run.seed,
        "taxonomy_version": taxonomy.version,
        "taxonomy_digest": taxonomy.digest,
        "labels": list(taxonomy.labels),
        "validation_losses": validation_losses,
        "best_epoch": best_epoch,
        "model_version": f"{run.base_model}-seed{run.seed}-epoch{best_epoch}",
        "n_train": len(train_pairs),
        "n_validation": len(val_pairs),
    }
    (checkpoint_dir / MANIFEST_NAME).write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return TrainResult(
        best_epoch=best_epoch,
        validation_losses=validation_losses,
        checkpoint_dir=checkpoint_dir,
        manifest=manifest,
    )
