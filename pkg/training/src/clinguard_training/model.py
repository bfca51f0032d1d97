"""Compact transformer encoder classifier.

Presets are configurable identifiers; the shipped ones are small randomly
initialized encoders suitable for desk-scale runs in environments without
access to pretrained weights. The architecture is deliberately plain:
token + position embeddings, a short transformer encoder stack, masked mean
pooling, linear head.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import torch
from torch import nn


@dataclass(frozen=True)
class EncoderPreset:
    dim: int
    heads: int
    layers: int
    feedforward: int
    dropout: float = 0.1


PRESETS: dict[str, EncoderPreset] = {
    "tiny": EncoderPreset(dim=64, heads=4, layers=2, feedforward=128),
    "small": EncoderPreset(dim=128, heads=4, layers=4, feedforward=256),
}


class ModelError(ValueError):
    pass


def preset(name: str) -> EncoderPreset:
    if name not in PRESETS:
        raise ModelError(
            f"unknown base model {name!r}; available presets: {sorted(PRESETS)} "
            "(pretrained checkpoint identifiers need downloadable weights)"
        )
    return PRESETS[name]


class TextEncoderClassifier(nn.Module):
    def __init__(self, vocab_size: int, n_classes: int, config: EncoderPreset, max_length: int):
        super().__init__()
        self.config = config
        self.max_length = max_length
        self.token_embedding = nn.Embedding(vocab_size, config.dim, padding_idx=0)
        self.position_embedding = nn.Embedding(max_length, config.dim)
        layer = nn.TransformerEncoderLayer(
            d_model=config.dim,
            nhead=config.heads,
            dim_feedforward=config.feedforward,
            dropout=config.dropout,
            batch_first=True,
        )
        self.encoder = nn.TransformerEncoder(layer, num_layers=config.layers)
        self.head = nn.Linear(config.dim, n_classes)

    def forward(self, token_ids: torch.Tensor, mask: torch.Tensor) -> torch.Tensor:
        positions = torch.arange(token_ids.size(1), device=token_ids.device)
        hidden = self.token_embedding(token_ids) + self.position_embedding(positions)
        hidden = self.encoder(hidden, src_key_padding_mask=~mask)
        pooled = (hidden * mask.unsqueeze(-1)).sum(1) / mask.sum(1, keepdim=True).clamp(min=1)
        return self.head(pooled)


def model_config_dict(config: EncoderPreset) -> dict:
    return asdict(config)
