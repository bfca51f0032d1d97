"""Dataset and taxonomy file readers.

This package talks to the gateway toolkit only through its documented file
formats: exported dataset files (line-delimited JSON with a schema header)
and the taxonomy definition YAML. Only the pieces needed for training are
parsed here: leaf ids in canonical order and the file digest that serving
uses to prove it matches the gateway's active taxonomy.
"""
from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass
from pathlib import Path

import yaml

DATASET_SCHEMA = "clinguard.dataset/1"

_TOKEN_RE = re.compile(r"[\w']+")

PAD, UNK = 0, 1


class DataError(ValueError):
    pass


@dataclass(frozen=True)
class TaxonomyInfo:
    labels: tuple[str, ...]
    version: str
    digest: str

    def index_of(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise DataError(f"label {label!r} is not a taxonomy leaf") from None


def read_taxonomy_info(path: str | Path) -> TaxonomyInfo:
    raw = Path(path).read_bytes()
    doc = yaml.safe_load(raw)
    leaves = doc.get("leaves")
    if not isinstance(leaves, list) or not leaves:
        raise DataError(f"{path}: not a taxonomy definition file")
    labels = tuple(str(leaf["id"]) for leaf in leaves)
    return TaxonomyInfo(
        labels=labels,
        version=str(doc.get("version", "unversioned")),
        digest=hashlib.sha256(raw).hexdigest(),
    )


def read_dataset(path: str | Path) -> list[tuple[str, str]]:
    """(text, label) pairs from an exported dataset file."""
    pairs: list[tuple[str, str]] = []
    with Path(path).open("r", encoding="utf-8") as fh:
        header = json.loads(fh.readline())
        if header.get("schema") != DATASET_SCHEMA:
            raise DataError(f"{path}: unexpected schema {header.get('schema')!r}")
        for line in fh:
            if not line.strip():
                continue
            record = json.loads(line)
            if record.get("label_id") is None:
                raise DataError(f"{path}: unlabeled record {record.get('id')}")
            pairs.append((str(record["text"]), str(record["label_id"])))
    if not pairs:
        raise DataError(f"{path}: empty dataset")
    return pairs


def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


def build_vocab(texts: list[str], max_size: int = 50_000) -> dict[str, int]:
    counts: dict[str, int] = {}
    for text in texts:
        for token in tokenize(text):
            counts[token] = counts.get(token, 0) + 1
    vocab = {"<pad>": PAD, "<unk>": UNK}
    for token, _ in sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))[: max_size - 2]:
        vocab[token] = len(vocab)
    return vocab


def encode(text: str, vocab: dict[str, int], max_length: int) -> list[int]:
    ids = [vocab.get(token, UNK) for token in tokenize(text)][:max_length]
    return ids or [UNK]
