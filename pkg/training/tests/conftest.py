from __future__ import annotations

import json
import subprocess
import sys
from importlib import resources
from pathlib import Path

import pytest
import yaml

from clinguard_training.train import TrainRun, train


def gateway_cli(*args: str, cwd: Path | None = None) -> str:
    """Invoke the gateway toolkit CLI (the cross-package interface)."""
    result = subprocess.run(
        [sys.executable, "-m", "clinguard.cli", *args],
        capture_output=True,
        text=True,
        cwd=cwd,
    )
    assert result.returncode == 0, f"clinguard {' '.join(args)} failed:\n{result.stderr}"
    return result.stdout


def gateway_data_file(name: str) -> str:
    """Path of a data file shipped with the gateway package (lookup only)."""
    return str(resources.files("clinguard").joinpath("data").joinpath(name))


def make_balanced_dataset(
    directory: Path,
    per_class_train: int,
    seed: int = 5,
    taxonomy: str | None = None,
    fractions=(0.8, 0.1, 0.1),
) -> dict[str, Path]:
    """Synthesize, sample, and export a balanced dataset via the gateway CLI."""
    directory.mkdir(parents=True, exist_ok=True)
    taxonomy = taxonomy or gateway_data_file("clinical_intent_21.yaml")
    pool = directory / "pool.jsonl"
    margin = int(per_class_train * (fractions[1] + fractions[2]) / fractions[0]) + 3
    gateway_cli(
        "dataset", "synthesize",
        "--taxonomy", taxonomy,
        "--per-class", str(per_class_train + margin),
        "--seed", str(seed),
        "--out", str(pool),
    )
    plan = directory / "plan.yaml"
    plan.write_text(
        yaml.safe_dump(
            {
                "kind": "balanced",
                "seed": seed,
                "n_per_class": per_class_train,
                "fractions": list(fractions),
            }
        )
    )
    split = directory / "split.json"
    gateway_cli(
        "dataset", "sample",
        "--pool", str(pool),
        "--taxonomy", taxonomy,
        "--plan", str(plan),
        "--out", str(split),
    )
    gateway_cli(
        "dataset", "export",
        "--pool", str(pool),
        "--split", str(split),
        "--out-dir", str(directory / "data"),
    )
    return {
        part: directory / "data" / f"dataset.{part}.jsonl"
        for part in ("train", "validation", "test")
    }


@pytest.fixture(scope="session")
def small_checkpoint(tmp_path_factory) -> tuple[Path, dict]:
    """A quickly trained checkpoint shared by the serving tests."""
    base = tmp_path_factory.mktemp("small_run")
    files = make_balanced_dataset(base, per_class_train=30, seed=9)
    run = TrainRun(
        train_file=str(files["train"]),
        validation_file=str(files["validation"]),
        taxonomy_file=gateway_data_file("clinical_intent_21.yaml"),
        checkpoint_dir=str(base / "ckpt"),
        epochs=3,
        batch_size=64,
        learning_rate=2e-3,
        seed=2,
    )
    result = train(run)
    manifest = json.loads((result.checkpoint_dir / "manifest.json").read_text())
    return result.checkpoint_dir, manifest
