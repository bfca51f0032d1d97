from __future__ import annotations

import json

import pytest

from clinguard_training.data import DataError, read_dataset, read_taxonomy_info
from clinguard_training.model import ModelError, preset
from clinguard_training.train import RECIPE_DEFAULTS, TrainError, TrainRun, train

from conftest import gateway_data_file, make_balanced_dataset


def test_recipe_defaults_are_exact():
    run = TrainRun(
        train_file="t", validation_file="v", taxonomy_file="x", checkpoint_dir="c"
    )
    assert run.batch_size == 256
    assert run.max_length == 512
    assert run.epochs == 30
    assert run.learning_rate == 2e-5
    assert run.weight_decay == 0.01
    assert run.overrides() == {}
    assert RECIPE_DEFAULTS == {
        "batch_size": 256,
        "max_length": 512,
        "epochs": 30,
        "learning_rate": 2e-5,
        "weight_decay": 0.01,
    }


def test_overrides_recorded(tmp_path):
    files = make_balanced_dataset(tmp_path, per_class_train=8, seed=3)
    run = TrainRun(
        train_file=str(files["train"]),
        validation_file=str(files["validation"]),
        taxonomy_file=gateway_data_file("clinical_intent_21.yaml"),
        checkpoint_dir=str(tmp_path / "ckpt"),
        epochs=2,
        batch_size=64,
        learning_rate=1e-3,
        seed=0,
    )
    result = train(run)
    manifest = json.loads((result.checkpoint_dir / "manifest.json").read_text())
    assert manifest["recipe_defaults"] == RECIPE_DEFAULTS
    assert manifest["overrides"] == {"epochs": 2, "batch_size": 64, "learning_rate": 1e-3}
    assert manifest["hyperparameters"]["max_length"] == 512
    assert manifest["hyperparameters"]["weight_decay"] == 0.01


def test_best_checkpoint_is_argmin_of_validation_loss(tmp_path):
    files = make_balanced_dataset(tmp_path, per_class_train=8, seed=4)
    run = TrainRun(
        train_file=str(files["train"]),
        validation_file=str(files["validation"]),
        taxonomy_file=gateway_data_file("clinical_intent_21.yaml"),
        checkpoint_dir=str(tmp_path / "ckpt"),
        epochs=2,
        batch_size=64,
        learning_rate=1e-3,
        seed=0,
    )
    result = train(run)
    losses = result.validation_losses
    assert len(losses) == 2
    assert result.best_epoch == min(range(2), key=lambda i: (losses[i], i))
    assert result.best_path.exists()
    assert (result.checkpoint_dir / f"epoch{result.best_epoch}.pt").exists()
    manifest = json.loads((result.checkpoint_dir / "manifest.json").read_text())
    assert manifest["best_epoch"] == result.best_epoch
    assert manifest["validation_losses"] == losses
    assert manifest["labels"][0] == "adversary" and len(manifest["labels"]) == 21


def test_labels_outside_taxonomy_rejected(tmp_path):
    files = make_balanced_dataset(tmp_path, per_class_train=8, seed=6)
    # train against the label frame of a different study taxonomy
    run = TrainRun(
        train_file=str(files["train"]),
        validation_file=str(files["validation"]),
        taxonomy_file=gateway_data_file("toxic_study_total_21.yaml"),
        checkpoint_dir=str(tmp_path / "ckpt"),
        epochs=1,
    )
    with pytest.raises(TrainError, match="outside the taxonomy"):
        train(run)


def test_grad_accumulation_must_divide_batch(tmp_path):
    files = make_balanced_dataset(tmp_path, per_class_train=8, seed=7)
    run = TrainRun(
        train_file=str(files["train"]),
        validation_file=str(files["validation"]),
        taxonomy_file=gateway_data_file("clinical_intent_21.yaml"),
        checkpoint_dir=str(tmp_path / "ckpt"),
        epochs=1,
        batch_size=64,
        grad_accumulation=7,
    )
    with pytest.raises(TrainError, match="grad_accumulation"):
        train(run)


def test_unknown_preset_rejected():
    with pytest.raises(ModelError, match="unknown base model"):
        preset("bert-base-multilingual-cased")


def test_data_readers_reject_bad_files(tmp_path):
    bad = tmp_path / "bad.jsonl"
    bad.write_text('{"schema": "other/1"}\n')
    with pytest.raises(DataError, match="unexpected schema"):
        read_dataset(bad)
    not_taxonomy = tmp_path / "x.yaml"
    not_taxonomy.write_text("just: text\n")
    with pytest.raises(DataError, match="not a taxonomy"):
        read_taxonomy_info(not_taxonomy)


def test_taxonomy_info_matches_gateway_file():
    info = read_taxonomy_info(gateway_data_file("clinical_intent_21.yaml"))
    assert len(info.labels) == 21
    assert info.labels[0] == "adversary"
    assert info.version == "clinical-query-intent/1.0"
