"""Command-line interface: train a checkpoint, serve it for scoring."""
from __future__ import annotations

import sys

import click

from .serve import ServeError, create_scoring_app
from .train import TrainRun, train


@click.group()
def main() -> None:
    """Encoder fine-tuning harness for the clinguard gateway."""


@main.command("train")
@click.option("--config", "config_path", type=click.Path(exists=True), required=True)
@click.option("--device", default=None)
def train_command(config_path: str, device: str | None) -> None:
    run = TrainRun.from_file(config_path)
    result = train(run, device=device)
    losses = ", ".join(f"{v:.4f}" for v in result.validation_losses)
    click.echo(f"validation losses: [{losses}]")
    click.echo(f"best epoch {result.best_epoch} -> {result.best_path}")


@main.command("serve")
@click.option("--checkpoint", "checkpoint_dir", type=click.Path(exists=True), required=True)
@click.option("--taxonomy", "taxonomy_file", type=click.Path(exists=True), required=True)
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=8500)
def serve_command(checkpoint_dir: str, taxonomy_file: str, host: str, port: int) -> None:
    import uvicorn

    try:
        app = create_scoring_app(checkpoint_dir, taxonomy_file)
    except ServeError as exc:
        click.echo(f"refusing to serve: {exc}", err=True)
        sys.exit(2)
    uvicorn.run(app, host=host, port=port, log_level="info")


if __name__ == "__main__":
    main()
