"""CLI: `embed-extractor extract` and `embed-extractor export-head`."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .backends import BackendError
from .jobs import ExtractError, ExtractJob, export_aesthetic_head, extract

KIND_FLAGS = {"csd": "csd", "clip-image": "clip_image", "clip-text": "clip_text"}


@click.group()
def main():
    """Produce embedding sidecars and aesthetic-head files for the pipeline."""


@main.command("extract")
@click.option("--kind", type=click.Choice(sorted(KIND_FLAGS)), required=True)
@click.option("--inputs", required=True, type=click.Path(),
              help="Image list ({id, path} lines) or caption file for clip-text.")
@click.option("--out", required=True, type=click.Path())
@click.option("--model", default=None, help="Backend model identifier.")
@click.option("--dim", type=int, default=512, show_default=True)
def extract_cmd(kind: str, inputs: str, out: str, model: str | None, dim: int):
    """Write one sidecar line per input; skipped inputs exit nonzero."""
    try:
        job = ExtractJob(kind=KIND_FLAGS[kind], inputs=Path(inputs), out=Path(out),
                         model=model, dim=dim)
        report = extract(job)
    except (ExtractError, BackendError) as exc:
        click.echo(json.dumps({"error": type(exc).__name__, "message": str(exc)}), err=True)
        sys.exit(1)
    click.echo(json.dumps({"written": report.written, "skipped": list(report.skipped), "out": out}))
    if not report.ok:
        click.echo(
            json.dumps({"error": "SkippedInputs", "message": f"{len(report.skipped)} input(s) unreadable"}),
            err=True,
        )
        sys.exit(1)


@main.command("export-head")
@click.option("--source", required=True, type=click.Path(), help="npz weight archive (w0/b0, w1/b1, ...).")
@click.option("--out", required=True, type=click.Path())
def export_head_cmd(source: str, out: str):
    """Convert source MLP weights into the pipeline head format."""
    try:
        doc = export_aesthetic_head(Path(source), Path(out))
    except ExtractError as exc:
        click.echo(json.dumps({"error": "ExtractError", "message": str(exc)}), err=True)
        sys.exit(1)
    click.echo(json.dumps({"layers": len(doc["layers"]), "out": out}))


if __name__ == "__main__":
    main()
