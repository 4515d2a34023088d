"""Single CLI entry point wiring the pipeline modules into subcommands.

Exit codes: 0 success, 1 domain error, 2 usage error. Every domain error
prints one machine-parsable JSON record to stderr. Identical argv over
identical input files produces identical output files.
"""

from __future__ import annotations

import functools
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import click

from . import bench as bench_mod
from . import curriculum as curriculum_mod
from . import ingest as ingest_mod
from . import planner as planner_mod
from . import triplets as triplets_mod
from .errors import ConfigError, CurationError
from .metrics import MetricConfig, load_head
from .records import (
    EmbeddingKind,
    EmbeddingVector,
    dump_record,
    read_labels,
    read_manifest,
    validate_manifest,
    write_manifest,
)

CONFIG_SECTIONS = {
    "paths": {"root", "clusters", "embeddings", "captions", "manifests", "labels", "out"},
    "match": {"mode", "max_pairs_per_cluster", "seed"},
    "stage": {"r_high", "r_syn", "seed", "hyper"},
    "metric": {"clamp_negative", "clip_scale", "cpc_threshold", "range_lo", "range_hi", "range_step"},
}


@dataclass
class PipelineConfig:
    paths: dict[str, Any] = field(default_factory=dict)
    match: dict[str, Any] = field(default_factory=dict)
    stage: dict[str, Any] = field(default_factory=dict)
    metric: dict[str, Any] = field(default_factory=dict)
    head: Optional[str] = None

    @classmethod
    def load(cls, path: str | Path) -> "PipelineConfig":
        try:
            obj = json.loads(Path(path).read_text(encoding="utf-8"))
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {path} is not valid JSON: {exc.msg}") from exc
        if not isinstance(obj, dict):
            raise ConfigError("config root must be an object")
        unknown = set(obj) - set(CONFIG_SECTIONS) - {"head"}
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls()
        for section, allowed in CONFIG_SECTIONS.items():
            raw = obj.get(section, {})
            if not isinstance(raw, dict):
                raise ConfigError(f"config section {section!r} must be an object")
            bad = set(raw) - allowed
            if bad:
                raise ConfigError(f"unknown keys in config section {section!r}: {sorted(bad)}")
            setattr(cfg, section, raw)
        head = obj.get("head")
        if head is not None and not isinstance(head, str):
            raise ConfigError("config key 'head' must be a path string")
        cfg.head = head
        return cfg

    def metric_config(self, **overrides: Any) -> MetricConfig:
        merged = dict(self.metric)
        merged.update({k: v for k, v in overrides.items() if v is not None})
        return MetricConfig.from_obj(merged)


@dataclass
class AppContext:
    config: PipelineConfig
    json_output: bool
    seed: Optional[int]

    def emit(self, payload: dict, human: str) -> None:
        if self.json_output:
            click.echo(dump_record(payload))
        else:
            click.echo(human)


def pipeline_command(fn):
    """Map domain errors to exit 1 with one JSON error record on stderr."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except CurationError as exc:
            click.echo(dump_record(exc.to_record()), err=True)
            sys.exit(1)

    return wrapper


@click.group()
@click.option("--config", "config_path", type=click.Path(), default=None, help="Pipeline config file (JSON).")
@click.option("--json", "json_output", is_flag=True, help="Structured JSON output on stdout.")
@click.option("--seed", type=int, default=None, help="Override every configured seed.")
@click.pass_context
@pipeline_command
def main(ctx: click.Context, config_path: Optional[str], json_output: bool, seed: Optional[int]):
    """Dataset curation, curriculum composition, and evaluation for style transfer training."""
    config = PipelineConfig.load(config_path) if config_path else PipelineConfig()
    ctx.obj = AppContext(config=config, json_output=json_output, seed=seed)


def _resolve_seed(app: AppContext, flag: Optional[int], section: dict) -> int:
    if flag is not None:
        return flag
    if app.seed is not None:
        return app.seed
    return int(section.get("seed", 0))


# ---------------------------------------------------------------------------
# validate


@main.command()
@click.option("--manifest", required=True, type=click.Path())
@click.option("--catalog", "catalog_path", type=click.Path(), default=None,
              help="Catalog file; enables dangling-reference checks.")
@click.pass_obj
@pipeline_command
def validate(app: AppContext, manifest: str, catalog_path: Optional[str]):
    """Check a triplet manifest against the record invariants."""
    triplets = read_manifest(manifest)
    catalog_ids = None
    if catalog_path:
        catalog_ids = ingest_mod.read_catalog(catalog_path).ids()
    report = validate_manifest(triplets, catalog_ids)
    app.emit(
        report.to_obj(),
        f"{len(triplets)} triplet(s): "
        + ("OK" if report.ok else f"{len(report.violations)} violation(s)"),
    )
    if not report.ok:
        for v in report.violations:
            click.echo(dump_record(v.to_obj()), err=True)
        sys.exit(1)


# ---------------------------------------------------------------------------
# ingest


@main.command()
@click.option("--root", required=True, type=click.Path())
@click.option("--clusters", "cluster_index", required=True, type=click.Path())
@click.option("--captions", type=click.Path(), default=None)
@click.option("--embeddings", multiple=True, type=click.Path())
@click.option("--out-catalog", required=True, type=click.Path())
@click.pass_obj
@pipeline_command
def ingest(app: AppContext, root: str, cluster_index: str, captions: Optional[str],
           embeddings: tuple[str, ...], out_catalog: str):
    """Scan an image tree into a catalog file; optionally verify sidecars and captions."""
    catalog = ingest_mod.scan_dataset(root, cluster_index)
    if captions:
        catalog = ingest_mod.attach_captions(catalog, captions)
    summary: dict[str, Any] = {
        "images": len(catalog.records),
        "clusters": len(catalog.clusters),
        "unclustered": len(catalog.unclustered),
    }
    if embeddings:
        store = ingest_mod.load_embeddings(list(embeddings))
        summary["embeddings"] = len(store)
        summary["embedding_dims"] = {k.value: d for k, d in store.dims.items()}
    ingest_mod.write_catalog(out_catalog, catalog)
    summary["catalog"] = out_catalog
    app.emit(
        summary,
        f"cataloged {summary['images']} images in {summary['clusters']} clusters -> {out_catalog}",
    )


# ---------------------------------------------------------------------------
# triplets


@main.group()
def triplets():
    """Build triplet manifests and apply curator labels."""


@triplets.command("build")
@click.option("--catalog", "catalog_path", required=True, type=click.Path())
@click.option("--source", type=click.Choice(["collected", "synthetic"]), required=True)
@click.option("--assets", "assets_path", type=click.Path(), default=None,
              help="Asset map for synthetic builds.")
@click.option("--mode", type=click.Choice([m.value for m in triplets_mod.MatchMode]), default=None)
@click.option("--cap", "max_pairs", type=int, default=None, help="Max pairs per cluster.")
@click.option("--seed", type=int, default=None)
@click.option("--out", "out_path", required=True, type=click.Path())
@click.pass_obj
@pipeline_command
def triplets_build(app: AppContext, catalog_path: str, source: str, assets_path: Optional[str],
                   mode: Optional[str], max_pairs: Optional[int], seed: Optional[int], out_path: str):
    """Produce a collected or synthetic triplet manifest."""
    catalog = ingest_mod.read_catalog(catalog_path)
    match_section = app.config.match
    cfg = triplets_mod.MatchConfig(
        mode=triplets_mod.MatchMode(mode or match_section.get("mode", "pairwise")),
        max_pairs_per_cluster=max_pairs if max_pairs is not None else match_section.get("max_pairs_per_cluster"),
        seed=_resolve_seed(app, seed, match_section),
    )
    if source == "collected":
        manifest = triplets_mod.build_collected(catalog, cfg)
    else:
        if not assets_path:
            raise ConfigError("synthetic builds require --assets")
        assets = triplets_mod.read_asset_map(assets_path)
        manifest = triplets_mod.build_synthetic(catalog, assets, cfg)
    write_manifest(out_path, manifest)
    app.emit(
        {"triplets": len(manifest), "source": source, "out": out_path},
        f"built {len(manifest)} {source} triplet(s) -> {out_path}",
    )


@triplets.command("apply-labels")
@click.option("--manifest", required=True, type=click.Path())
@click.option("--labels", "labels_path", required=True, type=click.Path())
@click.option("--out", "out_path", required=True, type=click.Path())
@click.pass_obj
@pipeline_command
def triplets_apply_labels(app: AppContext, manifest: str, labels_path: str, out_path: str):
    """Fold an append-only label log into a manifest (last write wins)."""
    triplets = read_manifest(manifest)
    labels = read_labels(labels_path)
    labeled, counts = triplets_mod.apply_labels(triplets, labels)
    write_manifest(out_path, labeled)
    app.emit(
        {"counts": counts, "out": out_path},
        f"labels applied: {counts['high']} high / {counts['low']} low / "
        f"{counts['unlabeled']} unlabeled -> {out_path}",
    )


# ---------------------------------------------------------------------------
# curriculum


@main.group()
def curriculum():
    """Compose the three staged datasets and the chained training plan."""


@curriculum.command("compose")
@click.option("--collected", "collected_path", required=True, type=click.Path())
@click.option("--synthetic", "synthetic_path", type=click.Path(), default=None)
@click.option("--labels", "labels_path", type=click.Path(), default=None)
@click.option("--r-high", type=float, default=None)
@click.option("--r-syn", type=float, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--base-model", default=curriculum_mod.DEFAULT_BASE_MODEL, show_default=True)
@click.option("--final-tag", default=curriculum_mod.DEFAULT_FINAL_TAG, show_default=True)
@click.option("--out-dir", required=True, type=click.Path())
@click.pass_obj
@pipeline_command
def curriculum_compose(app: AppContext, collected_path: str, synthetic_path: Optional[str],
                       labels_path: Optional[str], r_high: Optional[float], r_syn: Optional[float],
                       seed: Optional[int], base_model: str, final_tag: str, out_dir: str):
    """Compose D1/D2/D3 and emit the validated three-stage plan."""
    stage_section = app.config.stage
    cfg = curriculum_mod.StageConfig(
        r_high=r_high if r_high is not None else stage_section.get("r_high", 0.8),
        r_syn=r_syn if r_syn is not None else stage_section.get("r_syn", 0.1),
        seed=_resolve_seed(app, seed, stage_section),
        hyper=stage_section.get("hyper", {}),
    )
    collected = read_manifest(collected_path)
    if labels_path:
        labels = read_labels(labels_path)
        labeled, _ = triplets_mod.apply_labels(collected, labels)
    else:
        labeled = collected

    d1 = curriculum_mod.compose_stage1(labeled)
    d2 = curriculum_mod.compose_stage2(labeled, cfg)
    synthetic = read_manifest(synthetic_path) if synthetic_path else []
    d3 = curriculum_mod.compose_stage3(d2, synthetic, cfg)
    plan = curriculum_mod.emit_stage_plan(d1, d2, d3, cfg, base_model, final_tag)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    curriculum_mod.write_stage(out / "d1.stage", d1)
    curriculum_mod.write_stage(out / "d2.stage", d2)
    curriculum_mod.write_stage(out / "d3.stage", d3)
    curriculum_mod.write_plan(out / "plan.json", plan)
    app.emit(
        {
            "d1": len(d1.entries),
            "d2": len(d2.entries),
            "d3": len(d3.entries),
            "ratios": {"d2": d2.ratios, "d3": d3.ratios},
            "out_dir": out_dir,
        },
        f"composed D1={len(d1.entries)} D2={len(d2.entries)} D3={len(d3.entries)} -> {out_dir}",
    )


# ---------------------------------------------------------------------------
# plan


@main.command()
@click.option("--content-w", type=int, default=None)
@click.option("--content-h", type=int, default=None)
@click.option("--train-w", type=int, default=None)
@click.option("--train-h", type=int, default=None)
@click.option("--min-edge", type=int, default=1024, show_default=True)
@click.option("--multiple", type=int, default=16, show_default=True)
@click.option("--template", type=click.Choice([t.value for t in planner_mod.PromptTemplate]), default=None)
@click.option("--arg", default=None)
@click.pass_obj
@pipeline_command
def plan(app: AppContext, content_w: Optional[int], content_h: Optional[int],
         train_w: Optional[int], train_h: Optional[int], min_edge: int, multiple: int,
         template: Optional[str], arg: Optional[str]):
    """Print resolution plans and rendered prompts, one structured line each."""
    did_anything = False
    if (content_w is None) != (content_h is None):
        raise click.UsageError("--content-w and --content-h go together")
    if (train_w is None) != (train_h is None):
        raise click.UsageError("--train-w and --train-h go together")
    if content_w is not None:
        res = planner_mod.plan_inference_resolution(content_w, content_h)
        click.echo(dump_record({"inference": res.to_obj()}))
        did_anything = True
    if train_w is not None:
        w, h = planner_mod.plan_training_resolution(train_w, train_h, min_edge, multiple)
        click.echo(dump_record({"training": {"width": w, "height": h}}))
        did_anything = True
    if template is not None:
        click.echo(dump_record({"prompt": planner_mod.render_prompt(template, arg)}))
        did_anything = True
    if not did_anything:
        raise click.UsageError("nothing to plan: pass --content-w/--content-h, --train-w/--train-h, or --template")


# ---------------------------------------------------------------------------
# score


@main.group()
def score():
    """Metric computations over embedding vectors."""


def _parse_vector(raw: str, flag: str) -> list[float]:
    text = raw
    if raw.startswith("@"):
        try:
            text = Path(raw[1:]).read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError(f"{flag}: cannot read {raw[1:]}: {exc}") from exc
    try:
        values = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{flag}: not a JSON array: {exc.msg}") from exc
    if not isinstance(values, list) or not values:
        raise ConfigError(f"{flag}: expected a non-empty JSON array")
    return [float(v) for v in values]


@score.command("pair")
@click.option("--style-emb", required=True, help="CSD embedding of the style reference (JSON array or @file).")
@click.option("--result-emb", required=True, help="CSD embedding of the generated image.")
@click.option("--text-emb", default=None, help="CLIP text embedding of the content caption.")
@click.option("--result-clip-emb", default=None, help="CLIP image embedding of the generated image.")
@click.option("--head", "head_path", type=click.Path(), default=None)
@click.option("--clamp-negative/--no-clamp-negative", default=None)
@click.option("--clip-scale", type=float, default=None)
@click.option("--cpc-threshold", type=float, default=None)
@click.pass_obj
@pipeline_command
def score_pair(app: AppContext, style_emb: str, result_emb: str, text_emb: Optional[str],
               result_clip_emb: Optional[str], head_path: Optional[str],
               clamp_negative: Optional[bool], clip_scale: Optional[float],
               cpc_threshold: Optional[float]):
    """Score one style/result pair and print a single row."""
    from .metrics import clip_score, cpc_at, cpc_range, csd_score, forward

    cfg = app.config.metric_config(
        clamp_negative=clamp_negative, clip_scale=clip_scale, cpc_threshold=cpc_threshold
    )
    style = _parse_vector(style_emb, "--style-emb")
    result = _parse_vector(result_emb, "--result-emb")
    e_style = EmbeddingVector("style", EmbeddingKind.CSD, len(style), tuple(style))
    e_result = EmbeddingVector("result", EmbeddingKind.CSD, len(result), tuple(result))
    row: dict[str, Any] = {"csd_score": csd_score(e_style, e_result)}
    if text_emb is not None and result_clip_emb is not None:
        text = _parse_vector(text_emb, "--text-emb")
        rclip = _parse_vector(result_clip_emb, "--result-clip-emb")
        e_text = EmbeddingVector("caption", EmbeddingKind.CLIP_TEXT, len(text), tuple(text))
        e_rclip = EmbeddingVector("result", EmbeddingKind.CLIP_IMAGE, len(rclip), tuple(rclip))
        row["clip_score"] = clip_score(e_text, e_rclip, cfg)
        row["cpc_at"] = cpc_at(row["clip_score"], row["csd_score"], cfg.cpc_threshold)
        row["cpc_range"] = cpc_range(row["clip_score"], row["csd_score"], cfg)
        if head_path or app.config.head:
            head = load_head(head_path or app.config.head)
            row["aesthetic"] = forward(rclip, head)
    click.echo(dump_record(row))


# ---------------------------------------------------------------------------
# bench


@main.group()
def bench():
    """Benchmark pairing, scoring, and report emission."""


def _read_id_list(path: str) -> list[str]:
    ids = [line.strip() for line in Path(path).read_text(encoding="utf-8").splitlines()]
    return [i for i in ids if i]


@bench.command("pairs")
@click.option("--styles", "styles_path", required=True, type=click.Path())
@click.option("--contents", "contents_path", required=True, type=click.Path())
@click.option("--split", type=click.Choice(list(bench_mod.SPLITS)), default="test", show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--val-styles", type=click.Path(), default=None)
@click.option("--val-contents", type=click.Path(), default=None)
@click.option("--val-out", type=click.Path(), default=None)
@click.pass_obj
@pipeline_command
def bench_pairs(app: AppContext, styles_path: str, contents_path: str, split: str, out_path: str,
                val_styles: Optional[str], val_contents: Optional[str], val_out: Optional[str]):
    """Cross-product pairing; optionally emit a disjoint validation split."""
    styles = _read_id_list(styles_path)
    contents = _read_id_list(contents_path)
    pair_set = bench_mod.generate_pairs(styles, contents, split)
    bench_mod.write_pairs(out_path, pair_set)
    summary = {"pairs": len(pair_set.pairs), "split": split, "out": out_path}
    if val_styles or val_contents or val_out:
        if not (val_styles and val_contents and val_out):
            raise ConfigError("validation split needs --val-styles, --val-contents, and --val-out")
        val_set = bench_mod.generate_pairs(_read_id_list(val_styles), _read_id_list(val_contents), "validation")
        bench_mod.check_split_disjoint(pair_set, val_set)
        bench_mod.write_pairs(val_out, val_set)
        summary["validation_pairs"] = len(val_set.pairs)
        summary["validation_out"] = val_out
    app.emit(summary, f"{summary['pairs']} pairs -> {out_path}")


@bench.command("score")
@click.option("--pairs", "pairs_path", required=True, type=click.Path())
@click.option("--results", "results_path", required=True, type=click.Path())
@click.option("--embeddings", multiple=True, required=True, type=click.Path())
@click.option("--captions", "captions_path", required=True, type=click.Path())
@click.option("--head", "head_path", type=click.Path(), default=None)
@click.option("--clamp-negative/--no-clamp-negative", default=None)
@click.option("--clip-scale", type=float, default=None)
@click.option("--cpc-threshold", type=float, default=None)
@click.option("--out", "out_path", required=True, type=click.Path())
@click.pass_obj
@pipeline_command
def bench_score(app: AppContext, pairs_path: str, results_path: str, embeddings: tuple[str, ...],
                captions_path: str, head_path: Optional[str], clamp_negative: Optional[bool],
                clip_scale: Optional[float], cpc_threshold: Optional[float], out_path: str):
    """Score a full run into a machine-readable table."""
    resolved_head = head_path or app.config.head
    if not resolved_head:
        raise ConfigError("bench score needs an aesthetic head (--head or config)")
    cfg = app.config.metric_config(
        clamp_negative=clamp_negative, clip_scale=clip_scale, cpc_threshold=cpc_threshold
    )
    pair_set = bench_mod.read_pairs(pairs_path)
    results = bench_mod.read_results(results_path)
    store = ingest_mod.load_embeddings(list(embeddings))
    captions = {c.image_id: c.caption_id for c in ingest_mod.read_captions(captions_path)}
    head = load_head(resolved_head)
    table = bench_mod.score_run(pair_set, results, store, captions, head, cfg)
    bench_mod.write_score_table(out_path, table)
    app.emit(
        {"pairs": len(table.rows), "aggregates": table.aggregates, "out": out_path},
        f"scored {len(table.rows)} pairs -> {out_path}",
    )


@bench.command("report")
@click.option("--table", "tables", multiple=True, required=True,
              help="NAME=path to a score table JSON; repeatable.")
@click.option("--out-dir", required=True, type=click.Path())
@click.pass_obj
@pipeline_command
def bench_report(app: AppContext, tables: tuple[str, ...], out_dir: str):
    """Emit the comparison report (JSON + markdown) with best values marked."""
    parsed: list[tuple[str, Any]] = []
    for spec_arg in tables:
        if "=" not in spec_arg:
            raise ConfigError(f"--table expects NAME=path, got {spec_arg!r}")
        name, path = spec_arg.split("=", 1)
        parsed.append((name, bench_mod.read_score_table(path)))
    json_path, md_path = bench_mod.emit_report(parsed, out_dir)
    app.emit(
        {"models": [n for n, _ in parsed], "json": str(json_path), "markdown": str(md_path)},
        f"report for {len(parsed)} model(s) -> {out_dir}",
    )


# ---------------------------------------------------------------------------
# review


@main.group()
def review():
    """Human-in-the-loop triplet review service."""


@review.command("serve")
@click.option("--manifest", required=True, type=click.Path())
@click.option("--images", "images_root", required=True, type=click.Path())
@click.option("--log", "labels_log", required=True, type=click.Path())
@click.option("--port", type=int, default=8000, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--ui-dir", type=click.Path(), default=None)
@click.option("--head", "head_path", type=click.Path(), default=None)
@click.pass_obj
@pipeline_command
def review_serve(app: AppContext, manifest: str, images_root: str, labels_log: str,
                 port: int, host: str, ui_dir: Optional[str], head_path: Optional[str]):
    """Serve the review API (and the built UI, if present) until terminated."""
    import uvicorn

    from .service import ReviewSession, create_app

    session = ReviewSession.from_paths(manifest, images_root, labels_log)
    head = load_head(head_path or app.config.head) if (head_path or app.config.head) else None
    fastapi_app = create_app(
        session,
        ui_dir=Path(ui_dir) if ui_dir else None,
        head=head,
        metric_cfg=app.config.metric_config(),
    )
    click.echo(f"review service: {session.size} triplets on http://{host}:{port}", err=True)
    uvicorn.run(fastapi_app, host=host, port=port, log_level="warning")


if __name__ == "__main__":
    main()
