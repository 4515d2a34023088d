"""Benchmark pairing, run scoring, and report emission.

The evaluation set is the full cross product of style and content
references. Scoring refuses to run with partial embedding coverage:
silently skipped pairs would shift every aggregate.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

from .errors import BenchError
from .metrics import (
    AestheticHead,
    MetricConfig,
    aesthetic_score,
    clip_score,
    cpc_at,
    cpc_range,
    csd_score,
)
from .ingest import EmbeddingStore
from .records import (
    EmbeddingKind,
    ScoreRow,
    ScoreTable,
    compute_pair_id,
    dump_record,
    iter_ndjson_path,
)


@dataclass(frozen=True)
class EvalPair:
    pair_id: str
    style: str
    content: str


SPLITS = ("test", "validation")


@dataclass(frozen=True)
class EvalPairSet:
    pairs: tuple[EvalPair, ...]
    split: str = "test"


def generate_pairs(
    styles: Sequence[str], contents: Sequence[str], split: str = "test"
) -> EvalPairSet:
    """Full style-major cross product: |styles| * |contents| pairs."""
    if split not in SPLITS:
        raise BenchError(f"split must be one of {SPLITS}, got {split!r}")
    if not styles or not contents:
        raise BenchError("style and content lists must be non-empty")
    for name, ids in (("style", styles), ("content", contents)):
        dupes = sorted({i for i in ids if list(ids).count(i) > 1})
        if dupes:
            raise BenchError(f"duplicate {name} id(s): {dupes}")
    pairs = tuple(
        EvalPair(pair_id=compute_pair_id(s, c), style=s, content=c)
        for s in styles
        for c in contents
    )
    return EvalPairSet(pairs=pairs, split=split)


def check_split_disjoint(test: EvalPairSet, validation: EvalPairSet) -> None:
    """Test and validation must not share style or content references."""
    t_styles = {p.style for p in test.pairs}
    t_contents = {p.content for p in test.pairs}
    v_styles = {p.style for p in validation.pairs}
    v_contents = {p.content for p in validation.pairs}
    style_overlap = sorted(t_styles & v_styles)
    content_overlap = sorted(t_contents & v_contents)
    if style_overlap or content_overlap:
        raise BenchError(
            "test and validation splits overlap",
            styles=style_overlap,
            contents=content_overlap,
        )


def write_pairs(path: str | Path, pair_set: EvalPairSet) -> None:
    lines = [
        dump_record(
            {"pair_id": p.pair_id, "style": p.style, "content": p.content, "split": pair_set.split}
        )
        for p in pair_set.pairs
    ]
    Path(path).write_text("".join(l + "\n" for l in lines), encoding="utf-8", newline="\n")


def read_pairs(path: str | Path) -> EvalPairSet:
    pairs = []
    splits = set()
    for line_no, obj in iter_ndjson_path(path):
        for key in ("pair_id", "style", "content", "split"):
            if key not in obj:
                raise BenchError(f"{path}:{line_no}: pair record missing {key!r}")
        pairs.append(
            EvalPair(pair_id=str(obj["pair_id"]), style=str(obj["style"]), content=str(obj["content"]))
        )
        splits.add(str(obj["split"]))
    if len(splits) > 1:
        raise BenchError(f"pair file mixes splits: {sorted(splits)}")
    return EvalPairSet(pairs=tuple(pairs), split=splits.pop() if splits else "test")


def read_results(path: str | Path) -> dict[str, str]:
    results: dict[str, str] = {}
    for line_no, obj in iter_ndjson_path(path):
        if "pair_id" not in obj or "result_image_id" not in obj:
            raise BenchError(
                f"{path}:{line_no}: result record needs pair_id and result_image_id"
            )
        pid = str(obj["pair_id"])
        if pid in results:
            raise BenchError(f"{path}:{line_no}: duplicate result for pair {pid!r}")
        results[pid] = str(obj["result_image_id"])
    return results


def score_run(
    pairs: EvalPairSet,
    results: Mapping[str, str],
    store: EmbeddingStore,
    captions: Mapping[str, str],
    head: AestheticHead,
    cfg: MetricConfig,
) -> ScoreTable:
    """One score row per pair; aborts up front listing every uncovered pair."""
    uncovered: dict[str, list[str]] = {}

    def note(pair_id: str, what: str) -> None:
        uncovered.setdefault(pair_id, []).append(what)

    for p in pairs.pairs:
        result_id = results.get(p.pair_id)
        if result_id is None:
            note(p.pair_id, "result image")
        else:
            if not store.has(result_id, EmbeddingKind.CSD):
                note(p.pair_id, f"csd embedding for result {result_id!r}")
            if not store.has(result_id, EmbeddingKind.CLIP_IMAGE):
                note(p.pair_id, f"clip_image embedding for result {result_id!r}")
        if not store.has(p.style, EmbeddingKind.CSD):
            note(p.pair_id, f"csd embedding for style {p.style!r}")
        caption_id = captions.get(p.content)
        if caption_id is None:
            note(p.pair_id, f"caption for content {p.content!r}")
        elif not store.has(caption_id, EmbeddingKind.CLIP_TEXT):
            note(p.pair_id, f"clip_text embedding for caption {caption_id!r}")
    if uncovered:
        raise BenchError(
            f"{len(uncovered)} pair(s) lack embeddings or results",
            uncovered={pid: uncovered[pid] for pid in sorted(uncovered)},
        )

    rows = []
    for p in pairs.pairs:
        result_id = results[p.pair_id]
        e_style = store.lookup(p.style, EmbeddingKind.CSD)
        e_result_csd = store.lookup(result_id, EmbeddingKind.CSD)
        e_result_clip = store.lookup(result_id, EmbeddingKind.CLIP_IMAGE)
        e_caption = store.lookup(captions[p.content], EmbeddingKind.CLIP_TEXT)
        csd = csd_score(e_style, e_result_csd)
        clip = clip_score(e_caption, e_result_clip, cfg)
        rows.append(
            ScoreRow(
                pair_id=p.pair_id,
                csd_score=csd,
                clip_score=clip,
                aesthetic=aesthetic_score(e_result_clip, head),
                cpc_at=cpc_at(clip, csd, cfg.cpc_threshold),
                cpc_range=cpc_range(clip, csd, cfg),
            )
        )
    table = ScoreTable.from_rows(rows, cfg.to_obj())
    table.check()
    return table


# ---------------------------------------------------------------------------
# score table files and reports


def score_table_to_obj(table: ScoreTable) -> dict:
    return {
        "rows": [
            {
                "pair_id": r.pair_id,
                "csd_score": r.csd_score,
                "clip_score": r.clip_score,
                "aesthetic": r.aesthetic,
                "cpc_at": r.cpc_at,
                "cpc_range": r.cpc_range,
            }
            for r in table.rows
        ],
        "aggregates": table.aggregates,
        "config": table.config,
    }


def score_table_from_obj(obj: Mapping) -> ScoreTable:
    rows = tuple(
        ScoreRow(
            pair_id=str(r["pair_id"]),
            csd_score=float(r["csd_score"]),
            clip_score=float(r["clip_score"]),
            aesthetic=float(r["aesthetic"]),
            cpc_at=float(r["cpc_at"]),
            cpc_range=float(r["cpc_range"]),
        )
        for r in obj["rows"]
    )
    return ScoreTable(rows=rows, aggregates=dict(obj["aggregates"]), config=dict(obj["config"]))


def write_score_table(path: str | Path, table: ScoreTable) -> None:
    Path(path).write_text(
        json.dumps(score_table_to_obj(table), ensure_ascii=False, indent=2) + "\n",
        encoding="utf-8",
        newline="\n",
    )


def read_score_table(path: str | Path) -> ScoreTable:
    obj = json.loads(Path(path).read_text(encoding="utf-8"))
    table = score_table_from_obj(obj)
    table.check()
    return table


def _format_threshold(x: float) -> str:
    s = f"{x:g}"
    return s


def report_columns(cfg: Mapping) -> list[tuple[str, str]]:
    thresh = _format_threshold(cfg.get("cpc_threshold", 0.5))
    lo = _format_threshold(cfg.get("range_lo", 0.3))
    hi = _format_threshold(cfg.get("range_hi", 0.9))
    return [
        ("csd_score", "Style Similarity CSD Score↑"),
        ("cpc_at", f"Content Preservation CPC Score@{thresh}↑"),
        ("cpc_range", f"Content Preservation CPC Score@{lo}:{hi}↑"),
        ("aesthetic", "Aesthetic Score↑"),
    ]


def emit_report(
    tables: Sequence[tuple[str, ScoreTable]], out_dir: str | Path
) -> tuple[Path, Path]:
    """Write bench_report.json and bench_report.md; best value per column marked.

    Pure function of its inputs: identical tables produce identical bytes.
    """
    if not tables:
        raise BenchError("report needs at least one score table")
    names = [name for name, _ in tables]
    if len(set(names)) != len(names):
        raise BenchError(f"duplicate model names in report: {names}")

    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise BenchError(f"cannot create report directory {out_dir}: {exc}") from exc

    columns = report_columns(tables[0][1].config)
    best: dict[str, list[str]] = {}
    for key, _ in columns:
        top = max(t.aggregates[key] for _, t in tables)
        best[key] = [name for name, t in tables if t.aggregates[key] == top]

    doc = {
        "columns": [label for _, label in columns],
        "models": [
            {"name": name, "aggregates": t.aggregates, "config": t.config, "rows": len(t.rows)}
            for name, t in tables
        ],
        "best": best,
    }
    json_path = out_dir / "bench_report.json"
    json_path.write_text(
        json.dumps(doc, ensure_ascii=False, indent=2) + "\n", encoding="utf-8", newline="\n"
    )

    md_lines = [
        "| Model | " + " | ".join(label for _, label in columns) + " |",
        "|" + "---|" * (len(columns) + 1),
    ]
    for name, t in tables:
        cells = []
        for key, _ in columns:
            value = f"{t.aggregates[key]:.3f}"
            if name in best[key]:
                value = f"**{value}**"
            cells.append(value)
        md_lines.append(f"| {name} | " + " | ".join(cells) + " |")
    md_path = out_dir / "bench_report.md"
    md_path.write_text("\n".join(md_lines) + "\n", encoding="utf-8", newline="\n")
    return json_path, md_path
