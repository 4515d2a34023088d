"""End-to-end mini-pipeline fixture: 5 clusters x 4 images through to a report.

Builds every input file deterministically, then drives the real CLI:
ingest -> triplets build (collected + synthetic) -> apply-labels ->
curriculum compose -> bench pairs/score/report. Returns the paths of all
CLI-produced artifacts so callers can byte-compare two runs.
"""

from __future__ import annotations

import random
from pathlib import Path

from click.testing import CliRunner

from stylecurator.cli import main
from stylecurator.ingest import write_embeddings
from stylecurator.metrics import write_head
from stylecurator.records import (
    Consistency,
    EmbeddingKind,
    EmbeddingVector,
    LabelRecord,
    dump_record,
    read_manifest,
    write_labels,
)
from stylecurator.bench import read_pairs

from conftest import build_image_tree, make_image, random_head, random_unit_vector

N_CLUSTERS = 5
CLUSTER_SIZE = 4
N_STYLES = 5
N_BENCH_CONTENTS = 4
EMB_DIM = 8


def run_cli(args: list[str]) -> str:
    runner = CliRunner()
    result = runner.invoke(main, args, catch_exceptions=False)
    assert result.exit_code == 0, f"{args} failed ({result.exit_code}): {result.output}"
    return result.output


def build_inputs(base: Path) -> dict[str, Path]:
    rng = random.Random(424242)
    root = base / "data"
    clusters = {f"c{i}": CLUSTER_SIZE for i in range(N_CLUSTERS)}
    index = build_image_tree(root, clusters, styles=N_STYLES)

    target_ids = sorted(
        f"targets/{cid}_{i}.png" for cid in clusters for i in range(CLUSTER_SIZE)
    )
    content_ids = sorted(
        f"contents/{cid}_{i}.png" for cid in clusters for i in range(CLUSTER_SIZE)
    )
    style_ids = [f"styles/s{j}.png" for j in range(N_STYLES)]
    bench_contents = content_ids[:N_BENCH_CONTENTS]

    captions = base / "captions.ndjson"
    caption_ids = {}
    with open(captions, "w", encoding="utf-8") as fh:
        for i, cid in enumerate(content_ids):
            cap = f"cap{i:03d}"
            caption_ids[cid] = cap
            fh.write(dump_record({"image_id": cid, "caption_id": cap, "text": f"scene {i}"}) + "\n")

    vectors: list[EmbeddingVector] = []
    for sid in style_ids:
        vectors.append(
            EmbeddingVector(sid, EmbeddingKind.CSD, EMB_DIM, random_unit_vector(rng, EMB_DIM))
        )
    for tid in target_ids:  # targets double as result images
        vectors.append(
            EmbeddingVector(tid, EmbeddingKind.CSD, EMB_DIM, random_unit_vector(rng, EMB_DIM))
        )
        vectors.append(
            EmbeddingVector(tid, EmbeddingKind.CLIP_IMAGE, EMB_DIM, random_unit_vector(rng, EMB_DIM))
        )
    for cid in content_ids:
        vectors.append(
            EmbeddingVector(
                caption_ids[cid], EmbeddingKind.CLIP_TEXT, EMB_DIM, random_unit_vector(rng, EMB_DIM)
            )
        )
    embeddings = base / "embeddings.ndjson"
    write_embeddings(embeddings, vectors, meta={"model": "fixture/unit-gauss-v1"})

    head_path = base / "head.json"
    write_head(head_path, random_head(rng, EMB_DIM))

    assets = base / "assets.ndjson"
    with open(assets, "w", encoding="utf-8") as fh:
        for i, tid in enumerate(target_ids):
            fh.write(
                dump_record(
                    {
                        "target_id": tid,
                        "content_ref_id": tid.replace("targets/", "contents/"),
                        "generated_style_ref_id": style_ids[i % N_STYLES],
                    }
                )
                + "\n"
            )

    styles_list = base / "styles.txt"
    styles_list.write_text("".join(s + "\n" for s in style_ids), encoding="utf-8")
    contents_list = base / "contents.txt"
    contents_list.write_text("".join(c + "\n" for c in bench_contents), encoding="utf-8")

    return {
        "root": root,
        "index": index,
        "captions": captions,
        "embeddings": embeddings,
        "head": head_path,
        "assets": assets,
        "styles_list": styles_list,
        "contents_list": contents_list,
    }


def write_fixture_labels(base: Path, manifest_path: Path) -> Path:
    """Deterministic labels: first 20 triplets high, next 10 low, rest unlabeled."""
    manifest = read_manifest(manifest_path)
    ids = [t.triplet_id for t in manifest]
    records = [
        LabelRecord(tid, Consistency.HIGH, "fixture", 1000 + i) for i, tid in enumerate(ids[:20])
    ] + [
        LabelRecord(tid, Consistency.LOW, "fixture", 2000 + i) for i, tid in enumerate(ids[20:30])
    ]
    path = base / "labels.ndjson"
    write_labels(path, records)
    return path


def write_results_map(base: Path, pairs_path: Path) -> Path:
    """Deterministic pair -> result assignment (i-th pair gets the i-th target)."""
    pair_set = read_pairs(pairs_path)
    target_ids = sorted(
        f"targets/c{c}_{i}.png" for c in range(N_CLUSTERS) for i in range(CLUSTER_SIZE)
    )
    path = base / "results.ndjson"
    with open(path, "w", encoding="utf-8") as fh:
        for i, p in enumerate(sorted(pair_set.pairs, key=lambda p: p.pair_id)):
            fh.write(dump_record({"pair_id": p.pair_id, "result_image_id": target_ids[i]}) + "\n")
    return path


def run_pipeline(base: Path) -> dict[str, Path]:
    """Drive the CLI end to end; returns every artifact the CLI wrote."""
    base.mkdir(parents=True, exist_ok=True)
    inputs = build_inputs(base)
    catalog = base / "catalog.ndjson"
    run_cli(
        [
            "ingest",
            "--root", str(inputs["root"]),
            "--clusters", str(inputs["index"]),
            "--captions", str(inputs["captions"]),
            "--embeddings", str(inputs["embeddings"]),
            "--out-catalog", str(catalog),
        ]
    )

    collected = base / "collected.ndjson"
    run_cli(
        [
            "triplets", "build",
            "--catalog", str(catalog),
            "--source", "collected",
            "--out", str(collected),
        ]
    )
    run_cli(["validate", "--manifest", str(collected), "--catalog", str(catalog)])

    labels = write_fixture_labels(base, collected)
    labeled = base / "labeled.ndjson"
    run_cli(
        [
            "triplets", "apply-labels",
            "--manifest", str(collected),
            "--labels", str(labels),
            "--out", str(labeled),
        ]
    )

    synthetic = base / "synthetic.ndjson"
    run_cli(
        [
            "triplets", "build",
            "--catalog", str(catalog),
            "--source", "synthetic",
            "--assets", str(inputs["assets"]),
            "--mode", "generated_style_ref",
            "--out", str(synthetic),
        ]
    )

    stages = base / "stages"
    run_cli(
        [
            "curriculum", "compose",
            "--collected", str(collected),
            "--synthetic", str(synthetic),
            "--labels", str(labels),
            "--r-high", "0.8",
            "--r-syn", "0.1",
            "--seed", "7",
            "--out-dir", str(stages),
        ]
    )

    pairs = base / "pairs.ndjson"
    run_cli(
        [
            "bench", "pairs",
            "--styles", str(inputs["styles_list"]),
            "--contents", str(inputs["contents_list"]),
            "--out", str(pairs),
        ]
    )
    results = write_results_map(base, pairs)

    table = base / "table.json"
    run_cli(
        [
            "bench", "score",
            "--pairs", str(pairs),
            "--results", str(results),
            "--embeddings", str(inputs["embeddings"]),
            "--captions", str(inputs["captions"]),
            "--head", str(inputs["head"]),
            "--out", str(table),
        ]
    )

    report_dir = base / "report"
    run_cli(["bench", "report", "--table", f"ours={table}", "--out-dir", str(report_dir)])

    return {
        "catalog": catalog,
        "collected": collected,
        "labeled": labeled,
        "synthetic": synthetic,
        "d1": stages / "d1.stage",
        "d2": stages / "d2.stage",
        "d3": stages / "d3.stage",
        "plan": stages / "plan.json",
        "pairs": pairs,
        "table": table,
        "report_json": report_dir / "bench_report.json",
        "report_md": report_dir / "bench_report.md",
    }
