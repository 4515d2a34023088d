"""Acceptance suite: one test per primary criterion, one PASS line each.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines. Every tolerance and runtime budget is pinned here.
"""

from __future__ import annotations

import filecmp
import json
import math
import random
import time
from contextlib import contextmanager
from fractions import Fraction

import pytest

from stylecurator.bench import emit_report, generate_pairs
from stylecurator.curriculum import (
    DEFAULT_BASE_MODEL,
    CurriculumPlan,
    PlanStage,
    StageConfig,
    compose_stage1,
    compose_stage2,
    compose_stage3,
    emit_stage_plan,
    validate_plan,
)
from stylecurator.errors import CurriculumError
from stylecurator.ingest import ImageCatalog
from stylecurator.metrics import (
    MetricConfig,
    aesthetic_score,
    clip_score,
    cosine,
    cpc_at,
    cpc_range,
    csd_score,
    forward,
)
from stylecurator.planner import (
    plan_inference_resolution,
    plan_training_resolution,
    render_prompt,
)
from stylecurator.records import (
    Consistency,
    EmbeddingKind,
    ImageKind,
    ImageRecord,
    ScoreRow,
    ScoreTable,
    TripletSource,
    read_labels,
)
from stylecurator.service import ReviewSession
from stylecurator.triplets import MatchConfig, apply_labels, build_collected

from conftest import embedding, quick_triplet, random_head
from pipeline_fixture import run_pipeline
from test_metrics import oracle_cosine, oracle_forward


@contextmanager
def budget(seconds: float):
    start = time.perf_counter()
    yield
    elapsed = time.perf_counter() - start
    assert elapsed < seconds, f"runtime {elapsed:.2f}s exceeded the {seconds}s budget"


def announce(n: int, text: str) -> None:
    print(f"PASS criterion {n}: {text}")


def _catalog_for_sizes(sizes: list[int]) -> ImageCatalog:
    records = {}
    clusters = {}
    for c, n in enumerate(sizes):
        members = []
        for i in range(n):
            tid = f"targets/c{c}_{i}.png"
            cid = f"contents/c{c}_{i}.png"
            records[tid] = ImageRecord(tid, tid, 4, 4, ImageKind.STYLIZED_TARGET, style_cluster=f"c{c}")
            records[cid] = ImageRecord(cid, cid, 4, 4, ImageKind.CONTENT_REF)
            members.append(tid)
        clusters[f"c{c}"] = tuple(sorted(members))
    return ImageCatalog(records=records, clusters=clusters)


def test_criterion_1_combinatorics_oracle():
    rng = random.Random(101)
    with budget(5.0):
        for _ in range(200):
            sizes = [rng.randint(1, 50) for _ in range(rng.randint(1, 4))]
            catalog = _catalog_for_sizes(sizes)
            manifest = build_collected(catalog, MatchConfig())
            brute = 0
            for c, n in enumerate(sizes):
                members = [f"targets/c{c}_{i}.png" for i in range(n)]
                brute += len({(s, t) for s in members for t in members if s != t})
            assert len(manifest) == brute
            assert brute == sum(n * (n - 1) for n in sizes)
    announce(1, "uncapped pairwise counts equal brute-force enumeration (200 fixtures)")


def test_criterion_2_cpc_formula_suite():
    rng = random.Random(202)
    grids = [MetricConfig()]
    for _ in range(10):
        lo = rng.choice([0.1, 0.2, 0.3, 0.4])
        step = rng.choice([0.05, 0.1, 0.2])
        k = rng.randint(1, 6)
        grids.append(MetricConfig(range_lo=lo, range_hi=lo + k * step, range_step=step))
    with budget(5.0):
        for i in range(10_000):
            clip_s = rng.uniform(-0.5, 1.5)
            csd_s = rng.uniform(-1.0, 1.5)
            thresh = rng.uniform(-0.5, 1.2)
            if i % 17 == 0:
                csd_s = thresh  # exercise the inclusive boundary
            want = clip_s if csd_s >= thresh else 0.0
            assert cpc_at(clip_s, csd_s, thresh) == want
            cfg = grids[i % len(grids)]
            steps = round((cfg.range_hi - cfg.range_lo) / cfg.range_step)
            grid = [cfg.range_lo + j * cfg.range_step for j in range(steps + 1)]
            brute = math.fsum(clip_s if csd_s >= t else 0.0 for t in grid) / len(grid)
            assert abs(cpc_range(clip_s, csd_s, cfg) - brute) <= 1e-12
    announce(2, "cpc_at matches the two-branch definition and cpc_range matches grid averaging (10k tuples)")


def test_criterion_3_metric_oracles():
    rng = random.Random(303)
    cfg_default = MetricConfig()
    cfg_scaled = MetricConfig(clamp_negative=False, clip_scale=2.5)
    heads = {}
    with budget(30.0):
        for _ in range(1000):
            dim = rng.randint(8, 1024)
            u = [rng.gauss(0, 1) for _ in range(dim)]
            v = [rng.gauss(0, 1) for _ in range(dim)]
            want = oracle_cosine(u, v)
            assert abs(cosine(u, v) - want) <= 1e-9
            assert abs(
                csd_score(embedding("a", EmbeddingKind.CSD, u), embedding("b", EmbeddingKind.CSD, v))
                - want
            ) <= 1e-9
            text = embedding("t", EmbeddingKind.CLIP_TEXT, u)
            image = embedding("i", EmbeddingKind.CLIP_IMAGE, v)
            assert abs(clip_score(text, image, cfg_default) - max(want, 0.0)) <= 1e-9
            assert abs(clip_score(text, image, cfg_scaled) - 2.5 * want) <= 1e-9

            bucket = dim // 128
            if bucket not in heads:
                heads[bucket] = random_head(
                    rng, 128 * bucket + 64, hidden=[rng.randint(8, 24), rng.randint(2, 8)]
                )
            head = heads[bucket]
            x = [rng.gauss(0, 1) for _ in range(head.input_dim)]
            assert abs(forward(x, head) - oracle_forward(x, head)) <= 1e-6
            assert abs(
                aesthetic_score(embedding("i", EmbeddingKind.CLIP_IMAGE, x), head)
                - oracle_forward(x, head)
            ) <= 1e-6
    announce(3, "cosine/csd/clip/aesthetic match brute-force oracles on 1000 random inputs")


def _pool(consistency, count, source=TripletSource.COLLECTED, offset=0):
    return [quick_triplet(offset + i, source=source, consistency=consistency) for i in range(count)]


def test_criterion_4_curriculum_ratio_guarantees():
    rng = random.Random(404)
    pool_high = _pool(Consistency.HIGH, 150)
    pool_low = _pool(Consistency.LOW, 400, offset=1000)
    pool_syn = _pool(Consistency.UNLABELED, 400, source=TripletSource.SYNTHETIC, offset=10_000)
    with budget(10.0):
        for _ in range(500):
            high = rng.randint(1, 150)
            low = rng.randint(0, 400)
            syn = rng.randint(0, 400)
            r_high = rng.randint(1, 100) / 100
            r_syn = rng.randint(0, 90) / 100
            cfg = StageConfig(r_high=r_high, r_syn=r_syn, seed=rng.randint(0, 2**63))
            labeled = pool_high[:high] + pool_low[:low]
            d2 = compose_stage2(labeled, cfg)
            rh = Fraction(str(r_high))
            want_low = min(low, int(high * (1 - rh) / rh))
            assert len(d2.entries) == high + want_low
            assert Fraction(high, len(d2.entries)) >= rh
            if r_high == 0.8 and high == 100 and low >= 25:
                assert len(d2.entries) == 125

            rs = Fraction(str(r_syn))
            want_syn = int(rs * len(d2.entries) / (1 - rs))
            if want_syn > syn:
                with pytest.raises(CurriculumError):
                    compose_stage3(d2, pool_syn[:syn], cfg)
                continue
            d3 = compose_stage3(d2, pool_syn[:syn], cfg)
            s = len(d3.entries) - len(d2.entries)
            assert s == want_syn
            assert Fraction(s, len(d3.entries)) <= rs
            assert set(d2.entries) <= set(d3.entries)
    # the spec'd worked example, exactly
    d2 = compose_stage2(pool_high[:100] + pool_low[:400], StageConfig(r_high=0.8, seed=1))
    assert len(d2.entries) == 125
    announce(4, "D2/D3 achieved ratios and closed-form floor counts hold over 500 random configs")


def test_criterion_5_full_pipeline_determinism(tmp_path):
    with budget(10.0):
        first = run_pipeline(tmp_path / "run_a")
        second = run_pipeline(tmp_path / "run_b")
        assert set(first) == set(second)
        for name in first:
            assert filecmp.cmp(first[name], second[name], shallow=False), f"{name} differs"
            assert first[name].read_bytes() == second[name].read_bytes()
    announce(5, "mini-pipeline (60 triplets -> stages -> 5x4 scoring -> report) is byte-identical across runs")


def test_criterion_6_benchmark_shape(tmp_path):
    test_pairs = generate_pairs([f"s{i}" for i in range(50)], [f"c{i}" for i in range(40)])
    assert len(test_pairs.pairs) == 2000
    val_pairs = generate_pairs([f"v{i}" for i in range(10)], [f"w{i}" for i in range(10)], "validation")
    assert len(val_pairs.pairs) == 100

    cfg = MetricConfig().to_obj()
    published = [
        ("OmniStyle", 0.447, 0.194, 0.163, 5.881),
        ("OmniGen-v2", 0.462, 0.243, 0.166, 5.843),
        ("DreamO", 0.402, 0.193, 0.102, 6.149),
        ("Style-CCL", 0.577, 0.441, 0.304, 6.317),
    ]
    tables = [
        (name, ScoreTable.from_rows([ScoreRow("agg", csd, max(c05, cr), aes, c05, cr)], cfg))
        for name, csd, c05, cr, aes in published
    ]
    json_path, md_path = emit_report(tables, tmp_path)
    doc = json.loads(json_path.read_text())
    assert doc["columns"] == [
        "Style Similarity CSD Score↑",
        "Content Preservation CPC Score@0.5↑",
        "Content Preservation CPC Score@0.3:0.9↑",
        "Aesthetic Score↑",
    ]
    for key in ("csd_score", "cpc_at", "cpc_range", "aesthetic"):
        assert doc["best"][key] == ["Style-CCL"]
    md = md_path.read_text()
    assert "| Style-CCL | **0.577** | **0.441** | **0.304** | **6.317** |" in md
    announce(6, "pair counts 2000/100 and the four-column report mark 0.577/0.441/0.304/6.317 best")


def test_criterion_7_planner_goldens():
    plan = plan_inference_resolution(1024, 768)
    assert (plan.output_w, plan.output_h, plan.style_side) == (1024, 768, 768)
    assert plan_training_resolution(2048, 1536) == (1360, 1024)
    assert render_prompt("default") == (
        "Style Transfer the style of Figure 2 to Figure 1, "
        "and keep the content and characteristics of Figure 1."
    )
    announce(7, "inference style square 768, training 2048x1536 -> 1360x1024, default prompt verbatim")


def test_criterion_8_stage_chain():
    labeled = _pool(Consistency.HIGH, 6) + _pool(Consistency.LOW, 6, offset=50)
    cfg = StageConfig(r_high=0.5, r_syn=0.0, seed=3)
    d1 = compose_stage1(labeled)
    d2 = compose_stage2(labeled, cfg)
    d3 = compose_stage3(d2, [], cfg)
    plan = emit_stage_plan(d1, d2, d3, cfg)
    assert [s.name for s in plan.stages] == ["Q1", "Q2", "Q3"]
    assert plan.stages[0].init_model == DEFAULT_BASE_MODEL
    for prev, cur in zip(plan.stages, plan.stages[1:]):
        assert cur.init_model == prev.output_model
    assert plan.hyper["lora_rank"] == 32
    assert plan.hyper["learning_rate"] == 1e-4
    assert plan.hyper["min_edge"] == 1024

    tampered = CurriculumPlan(
        stages=(plan.stages[0], plan.stages[1], PlanStage("Q3", "D3", "Q1", "X")),
        hyper=plan.hyper,
    )
    with pytest.raises(CurriculumError):
        validate_plan(tampered, DEFAULT_BASE_MODEL)
    announce(8, "Q1->Q2->Q3 chain enforced, tampering rejected, hyper metadata present")


def test_criterion_9_review_log_semantics(tmp_path):
    manifest = [quick_triplet(i) for i in range(10)]
    rng = random.Random(909)
    for round_no in range(1000):
        log_path = tmp_path / f"log_{round_no}.ndjson"
        session = ReviewSession(manifest, tmp_path, log_path)
        for _ in range(rng.randint(1, 12)):
            t = rng.choice(manifest)
            session.submit(
                t.triplet_id,
                rng.choice(["high", "low"]),
                "ann",
                timestamp=rng.randint(50, 54),  # forces collisions and reversals
            )
        live = session.progress()
        _, counts = apply_labels(manifest, read_labels(log_path))
        assert counts == {k: live[k] for k in ("high", "low", "unlabeled")}
    announce(9, "apply_labels replay equals live service progress over 1000 random label sequences")
