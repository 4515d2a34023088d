"""Three-stage curriculum composition and the chained training plan.

Stage 1 is the collected manifest as-is; stage 2 re-weights toward
high-consistency triplets by subsampling lows; stage 3 mixes a low ratio
of synthetic triplets back in, keeping all of stage 2 to protect content
preservation. Mixing arithmetic is exact rational math on the decimal
ratio literals, so the floor formulas never suffer float drift.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Mapping, Sequence

from .errors import CurriculumError, ManifestError
from .records import (
    Consistency,
    CurriculumPlan,
    PlanStage,
    StageDataset,
    StageName,
    Triplet,
    dump_record,
)
from .sampling import SAMPLER_NAME, sample_prefix

DEFAULT_BASE_MODEL = "Qwen-Image-Edit-2509"
DEFAULT_FINAL_TAG = "QwenStyle-V1"

DEFAULT_HYPER: dict[str, Any] = {
    "lora_rank": 32,
    "learning_rate": 1e-4,
    "batch_size_per_device": 1,
    "min_edge": 1024,
    "device_count": 4,
}


def _exact(ratio: float | str | Fraction, name: str) -> Fraction:
    # Fraction(str(0.8)) == 4/5: the decimal literal, not the binary float.
    if isinstance(ratio, Fraction):
        return ratio
    try:
        return Fraction(str(ratio))
    except (ValueError, ZeroDivisionError) as exc:
        raise CurriculumError(f"{name} is not a valid ratio: {ratio!r}") from exc


@dataclass(frozen=True)
class StageConfig:
    r_high: float = 0.8
    r_syn: float = 0.1
    seed: int = 0
    hyper: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        rh = _exact(self.r_high, "r_high")
        rs = _exact(self.r_syn, "r_syn")
        if not (0 < rh <= 1):
            raise CurriculumError(f"r_high must be in (0, 1], got {self.r_high}")
        if not (0 <= rs < 1):
            raise CurriculumError(f"r_syn must be in [0, 1), got {self.r_syn}")

    @property
    def r_high_exact(self) -> Fraction:
        return _exact(self.r_high, "r_high")

    @property
    def r_syn_exact(self) -> Fraction:
        return _exact(self.r_syn, "r_syn")

    def merged_hyper(self) -> dict[str, Any]:
        merged = dict(DEFAULT_HYPER)
        merged.update(self.hyper)
        return merged


def _round6(x: Fraction) -> float:
    return round(float(x), 6)


def low_fill_count(high_count: int, r_high: Fraction) -> int:
    """Largest x with high/(high+x) >= r_high: floor(high * (1-r)/r)."""
    return int((high_count * (1 - r_high)) / r_high)


def synthetic_fill_count(d2_size: int, r_syn: Fraction) -> int:
    """Largest s with s/(d2+s) <= r_syn: floor(r * d2 / (1-r))."""
    return int((r_syn * d2_size) / (1 - r_syn))


def compose_stage1(collected: Sequence[Triplet]) -> StageDataset:
    """D1 is the full collected manifest in its natural label mix."""
    if not collected:
        raise CurriculumError("stage-1 manifest is empty")
    entries = tuple(sorted(t.triplet_id for t in collected))
    n = len(collected)
    mix = {c: 0 for c in ("high", "low", "unlabeled")}
    for t in collected:
        mix[t.consistency.value] += 1
    return StageDataset(
        stage=StageName.D1,
        entries=entries,
        seed=0,
        ratios={
            "high_fraction": _round6(Fraction(mix["high"], n)),
            "low_fraction": _round6(Fraction(mix["low"], n)),
            "unlabeled_fraction": _round6(Fraction(mix["unlabeled"], n)),
        },
        provenance={"source_counts": mix, "sampler": None},
    )


def compose_stage2(labeled: Sequence[Triplet], cfg: StageConfig) -> StageDataset:
    """All high-consistency triplets plus a seeded low subsample up to r_high.

    Unlabeled triplets are excluded: stage 2 trains on curated data only.
    """
    highs = sorted(t.triplet_id for t in labeled if t.consistency is Consistency.HIGH)
    lows = sorted(t.triplet_id for t in labeled if t.consistency is Consistency.LOW)
    if not highs:
        raise CurriculumError("stage-2 requires curated labels: no high-consistency triplets")
    want_low = low_fill_count(len(highs), cfg.r_high_exact)
    take_low = min(want_low, len(lows))
    chosen = sample_prefix(lows, take_low, cfg.seed, "stage2-low")
    entries = tuple(sorted(highs + chosen))
    total = len(entries)
    return StageDataset(
        stage=StageName.D2,
        entries=entries,
        seed=cfg.seed,
        ratios={
            "high_fraction": _round6(Fraction(len(highs), total)),
            "low_fraction": _round6(Fraction(take_low, total)),
        },
        provenance={
            "r_high": float(cfg.r_high),
            "sampler": SAMPLER_NAME,
            "available": {"high": len(highs), "low": len(lows)},
        },
    )


def compose_stage3(
    d2: StageDataset, synthetic: Sequence[Triplet], cfg: StageConfig
) -> StageDataset:
    """All of D2 plus floor(r_syn*|D2|/(1-r_syn)) sampled synthetic triplets."""
    if d2.stage is not StageName.D2:
        raise CurriculumError(f"stage-3 must build on D2, got {d2.stage.value}")
    if not d2.entries:
        raise CurriculumError("stage-2 dataset is empty")
    take = synthetic_fill_count(len(d2.entries), cfg.r_syn_exact)
    candidates = sorted(t.triplet_id for t in synthetic)
    if take > len(candidates):
        raise CurriculumError(
            f"stage-3 needs {take} synthetic triplets but only {len(candidates)} are available",
            required=take,
            available=len(candidates),
        )
    chosen = sample_prefix(candidates, take, cfg.seed, "stage3-syn")
    overlap = set(chosen) & set(d2.entries)
    if overlap:
        raise CurriculumError(
            f"synthetic manifest shares {len(overlap)} triplet id(s) with D2"
        )
    entries = tuple(sorted(list(d2.entries) + chosen))
    total = len(entries)
    return StageDataset(
        stage=StageName.D3,
        entries=entries,
        seed=cfg.seed,
        ratios={
            "synthetic_fraction": _round6(Fraction(take, total)),
            "d2_fraction": _round6(Fraction(len(d2.entries), total)),
        },
        provenance={
            "r_syn": float(cfg.r_syn),
            "sampler": SAMPLER_NAME,
            "available": {"synthetic": len(candidates), "d2": len(d2.entries)},
        },
    )


def emit_stage_plan(
    d1: StageDataset,
    d2: StageDataset,
    d3: StageDataset,
    cfg: StageConfig,
    base_model: str = DEFAULT_BASE_MODEL,
    final_tag: str = DEFAULT_FINAL_TAG,
) -> CurriculumPlan:
    """Chain the three stages: base -> Q1 -> Q2 -> Q3 (released as final_tag)."""
    for ds, want in ((d1, StageName.D1), (d2, StageName.D2), (d3, StageName.D3)):
        if ds.stage is not want:
            raise CurriculumError(f"expected {want.value} dataset, got {ds.stage.value}")
    plan = CurriculumPlan(
        stages=(
            PlanStage(name="Q1", dataset="D1", init_model=base_model, output_model="Q1"),
            PlanStage(name="Q2", dataset="D2", init_model="Q1", output_model="Q2"),
            PlanStage(name="Q3", dataset="D3", init_model="Q2", output_model=final_tag),
        ),
        hyper=cfg.merged_hyper(),
    )
    validate_plan(plan, base_model)
    return plan


def validate_plan(plan: CurriculumPlan, base_model: str) -> None:
    """Reject any break in the init chain or a wrong stage roster."""
    names = [s.name for s in plan.stages]
    if names != ["Q1", "Q2", "Q3"]:
        raise CurriculumError(f"plan must have exactly stages Q1, Q2, Q3, got {names}")
    if plan.stages[0].init_model != base_model:
        raise CurriculumError(
            f"stage Q1 must initialize from {base_model!r}, got {plan.stages[0].init_model!r}"
        )
    for prev, cur in zip(plan.stages, plan.stages[1:]):
        if cur.init_model != prev.output_model:
            raise CurriculumError(
                f"broken chain: {cur.name} initializes from {cur.init_model!r} "
                f"but {prev.name} outputs {prev.output_model!r}"
            )


# ---------------------------------------------------------------------------
# stage dataset and plan files


def dumps_stage(ds: StageDataset) -> str:
    header = dump_record(
        {
            "stage": ds.stage.value,
            "seed": ds.seed,
            "ratios": ds.ratios,
            "provenance": ds.provenance,
        }
    )
    return header + "\n" + "".join(e + "\n" for e in ds.entries)


def write_stage(path: str | Path, ds: StageDataset) -> None:
    Path(path).write_text(dumps_stage(ds), encoding="utf-8", newline="\n")


def read_stage(path: str | Path) -> StageDataset:
    text = Path(path).read_text(encoding="utf-8")
    lines = text.split("\n")
    if not lines or not lines[0].strip():
        raise ManifestError("stage file is empty", path=str(path))
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise ManifestError(f"bad stage header: {exc.msg}", path=str(path), line=1) from exc
    entries = tuple(l for l in lines[1:] if l.strip())
    return StageDataset(
        stage=StageName(header["stage"]),
        entries=entries,
        seed=int(header["seed"]),
        ratios=dict(header["ratios"]),
        provenance=dict(header["provenance"]),
    )


def plan_to_obj(plan: CurriculumPlan) -> dict:
    return {
        "stages": [
            {
                "name": s.name,
                "dataset": s.dataset,
                "init_model": s.init_model,
                "output_model": s.output_model,
            }
            for s in plan.stages
        ],
        "hyper": plan.hyper,
    }


def plan_from_obj(obj: Mapping[str, Any]) -> CurriculumPlan:
    return CurriculumPlan(
        stages=tuple(
            PlanStage(
                name=str(s["name"]),
                dataset=str(s["dataset"]),
                init_model=str(s["init_model"]),
                output_model=str(s["output_model"]),
            )
            for s in obj["stages"]
        ),
        hyper=dict(obj["hyper"]),
    )


def write_plan(path: str | Path, plan: CurriculumPlan) -> None:
    text = json.dumps(plan_to_obj(plan), ensure_ascii=False, indent=2) + "\n"
    Path(path).write_text(text, encoding="utf-8", newline="\n")


def read_plan(path: str | Path) -> CurriculumPlan:
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ManifestError(f"bad plan file: {exc.msg}", path=str(path)) from exc
    return plan_from_obj(obj)
