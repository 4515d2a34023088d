"""Triplet manifest construction: pairwise cluster matching and synthetic assembly.

Collected triplets come from matching every ordered pair of stylized
images inside one style cluster; synthetic triplets additionally draw on
externally generated assets (a photographic content reference per target,
optionally a generated style reference). This module only wires ids
together; it never invokes any generator.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .errors import BuildError
from .ingest import ImageCatalog
from .planner import DEFAULT_PROMPT
from .records import (
    Consistency,
    ImageKind,
    LabelRecord,
    Triplet,
    TripletSource,
    dump_record,
    iter_ndjson_path,
    make_triplet,
)
from .sampling import sample_prefix

log = logging.getLogger(__name__)


class MatchMode(str, Enum):
    PAIRWISE = "pairwise"
    GENERATED_STYLE_REF = "generated_style_ref"
    BOTH = "both"


@dataclass(frozen=True)
class MatchConfig:
    mode: MatchMode = MatchMode.PAIRWISE
    max_pairs_per_cluster: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.max_pairs_per_cluster is not None and self.max_pairs_per_cluster < 1:
            raise BuildError(
                f"max_pairs_per_cluster must be >= 1, got {self.max_pairs_per_cluster}"
            )


def match_cluster_pairs(
    cluster_id: str,
    members: Sequence[str],
    content_map: Mapping[str, str],
    cfg: MatchConfig,
    source: TripletSource = TripletSource.COLLECTED,
) -> list[Triplet]:
    """One triplet per ordered pair (style_ref, target) within a cluster.

    When the pair count exceeds max_pairs_per_cluster, a seeded uniform
    sample of exactly that many pairs is taken (identical across runs for
    equal seeds).
    """
    if len(set(members)) != len(members):
        raise BuildError(f"cluster {cluster_id!r} has duplicate members")
    missing = sorted(t for t in members if t not in content_map)
    if missing:
        raise BuildError(
            f"cluster {cluster_id!r}: {len(missing)} target(s) missing a content reference",
            missing=missing,
        )
    ordered = sorted(members)
    pairs = [(s, t) for s in ordered for t in ordered if s != t]
    cap = cfg.max_pairs_per_cluster
    if cap is not None and len(pairs) > cap:
        pairs = sample_prefix(
            pairs, cap, cfg.seed, f"pair:{cluster_id}", key=lambda p: f"{p[0]}\x1f{p[1]}"
        )
    triplets = [
        make_triplet(
            style_ref=s,
            content_ref=content_map[t],
            target=t,
            source=source,
            style_cluster=cluster_id,
            prompt=DEFAULT_PROMPT,
        )
        for s, t in pairs
    ]
    triplets.sort(key=lambda t: t.triplet_id)
    return triplets


def derive_content_map(catalog: ImageCatalog, targets: Iterable[str]) -> dict[str, str]:
    """Pair each stylized target with its same-stem content reference.

    Layout convention: targets/<stem>.<ext> pairs with contents/<stem>.<ext'>.
    """
    def stem(image_id: str) -> str:
        rel = image_id.split("/", 1)[1] if "/" in image_id else image_id
        dot = rel.rfind(".")
        return rel[:dot] if dot > 0 else rel

    contents: dict[str, str] = {}
    for rec in catalog.by_kind(ImageKind.CONTENT_REF):
        key = stem(rec.id)
        if key in contents:
            raise BuildError(
                f"content references {contents[key]!r} and {rec.id!r} share stem {key!r}"
            )
        contents[key] = rec.id

    content_map: dict[str, str] = {}
    unmatched: list[str] = []
    for t in targets:
        cid = contents.get(stem(t))
        if cid is None:
            unmatched.append(t)
        else:
            content_map[t] = cid
    if unmatched:
        raise BuildError(
            f"{len(unmatched)} stylized target(s) have no same-stem content reference",
            missing=sorted(unmatched),
        )
    return content_map


def build_collected(catalog: ImageCatalog, cfg: MatchConfig) -> list[Triplet]:
    """Pairwise-match every cluster; every triplet starts unlabeled."""
    if not catalog.clusters:
        raise BuildError("catalog has no style clusters to match")
    all_targets = [m for members in catalog.clusters.values() for m in members]
    content_map = derive_content_map(catalog, all_targets)
    manifest: list[Triplet] = []
    for cluster_id in sorted(catalog.clusters):
        manifest.extend(
            match_cluster_pairs(
                cluster_id, catalog.clusters[cluster_id], content_map, cfg
            )
        )
    manifest.sort(key=lambda t: t.triplet_id)
    return manifest


@dataclass(frozen=True)
class AssetEntry:
    content_ref: str
    generated_style_ref: str | None = None


def read_asset_map(path: str | Path) -> dict[str, AssetEntry]:
    assets: dict[str, AssetEntry] = {}
    for line_no, obj in iter_ndjson_path(path):
        if "target_id" not in obj or "content_ref_id" not in obj:
            raise BuildError(
                f"{path}:{line_no}: asset record needs target_id and content_ref_id"
            )
        target = str(obj["target_id"])
        if target in assets:
            raise BuildError(f"{path}:{line_no}: duplicate asset entry for {target!r}")
        gen = obj.get("generated_style_ref_id")
        assets[target] = AssetEntry(
            content_ref=str(obj["content_ref_id"]),
            generated_style_ref=None if gen is None else str(gen),
        )
    return assets


def build_synthetic(
    catalog: ImageCatalog,
    assets: Mapping[str, AssetEntry],
    cfg: MatchConfig,
) -> list[Triplet]:
    """Assemble synthetic triplets from generated assets.

    pairwise: cluster matching with the asset content references.
    generated_style_ref: one triplet per target against its generated style ref.
    both: the de-duplicated union.
    """
    if not catalog.clusters:
        raise BuildError("catalog has no style clusters to match")
    scope = sorted(m for members in catalog.clusters.values() for m in members)
    uncovered = sorted(t for t in scope if t not in assets)
    if uncovered:
        raise BuildError(
            f"{len(uncovered)} stylized target(s) have no synthetic asset entry",
            missing=uncovered,
        )
    known = catalog.ids()
    dangling = sorted(
        {
            ref
            for t in scope
            for ref in (assets[t].content_ref, assets[t].generated_style_ref)
            if ref is not None and ref not in known
        }
    )
    if dangling:
        raise BuildError(
            f"asset map references {len(dangling)} id(s) absent from the catalog",
            dangling=dangling,
        )

    want_generated = cfg.mode in (MatchMode.GENERATED_STYLE_REF, MatchMode.BOTH)
    if want_generated:
        without_ref = sorted(t for t in scope if assets[t].generated_style_ref is None)
        if without_ref:
            raise BuildError(
                f"{len(without_ref)} target(s) lack a generated style reference",
                missing=without_ref,
            )

    manifest: dict[str, Triplet] = {}
    if cfg.mode in (MatchMode.PAIRWISE, MatchMode.BOTH):
        content_map = {t: assets[t].content_ref for t in scope}
        for cluster_id in sorted(catalog.clusters):
            for trip in match_cluster_pairs(
                cluster_id,
                catalog.clusters[cluster_id],
                content_map,
                cfg,
                source=TripletSource.SYNTHETIC,
            ):
                manifest[trip.triplet_id] = trip
    if want_generated:
        cluster_of = {
            m: cid for cid, members in catalog.clusters.items() for m in members
        }
        for t in scope:
            trip = make_triplet(
                style_ref=assets[t].generated_style_ref,
                content_ref=assets[t].content_ref,
                target=t,
                source=TripletSource.SYNTHETIC,
                style_cluster=cluster_of[t],
                prompt=DEFAULT_PROMPT,
            )
            manifest[trip.triplet_id] = trip
    return sorted(manifest.values(), key=lambda t: t.triplet_id)


# ---------------------------------------------------------------------------
# label application


def labels_view(labels: Sequence[LabelRecord]) -> dict[str, Consistency]:
    """Last-write-wins reduction: later timestamp wins, file order breaks ties."""
    best: dict[str, tuple[int, int, Consistency]] = {}
    for order, rec in enumerate(labels):
        current = best.get(rec.triplet_id)
        if current is None or (rec.timestamp, order) >= (current[0], current[1]):
            best[rec.triplet_id] = (rec.timestamp, order, rec.label)
    return {tid: label for tid, (_, _, label) in best.items()}


def apply_labels(
    manifest: Sequence[Triplet], labels: Sequence[LabelRecord]
) -> tuple[list[Triplet], dict[str, int]]:
    """Set each triplet's consistency from the label log; unlabeled stay untouched.

    Labels for ids absent from the manifest are warned about, not rejected:
    manifests regenerate.
    """
    view = labels_view(labels)
    known = {t.triplet_id for t in manifest}
    unknown = sorted(set(view) - known)
    if unknown:
        log.warning("%d label(s) reference triplets not in this manifest", len(unknown))

    out: list[Triplet] = []
    counts = {"high": 0, "low": 0, "unlabeled": 0}
    for t in manifest:
        label = view.get(t.triplet_id)
        if label is None:
            out.append(t)
            counts["unlabeled"] += 1
        else:
            out.append(
                Triplet(
                    triplet_id=t.triplet_id,
                    style_ref=t.style_ref,
                    content_ref=t.content_ref,
                    target=t.target,
                    source=t.source,
                    style_cluster=t.style_cluster,
                    consistency=label,
                    prompt=t.prompt,
                )
            )
            counts[label.value] += 1
    return out, counts


def write_asset_map(path: str | Path, assets: Mapping[str, AssetEntry]) -> None:
    lines = []
    for target in sorted(assets):
        entry = assets[target]
        lines.append(
            dump_record(
                {
                    "target_id": target,
                    "content_ref_id": entry.content_ref,
                    "generated_style_ref_id": entry.generated_style_ref,
                }
            )
        )
    Path(path).write_text("".join(l + "\n" for l in lines), encoding="utf-8", newline="\n")
