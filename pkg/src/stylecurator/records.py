"""Shared domain types and the line-delimited record formats they travel in.

Every record file in the pipeline is UTF-8 NDJSON with LF line endings:
one JSON object per line, keys in a fixed canonical order, floats in
shortest round-trip decimal form. Canonical serialization is what makes
the determinism guarantees (byte-identical reruns) testable.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Any, Iterable, Iterator, Mapping, Sequence

from .errors import ManifestError

__all__ = [
    "ImageKind",
    "EmbeddingKind",
    "TripletSource",
    "Consistency",
    "StageName",
    "ImageRecord",
    "EmbeddingVector",
    "Triplet",
    "LabelRecord",
    "StageDataset",
    "PlanStage",
    "CurriculumPlan",
    "ScoreRow",
    "ScoreTable",
    "Violation",
    "ValidationReport",
    "compute_triplet_id",
    "compute_pair_id",
    "make_triplet",
    "validate_manifest",
    "read_manifest",
    "write_manifest",
    "read_labels",
    "write_labels",
    "dump_record",
    "iter_ndjson_path",
    "iter_ndjson_text",
]


class ImageKind(str, Enum):
    STYLIZED_TARGET = "stylized_target"
    CONTENT_REF = "content_ref"
    STYLE_REF = "style_ref"


class EmbeddingKind(str, Enum):
    CSD = "csd"
    CLIP_IMAGE = "clip_image"
    CLIP_TEXT = "clip_text"


class TripletSource(str, Enum):
    COLLECTED = "collected"
    SYNTHETIC = "synthetic"


class Consistency(str, Enum):
    HIGH = "high"
    LOW = "low"
    UNLABELED = "unlabeled"


class StageName(str, Enum):
    D1 = "D1"
    D2 = "D2"
    D3 = "D3"


def _hash16(*parts: str) -> str:
    joined = "\x1f".join(parts)
    return hashlib.sha256(joined.encode("utf-8")).hexdigest()[:16]


def compute_triplet_id(style_ref: str, content_ref: str, target: str, source: str) -> str:
    """Content-derived id: stable across manifest regeneration so labels survive."""
    return _hash16(style_ref, content_ref, target, source)


def compute_pair_id(style: str, content: str) -> str:
    return _hash16(style, content)


@dataclass(frozen=True)
class ImageRecord:
    id: str
    path: str
    width: int
    height: int
    kind: ImageKind
    style_cluster: str | None = None
    caption_id: str | None = None

    def __post_init__(self):
        if not self.id:
            raise ManifestError("image record has empty id")
        if self.width < 1 or self.height < 1:
            raise ManifestError(
                f"image {self.id!r} has non-positive dimensions {self.width}x{self.height}"
            )


@dataclass(frozen=True)
class EmbeddingVector:
    owner_id: str
    kind: EmbeddingKind
    dim: int
    values: tuple[float, ...]

    def __post_init__(self):
        if self.dim < 1:
            raise ManifestError(f"embedding for {self.owner_id!r} has dim {self.dim} < 1")
        if len(self.values) != self.dim:
            raise ManifestError(
                f"embedding for {self.owner_id!r} declares dim {self.dim} "
                f"but carries {len(self.values)} values"
            )
        for i, v in enumerate(self.values):
            if not math.isfinite(v):
                raise ManifestError(
                    f"embedding ({self.owner_id!r}, {self.kind.value}) has non-finite value at index {i}"
                )


@dataclass(frozen=True)
class Triplet:
    triplet_id: str
    style_ref: str
    content_ref: str
    target: str
    source: TripletSource
    style_cluster: str
    consistency: Consistency = Consistency.UNLABELED
    prompt: str = ""


def make_triplet(
    style_ref: str,
    content_ref: str,
    target: str,
    source: TripletSource,
    style_cluster: str,
    prompt: str,
    consistency: Consistency = Consistency.UNLABELED,
) -> Triplet:
    return Triplet(
        triplet_id=compute_triplet_id(style_ref, content_ref, target, source.value),
        style_ref=style_ref,
        content_ref=content_ref,
        target=target,
        source=source,
        style_cluster=style_cluster,
        consistency=consistency,
        prompt=prompt,
    )


@dataclass(frozen=True)
class LabelRecord:
    triplet_id: str
    label: Consistency
    curator: str
    timestamp: int

    def __post_init__(self):
        if self.label not in (Consistency.HIGH, Consistency.LOW):
            raise ManifestError(f"label must be high or low, got {self.label.value!r}")


@dataclass(frozen=True)
class StageDataset:
    stage: StageName
    entries: tuple[str, ...]
    seed: int
    ratios: dict[str, float]
    provenance: dict[str, Any]


@dataclass(frozen=True)
class PlanStage:
    name: str
    dataset: str
    init_model: str
    output_model: str


@dataclass(frozen=True)
class CurriculumPlan:
    stages: tuple[PlanStage, ...]
    hyper: dict[str, Any]


@dataclass(frozen=True)
class ScoreRow:
    pair_id: str
    csd_score: float
    clip_score: float
    aesthetic: float
    cpc_at: float
    cpc_range: float


_AGGREGATE_COLUMNS = ("csd_score", "clip_score", "aesthetic", "cpc_at", "cpc_range")


@dataclass(frozen=True)
class ScoreTable:
    rows: tuple[ScoreRow, ...]
    aggregates: dict[str, float]
    config: dict[str, Any]

    @classmethod
    def from_rows(cls, rows: Sequence[ScoreRow], config: Mapping[str, Any]) -> "ScoreTable":
        if not rows:
            raise ManifestError("score table requires at least one row")
        aggregates = {
            col: math.fsum(getattr(r, col) for r in rows) / len(rows)
            for col in _AGGREGATE_COLUMNS
        }
        return cls(rows=tuple(rows), aggregates=aggregates, config=dict(config))

    def check(self) -> None:
        """Internal consistency: aggregates are column means; CPC never exceeds CLIP."""
        for col in _AGGREGATE_COLUMNS:
            mean = math.fsum(getattr(r, col) for r in self.rows) / len(self.rows)
            if abs(mean - self.aggregates[col]) > 1e-9:
                raise ManifestError(f"aggregate {col} drifted from its column mean")
        if self.config.get("clamp_negative", True):
            for r in self.rows:
                if r.cpc_at > r.clip_score + 1e-12:
                    raise ManifestError(f"row {r.pair_id}: cpc_at exceeds clip_score")


# ---------------------------------------------------------------------------
# canonical NDJSON encoding


def dump_record(obj: Mapping[str, Any]) -> str:
    """One canonical JSON line: fixed key order, no spaces, shortest floats."""
    return json.dumps(obj, ensure_ascii=False, separators=(",", ":"))


def iter_ndjson_text(text: str, path: str | None = None) -> Iterator[tuple[int, dict]]:
    for line_no, line in enumerate(text.split("\n"), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ManifestError(f"bad JSON: {exc.msg}", path=path, line=line_no) from exc
        if not isinstance(obj, dict):
            raise ManifestError("record line must be a JSON object", path=path, line=line_no)
        yield line_no, obj


def iter_ndjson_path(path: str | Path) -> Iterator[tuple[int, dict]]:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ManifestError(f"cannot read {p}: {exc.strerror or exc}", path=str(p)) from exc
    yield from iter_ndjson_text(text, path=str(p))


def _require(obj: dict, key: str, path: str | None, line: int | None) -> Any:
    if key not in obj:
        raise ManifestError(f"missing field {key!r}", path=path, line=line)
    return obj[key]


def _parse_enum(enum_cls, raw: Any, field_name: str, path: str | None, line: int | None):
    try:
        return enum_cls(raw)
    except ValueError:
        allowed = ", ".join(m.value for m in enum_cls)
        raise ManifestError(
            f"{field_name} must be one of {{{allowed}}}, got {raw!r}", path=path, line=line
        ) from None


def triplet_to_obj(t: Triplet) -> dict:
    return {
        "triplet_id": t.triplet_id,
        "style_ref": t.style_ref,
        "content_ref": t.content_ref,
        "target": t.target,
        "source": t.source.value,
        "style_cluster": t.style_cluster,
        "consistency": t.consistency.value,
        "prompt": t.prompt,
    }


def triplet_from_obj(obj: dict, path: str | None = None, line: int | None = None) -> Triplet:
    return Triplet(
        triplet_id=str(_require(obj, "triplet_id", path, line)),
        style_ref=str(_require(obj, "style_ref", path, line)),
        content_ref=str(_require(obj, "content_ref", path, line)),
        target=str(_require(obj, "target", path, line)),
        source=_parse_enum(TripletSource, _require(obj, "source", path, line), "source", path, line),
        style_cluster=str(_require(obj, "style_cluster", path, line)),
        consistency=_parse_enum(
            Consistency, obj.get("consistency", "unlabeled"), "consistency", path, line
        ),
        prompt=str(obj.get("prompt", "")),
    )


def dumps_manifest(triplets: Iterable[Triplet]) -> str:
    return "".join(dump_record(triplet_to_obj(t)) + "\n" for t in triplets)


def read_manifest(path: str | Path) -> list[Triplet]:
    return [triplet_from_obj(obj, str(path), n) for n, obj in iter_ndjson_path(path)]


def write_manifest(path: str | Path, triplets: Iterable[Triplet]) -> None:
    Path(path).write_text(dumps_manifest(triplets), encoding="utf-8", newline="\n")


def label_to_obj(rec: LabelRecord) -> dict:
    return {
        "triplet_id": rec.triplet_id,
        "label": rec.label.value,
        "curator": rec.curator,
        "timestamp": rec.timestamp,
    }


def label_from_obj(obj: dict, path: str | None = None, line: int | None = None) -> LabelRecord:
    label = _parse_enum(Consistency, _require(obj, "label", path, line), "label", path, line)
    if label not in (Consistency.HIGH, Consistency.LOW):
        raise ManifestError("label must be high or low", path=path, line=line)
    ts = _require(obj, "timestamp", path, line)
    if not isinstance(ts, int) or isinstance(ts, bool):
        raise ManifestError("timestamp must be an integer", path=path, line=line)
    return LabelRecord(
        triplet_id=str(_require(obj, "triplet_id", path, line)),
        label=label,
        curator=str(_require(obj, "curator", path, line)),
        timestamp=ts,
    )


def read_labels(path: str | Path) -> list[LabelRecord]:
    """Parse an append-only label log; file order is the LWW tiebreak order."""
    return [label_from_obj(obj, str(path), n) for n, obj in iter_ndjson_path(path)]


def write_labels(path: str | Path, records: Iterable[LabelRecord]) -> None:
    text = "".join(dump_record(label_to_obj(r)) + "\n" for r in records)
    Path(path).write_text(text, encoding="utf-8", newline="\n")


def embedding_to_obj(e: EmbeddingVector) -> dict:
    return {
        "owner_id": e.owner_id,
        "kind": e.kind.value,
        "dim": e.dim,
        "values": list(e.values),
    }


def embedding_from_obj(obj: dict, path: str | None = None, line: int | None = None) -> EmbeddingVector:
    kind = _parse_enum(EmbeddingKind, _require(obj, "kind", path, line), "kind", path, line)
    raw_values = _require(obj, "values", path, line)
    if not isinstance(raw_values, list):
        raise ManifestError("values must be an array", path=path, line=line)
    dim = _require(obj, "dim", path, line)
    if not isinstance(dim, int) or isinstance(dim, bool):
        raise ManifestError("dim must be an integer", path=path, line=line)
    try:
        values = tuple(float(v) for v in raw_values)
        return EmbeddingVector(
            owner_id=str(_require(obj, "owner_id", path, line)),
            kind=kind,
            dim=dim,
            values=values,
        )
    except (TypeError, ValueError) as exc:
        raise ManifestError(str(exc), path=path, line=line) from exc
    except ManifestError as exc:
        raise ManifestError(exc.message, path=path, line=line) from exc


def image_record_to_obj(r: ImageRecord) -> dict:
    return {
        "id": r.id,
        "path": r.path,
        "width": r.width,
        "height": r.height,
        "kind": r.kind.value,
        "style_cluster": r.style_cluster,
        "caption_id": r.caption_id,
    }


def image_record_from_obj(obj: dict, path: str | None = None, line: int | None = None) -> ImageRecord:
    cluster = obj.get("style_cluster")
    caption = obj.get("caption_id")
    try:
        return ImageRecord(
            id=str(_require(obj, "id", path, line)),
            path=str(_require(obj, "path", path, line)),
            width=int(_require(obj, "width", path, line)),
            height=int(_require(obj, "height", path, line)),
            kind=_parse_enum(ImageKind, _require(obj, "kind", path, line), "kind", path, line),
            style_cluster=None if cluster is None else str(cluster),
            caption_id=None if caption is None else str(caption),
        )
    except ManifestError as exc:
        if exc.line is None:
            raise ManifestError(exc.message, path=path, line=line) from exc
        raise


# ---------------------------------------------------------------------------
# manifest validation


@dataclass(frozen=True)
class Violation:
    rule: str
    subject: str
    detail: str

    def to_obj(self) -> dict:
        return {"rule": self.rule, "subject": self.subject, "detail": self.detail}


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...]

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_obj(self) -> dict:
        return {"ok": self.ok, "violations": [v.to_obj() for v in self.violations]}


def validate_manifest(
    manifest: Sequence[Triplet], catalog: set[str] | None = None
) -> ValidationReport:
    """Check manifest-level invariants; an empty violation list means valid.

    Rules: duplicate triplet_id, style_ref == target, and (when a catalog of
    image ids is supplied) any reference to an id absent from the catalog.
    """
    violations: list[Violation] = []
    seen: dict[str, int] = {}
    for t in manifest:
        if t.triplet_id in seen:
            violations.append(
                Violation("duplicate_id", t.triplet_id, f"triplet_id appears {seen[t.triplet_id] + 1} times")
            )
            seen[t.triplet_id] += 1
        else:
            seen[t.triplet_id] = 1
        if t.style_ref == t.target:
            violations.append(
                Violation("style_equals_target", t.triplet_id, f"style_ref and target are both {t.style_ref!r}")
            )
        if catalog is not None:
            for role, ref in (("style_ref", t.style_ref), ("content_ref", t.content_ref), ("target", t.target)):
                if ref not in catalog:
                    violations.append(
                        Violation("dangling_ref", ref, f"{role} of triplet {t.triplet_id} not in catalog")
                    )
    return ValidationReport(violations=tuple(violations))
