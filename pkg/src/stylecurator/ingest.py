"""Loaders for image catalogs, embedding sidecars, and caption files.

Image dimensions are read from file headers only; the pipeline never
touches pixels. All loaded stores are immutable and safe to share.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from pathlib import Path
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

from PIL import Image, UnidentifiedImageError

from .errors import IngestError
from .records import (
    EmbeddingKind,
    EmbeddingVector,
    ImageKind,
    ImageRecord,
    dump_record,
    embedding_from_obj,
    embedding_to_obj,
    image_record_from_obj,
    image_record_to_obj,
    iter_ndjson_path,
)

log = logging.getLogger(__name__)

IMAGE_SUFFIXES = {".png", ".jpg", ".jpeg", ".webp", ".bmp", ".gif"}

# Dataset layout convention: the top-level directory under the scan root
# decides the record kind.
KIND_DIRS = {
    "targets": ImageKind.STYLIZED_TARGET,
    "contents": ImageKind.CONTENT_REF,
    "styles": ImageKind.STYLE_REF,
}


@dataclass(frozen=True)
class ImageCatalog:
    records: Mapping[str, ImageRecord]
    clusters: Mapping[str, tuple[str, ...]]
    unclustered: tuple[str, ...] = ()

    def __post_init__(self):
        for cluster_id, members in self.clusters.items():
            for m in members:
                if m not in self.records:
                    raise IngestError(
                        f"cluster {cluster_id!r} lists unknown image id {m!r}"
                    )

    def ids(self) -> set[str]:
        return set(self.records)

    def by_kind(self, kind: ImageKind) -> list[ImageRecord]:
        return [r for r in self.records.values() if r.kind == kind]


def _freeze_catalog(
    records: dict[str, ImageRecord],
    clusters: dict[str, tuple[str, ...]],
    unclustered: Sequence[str] = (),
) -> ImageCatalog:
    return ImageCatalog(
        records=MappingProxyType(dict(sorted(records.items()))),
        clusters=MappingProxyType(dict(sorted(clusters.items()))),
        unclustered=tuple(unclustered),
    )


def _read_dimensions(path: Path) -> tuple[int, int]:
    try:
        with Image.open(path) as img:
            return img.size
    except UnidentifiedImageError as exc:
        raise IngestError(f"corrupt or unsupported image header: {path}") from exc
    except OSError as exc:
        raise IngestError(f"cannot read image {path}: {exc.strerror or exc}") from exc


def scan_dataset(root: str | Path, cluster_index: str | Path) -> ImageCatalog:
    """Walk root for images under targets/, contents/, styles/ and attach clusters.

    The cluster index maps stylized-target ids to cluster ids, one record
    per line: {"target_id": ..., "cluster": ...}. Stylized targets missing
    from the index are reported in catalog.unclustered.
    """
    root = Path(root)
    if not root.is_dir():
        raise IngestError(f"dataset root {root} does not exist")

    records: dict[str, ImageRecord] = {}
    skipped: list[str] = []
    for path in sorted(root.rglob("*")):
        if not path.is_file() or path.suffix.lower() not in IMAGE_SUFFIXES:
            continue
        rel = path.relative_to(root).as_posix()
        top = rel.split("/", 1)[0]
        kind = KIND_DIRS.get(top)
        if kind is None:
            skipped.append(rel)
            continue
        width, height = _read_dimensions(path)
        records[rel] = ImageRecord(id=rel, path=rel, width=width, height=height, kind=kind)
    if skipped:
        log.warning("skipped %d images outside targets/contents/styles", len(skipped))

    cluster_of: dict[str, str] = {}
    dangling: list[str] = []
    wrong_kind: list[str] = []
    for line_no, obj in iter_ndjson_path(cluster_index):
        if "target_id" not in obj or "cluster" not in obj:
            raise IngestError(
                f"cluster index line {line_no} needs target_id and cluster fields"
            )
        target_id = str(obj["target_id"])
        cluster_id = str(obj["cluster"])
        rec = records.get(target_id)
        if rec is None:
            dangling.append(target_id)
            continue
        if rec.kind != ImageKind.STYLIZED_TARGET:
            wrong_kind.append(target_id)
            continue
        cluster_of[target_id] = cluster_id
    if dangling:
        raise IngestError(
            f"cluster index names {len(dangling)} nonexistent image id(s)",
            dangling=sorted(dangling),
        )
    if wrong_kind:
        raise IngestError(
            "cluster index may only reference stylized targets",
            offenders=sorted(wrong_kind),
        )

    clusters: dict[str, list[str]] = {}
    for target_id, cluster_id in cluster_of.items():
        clusters.setdefault(cluster_id, []).append(target_id)
        records[target_id] = replace(records[target_id], style_cluster=cluster_id)
    if not clusters:
        log.warning("cluster index %s assigns no clusters", cluster_index)

    unclustered = sorted(
        r.id
        for r in records.values()
        if r.kind == ImageKind.STYLIZED_TARGET and r.style_cluster is None
    )
    if unclustered:
        log.warning("%d stylized targets have no cluster", len(unclustered))

    return _freeze_catalog(
        records,
        {cid: tuple(sorted(ms)) for cid, ms in clusters.items()},
        unclustered,
    )


# ---------------------------------------------------------------------------
# catalog file round-trip (one image record or one cluster record per line)


def write_catalog(path: str | Path, catalog: ImageCatalog) -> None:
    lines = []
    for rec in catalog.records.values():
        lines.append(dump_record(image_record_to_obj(rec)))
    for cluster_id, members in catalog.clusters.items():
        lines.append(dump_record({"cluster_id": cluster_id, "members": list(members)}))
    Path(path).write_text("".join(l + "\n" for l in lines), encoding="utf-8", newline="\n")


def read_catalog(path: str | Path) -> ImageCatalog:
    records: dict[str, ImageRecord] = {}
    clusters: dict[str, tuple[str, ...]] = {}
    for line_no, obj in iter_ndjson_path(path):
        if "cluster_id" in obj:
            clusters[str(obj["cluster_id"])] = tuple(str(m) for m in obj.get("members", []))
        else:
            rec = image_record_from_obj(obj, str(path), line_no)
            if rec.id in records:
                raise IngestError(f"duplicate image id {rec.id!r} in catalog {path}")
            records[rec.id] = rec
    unclustered = sorted(
        r.id
        for r in records.values()
        if r.kind == ImageKind.STYLIZED_TARGET and r.style_cluster is None
    )
    return _freeze_catalog(records, clusters, unclustered)


# ---------------------------------------------------------------------------
# embedding sidecars


@dataclass(frozen=True)
class EmbeddingStore:
    entries: Mapping[tuple[str, EmbeddingKind], EmbeddingVector]
    dims: Mapping[EmbeddingKind, int]
    provenance: tuple[dict, ...] = ()

    def lookup(self, owner_id: str, kind: EmbeddingKind) -> EmbeddingVector:
        try:
            return self.entries[(owner_id, kind)]
        except KeyError:
            raise IngestError(
                f"no {kind.value} embedding for {owner_id!r}"
            ) from None

    def has(self, owner_id: str, kind: EmbeddingKind) -> bool:
        return (owner_id, kind) in self.entries

    def __len__(self) -> int:
        return len(self.entries)


def load_embeddings(
    paths: Sequence[str | Path],
    expected: Mapping[EmbeddingKind, int] | None = None,
) -> EmbeddingStore:
    """Load sidecar files into one store.

    A sidecar may open with a single {"meta": {...}} provenance line.
    Duplicate (owner_id, kind) within one load and any dim drift are errors;
    the result is independent of file order.
    """
    entries: dict[tuple[str, EmbeddingKind], EmbeddingVector] = {}
    dims: dict[EmbeddingKind, int] = dict(expected or {})
    provenance: list[dict] = []
    for path in paths:
        for line_no, obj in iter_ndjson_path(path):
            if set(obj) == {"meta"}:
                provenance.append(obj["meta"])
                continue
            vec = embedding_from_obj(obj, str(path), line_no)
            want = dims.get(vec.kind)
            if want is None:
                dims[vec.kind] = vec.dim
            elif vec.dim != want:
                raise IngestError(
                    f"{path}:{line_no}: {vec.kind.value} embedding has dim {vec.dim}, expected {want}"
                )
            key = (vec.owner_id, vec.kind)
            if key in entries:
                raise IngestError(
                    f"{path}:{line_no}: duplicate embedding ({vec.owner_id!r}, {vec.kind.value})"
                )
            entries[key] = vec
    return EmbeddingStore(
        entries=MappingProxyType(dict(sorted(entries.items(), key=lambda kv: (kv[0][0], kv[0][1].value)))),
        dims=MappingProxyType({k: dims[k] for k in sorted(dims, key=lambda k: k.value)}),
        provenance=tuple(provenance),
    )


def write_embeddings(
    path: str | Path, vectors: Iterable[EmbeddingVector], meta: Mapping | None = None
) -> None:
    lines = []
    if meta is not None:
        lines.append(dump_record({"meta": dict(meta)}))
    lines.extend(dump_record(embedding_to_obj(v)) for v in vectors)
    Path(path).write_text("".join(l + "\n" for l in lines), encoding="utf-8", newline="\n")


# ---------------------------------------------------------------------------
# captions


@dataclass(frozen=True)
class CaptionRecord:
    image_id: str
    caption_id: str
    text: str


def read_captions(path: str | Path) -> list[CaptionRecord]:
    captions = []
    seen: set[str] = set()
    for line_no, obj in iter_ndjson_path(path):
        for key in ("image_id", "caption_id", "text"):
            if key not in obj:
                raise IngestError(f"{path}:{line_no}: caption record missing {key!r}")
        rec = CaptionRecord(
            image_id=str(obj["image_id"]),
            caption_id=str(obj["caption_id"]),
            text=str(obj["text"]),
        )
        if rec.image_id in seen:
            raise IngestError(f"{path}:{line_no}: duplicate caption for image {rec.image_id!r}")
        seen.add(rec.image_id)
        captions.append(rec)
    return captions


def attach_captions(catalog: ImageCatalog, captions: str | Path) -> ImageCatalog:
    """Attach caption ids to content references; every content ref must be covered.

    Uncovered content references are a hard error because the content
    preservation score cannot be computed without their captions.
    """
    caption_records = read_captions(captions)
    by_image = {c.image_id: c for c in caption_records}
    unknown = sorted(set(by_image) - catalog.ids())
    if unknown:
        raise IngestError(
            f"caption file references {len(unknown)} unknown image id(s)", unknown=unknown
        )
    non_content = sorted(
        i for i in by_image if catalog.records[i].kind != ImageKind.CONTENT_REF
    )
    if non_content:
        raise IngestError(
            "captions may only cover content references", offenders=non_content
        )

    content_ids = sorted(r.id for r in catalog.by_kind(ImageKind.CONTENT_REF))
    missing = [i for i in content_ids if i not in by_image]
    if missing:
        raise IngestError(
            f"{len(missing)} of {len(content_ids)} content references lack captions",
            missing=missing,
        )
    log.info("caption coverage: %d/%d", len(content_ids), len(content_ids))

    records = dict(catalog.records)
    for image_id, cap in by_image.items():
        records[image_id] = replace(records[image_id], caption_id=cap.caption_id)
    return _freeze_catalog(records, dict(catalog.clusters), catalog.unclustered)
