"""Shared fixtures: tiny image trees, manifests, sidecars, and heads."""

from __future__ import annotations

import random
from pathlib import Path

import pytest
from PIL import Image

from stylecurator.ingest import write_embeddings
from stylecurator.metrics import AestheticHead, HeadLayer
from stylecurator.records import (
    Consistency,
    EmbeddingKind,
    EmbeddingVector,
    Triplet,
    TripletSource,
    dump_record,
    make_triplet,
)

import numpy as np


def make_image(path: Path, width: int = 32, height: int = 24, color=(120, 40, 200)) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    Image.new("RGB", (width, height), color).save(path)


def build_image_tree(root: Path, clusters: dict[str, int], styles: int = 0,
                     extra_contents: int = 0) -> Path:
    """Create targets/ + same-stem contents/ for each cluster member.

    Returns the cluster index path. Cluster c with n members yields targets
    targets/{c}_{i}.png and contents contents/{c}_{i}.png.
    """
    index_lines = []
    for cluster_id, size in clusters.items():
        for i in range(size):
            stem = f"{cluster_id}_{i}"
            make_image(root / "targets" / f"{stem}.png", 30 + i, 20 + i)
            make_image(root / "contents" / f"{stem}.png", 30 + i, 20 + i)
            index_lines.append(dump_record({"target_id": f"targets/{stem}.png", "cluster": cluster_id}))
    for j in range(styles):
        make_image(root / "styles" / f"s{j}.png", 40, 40)
    for j in range(extra_contents):
        make_image(root / "contents" / f"extra{j}.png", 25, 25)
    index = root / "clusters.ndjson"
    index.write_text("".join(l + "\n" for l in index_lines), encoding="utf-8")
    return index


def quick_triplet(n: int, source: TripletSource = TripletSource.COLLECTED,
                  consistency: Consistency = Consistency.UNLABELED,
                  cluster: str = "c0") -> Triplet:
    return make_triplet(
        style_ref=f"targets/s{n}.png",
        content_ref=f"contents/c{n}.png",
        target=f"targets/t{n}.png",
        source=source,
        style_cluster=cluster,
        prompt="p",
        consistency=consistency,
    )


def random_unit_vector(rng: random.Random, dim: int) -> tuple[float, ...]:
    values = [rng.gauss(0.0, 1.0) for _ in range(dim)]
    norm = sum(v * v for v in values) ** 0.5 or 1.0
    return tuple(v / norm for v in values)


def random_head(rng: random.Random, input_dim: int, hidden: list[int] | None = None,
                normalize_input: bool = True) -> AestheticHead:
    dims = [input_dim] + (hidden if hidden is not None else [8, 4]) + [1]
    layers = []
    for i in range(1, len(dims)):
        rows, cols = dims[i], dims[i - 1]
        layers.append(
            HeadLayer(
                rows=rows,
                cols=cols,
                weights=np.array(
                    [[rng.uniform(-1, 1) for _ in range(cols)] for _ in range(rows)],
                    dtype=np.float64,
                ),
                bias=np.array([rng.uniform(-1, 1) for _ in range(rows)], dtype=np.float64),
                activation="relu" if i < len(dims) - 1 else "none",
            )
        )
    return AestheticHead(layers=tuple(layers), normalize_input=normalize_input)


def embedding(owner: str, kind: EmbeddingKind, values) -> EmbeddingVector:
    vals = tuple(float(v) for v in values)
    return EmbeddingVector(owner_id=owner, kind=kind, dim=len(vals), values=vals)


@pytest.fixture
def rng() -> random.Random:
    return random.Random(20240817)


@pytest.fixture
def sidecar_writer(tmp_path):
    def write(name: str, vectors, meta=None) -> Path:
        path = tmp_path / name
        write_embeddings(path, vectors, meta)
        return path

    return write
