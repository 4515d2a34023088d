import json
from pathlib import Path

import numpy as np
import pytest
from PIL import Image


def dump(obj) -> str:
    return json.dumps(obj, ensure_ascii=False, separators=(",", ":"))


@pytest.fixture
def image_inputs(tmp_path) -> Path:
    """Five small images plus the {id, path} input manifest."""
    rng = np.random.default_rng(7)
    lines = []
    for i in range(5):
        name = f"img{i}.png"
        pixels = rng.integers(0, 255, size=(20 + i, 14 + i, 3), dtype=np.uint8)
        Image.fromarray(pixels, "RGB").save(tmp_path / name)
        lines.append(dump({"id": f"images/{name}", "path": name}))
    manifest = tmp_path / "inputs.ndjson"
    manifest.write_text("".join(l + "\n" for l in lines), encoding="utf-8")
    return manifest


@pytest.fixture
def caption_inputs(tmp_path) -> Path:
    lines = [
        dump({"image_id": f"contents/c{i}.png", "caption_id": f"cap{i}", "text": f"a scene number {i}"})
        for i in range(4)
    ]
    path = tmp_path / "captions.ndjson"
    path.write_text("".join(l + "\n" for l in lines), encoding="utf-8")
    return path


@pytest.fixture
def source_weights(tmp_path) -> Path:
    """A small 6 -> 4 -> 1 MLP checkpoint in the npz source layout."""
    rng = np.random.default_rng(13)
    path = tmp_path / "weights.npz"
    np.savez(
        path,
        w0=rng.normal(size=(4, 6)),
        b0=rng.normal(size=4),
        w1=rng.normal(size=(1, 4)),
        b1=rng.normal(size=1),
        normalize_input=np.array([1]),
    )
    return path
