"""Embedding backends, selected by model identifier string.

The dev backends bundled here are fully deterministic feature extractors
(no learned weights): pixel statistics for image spaces, local-contrast
statistics for style spaces, hashed character trigrams for text. Real
checkpoint-backed extractors register under their own identifiers and
everything downstream is unchanged, since the identifier travels in the
sidecar meta header.
"""

from __future__ import annotations

import hashlib
from pathlib import Path
from typing import Callable

import numpy as np
from PIL import Image


class BackendError(Exception):
    pass


def _l2_normalize(v: np.ndarray) -> np.ndarray:
    norm = float(np.linalg.norm(v))
    if norm == 0.0:
        # constant inputs still deserve a valid unit vector
        v = v + 1.0 / np.sqrt(v.size)
        norm = float(np.linalg.norm(v))
    return v / norm


def _tile_to_dim(features: np.ndarray, dim: int, salt: str) -> np.ndarray:
    """Deterministically expand/truncate a feature block to `dim` values.

    Each output slot mixes one feature with a salt-derived constant so two
    backends sharing raw features still land in different spaces.
    """
    reps = -(-dim // features.size)
    tiled = np.tile(features, reps)[:dim]
    digest = hashlib.sha256(salt.encode("utf-8")).digest()
    phase = np.frombuffer((digest * (-(-dim // len(digest))))[:dim], dtype=np.uint8)
    mix = (phase.astype(np.float64) - 127.5) / 255.0
    return tiled + 0.05 * mix


def _load_rgb(path: Path, side: int) -> np.ndarray:
    try:
        with Image.open(path) as img:
            rgb = img.convert("RGB").resize((side, side), Image.NEAREST)
    except (OSError, ValueError) as exc:
        raise BackendError(f"cannot read image {path}: {exc}") from exc
    return np.asarray(rgb, dtype=np.float64) / 255.0


def pixelstats_image(path: Path, dim: int) -> np.ndarray:
    """Content-ish space: raw downsampled pixel grid."""
    grid = _load_rgb(path, 16)  # 16x16x3 = 768 raw features
    return _l2_normalize(_tile_to_dim(grid.reshape(-1), dim, "pixelstats-v1"))


def gramstats_image(path: Path, dim: int) -> np.ndarray:
    """Style-ish space: horizontal/vertical local contrast plus channel moments."""
    grid = _load_rgb(path, 16)
    dx = np.abs(np.diff(grid, axis=0)).reshape(-1)
    dy = np.abs(np.diff(grid, axis=1)).reshape(-1)
    moments = np.concatenate([grid.mean(axis=(0, 1)), grid.std(axis=(0, 1))])
    features = np.concatenate([dx, dy, moments])
    return _l2_normalize(_tile_to_dim(features, dim, "gramstats-v1"))


def trigram_text(text: str, dim: int) -> np.ndarray:
    """Hashed character-trigram bag, L2-normalized."""
    padded = f"\x02{text}\x03"
    counts = np.zeros(dim, dtype=np.float64)
    for i in range(len(padded) - 2):
        gram = padded[i : i + 3].encode("utf-8")
        bucket = int.from_bytes(hashlib.sha256(gram).digest()[:8], "big") % dim
        counts[bucket] += 1.0
    return _l2_normalize(counts)


IMAGE_BACKENDS: dict[str, Callable[[Path, int], np.ndarray]] = {
    "dev/pixelstats-v1": pixelstats_image,
    "dev/gramstats-v1": gramstats_image,
}

TEXT_BACKENDS: dict[str, Callable[[str, int], np.ndarray]] = {
    "dev/trigram-v1": trigram_text,
}

DEFAULT_MODELS = {
    "csd": "dev/gramstats-v1",
    "clip_image": "dev/pixelstats-v1",
    "clip_text": "dev/trigram-v1",
}


def image_backend(model: str) -> Callable[[Path, int], np.ndarray]:
    try:
        return IMAGE_BACKENDS[model]
    except KeyError:
        raise BackendError(
            f"unknown image embedding model {model!r}; available: {sorted(IMAGE_BACKENDS)}"
        ) from None


def text_backend(model: str) -> Callable[[str, int], np.ndarray]:
    try:
        return TEXT_BACKENDS[model]
    except KeyError:
        raise BackendError(
            f"unknown text embedding model {model!r}; available: {sorted(TEXT_BACKENDS)}"
        ) from None
