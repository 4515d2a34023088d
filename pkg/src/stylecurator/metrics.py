"""Embedding-space metrics: style similarity, content score, aesthetics, CPC.

The content preservation cut-off (CPC) gates the content score to zero
whenever style similarity drops below a threshold, so simply echoing the
content reference back cannot score well. CPC@lo:hi averages that gate
over an inclusive threshold grid.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from .errors import ManifestError, MetricError
from .records import EmbeddingKind, EmbeddingVector


@dataclass(frozen=True)
class MetricConfig:
    clamp_negative: bool = True
    clip_scale: float = 1.0
    cpc_threshold: float = 0.5
    range_lo: float = 0.3
    range_hi: float = 0.9
    range_step: float = 0.1

    def __post_init__(self):
        if self.range_step <= 0:
            raise MetricError(f"range_step must be positive, got {self.range_step}")
        if self.range_lo > self.range_hi:
            raise MetricError(
                f"range_lo {self.range_lo} exceeds range_hi {self.range_hi}"
            )
        steps = round((self.range_hi - self.range_lo) / self.range_step)
        if abs(self.range_lo + steps * self.range_step - self.range_hi) > 1e-9:
            raise MetricError(
                f"grid {self.range_lo}:{self.range_hi} does not land on range_hi "
                f"with step {self.range_step}"
            )

    def thresholds(self) -> list[float]:
        steps = round((self.range_hi - self.range_lo) / self.range_step)
        return [self.range_lo + i * self.range_step for i in range(steps + 1)]

    def to_obj(self) -> dict:
        return {
            "clamp_negative": self.clamp_negative,
            "clip_scale": self.clip_scale,
            "cpc_threshold": self.cpc_threshold,
            "range_lo": self.range_lo,
            "range_hi": self.range_hi,
            "range_step": self.range_step,
        }

    @classmethod
    def from_obj(cls, obj: Mapping[str, Any]) -> "MetricConfig":
        known = {
            "clamp_negative",
            "clip_scale",
            "cpc_threshold",
            "range_lo",
            "range_hi",
            "range_step",
        }
        unknown = set(obj) - known
        if unknown:
            raise MetricError(f"unknown metric config keys: {sorted(unknown)}")
        return cls(**obj)


def cosine(u: Sequence[float], v: Sequence[float]) -> float:
    """u.v / (|u||v|), clamped into [-1, 1] against rounding."""
    a = np.asarray(u, dtype=np.float64)
    b = np.asarray(v, dtype=np.float64)
    if a.ndim != 1 or b.ndim != 1:
        raise MetricError("cosine expects flat vectors")
    if a.shape != b.shape:
        raise MetricError(f"dimension mismatch: {a.shape[0]} vs {b.shape[0]}")
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        raise MetricError("cosine is undefined for a zero vector")
    return min(1.0, max(-1.0, float(a @ b) / (na * nb)))


def _check_kind(vec: EmbeddingVector, want: EmbeddingKind, role: str) -> None:
    if vec.kind is not want:
        raise MetricError(
            f"{role} must be a {want.value} embedding, got {vec.kind.value}"
        )


def csd_score(e_style: EmbeddingVector, e_result: EmbeddingVector) -> float:
    """Style similarity between style reference and generated image."""
    _check_kind(e_style, EmbeddingKind.CSD, "style embedding")
    _check_kind(e_result, EmbeddingKind.CSD, "result embedding")
    return cosine(e_style.values, e_result.values)


def clip_score(
    e_text: EmbeddingVector, e_image: EmbeddingVector, cfg: MetricConfig
) -> float:
    """Caption-to-image similarity; negatives clamp to 0 by default."""
    _check_kind(e_text, EmbeddingKind.CLIP_TEXT, "text embedding")
    _check_kind(e_image, EmbeddingKind.CLIP_IMAGE, "image embedding")
    s = cosine(e_text.values, e_image.values)
    if cfg.clamp_negative:
        s = max(s, 0.0)
    return cfg.clip_scale * s


def cpc_at(clip_s: float, csd_s: float, thresh: float) -> float:
    """Content score if style similarity clears the threshold (inclusive), else 0."""
    return clip_s if csd_s >= thresh else 0.0


def cpc_range(clip_s: float, csd_s: float, cfg: MetricConfig) -> float:
    """Mean of cpc_at over the inclusive threshold grid lo, lo+step, ..., hi."""
    grid = cfg.thresholds()
    return math.fsum(cpc_at(clip_s, csd_s, t) for t in grid) / len(grid)


# ---------------------------------------------------------------------------
# aesthetic predictor head


@dataclass(frozen=True, eq=False)
class HeadLayer:
    rows: int
    cols: int
    weights: np.ndarray  # rows x cols
    bias: np.ndarray  # rows
    activation: str  # "relu" | "none"


@dataclass(frozen=True, eq=False)
class AestheticHead:
    layers: tuple[HeadLayer, ...]
    normalize_input: bool = True

    def __post_init__(self):
        if not self.layers:
            raise MetricError("aesthetic head needs at least one layer")
        for i, layer in enumerate(self.layers):
            if layer.activation not in ("relu", "none"):
                raise MetricError(
                    f"layer {i}: unknown activation {layer.activation!r}"
                )
            if layer.weights.shape != (layer.rows, layer.cols):
                raise MetricError(
                    f"layer {i}: weight matrix is {layer.weights.shape}, "
                    f"declared {layer.rows}x{layer.cols}"
                )
            if layer.bias.shape != (layer.rows,):
                raise MetricError(
                    f"layer {i}: bias length {layer.bias.shape[0]} != rows {layer.rows}"
                )
            if not (np.isfinite(layer.weights).all() and np.isfinite(layer.bias).all()):
                raise MetricError(f"layer {i}: non-finite parameter")
            if i > 0 and layer.cols != self.layers[i - 1].rows:
                raise MetricError(
                    f"layer {i}: expects {layer.cols} inputs but layer {i - 1} "
                    f"produces {self.layers[i - 1].rows}"
                )
        if self.layers[-1].rows != 1:
            raise MetricError(
                f"final layer must produce a scalar, got {self.layers[-1].rows} outputs"
            )

    @property
    def input_dim(self) -> int:
        return self.layers[0].cols


def head_from_obj(obj: Mapping[str, Any]) -> AestheticHead:
    layers = []
    for i, spec in enumerate(obj.get("layers", [])):
        rows = int(spec["rows"])
        cols = int(spec["cols"])
        weights = np.asarray(spec["weights"], dtype=np.float64)
        if weights.size != rows * cols:
            raise MetricError(
                f"layer {i}: {weights.size} weights cannot fill {rows}x{cols}"
            )
        layers.append(
            HeadLayer(
                rows=rows,
                cols=cols,
                weights=weights.reshape(rows, cols),
                bias=np.asarray(spec["bias"], dtype=np.float64),
                activation=str(spec.get("activation", "none")),
            )
        )
    return AestheticHead(
        layers=tuple(layers), normalize_input=bool(obj.get("normalize_input", True))
    )


def head_to_obj(head: AestheticHead) -> dict:
    return {
        "normalize_input": head.normalize_input,
        "layers": [
            {
                "rows": l.rows,
                "cols": l.cols,
                "weights": [float(x) for x in l.weights.reshape(-1)],
                "bias": [float(x) for x in l.bias],
                "activation": l.activation,
            }
            for l in head.layers
        ],
    }


def load_head(path: str | Path) -> AestheticHead:
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ManifestError(f"bad head file: {exc.msg}", path=str(path)) from exc
    except OSError as exc:
        raise ManifestError(f"cannot read head file: {exc}", path=str(path)) from exc
    return head_from_obj(obj)


def write_head(path: str | Path, head: AestheticHead) -> None:
    Path(path).write_text(
        json.dumps(head_to_obj(head), ensure_ascii=False) + "\n",
        encoding="utf-8",
        newline="\n",
    )


def forward(values: Sequence[float], head: AestheticHead) -> float:
    """Run the MLP on a raw vector (kind checks are the caller's concern)."""
    x = np.asarray(values, dtype=np.float64)
    if x.shape != (head.input_dim,):
        raise MetricError(
            f"layer 0: input has dim {x.shape[0]}, head expects {head.input_dim}"
        )
    if head.normalize_input:
        norm = float(np.linalg.norm(x))
        if norm == 0.0:
            raise MetricError("cannot normalize a zero embedding")
        x = x / norm
    for layer in head.layers:
        x = layer.weights @ x + layer.bias
        if layer.activation == "relu":
            x = np.maximum(x, 0.0)
    return float(x[0])


def aesthetic_score(e_clip: EmbeddingVector, head: AestheticHead) -> float:
    """Scalar aesthetic estimate from a clip_image embedding."""
    _check_kind(e_clip, EmbeddingKind.CLIP_IMAGE, "aesthetic input")
    return forward(e_clip.values, head)
