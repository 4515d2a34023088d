"""Extraction jobs and the aesthetic-head export.

Output files follow the pipeline's external interfaces exactly: sidecars
are NDJSON ({"meta": ...} header, then {owner_id, kind, dim, values}
records), heads are the layered JSON document. Writes are atomic
(temp file + rename), so a crashed job never leaves a half sidecar.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .backends import (
    DEFAULT_MODELS,
    BackendError,
    image_backend,
    text_backend,
)

KINDS = ("csd", "clip_image", "clip_text")


class ExtractError(Exception):
    pass


@dataclass(frozen=True)
class ExtractJob:
    kind: str
    inputs: Path  # image list or caption file, per kind
    out: Path
    model: str | None = None
    dim: int = 512

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ExtractError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if self.dim < 1:
            raise ExtractError(f"dim must be >= 1, got {self.dim}")

    @property
    def model_id(self) -> str:
        return self.model or DEFAULT_MODELS[self.kind]


@dataclass(frozen=True)
class ExtractReport:
    written: int
    skipped: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.skipped


def _read_ndjson(path: Path) -> list[dict]:
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ExtractError(f"cannot read inputs {path}: {exc}") from exc
    records = []
    for line_no, line in enumerate(text.split("\n"), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ExtractError(f"{path}:{line_no}: bad JSON: {exc.msg}") from exc
        if not isinstance(obj, dict):
            raise ExtractError(f"{path}:{line_no}: record must be an object")
        records.append(obj)
    return records


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _dump(obj: dict) -> str:
    return json.dumps(obj, ensure_ascii=False, separators=(",", ":"))


def extract(job: ExtractJob) -> ExtractReport:
    """Embed every input record into one sidecar line.

    Image jobs read {"id", "path"} records; text jobs read the caption
    file format {"image_id", "caption_id", "text"} and key vectors by
    caption_id. Unreadable images are skipped and listed in the report;
    an unknown model identifier aborts before any work.
    """
    records = _read_ndjson(job.inputs)
    lines = [
        _dump({"meta": {"model": job.model_id, "kind": job.kind, "dim": job.dim}})
    ]
    skipped: list[str] = []

    if job.kind in ("csd", "clip_image"):
        backend = image_backend(job.model_id)
        base = job.inputs.parent
        for rec in records:
            if "id" not in rec or "path" not in rec:
                raise ExtractError(f"image input records need id and path: {rec}")
            path = Path(rec["path"])
            if not path.is_absolute():
                path = base / path
            try:
                values = backend(path, job.dim)
            except BackendError as exc:
                if "unknown" in str(exc):
                    raise
                skipped.append(str(rec["id"]))
                continue
            lines.append(_vector_line(str(rec["id"]), job.kind, values))
    else:
        backend = text_backend(job.model_id)
        for rec in records:
            for key in ("image_id", "caption_id", "text"):
                if key not in rec:
                    raise ExtractError(f"caption records need {key!r}: {rec}")
            values = backend(str(rec["text"]), job.dim)
            lines.append(_vector_line(str(rec["caption_id"]), job.kind, values))

    _atomic_write(job.out, "".join(l + "\n" for l in lines))
    return ExtractReport(written=len(lines) - 1, skipped=tuple(skipped))


def _vector_line(owner_id: str, kind: str, values: np.ndarray) -> str:
    floats = [float(v) for v in values]
    if not all(math.isfinite(v) for v in floats):
        raise ExtractError(f"backend produced a non-finite value for {owner_id!r}")
    return _dump({"owner_id": owner_id, "kind": kind, "dim": len(floats), "values": floats})


# ---------------------------------------------------------------------------
# aesthetic head export


def head_forward(x: np.ndarray, layers: list[dict], normalize_input: bool) -> float:
    """Reference forward pass used for the export spot check."""
    v = np.asarray(x, dtype=np.float64)
    if normalize_input:
        v = v / np.linalg.norm(v)
    for layer in layers:
        w = np.asarray(layer["weights"], dtype=np.float64).reshape(layer["rows"], layer["cols"])
        v = w @ v + np.asarray(layer["bias"], dtype=np.float64)
        if layer["activation"] == "relu":
            v = np.maximum(v, 0.0)
    return float(v[0])


def load_source_weights(path: Path) -> tuple[list[dict], bool]:
    """Read an npz checkpoint (w0/b0, w1/b1, ...) into layer dicts.

    The last layer is linear, hidden layers are relu; `normalize_input`
    may ship as a 0/1 scalar array and defaults to true.
    """
    try:
        archive = np.load(path)
    except (OSError, ValueError) as exc:
        raise ExtractError(f"cannot load weights {path}: {exc}") from exc
    count = 0
    while f"w{count}" in archive:
        count += 1
    if count == 0:
        raise ExtractError(f"{path} has no w0/b0 layer arrays")
    layers = []
    report = []
    for i in range(count):
        if f"b{i}" not in archive:
            raise ExtractError(f"{path}: w{i} present but b{i} missing")
        w = np.asarray(archive[f"w{i}"], dtype=np.float64)
        b = np.asarray(archive[f"b{i}"], dtype=np.float64)
        if w.ndim != 2 or b.ndim != 1 or w.shape[0] != b.shape[0]:
            raise ExtractError(
                f"{path}: layer {i} shapes mismatch: w{i} {w.shape}, b{i} {b.shape}"
            )
        report.append((i, w.shape))
        if layers and w.shape[1] != layers[-1]["rows"]:
            chain = ", ".join(f"layer {j}: {s[0]}x{s[1]}" for j, s in report)
            raise ExtractError(
                f"{path}: layer {i} expects {w.shape[1]} inputs but layer {i - 1} "
                f"produces {layers[-1]['rows']} ({chain})"
            )
        layers.append(
            {
                "rows": int(w.shape[0]),
                "cols": int(w.shape[1]),
                "weights": [float(v) for v in w.reshape(-1)],
                "bias": [float(v) for v in b],
                "activation": "relu" if i < count - 1 else "none",
            }
        )
    if layers[-1]["rows"] != 1:
        raise ExtractError(f"{path}: final layer must produce a scalar, got {layers[-1]['rows']}")
    normalize = True
    if "normalize_input" in archive:
        normalize = bool(np.asarray(archive["normalize_input"]).reshape(-1)[0])
    return layers, normalize


def export_aesthetic_head(source: Path, out: Path) -> dict:
    """Convert an npz weight source to the pipeline's head JSON document."""
    layers, normalize_input = load_source_weights(source)
    doc = {"normalize_input": normalize_input, "layers": layers}
    _atomic_write(out, json.dumps(doc, ensure_ascii=False) + "\n")
    return doc
