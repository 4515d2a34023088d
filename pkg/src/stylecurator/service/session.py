"""Review session state: manifest view, label log replay, serialized appends.

The label log is the single source of truth. The session never rewrites
it; it replays the log on startup and appends one record per submission
under a lock, so restarting on the same log always reproduces the same
progress and concurrent submissions never interleave bytes. Progress is
maintained incrementally as labels win their last-write-wins race.
"""

from __future__ import annotations

import threading
import time
from pathlib import Path
from typing import Literal
from urllib.parse import quote

from ..errors import ManifestError, ServiceError
from ..records import (
    Consistency,
    LabelRecord,
    Triplet,
    dump_record,
    label_to_obj,
    read_labels,
    read_manifest,
    validate_manifest,
)


class ReviewSession:
    def __init__(self, manifest: list[Triplet], images_root: Path, labels_log: Path):
        report = validate_manifest(manifest)
        if not report.ok:
            raise ServiceError(
                f"manifest has {len(report.violations)} violation(s)",
                violations=[v.to_obj() for v in report.violations],
            )
        self._triplets = sorted(manifest, key=lambda t: t.triplet_id)
        self._by_id = {t.triplet_id: t for t in self._triplets}
        self.images_root = Path(images_root)
        self.labels_log = Path(labels_log)
        self._lock = threading.Lock()
        # id -> (timestamp, file order, label); LWW on (timestamp, order)
        self._state: dict[str, tuple[int, int, Consistency]] = {}
        self._order = 0
        self._counts = {"high": 0, "low": 0, "unlabeled": len(self._triplets)}
        self._replay()

    @classmethod
    def from_paths(
        cls, manifest: str | Path, images_root: str | Path, labels_log: str | Path
    ) -> "ReviewSession":
        try:
            triplets = read_manifest(manifest)
        except ManifestError as exc:
            raise ServiceError(
                f"cannot load manifest: {exc.message}", path=str(manifest), line=exc.line
            ) from exc
        return cls(triplets, Path(images_root), Path(labels_log))

    def _replay(self) -> None:
        if not self.labels_log.exists():
            return
        try:
            records = read_labels(self.labels_log)
        except ManifestError as exc:
            raise ServiceError(
                f"corrupt label log line {exc.line}: {exc.message}",
                path=str(self.labels_log),
                line=exc.line,
            ) from exc
        for rec in records:
            self._apply(rec)
            self._order += 1

    def _apply(self, rec: LabelRecord) -> bool:
        """LWW update of view and counts; returns True if the record won."""
        if rec.triplet_id not in self._by_id:
            return False
        current = self._state.get(rec.triplet_id)
        if current is not None and (rec.timestamp, self._order) < (current[0], current[1]):
            return False
        previous = Consistency.UNLABELED if current is None else current[2]
        self._state[rec.triplet_id] = (rec.timestamp, self._order, rec.label)
        self._counts[previous.value] -= 1
        self._counts[rec.label.value] += 1
        return True

    def label_of(self, triplet_id: str) -> Consistency:
        entry = self._state.get(triplet_id)
        return entry[2] if entry is not None else Consistency.UNLABELED

    def progress(self) -> dict[str, int]:
        with self._lock:
            return self._progress_locked()

    def _progress_locked(self) -> dict[str, int]:
        return {**self._counts, "total": len(self._triplets)}

    def batch(
        self,
        labels_filter: Literal["unlabeled", "all"] = "unlabeled",
        page: int = 0,
        page_size: int = 20,
    ) -> list[dict]:
        if page < 0 or page_size < 1:
            raise ServiceError(f"bad pagination: page={page}, page_size={page_size}")
        with self._lock:
            if labels_filter == "unlabeled":
                pool = [
                    t
                    for t in self._triplets
                    if self.label_of(t.triplet_id) is Consistency.UNLABELED
                ]
            else:
                pool = self._triplets
            window = pool[page * page_size : (page + 1) * page_size]
            return [self._view_locked(t) for t in window]

    def _view_locked(self, t: Triplet) -> dict:
        label = self.label_of(t.triplet_id)
        return {
            "triplet_id": t.triplet_id,
            "style_ref": t.style_ref,
            "content_ref": t.content_ref,
            "target": t.target,
            "style_url": f"/images/{quote(t.style_ref)}",
            "content_url": f"/images/{quote(t.content_ref)}",
            "target_url": f"/images/{quote(t.target)}",
            "label": label.value,
            "source": t.source.value,
            "prompt": t.prompt,
        }

    def submit(
        self,
        triplet_id: str,
        label: Literal["high", "low"],
        curator: str,
        timestamp: int | None = None,
    ) -> dict[str, int]:
        """Append one label record and return updated progress.

        Raises KeyError for unknown triplet ids (the HTTP layer maps it
        to 404); the record is not logged in that case.
        """
        if triplet_id not in self._by_id:
            raise KeyError(triplet_id)
        rec = LabelRecord(
            triplet_id=triplet_id,
            label=Consistency(label),
            curator=curator,
            timestamp=int(time.time()) if timestamp is None else timestamp,
        )
        with self._lock:
            self.labels_log.parent.mkdir(parents=True, exist_ok=True)
            with open(self.labels_log, "a", encoding="utf-8", newline="\n") as fh:
                fh.write(dump_record(label_to_obj(rec)) + "\n")
                fh.flush()
            self._apply(rec)
            self._order += 1
            return self._progress_locked()

    def image_path(self, image_id: str) -> Path:
        root = self.images_root.resolve()
        path = (root / image_id).resolve()
        if root not in path.parents and path != root:
            raise KeyError(image_id)
        if not path.is_file():
            raise KeyError(image_id)
        return path

    @property
    def size(self) -> int:
        return len(self._triplets)
