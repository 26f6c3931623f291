"""Disk-backed run and scene stores for the HTTP service."""

from __future__ import annotations

import json
import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import SceneMotionError
from ..geometry import Scene, canonical_scene_bytes, scene_from_json, scene_id

RUN_STATUSES = ("queued", "running", "done", "failed")
_ORDER = {s: i for i, s in enumerate(RUN_STATUSES)}


class SceneStore:
    """Content-addressed scene storage; posting the same spec is idempotent."""

    def __init__(self, directory):
        self.dir = Path(directory)
        self.dir.mkdir(parents=True, exist_ok=True)

    def put(self, scene: Scene) -> str:
        sid = scene_id(scene)
        path = self.dir / f"{sid}.json"
        if not path.exists():
            path.write_bytes(canonical_scene_bytes(scene))
        return sid

    def get(self, sid: str) -> Scene:
        path = self.dir / f"{sid}.json"
        if not path.exists():
            raise KeyError(sid)
        return scene_from_json(json.loads(path.read_text()))

    def ids(self) -> list[str]:
        return sorted(p.stem for p in self.dir.glob("*.json"))


@dataclass
class RunRecord:
    run_id: str
    request: dict
    status: str = "queued"
    error: str | None = None
    created_at: float = field(default_factory=time.time)
    finished_at: float | None = None
    metrics: dict | None = None
    result: dict | None = None  # trajectory + snapshots payload

    def to_json(self, with_result: bool = True) -> dict:
        d = {
            "run_id": self.run_id,
            "request": self.request,
            "status": self.status,
            "error": self.error,
            "created_at": self.created_at,
            "finished_at": self.finished_at,
        }
        if with_result:
            d["metrics"] = self.metrics
            d["result"] = self.result
        return d


class RunStore:
    """Single-writer-per-run persistence; records survive process restarts."""

    def __init__(self, directory):
        self.dir = Path(directory)
        self.dir.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self._runs: dict[str, RunRecord] = {}
        for path in self.dir.glob("*.json"):
            try:
                d = json.loads(path.read_text())
                rec = RunRecord(run_id=d["run_id"], request=d["request"],
                                status=d["status"], error=d.get("error"),
                                created_at=d.get("created_at", 0.0),
                                finished_at=d.get("finished_at"),
                                metrics=d.get("metrics"), result=d.get("result"))
                self._runs[rec.run_id] = rec
            except (json.JSONDecodeError, KeyError):
                continue

    def create(self, request: dict) -> RunRecord:
        rec = RunRecord(run_id=uuid.uuid4().hex[:16], request=request)
        with self._lock:
            self._runs[rec.run_id] = rec
            self._persist(rec)
        return rec

    def get(self, run_id: str) -> RunRecord:
        with self._lock:
            if run_id not in self._runs:
                raise KeyError(run_id)
            return self._runs[run_id]

    def transition(self, run_id: str, status: str, **updates) -> RunRecord:
        with self._lock:
            rec = self._runs[run_id]
            if _ORDER[status] < _ORDER[rec.status]:
                raise SceneMotionError(
                    f"run {run_id}: illegal transition {rec.status} -> {status}")
            rec.status = status
            for k, v in updates.items():
                setattr(rec, k, v)
            if status in ("done", "failed"):
                rec.finished_at = time.time()
            # persist before the terminal status becomes visible to readers
            self._persist(rec)
            return rec

    def _persist(self, rec: RunRecord) -> None:
        path = self.dir / f"{rec.run_id}.json"
        tmp = path.with_suffix(".tmp")
        tmp.write_text(json.dumps(rec.to_json(), sort_keys=True))
        tmp.replace(path)

    def ids(self) -> list[str]:
        with self._lock:
            return sorted(self._runs.keys())
