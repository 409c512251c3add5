"""Local HTTP service for the manual validation loop.

Serves pending clusters and records accept/reject verdicts straight into the
manifest, which stays the single source of truth. Reads are concurrent;
writes are serialized behind a lock and the manifest is rewritten atomically,
so readers never observe a torn file. Re-posting a verdict overwrites the
previous one (latest wins).
"""

from __future__ import annotations

import os
import threading
import time
from dataclasses import dataclass

from fastapi import FastAPI, HTTPException, Query
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from .io import load_manifest, read_point_cloud, resolve_entry_path, save_manifest
from .model import REVIEW_STATES, ClusterManifest, ManifestEntry

DECISIONS = ("accepted", "rejected")


@dataclass
class Verdict:
    cluster_id: str
    decision: str
    reviewer: str = ""
    timestamp: float | None = None

    def __post_init__(self):
        if self.decision not in DECISIONS:
            raise ValueError(f"decision must be one of {DECISIONS}, got {self.decision!r}")


class ReviewStore:
    """Manifest-backed verdict store with a single-writer contract."""

    def __init__(self, manifest_path: str):
        self.manifest_path = os.fspath(manifest_path)
        self._lock = threading.Lock()
        self._manifest = load_manifest(self.manifest_path)

    @property
    def manifest(self) -> ClusterManifest:
        return self._manifest

    def entry(self, cluster_id: str) -> ManifestEntry | None:
        return self._manifest.get(cluster_id)

    def list_entries(self, status: str | None = None) -> list[ManifestEntry]:
        entries = sorted(self._manifest.entries, key=lambda e: e.cluster_id)
        if status is None:
            return entries
        return [e for e in entries if e.review == status]

    def stats(self) -> dict[str, int]:
        counts = self._manifest.status_counts()
        counts["total"] = len(self._manifest)
        return counts

    def apply_verdict(self, verdict: Verdict) -> dict[str, int]:
        with self._lock:
            entry = self._manifest.get(verdict.cluster_id)
            if entry is None:
                raise KeyError(verdict.cluster_id)
            entry.review = verdict.decision
            entry.reviewer = verdict.reviewer
            entry.reviewed_at = verdict.timestamp if verdict.timestamp is not None else time.time()
            save_manifest(self._manifest, self.manifest_path, check_files=False)
            return self.stats()


def _entry_summary(e: ManifestEntry) -> dict:
    return {
        "cluster_id": e.cluster_id,
        "label": e.label,
        "scene_id": e.scene_id,
        "frame_id": e.frame_id,
        "num_points": e.num_points,
        "source": e.source,
        "review": e.review,
        "split": e.split,
    }


def create_app(manifest_path: str, static_dir: str | None = None) -> FastAPI:
    """Build the review API (and optionally mount the browser UI bundle)."""
    app = FastAPI(title="pedcloud review")
    store = ReviewStore(manifest_path)
    app.state.store = store

    @app.get("/api/stats")
    def get_stats():
        return store.stats()

    @app.get("/api/clusters")
    def list_clusters(
        status: str | None = Query(default=None),
        page: int = Query(default=1, ge=1),
        page_size: int = Query(default=50, ge=1, le=1000),
    ):
        if status is not None and status not in REVIEW_STATES:
            raise HTTPException(status_code=400, detail=f"status must be one of {REVIEW_STATES}")
        entries = store.list_entries(status)
        start = (page - 1) * page_size
        items = entries[start: start + page_size]
        return {
            "items": [_entry_summary(e) for e in items],
            "page": page,
            "page_size": page_size,
            "total": len(entries),
        }

    @app.get("/api/clusters/{cluster_id}")
    def get_cluster(cluster_id: str):
        entry = store.entry(cluster_id)
        if entry is None:
            raise HTTPException(status_code=404, detail=f"unknown cluster {cluster_id!r}")
        record = _entry_summary(entry)
        if entry.source_box is not None:
            b = entry.source_box
            record["source_box"] = {
                "class": b.label,
                "x_min": b.x_min,
                "y_min": b.y_min,
                "x_max": b.x_max,
                "y_max": b.y_max,
                "score": b.score,
            }
        if entry.image_path:
            record["image_path"] = entry.image_path
        if entry.path:
            cloud = read_point_cloud(resolve_entry_path(store.manifest_path, entry.path))
            record["points"] = cloud.points.tolist()
        else:
            record["points"] = []
        return record

    @app.post("/api/clusters/{cluster_id}/verdict")
    def post_verdict(cluster_id: str, body: dict):
        decision = body.get("decision")
        if decision not in DECISIONS:
            raise HTTPException(status_code=400, detail=f"decision must be one of {DECISIONS}")
        reviewer = str(body.get("reviewer", ""))
        try:
            counts = store.apply_verdict(Verdict(cluster_id=cluster_id, decision=decision, reviewer=reviewer))
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown cluster {cluster_id!r}") from None
        return JSONResponse(counts)

    if static_dir and os.path.isdir(static_dir):
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="ui")
    else:

        @app.get("/")
        def index():
            return {
                "service": "pedcloud review",
                "endpoints": [
                    "GET /api/stats",
                    "GET /api/clusters?status=&page=&page_size=",
                    "GET /api/clusters/{id}",
                    "POST /api/clusters/{id}/verdict",
                ],
                "note": "build the browser UI and pass --static-dir to serve it here",
            }

    return app


def serve(manifest_path: str, host: str = "127.0.0.1", port: int = 8123, static_dir: str | None = None):
    import uvicorn

    app = create_app(manifest_path, static_dir=static_dir)
    uvicorn.run(app, host=host, port=port, log_level="warning")
