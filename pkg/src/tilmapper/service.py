"""HTTP service backing the threshold-review loop.

Serves stored probability maps, previews the effect of candidate thresholds,
exposes boundary patches for visual inspection, and commits a chosen threshold
as a weak-annotation manifest. All counts returned by the API are computed on
the stored full-resolution map, never on the downsampled preview. Manifest
commits are atomic (write temp file, then rename): a crash mid-commit leaves
the session OPEN with no manifest file.

API (all JSON, versioned under /v1):
    GET  /v1/maps
    GET  /v1/maps/{map_id}?full=true|false
    GET  /v1/maps/{map_id}/preview?t=<real>
    GET  /v1/maps/{map_id}/patches?t=<real>&n=<int>
    POST /v1/sessions                      {"map_id": ...}
    GET  /v1/sessions/{session_id}
    POST /v1/sessions/{session_id}/commit  {"t": ..., "n_samples": int|"ALL", "seed": int}
"""

from __future__ import annotations

import base64
import math
import os
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Literal

import cv2
import numpy as np
from fastapi import FastAPI, HTTPException, Query
from pydantic import BaseModel

from .manifests import AnnotationManifest, PatchRecord, Split, harvest_semi_auto
from .maps import TilMap, read_map
from .tiling import TileGrid, extract_patch, open_pixel_source

MAP_SUFFIX = ".tilmap"
DEFAULT_PREVIEW_MAX_SIDE = 200


def block_mean(grid: np.ndarray, factor: int) -> np.ndarray:
    """Downsample a 2-D grid by averaging factor x factor blocks.

    Edge blocks smaller than the factor average only their available cells, so
    geometry ratios are preserved for any grid size.
    """
    if factor <= 1:
        return grid.astype(np.float64).copy()
    n_rows, n_cols = grid.shape
    row_edges = np.arange(0, n_rows, factor)
    col_edges = np.arange(0, n_cols, factor)
    sums = np.add.reduceat(np.add.reduceat(grid.astype(np.float64), row_edges, axis=0),
                           col_edges, axis=1)
    row_counts = np.minimum(row_edges + factor, n_rows) - row_edges
    col_counts = np.minimum(col_edges + factor, n_cols) - col_edges
    return sums / np.outer(row_counts, col_counts)


def preview_factor(n_rows: int, n_cols: int, max_side: int) -> int:
    return max(1, math.ceil(max(n_rows, n_cols) / max_side))


@dataclass
class ReviewSession:
    session_id: str
    map_id: str
    current_threshold: float = 0.5
    status: str = "OPEN"
    committed_manifest: str | None = None

    def to_dict(self) -> dict:
        return {
            "session_id": self.session_id,
            "map_id": self.map_id,
            "current_threshold": self.current_threshold,
            "status": self.status,
            "committed_manifest": self.committed_manifest,
        }


class MapStore:
    """Append-only directory of map files plus committed manifests."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.manifest_dir = self.root / "manifests"
        self._cache: dict[str, TilMap] = {}

    def map_ids(self) -> list[str]:
        return sorted(p.stem for p in self.root.glob(f"*{MAP_SUFFIX}"))

    def get(self, map_id: str) -> TilMap:
        if map_id not in self._cache:
            path = self.root / f"{map_id}{MAP_SUFFIX}"
            if not path.exists():
                raise KeyError(map_id)
            m = read_map(path)
            if not isinstance(m, TilMap):
                raise KeyError(map_id)
            self._cache[map_id] = m
        return self._cache[map_id]

    def add(self, map_id: str, til_map: TilMap) -> None:
        from .maps import write_map

        write_map(til_map, self.root / f"{map_id}{MAP_SUFFIX}")
        self._cache[map_id] = til_map


def write_manifest_atomic(manifest: AnnotationManifest, path: Path) -> None:
    """Write-temp-then-rename so a crash never leaves a partial manifest."""
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    try:
        manifest.save(tmp)
        os.replace(tmp, path)
    except BaseException:
        tmp.unlink(missing_ok=True)
        raise


class CreateSessionRequest(BaseModel):
    map_id: str


class CommitRequest(BaseModel):
    t: float
    n_samples: int | Literal["ALL"]
    seed: int = 0


def export_full_map(til_map: TilMap, threshold: float) -> list[PatchRecord]:
    """Every map cell as a weak-annotation record (row-major order)."""
    return harvest_semi_auto(
        til_map, threshold, n_samples=til_map.n_cells, rng_seed=0
    )


def create_app(
    store: MapStore | str | Path,
    *,
    preview_max_side: int = DEFAULT_PREVIEW_MAX_SIDE,
    ui_dir: str | Path | None = None,
) -> FastAPI:
    if not isinstance(store, MapStore):
        store = MapStore(store)
    app = FastAPI(title="tilmapper review service")
    app.state.store = store
    app.state.preview_max_side = preview_max_side
    sessions: dict[str, ReviewSession] = {}
    session_locks: dict[str, threading.Lock] = {}
    registry_lock = threading.Lock()
    app.state.sessions = sessions

    def get_map_or_404(map_id: str) -> TilMap:
        try:
            return store.get(map_id)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown map {map_id!r}")

    def map_status(map_id: str) -> str:
        if any(
            s.map_id == map_id and s.status == "COMMITTED" for s in sessions.values()
        ):
            return "COMMITTED"
        return "OPEN"

    def preview_payload(grid: np.ndarray) -> dict:
        factor = preview_factor(grid.shape[0], grid.shape[1], app.state.preview_max_side)
        small = block_mean(grid, factor)
        return {
            "n_rows": small.shape[0],
            "n_cols": small.shape[1],
            "factor": factor,
            "values": [[round(float(v), 6) for v in row] for row in small],
        }

    @app.get("/v1/maps")
    def list_maps() -> dict:
        entries = []
        for map_id in store.map_ids():
            m = store.get(map_id)
            entries.append(
                {
                    "map_id": map_id,
                    "slide_id": m.slide_id,
                    "cancer_type": m.cancer_type,
                    "n_cells": m.n_cells,
                    "status": map_status(map_id),
                }
            )
        entries.sort(key=lambda e: (e["slide_id"], e["map_id"]))
        return {"maps": entries}

    @app.get("/v1/maps/{map_id}")
    def get_map(map_id: str, full: bool = False) -> dict:
        m = get_map_or_404(map_id)
        payload = {
            "map_id": map_id,
            "slide_id": m.slide_id,
            "cancer_type": m.cancer_type,
            "patient_id": m.patient_id,
            "patch_px": m.patch_px,
            "n_cols": m.n_cols,
            "n_rows": m.n_rows,
            "n_cells": m.n_cells,
            "model_id": m.model_id,
            "has_pixels": bool(m.pixel_source),
            "preview": preview_payload(m.probs),
        }
        if full:
            payload["probs"] = [[float(v) for v in row] for row in m.probs]
        return payload

    @app.get("/v1/maps/{map_id}/preview")
    def preview_threshold(map_id: str, t: float = Query(ge=0.0, le=1.0)) -> dict:
        m = get_map_or_404(map_id)
        binary = (m.probs >= t).astype(np.float64)
        count = int(binary.sum())
        return {
            "map_id": map_id,
            "threshold": t,
            "n_cells": m.n_cells,
            "positive_count": count,
            "positive_fraction": count / m.n_cells,
            "binary_preview": preview_payload(binary),
        }

    @app.get("/v1/maps/{map_id}/patches")
    def sample_patches(
        map_id: str, t: float = Query(ge=0.0, le=1.0), n: int = Query(default=8, ge=1)
    ) -> dict:
        m = get_map_or_404(map_id)
        if not m.pixel_source:
            raise HTTPException(
                status_code=409,
                detail="thumbnails unavailable: map has no slide pixel source",
            )
        try:
            source = open_pixel_source(m.pixel_source)
        except Exception as exc:
            raise HTTPException(
                status_code=409, detail=f"thumbnails unavailable: {exc}"
            )
        grid = TileGrid(
            slide_id=m.slide_id, patch_px=m.patch_px, n_cols=m.n_cols, n_rows=m.n_rows
        )

        flat = m.probs.reshape(-1)
        order = np.arange(flat.size)
        ys, xs = np.divmod(order, m.n_cols)

        def take(side_positive: bool) -> list[dict]:
            if side_positive:
                sel = flat >= t
                dist = flat - t
            else:
                sel = flat < t
                dist = t - flat
            idx = order[sel]
            # nearest to the boundary first; ties broken by grid position
            idx = idx[np.lexsort((xs[idx], ys[idx], dist[idx]))][:n]
            out = []
            for i in idx:
                patch = extract_patch(source, grid, int(xs[i]), int(ys[i]))
                ok, buf = cv2.imencode(
                    ".png", cv2.cvtColor(patch.pixels, cv2.COLOR_RGB2BGR)
                )
                if not ok:
                    raise HTTPException(status_code=500, detail="thumbnail encode failed")
                out.append(
                    {
                        "grid_x": int(xs[i]),
                        "grid_y": int(ys[i]),
                        "prob": float(flat[i]),
                        "thumbnail_png_base64": base64.b64encode(buf.tobytes()).decode(),
                    }
                )
            return out

        return {
            "map_id": map_id,
            "threshold": t,
            "positives": take(True),
            "negatives": take(False),
        }

    @app.post("/v1/sessions", status_code=201)
    def create_session(req: CreateSessionRequest) -> dict:
        get_map_or_404(req.map_id)
        with registry_lock:
            session_id = f"{req.map_id}-r{len(sessions) + 1}"
            session = ReviewSession(session_id=session_id, map_id=req.map_id)
            sessions[session_id] = session
            session_locks[session_id] = threading.Lock()
        return session.to_dict()

    @app.get("/v1/sessions/{session_id}")
    def get_session(session_id: str) -> dict:
        if session_id not in sessions:
            raise HTTPException(status_code=404, detail=f"unknown session {session_id!r}")
        return sessions[session_id].to_dict()

    @app.post("/v1/sessions/{session_id}/commit")
    def commit(session_id: str, req: CommitRequest) -> dict:
        if session_id not in sessions:
            raise HTTPException(status_code=404, detail=f"unknown session {session_id!r}")
        if not 0.0 <= req.t <= 1.0:
            raise HTTPException(status_code=422, detail="t must be in [0, 1]")
        session = sessions[session_id]
        with session_locks[session_id]:
            if session.status == "COMMITTED":
                raise HTTPException(
                    status_code=409, detail=f"session {session_id} already committed"
                )
            m = store.get(session.map_id)
            try:
                if req.n_samples == "ALL":
                    records = export_full_map(m, req.t)
                else:
                    if req.n_samples < 1:
                        raise HTTPException(status_code=422, detail="n_samples must be >= 1")
                    records = harvest_semi_auto(
                        m, req.t, n_samples=req.n_samples, rng_seed=req.seed
                    )
            except ValueError as exc:  # e.g. map lacks cancer-type provenance
                raise HTTPException(status_code=422, detail=str(exc))
            manifest = AnnotationManifest(
                name=session_id, records=records, split=Split.TRAIN
            )
            path = store.manifest_dir / f"{session_id}.jsonl"
            write_manifest_atomic(manifest, path)
            session.status = "COMMITTED"
            session.current_threshold = req.t
            session.committed_manifest = str(path)
        return {
            "session_id": session_id,
            "status": session.status,
            "manifest_path": str(path),
            "n_records": len(records),
            "threshold": req.t,
        }

    if ui_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
