"""Parsers and writers for every on-disk format.

Formats: ASCII PLY point clouds (x/y/z vertex properties), detections as
JSON-lines keyed by frame_id, calibration JSON, and the manifest JSON
(schema_version 1). Every writer round-trips bit-exactly through its parser.
"""

from __future__ import annotations

import json
import math
import os
import tempfile

import numpy as np

from .errors import ParseError, SchemaVersionError
from .model import (
    MANIFEST_SCHEMA_VERSION,
    Box2D,
    CameraProjection,
    ClusterManifest,
    ManifestEntry,
    PointCloud,
)


def _fmt_float(v: float) -> str:
    """Shortest decimal that parses back to the same float; integral values drop '.0'."""
    s = repr(float(v))
    return s[:-2] if s.endswith(".0") else s


# ---------------------------------------------------------------------------
# ASCII PLY point clouds


def write_point_cloud(cloud: PointCloud) -> bytes:
    """Serialize a cloud as ASCII PLY. frame/scene ids travel in header comments."""
    lines = ["ply", "format ascii 1.0"]
    if cloud.frame_id:
        lines.append(f"comment frame_id {cloud.frame_id}")
    if cloud.scene_id:
        lines.append(f"comment scene_id {cloud.scene_id}")
    lines.append(f"element vertex {len(cloud)}")
    lines += ["property float x", "property float y", "property float z"]
    lines.append("end_header")
    for x, y, z in cloud.points:
        lines.append(f"{_fmt_float(x)} {_fmt_float(y)} {_fmt_float(z)}")
    return ("\n".join(lines) + "\n").encode("ascii")


def parse_point_cloud(data: bytes) -> PointCloud:
    """Parse an ASCII PLY with a vertex element carrying x, y, z properties."""
    try:
        text = data.decode("ascii")
    except UnicodeDecodeError as exc:
        raise ParseError(f"PLY is not ASCII: {exc}") from None
    lines = text.splitlines()
    if not lines or lines[0].strip() != "ply":
        raise ParseError("missing 'ply' magic line")

    frame_id = scene_id = ""
    vertex_count = None
    properties: list[str] = []
    in_vertex_element = False
    header_end = None
    for i, raw in enumerate(lines[1:], start=1):
        line = raw.strip()
        if line == "end_header":
            header_end = i
            break
        if line.startswith("format"):
            if "ascii" not in line:
                raise ParseError(f"only ASCII PLY is supported, got {line!r}")
        elif line.startswith("comment frame_id "):
            frame_id = line[len("comment frame_id "):]
        elif line.startswith("comment scene_id "):
            scene_id = line[len("comment scene_id "):]
        elif line.startswith("element"):
            parts = line.split()
            if len(parts) != 3:
                raise ParseError(f"malformed element declaration: {line!r}")
            in_vertex_element = parts[1] == "vertex"
            if in_vertex_element:
                try:
                    vertex_count = int(parts[2])
                except ValueError:
                    raise ParseError(f"bad vertex count: {parts[2]!r}") from None
                if vertex_count < 0:
                    raise ParseError("negative vertex count")
        elif line.startswith("property") and in_vertex_element:
            properties.append(line.split()[-1])
    if header_end is None:
        raise ParseError("missing end_header")
    if vertex_count is None:
        raise ParseError("no vertex element declared")
    for axis in ("x", "y", "z"):
        if axis not in properties:
            raise ParseError(f"vertex element lacks property {axis!r}")
    cols = [properties.index(a) for a in ("x", "y", "z")]

    body = [l for l in lines[header_end + 1:] if l.strip()]
    if len(body) < vertex_count:
        raise ParseError(f"declared {vertex_count} vertices but found {len(body)} data lines")
    pts = np.empty((vertex_count, 3), dtype=np.float64)
    for i in range(vertex_count):
        tokens = body[i].split()
        if len(tokens) < len(properties):
            raise ParseError(f"vertex line {i}: expected {len(properties)} values")
        for j, c in enumerate(cols):
            try:
                val = float(tokens[c])
            except ValueError:
                raise ParseError(f"vertex line {i}: non-numeric coordinate {tokens[c]!r}") from None
            if not math.isfinite(val):
                raise ParseError(f"vertex line {i}: non-finite coordinate {tokens[c]!r}")
            pts[i, j] = val
    return PointCloud(pts, frame_id=frame_id, scene_id=scene_id)


def read_point_cloud(path) -> PointCloud:
    with open(path, "rb") as fh:
        return parse_point_cloud(fh.read())


def save_point_cloud(cloud: PointCloud, path) -> None:
    with open(path, "wb") as fh:
        fh.write(write_point_cloud(cloud))


# ---------------------------------------------------------------------------
# Detections (JSON-lines, one frame per line)


def _box_to_dict(box: Box2D) -> dict:
    d = {
        "class": box.label,
        "x_min": box.x_min,
        "y_min": box.y_min,
        "x_max": box.x_max,
        "y_max": box.y_max,
    }
    if box.score is not None:
        d["score"] = box.score
    return d


def _box_from_dict(d: dict) -> Box2D:
    missing = {"class", "x_min", "y_min", "x_max", "y_max"} - d.keys()
    if missing:
        raise ParseError(f"box record missing fields {sorted(missing)}")
    try:
        return Box2D(
            x_min=float(d["x_min"]),
            y_min=float(d["y_min"]),
            x_max=float(d["x_max"]),
            y_max=float(d["y_max"]),
            label=str(d["class"]),
            score=None if d.get("score") is None else float(d["score"]),
        )
    except (TypeError, ValueError) as exc:
        raise ParseError(f"invalid box record: {exc}") from None


def parse_detections(data: bytes) -> dict[str, list[Box2D]]:
    """Parse JSON-lines detections into an ordered frame_id -> boxes mapping."""
    frames: dict[str, list[Box2D]] = {}
    for lineno, raw in enumerate(data.decode("utf-8").splitlines(), start=1):
        if not raw.strip():
            continue
        try:
            rec = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ParseError(f"line {lineno}: bad JSON ({exc.msg})") from None
        if not isinstance(rec, dict) or "frame_id" not in rec or "boxes" not in rec:
            raise ParseError(f"line {lineno}: expected object with frame_id and boxes")
        frame_id = str(rec["frame_id"])
        if frame_id in frames:
            raise ParseError(f"line {lineno}: duplicate frame_id {frame_id!r}")
        try:
            frames[frame_id] = [_box_from_dict(b) for b in rec["boxes"]]
        except ParseError as exc:
            raise ParseError(f"line {lineno}: {exc}") from None
    return frames


def write_detections(frames: dict[str, list[Box2D]]) -> bytes:
    lines = [
        json.dumps({"frame_id": fid, "boxes": [_box_to_dict(b) for b in boxes]})
        for fid, boxes in frames.items()
    ]
    return ("\n".join(lines) + ("\n" if lines else "")).encode("utf-8")


def read_detections(path) -> dict[str, list[Box2D]]:
    with open(path, "rb") as fh:
        return parse_detections(fh.read())


def save_detections(frames: dict[str, list[Box2D]], path) -> None:
    with open(path, "wb") as fh:
        fh.write(write_detections(frames))


# ---------------------------------------------------------------------------
# Calibration


def parse_calibration(data: bytes) -> CameraProjection:
    """Parse {"p": [12 numbers row-major], "image_width", "image_height"}."""
    try:
        doc = json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise ParseError(f"bad calibration JSON: {exc}") from None
    if not isinstance(doc, dict) or "p" not in doc:
        raise ParseError("calibration JSON must be an object with a 'p' array")
    p = doc["p"]
    if not isinstance(p, list) or len(p) != 12:
        raise ParseError(f"'p' must hold 12 entries, got {len(p) if isinstance(p, list) else type(p).__name__}")
    try:
        return CameraProjection(
            p,
            image_width=int(doc.get("image_width", 1224)),
            image_height=int(doc.get("image_height", 1024)),
        )
    except (TypeError, ValueError) as exc:
        raise ParseError(f"invalid calibration: {exc}") from None


def write_calibration(camera: CameraProjection) -> bytes:
    doc = {
        "p": [float(v) for v in camera.p.ravel()],
        "image_width": camera.image_width,
        "image_height": camera.image_height,
    }
    return (json.dumps(doc, indent=2) + "\n").encode("utf-8")


def read_calibration(path) -> CameraProjection:
    with open(path, "rb") as fh:
        return parse_calibration(fh.read())


# ---------------------------------------------------------------------------
# Manifest


def _entry_to_dict(e: ManifestEntry) -> dict:
    d = {
        "cluster_id": e.cluster_id,
        "path": e.path,
        "label": e.label,
        "scene_id": e.scene_id,
        "frame_id": e.frame_id,
        "source": e.source,
        "review": e.review,
        "split": e.split,
        "num_points": e.num_points,
        "source_box": None if e.source_box is None else _box_to_dict(e.source_box),
    }
    if e.image_path:
        d["image_path"] = e.image_path
    if e.reviewer:
        d["reviewer"] = e.reviewer
    if e.reviewed_at is not None:
        d["reviewed_at"] = e.reviewed_at
    return d


def _entry_from_dict(d: dict) -> ManifestEntry:
    try:
        return ManifestEntry(
            cluster_id=str(d["cluster_id"]),
            path=str(d["path"]),
            label=str(d["label"]),
            scene_id=str(d.get("scene_id", "")),
            frame_id=str(d.get("frame_id", "")),
            source=str(d.get("source", "auto")),
            review=str(d.get("review", "pending")),
            split=str(d.get("split", "unassigned")),
            num_points=int(d.get("num_points", 0)),
            source_box=None if d.get("source_box") is None else _box_from_dict(d["source_box"]),
            image_path=str(d.get("image_path", "")),
            reviewer=str(d.get("reviewer", "")),
            reviewed_at=None if d.get("reviewed_at") is None else float(d["reviewed_at"]),
        )
    except KeyError as exc:
        raise ParseError(f"manifest entry missing field {exc}") from None
    except (TypeError, ValueError) as exc:
        raise ParseError(f"invalid manifest entry: {exc}") from None


def load_manifest(path) -> ClusterManifest:
    with open(path, "rb") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError(f"bad manifest JSON: {exc.msg}") from None
    if not isinstance(doc, dict) or "schema_version" not in doc:
        raise ParseError("manifest must be an object with schema_version")
    version = doc["schema_version"]
    if version != MANIFEST_SCHEMA_VERSION:
        raise SchemaVersionError(f"unknown manifest schema_version {version!r}")
    entries = [_entry_from_dict(d) for d in doc.get("entries", [])]
    try:
        return ClusterManifest(entries=entries, schema_version=version)
    except ValueError as exc:
        raise ParseError(str(exc)) from None


def save_manifest(manifest: ClusterManifest, path, check_files: bool = True) -> None:
    """Write the manifest atomically (temp file then rename).

    With ``check_files`` every entry with a non-empty path must exist on disk
    (relative paths resolve against the manifest directory). Entries with an
    empty path are index-only and skip the check.
    """
    path = os.fspath(path)
    base = os.path.dirname(os.path.abspath(path))
    if check_files:
        for e in manifest.entries:
            if not e.path:
                continue
            target = resolve_entry_path(path, e.path)
            if not os.path.exists(target):
                raise FileNotFoundError(f"manifest entry {e.cluster_id!r} references missing file {target}")
    doc = {
        "schema_version": manifest.schema_version,
        "entries": [_entry_to_dict(e) for e in manifest.entries],
    }
    fd, tmp = tempfile.mkstemp(dir=base, prefix=".manifest-", suffix=".json")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=1)
            fh.write("\n")
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def resolve_entry_path(manifest_path, entry_path: str) -> str:
    """Resolve an entry's file path; relative paths are anchored at the manifest's directory."""
    if os.path.isabs(entry_path):
        return entry_path
    return os.path.join(os.path.dirname(os.path.abspath(os.fspath(manifest_path))), entry_path)
