"""Core domain types: point clouds, boxes, cameras, clusters, and the dataset manifest."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

PEDESTRIAN = "pedestrian"
NON_PEDESTRIAN = "non_pedestrian"
CLUSTER_LABELS = (NON_PEDESTRIAN, PEDESTRIAN)

SOURCES = ("auto", "manual")
REVIEW_STATES = ("pending", "accepted", "rejected")
SPLITS = ("train", "val", "test", "unassigned")

MANIFEST_SCHEMA_VERSION = 1
PARAMS_SCHEMA_VERSION = 1


def as_points(points) -> np.ndarray:
    """Coerce to a float64 (N, 3) array without copying when already in that layout."""
    arr = np.asarray(points, dtype=np.float64)
    if arr.size == 0:
        return arr.reshape(0, 3)
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise ValueError(f"expected an (N, 3) point array, got shape {arr.shape}")
    return arr


class PointCloud:
    """An ordered set of 3D points in meters, sensor frame.

    Captures from the target sensor top out around 45k points, but no upper
    bound is enforced here.
    """

    __slots__ = ("points", "frame_id", "scene_id")

    def __init__(self, points, frame_id: str = "", scene_id: str = ""):
        pts = as_points(points)
        if pts.size and not np.isfinite(pts).all():
            raise ValueError("point cloud contains non-finite coordinates")
        self.points = pts
        self.frame_id = frame_id
        self.scene_id = scene_id

    def __len__(self) -> int:
        return self.points.shape[0]

    def __eq__(self, other) -> bool:
        if not isinstance(other, PointCloud):
            return NotImplemented
        return (
            self.frame_id == other.frame_id
            and self.scene_id == other.scene_id
            and self.points.shape == other.points.shape
            and np.array_equal(self.points, other.points)
        )

    def __repr__(self) -> str:
        return f"PointCloud({len(self)} pts, frame={self.frame_id!r}, scene={self.scene_id!r})"


@dataclass(frozen=True)
class Box2D:
    """Axis-aligned rectangle in pixel space with a class label and optional score."""

    x_min: float
    y_min: float
    x_max: float
    y_max: float
    label: str = PEDESTRIAN
    score: float | None = None

    def __post_init__(self):
        for v in (self.x_min, self.y_min, self.x_max, self.y_max):
            if not math.isfinite(v):
                raise ValueError("box corners must be finite")
        if not (self.x_min < self.x_max and self.y_min < self.y_max):
            raise ValueError(
                f"box must have positive area, got ({self.x_min}, {self.y_min}, "
                f"{self.x_max}, {self.y_max})"
            )
        if self.score is not None and not (0.0 <= self.score <= 1.0):
            raise ValueError(f"score must lie in [0, 1], got {self.score}")

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min

    @property
    def area(self) -> float:
        return self.width * self.height

    def contains(self, u: float, v: float) -> bool:
        """Half-open inside test: x_min <= u < x_max and y_min <= v < y_max."""
        return self.x_min <= u < self.x_max and self.y_min <= v < self.y_max


class CameraProjection:
    """A 3x4 row-major matrix mapping homogeneous 3D points to pixels."""

    __slots__ = ("p", "image_width", "image_height")

    def __init__(self, p, image_width: int = 1224, image_height: int = 1024):
        mat = np.asarray(p, dtype=np.float64)
        if mat.size != 12:
            raise ValueError(f"projection matrix needs 12 entries, got {mat.size}")
        mat = mat.reshape(3, 4)
        if not np.isfinite(mat).all():
            raise ValueError("projection matrix contains non-finite entries")
        if not np.any(mat[2]):
            raise ValueError("projection matrix bottom row is all zero")
        if image_width <= 0 or image_height <= 0:
            raise ValueError("image dimensions must be positive")
        self.p = mat
        self.image_width = int(image_width)
        self.image_height = int(image_height)

    def __repr__(self) -> str:
        return f"CameraProjection({self.image_width}x{self.image_height})"


class LabeledCluster:
    """A labeled point subset with provenance and review status."""

    __slots__ = ("points", "label", "source_box", "scene_id", "frame_id", "source", "review")

    def __init__(
        self,
        points,
        label: str,
        source_box: Box2D,
        scene_id: str = "",
        frame_id: str = "",
        source: str = "auto",
        review: str = "pending",
    ):
        if label not in CLUSTER_LABELS:
            raise ValueError(f"cluster label must be one of {CLUSTER_LABELS}, got {label!r}")
        if source not in SOURCES:
            raise ValueError(f"source must be one of {SOURCES}, got {source!r}")
        if review not in REVIEW_STATES:
            raise ValueError(f"review must be one of {REVIEW_STATES}, got {review!r}")
        self.points = as_points(points)
        self.label = label
        self.source_box = source_box
        self.scene_id = scene_id
        self.frame_id = frame_id
        self.source = source
        self.review = review

    def __len__(self) -> int:
        return self.points.shape[0]

    def __repr__(self) -> str:
        return f"LabeledCluster({self.label}, {len(self)} pts, frame={self.frame_id!r})"


@dataclass
class ManifestEntry:
    """One cluster record in the dataset index."""

    cluster_id: str
    path: str
    label: str
    scene_id: str = ""
    frame_id: str = ""
    source: str = "auto"
    review: str = "pending"
    split: str = "unassigned"
    num_points: int = 0
    source_box: Box2D | None = None
    image_path: str = ""
    reviewer: str = ""
    reviewed_at: float | None = None

    def __post_init__(self):
        if self.label not in CLUSTER_LABELS:
            raise ValueError(f"entry label must be one of {CLUSTER_LABELS}, got {self.label!r}")
        if self.source not in SOURCES:
            raise ValueError(f"entry source must be one of {SOURCES}")
        if self.review not in REVIEW_STATES:
            raise ValueError(f"entry review must be one of {REVIEW_STATES}")
        if self.split not in SPLITS:
            raise ValueError(f"entry split must be one of {SPLITS}")

    def with_split(self, split: str) -> "ManifestEntry":
        return replace(self, split=split)


@dataclass
class ClusterManifest:
    """The dataset index: cluster records, split assignment, review verdicts."""

    entries: list[ManifestEntry] = field(default_factory=list)
    schema_version: int = MANIFEST_SCHEMA_VERSION

    def __post_init__(self):
        ids = [e.cluster_id for e in self.entries]
        if len(ids) != len(set(ids)):
            seen, dup = set(), None
            for i in ids:
                if i in seen:
                    dup = i
                    break
                seen.add(i)
            raise ValueError(f"duplicate cluster_id {dup!r} in manifest")

    def __len__(self) -> int:
        return len(self.entries)

    def get(self, cluster_id: str) -> ManifestEntry | None:
        for e in self.entries:
            if e.cluster_id == cluster_id:
                return e
        return None

    def status_counts(self) -> dict[str, int]:
        counts = {s: 0 for s in REVIEW_STATES}
        for e in self.entries:
            counts[e.review] += 1
        return counts

    def scenes(self) -> set[str]:
        return {e.scene_id for e in self.entries}
