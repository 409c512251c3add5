"""Cluster downsampling (random, voxel grid, farthest point), normalization, augmentation."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateClusterError, TooFewPointsError
from .model import as_points

DEFAULT_TARGET_COUNT = 1024
TAU = 2.0 * math.pi


@dataclass
class SampleSpec:
    """Which downsampler to run and with what knobs."""

    method: str = "fps"
    target_count: int = DEFAULT_TARGET_COUNT
    voxel_size: float = 0.1
    rng_seed: int = 0

    def __post_init__(self):
        if self.method not in ("random", "voxel_grid", "fps"):
            raise ValueError(f"unknown sampling method {self.method!r}")
        if self.target_count < 1:
            raise ValueError("target_count must be >= 1")
        if self.voxel_size <= 0:
            raise ValueError("voxel_size must be positive")


@dataclass
class AugmentSpec:
    """Rotation plus clipped Gaussian jitter, in unit-sphere units."""

    rotation_axis: str = "z"
    rotation_range: tuple[float, float] = (0.0, TAU)
    jitter_sigma: float = 0.01
    jitter_clip: float = 0.05
    rng_seed: int = 0

    def __post_init__(self):
        if self.rotation_axis not in ("x", "y", "z"):
            raise ValueError("rotation_axis must be one of x, y, z")
        lo, hi = self.rotation_range
        if hi < lo:
            raise ValueError("rotation_range must be ordered [lo, hi]")
        if self.jitter_sigma < 0 or self.jitter_clip < 0:
            raise ValueError("jitter parameters must be non-negative")


def random_sample(points, k: int, rng_seed: int = 0) -> np.ndarray:
    """Uniform sample of k points without replacement, keeping original order."""
    pts = as_points(points)
    n = pts.shape[0]
    if k > n:
        raise TooFewPointsError(f"asked for {k} points from a cloud of {n}")
    rng = np.random.default_rng(rng_seed)
    idx = np.sort(rng.choice(n, size=k, replace=False))
    return pts[idx]


def voxel_grid_filter(points, voxel_size: float) -> np.ndarray:
    """Replace each occupied voxel with the centroid of its points.

    The grid is anchored at the cloud's per-axis minimum. Output rows are
    sorted lexicographically by voxel index.
    """
    if voxel_size <= 0:
        raise ValueError("voxel_size must be positive")
    pts = as_points(points)
    if pts.shape[0] == 0:
        return pts
    origin = pts.min(axis=0)
    keys = np.floor((pts - origin) / voxel_size).astype(np.int64)
    uniq, inverse = np.unique(keys, axis=0, return_inverse=True)
    sums = np.zeros((uniq.shape[0], 3))
    np.add.at(sums, inverse, pts)
    counts = np.bincount(inverse, minlength=uniq.shape[0]).astype(np.float64)
    return sums / counts[:, None]


def _sq_dist_to(pts: np.ndarray, p: np.ndarray) -> np.ndarray:
    # Column-wise form keeps per-element operation order fixed.
    return (pts[:, 0] - p[0]) ** 2 + (pts[:, 1] - p[1]) ** 2 + (pts[:, 2] - p[2]) ** 2


def fps(points, k: int, seed_index: int | None = None) -> np.ndarray:
    """Greedy farthest point sampling; returns the k selected indices in selection order.

    Starts from ``seed_index`` when given, otherwise from the point nearest
    the centroid (ties to the lowest index). Each step adds the unselected
    point whose minimum distance to the selected set is largest, again
    breaking ties toward the lowest index.
    """
    pts = as_points(points)
    n = pts.shape[0]
    if not (1 <= k <= n):
        raise TooFewPointsError(f"need 1 <= k <= {n}, got k={k}")
    if seed_index is None:
        centroid = pts.mean(axis=0)
        seed = int(np.argmin(_sq_dist_to(pts, centroid)))
    else:
        if not (0 <= seed_index < n):
            raise ValueError(f"seed_index {seed_index} out of range")
        seed = int(seed_index)
    selected = np.empty(k, dtype=np.int64)
    selected[0] = seed
    min_d = _sq_dist_to(pts, pts[seed])
    min_d[seed] = -1.0  # selected points can never win again (coincident-point safe)
    for i in range(1, k):
        nxt = int(np.argmax(min_d))
        selected[i] = nxt
        np.minimum(min_d, _sq_dist_to(pts, pts[nxt]), out=min_d)
        min_d[nxt] = -1.0
    return selected


def normalize(points) -> np.ndarray:
    """Center a cluster on the origin and scale the farthest point to norm 1.

    Subtracts the centroid (with a second pass to cancel floating point
    residue), then divides by the largest point norm.
    """
    pts = as_points(points)
    if pts.shape[0] == 0:
        raise ValueError("cannot normalize an empty cluster")
    centered = pts - pts.mean(axis=0)
    centered -= centered.mean(axis=0)
    norms = np.sqrt((centered ** 2).sum(axis=1))
    scale = float(norms.max())
    magnitude = float(np.abs(pts).max())
    if scale <= 1e-12 * max(1.0, magnitude):
        raise DegenerateClusterError("all points coincide, zero normalization scale")
    out = centered / scale
    # Per-coordinate division can overshoot the unit sphere by an ulp; rows at
    # the max strictly shrink under re-division, so this terminates.
    m = float(np.sqrt((out ** 2).sum(axis=1)).max())
    while m > 1.0:
        out /= m
        m = float(np.sqrt((out ** 2).sum(axis=1)).max())
    return out


def rotation_matrix(axis: str, theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    if axis == "x":
        return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])
    if axis == "y":
        return np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])
    if axis == "z":
        return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])
    raise ValueError(f"unknown axis {axis!r}")


def augment(points, spec: AugmentSpec, rng: np.random.Generator) -> np.ndarray:
    """Rotate about the origin by a uniform random angle, then add clipped jitter."""
    pts = as_points(points)
    lo, hi = spec.rotation_range
    theta = float(rng.uniform(lo, hi)) if hi > lo else lo
    out = pts @ rotation_matrix(spec.rotation_axis, theta).T
    if spec.jitter_sigma > 0.0:
        noise = rng.normal(0.0, spec.jitter_sigma, size=out.shape)
        np.clip(noise, -spec.jitter_clip, spec.jitter_clip, out=noise)
        out = out + noise
    return out


def apply_sample_spec(points, spec: SampleSpec) -> np.ndarray:
    """Run the configured downsampler on a cluster."""
    if spec.method == "random":
        return random_sample(points, spec.target_count, spec.rng_seed)
    if spec.method == "voxel_grid":
        return voxel_grid_filter(points, spec.voxel_size)
    pts = as_points(points)
    return pts[fps(pts, spec.target_count)]
