"""Random non-pedestrian box generation that mimics pedestrian box statistics."""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .detection import iou
from .errors import EmptyInputError, GenerationExhaustedError, InfeasibleError, InvalidFractionError
from .model import NON_PEDESTRIAN, Box2D

MIN_BOX_PX = 4.0


@dataclass(frozen=True)
class BoxStats:
    """Population mean and SD of box width, height, and aspect ratio (height/width)."""

    mean_w: float
    sd_w: float
    mean_h: float
    sd_h: float
    mean_ar: float
    sd_ar: float

    def __post_init__(self):
        if self.mean_w <= 0 or self.mean_h <= 0 or self.mean_ar <= 0:
            raise ValueError("box statistic means must be positive")
        if self.sd_w < 0 or self.sd_h < 0 or self.sd_ar < 0:
            raise ValueError("box statistic SDs must be non-negative")


@dataclass
class GenConfig:
    """Configuration for constrained random box generation."""

    target: BoxStats
    count: int
    max_pairwise_iou: float | None = None
    max_pbb_iou: float = 0.1
    rng_seed: int = 0
    max_attempts_per_box: int = 1000

    def __post_init__(self):
        if self.count < 0:
            raise ValueError("count must be >= 0")
        if self.max_pairwise_iou is not None and not (0.0 <= self.max_pairwise_iou <= 1.0):
            raise ValueError("max_pairwise_iou must lie in [0, 1]")
        if not (0.0 <= self.max_pbb_iou <= 1.0):
            raise ValueError("max_pbb_iou must lie in [0, 1]")
        if self.max_attempts_per_box < 1:
            raise ValueError("max_attempts_per_box must be >= 1")


def fit_box_stats(boxes: list[Box2D]) -> BoxStats:
    """Population statistics of width, height, and height/width over a box set."""
    if not boxes:
        raise EmptyInputError("cannot fit statistics to an empty box list")
    w = np.array([b.width for b in boxes])
    h = np.array([b.height for b in boxes])
    ar = h / w
    return BoxStats(
        mean_w=float(w.mean()),
        sd_w=float(w.std()),
        mean_h=float(h.mean()),
        sd_h=float(h.std()),
        mean_ar=float(ar.mean()),
        sd_ar=float(ar.std()),
    )


def compute_npbb_count(pbb_count: int, pixel_fraction: float) -> int:
    """Number of negative boxes needed so positives keep the given pixel share.

    With positives occupying fraction f of the pixels, generating
    round(pbb_count * (1 - f) / f) negatives preserves that share.
    """
    if not (0.0 < pixel_fraction < 1.0):
        raise InvalidFractionError(f"pixel_fraction must lie in (0, 1), got {pixel_fraction}")
    if pbb_count < 0:
        raise ValueError("pbb_count must be >= 0")
    return int(math.floor(pbb_count * (1.0 - pixel_fraction) / pixel_fraction + 0.5))


def _std_normal_pdf(x: float) -> float:
    return math.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)


def _std_normal_cdf(x: float) -> float:
    return 0.5 * (1.0 + math.erf(x / math.sqrt(2.0)))


def _truncated_mean(mu: float, sd: float, lo: float, hi: float) -> float:
    a = (lo - mu) / sd
    b = (hi - mu) / sd
    z = _std_normal_cdf(b) - _std_normal_cdf(a)
    if z <= 0.0:
        # Entire mass outside [lo, hi]; report the nearer bound.
        return lo if mu < lo else hi
    return mu + sd * (_std_normal_pdf(a) - _std_normal_pdf(b)) / z


@lru_cache(maxsize=256)
def _adjusted_center(target_mean: float, sd: float, lo: float, hi: float) -> float:
    """Gaussian center whose [lo, hi]-truncated mean equals target_mean.

    Truncation pulls the mean of a resampled Gaussian toward the interval
    interior, so sampling straight from N(target_mean, sd) would overshoot the
    requested mean (by about 7% for street-scale pedestrian widths). Solved by
    bisection on the closed-form truncated mean, which is monotone in the center.
    """
    if sd == 0.0:
        return target_mean
    if not (lo < target_mean < hi):
        raise InfeasibleError(
            f"target mean {target_mean} cannot be realized inside [{lo}, {hi}]"
        )
    span = max(hi - lo, sd)
    c_lo, c_hi = lo - 60.0 * sd - span, hi + 60.0 * sd + span
    for _ in range(200):
        mid = 0.5 * (c_lo + c_hi)
        if _truncated_mean(mid, sd, lo, hi) < target_mean:
            c_lo = mid
        else:
            c_hi = mid
        if c_hi - c_lo < 1e-12 * max(1.0, abs(target_mean)):
            break
    return 0.5 * (c_lo + c_hi)


def _sample_dim(rng: np.random.Generator, target_mean: float, sd: float, hi: float, max_attempts: int) -> float:
    """One box dimension: resampled truncated Gaussian with mean-preserving center."""
    lo = MIN_BOX_PX
    if hi < lo:
        raise InfeasibleError(f"image dimension {hi} cannot hold a {lo} px box")
    if sd == 0.0:
        if not (lo <= target_mean <= hi):
            raise InfeasibleError(f"fixed dimension {target_mean} outside [{lo}, {hi}]")
        return target_mean
    center = _adjusted_center(target_mean, sd, lo, hi)
    for _ in range(max_attempts):
        v = rng.normal(center, sd)
        if lo <= v <= hi:
            return v
    raise InfeasibleError(
        f"no in-range dimension after {max_attempts} draws (target {target_mean}, sd {sd}, max {hi})"
    )


def sample_box(
    target: BoxStats,
    image_w: float,
    image_h: float,
    rng: np.random.Generator,
    max_attempts: int = 1000,
) -> Box2D:
    """Draw one random non-pedestrian box mimicking the target statistics.

    Width and height are drawn independently from truncated Gaussians whose
    post-truncation means equal the targets; the top-left corner is uniform
    over positions that keep the box fully inside the image.
    """
    if image_w <= 0 or image_h <= 0:
        raise ValueError("image dimensions must be positive")
    w = _sample_dim(rng, target.mean_w, target.sd_w, float(image_w), max_attempts)
    h = _sample_dim(rng, target.mean_h, target.sd_h, float(image_h), max_attempts)
    x0 = rng.uniform(0.0, image_w - w)
    y0 = rng.uniform(0.0, image_h - h)
    return Box2D(x0, y0, x0 + w, y0 + h, label=NON_PEDESTRIAN)


def generate_npbb_set(
    config: GenConfig,
    pbbs: list[Box2D],
    image_w: float,
    image_h: float,
) -> list[Box2D]:
    """Generate config.count boxes under the overlap constraints by rejection.

    Every accepted box has IOU <= config.max_pbb_iou with every pedestrian
    box; when config.max_pairwise_iou is set, all pairwise IOUs among the
    generated boxes stay at or below it. Deterministic per config.rng_seed.
    """
    rng = np.random.default_rng(config.rng_seed)
    accepted: list[Box2D] = []
    for _ in range(config.count):
        placed = False
        for _ in range(config.max_attempts_per_box):
            cand = sample_box(config.target, image_w, image_h, rng, config.max_attempts_per_box)
            if any(iou(cand, p) > config.max_pbb_iou for p in pbbs):
                continue
            if config.max_pairwise_iou is not None and any(
                iou(cand, b) > config.max_pairwise_iou for b in accepted
            ):
                continue
            accepted.append(cand)
            placed = True
            break
        if not placed:
            raise GenerationExhaustedError(
                f"gave up after {config.max_attempts_per_box} attempts with "
                f"{len(accepted)}/{config.count} boxes placed",
                accepted,
            )
    return accepted


@dataclass
class OverlapReport:
    """Pairwise IOU statistics over a box set."""

    mean_iou: float
    max_iou: float
    histogram: list[int]
    num_pairs: int

    BIN_COUNT = 10

    @property
    def bin_edges(self) -> list[float]:
        return [i / self.BIN_COUNT for i in range(self.BIN_COUNT + 1)]


def overlap_report(boxes: list[Box2D]) -> OverlapReport:
    """Mean, max, and a 10-bin histogram of all unordered pairwise IOUs."""
    n = len(boxes)
    bins = [0] * OverlapReport.BIN_COUNT
    if n < 2:
        return OverlapReport(0.0, 0.0, bins, 0)
    total = 0.0
    top = 0.0
    pairs = 0
    for i in range(n):
        for j in range(i + 1, n):
            v = iou(boxes[i], boxes[j])
            total += v
            top = max(top, v)
            bins[min(int(v * OverlapReport.BIN_COUNT), OverlapReport.BIN_COUNT - 1)] += 1
            pairs += 1
    return OverlapReport(total / pairs, top, bins, pairs)


def frame_rng_seed(seed: int, frame_id: str) -> int:
    """Stable per-frame RNG stream: base seed XOR a 64-bit hash of the frame id."""
    digest = hashlib.sha256(frame_id.encode("utf-8")).digest()
    return (seed ^ int.from_bytes(digest[:8], "big")) & 0xFFFFFFFFFFFFFFFF
