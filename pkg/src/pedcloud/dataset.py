"""Scene-held-out dataset splitting, class regrouping, and composition reports."""

from __future__ import annotations

import logging
from collections import Counter, defaultdict
from dataclasses import dataclass, field

import numpy as np

from .errors import UnknownClassError, UnknownSceneError
from .model import PEDESTRIAN, ClusterManifest, ManifestEntry

log = logging.getLogger(__name__)


@dataclass
class SplitSpec:
    """How to carve a manifest into train, val, and test."""

    test_scenes: list[str] = field(default_factory=list)
    train_fraction: float = 0.8
    stratify_by: tuple[str, ...] = ("label", "source")
    rng_seed: int = 0

    def __post_init__(self):
        if not (0.0 < self.train_fraction < 1.0):
            raise ValueError("train_fraction must lie in (0, 1)")
        for f in self.stratify_by:
            if f not in ("label", "source"):
                raise ValueError(f"cannot stratify by {f!r}")


@dataclass
class ClassRegroup:
    """Merge a named subset of classes into a positive class, the rest negative."""

    positive_classes: list[str]
    name_positive: str = "positive"
    name_negative: str = "negative"

    def __post_init__(self):
        if not self.positive_classes:
            raise ValueError("positive_classes must be nonempty")
        if len(set(self.positive_classes)) != len(self.positive_classes):
            raise ValueError("positive_classes contains duplicates")


def split_dataset(manifest: ClusterManifest, spec: SplitSpec) -> ClusterManifest:
    """Assign splits: held-out test scenes, stratified train/val over the rest.

    Every cluster from a test scene goes to test. Remaining clusters are
    grouped by the stratification fields and each stratum is split so its
    train share is within one cluster of ``train_fraction``. Clusters whose
    review is rejected stay unassigned. Deterministic per seed.
    """
    present = manifest.scenes()
    for scene in spec.test_scenes:
        if scene not in present:
            raise UnknownSceneError(f"test scene {scene!r} not present in manifest")
    test_scenes = set(spec.test_scenes)

    strata: dict[tuple, list[int]] = defaultdict(list)
    new_entries: list[ManifestEntry] = list(manifest.entries)
    for i, e in enumerate(manifest.entries):
        if e.review == "rejected":
            new_entries[i] = e.with_split("unassigned")
        elif e.scene_id in test_scenes:
            new_entries[i] = e.with_split("test")
        else:
            key = tuple(getattr(e, f) for f in spec.stratify_by)
            strata[key].append(i)

    rng = np.random.default_rng(spec.rng_seed)
    for key in sorted(strata):
        idx = strata[key]
        if not idx:
            log.warning("empty stratum %s", key)
            continue
        order = rng.permutation(len(idx))
        n_train = int(np.floor(spec.train_fraction * len(idx) + 0.5))
        for rank, pos in enumerate(order):
            i = idx[pos]
            new_entries[i] = manifest.entries[i].with_split("train" if rank < n_train else "val")
    return ClusterManifest(entries=new_entries, schema_version=manifest.schema_version)


@dataclass
class BinarizeResult:
    """Relabeled listing plus class counts."""

    labels: list[str]
    positive: int
    negative: int
    per_class: dict[str, int]


def binarize_classes(labels, regroup: ClassRegroup) -> BinarizeResult:
    """Relabel every sample positive or negative according to the regroup.

    ``labels`` is an iterable of class names or a ClusterManifest (whose
    entry labels are used). Raises UnknownClassError when a requested
    positive class never occurs in the data.
    """
    if isinstance(labels, ClusterManifest):
        names = [e.label for e in labels.entries]
    else:
        names = [str(l) for l in labels]
    per_class = Counter(names)
    for cls in regroup.positive_classes:
        if cls not in per_class:
            raise UnknownClassError(f"positive class {cls!r} absent from the data")
    positive_set = set(regroup.positive_classes)
    out = [regroup.name_positive if n in positive_set else regroup.name_negative for n in names]
    pos = sum(1 for n in names if n in positive_set)
    return BinarizeResult(
        labels=out,
        positive=pos,
        negative=len(names) - pos,
        per_class=dict(per_class),
    )


@dataclass
class RatioReport:
    """Per-split class and source counts with positive-class share."""

    per_split: dict[str, dict[tuple[str, str], int]]

    def counts(self, split: str) -> tuple[int, int]:
        """(positive, negative) cluster counts for one split."""
        pos = neg = 0
        for (label, _), n in self.per_split.get(split, {}).items():
            if label == PEDESTRIAN:
                pos += n
            else:
                neg += n
        return pos, neg

    def ratio(self, split: str) -> float:
        pos, neg = self.counts(split)
        total = pos + neg
        return pos / total if total else 0.0

    def total(self) -> int:
        return sum(sum(d.values()) for d in self.per_split.values())


def ratio_report(manifest: ClusterManifest) -> RatioReport:
    """Count clusters per split by (label, source) and derive imbalance ratios."""
    per_split: dict[str, dict[tuple[str, str], int]] = defaultdict(lambda: defaultdict(int))
    for e in manifest.entries:
        per_split[e.split][(e.label, e.source)] += 1
    return RatioReport(per_split={s: dict(d) for s, d in per_split.items()})


def training_entries(manifest: ClusterManifest, split: str) -> list[ManifestEntry]:
    """Entries of one split that survived review (rejected ones are excluded)."""
    return [e for e in manifest.entries if e.split == split and e.review != "rejected"]
