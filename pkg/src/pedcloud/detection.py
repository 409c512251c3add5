"""Detector output filtering and IOU-based matching against ground truth."""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import MissingScoreError
from .model import Box2D


def iou(a: Box2D, b: Box2D) -> float:
    """Intersection area over union area of two boxes, in [0, 1]."""
    ix = min(a.x_max, b.x_max) - max(a.x_min, b.x_min)
    iy = min(a.y_max, b.y_max) - max(a.y_min, b.y_min)
    if ix <= 0.0 or iy <= 0.0:
        return 0.0
    inter = ix * iy
    return inter / (a.area + b.area - inter)


def filter_detections(boxes: list[Box2D], conf_thresh: float, nms_iou: float) -> list[Box2D]:
    """Drop low-confidence boxes, then apply greedy non-maximum suppression.

    Boxes scoring below ``conf_thresh`` are removed. Survivors are visited by
    descending score (ties prefer larger area, then input order); a box is
    kept iff its IOU with every already-kept box is at most ``nms_iou``.
    """
    for b in boxes:
        if b.score is None:
            raise MissingScoreError("confidence filtering requires scores on every box")
    survivors = [(i, b) for i, b in enumerate(boxes) if b.score >= conf_thresh]
    survivors.sort(key=lambda ib: (-ib[1].score, -ib[1].area, ib[0]))
    kept: list[Box2D] = []
    for _, box in survivors:
        if all(iou(box, k) <= nms_iou for k in kept):
            kept.append(box)
    return kept


@dataclass
class MatchResult:
    """Greedy one-to-one matching outcome with derived metrics.

    Counting identities: tp == len(matches), tp + fp == number of
    predictions, tp + fn == number of ground-truth boxes.
    """

    tp: int
    fp: int
    fn: int
    matches: list[tuple[int, int, float]] = field(default_factory=list)

    @property
    def precision(self) -> float:
        if self.tp + self.fp == 0:
            return 1.0 if self.fn == 0 else 0.0
        return self.tp / (self.tp + self.fp)

    @property
    def recall(self) -> float:
        if self.tp + self.fn == 0:
            return 1.0 if self.fp == 0 else 0.0
        return self.tp / (self.tp + self.fn)

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 0.0 if p + r == 0.0 else 2.0 * p * r / (p + r)


def match_and_score(preds: list[Box2D], gts: list[Box2D], iou_thresh: float = 0.5) -> MatchResult:
    """Match predictions to ground truth greedily by score, strict IOU threshold.

    Predictions are visited by descending score when all carry one, else in
    input order. Each prediction claims the unmatched ground-truth box of
    highest IOU, provided that IOU exceeds ``iou_thresh``.
    """
    order = list(range(len(preds)))
    if preds and all(p.score is not None for p in preds):
        order.sort(key=lambda i: -preds[i].score)
    gt_taken = [False] * len(gts)
    matches: list[tuple[int, int, float]] = []
    for i in order:
        best_j, best_iou = -1, iou_thresh
        for j, gt in enumerate(gts):
            if gt_taken[j]:
                continue
            v = iou(preds[i], gt)
            if v > best_iou:
                best_j, best_iou = j, v
        if best_j >= 0:
            gt_taken[best_j] = True
            matches.append((i, best_j, best_iou))
    matches.sort(key=lambda m: m[0])
    tp = len(matches)
    return MatchResult(tp=tp, fp=len(preds) - tp, fn=len(gts) - tp, matches=matches)
