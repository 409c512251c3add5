"""Project 3D points into the image plane and transfer 2D box labels to 3D clusters."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import BehindCameraError
from .model import NON_PEDESTRIAN, PEDESTRIAN, Box2D, CameraProjection, LabeledCluster, PointCloud

DEPTH_EPS = 1e-9


def project_point(camera: CameraProjection, point) -> tuple[float, float]:
    """Map one 3D point to pixel coordinates (u, v).

    Computes (u', v', w') = p . (x, y, z, 1) and returns (u'/w', v'/w').
    Raises BehindCameraError when w' <= 1e-9.
    """
    x, y, z = (float(v) for v in point)
    p = camera.p
    w = p[2, 0] * x + p[2, 1] * y + p[2, 2] * z + p[2, 3]
    if w <= DEPTH_EPS:
        raise BehindCameraError(f"point {(x, y, z)} has projective depth {w}")
    u = (p[0, 0] * x + p[0, 1] * y + p[0, 2] * z + p[0, 3]) / w
    v = (p[1, 0] * x + p[1, 1] * y + p[1, 2] * z + p[1, 3]) / w
    return u, v


def project_points(camera: CameraProjection, points: np.ndarray):
    """Vectorized projection.

    Returns (uv, valid): uv is (N, 2) with rows defined only where valid,
    valid marks points with projective depth above the epsilon.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.size == 0:
        return np.empty((0, 2)), np.empty(0, dtype=bool)
    p = camera.p
    x, y, z = pts[:, 0], pts[:, 1], pts[:, 2]
    # Column-wise arithmetic keeps these floats identical to project_point's.
    w = p[2, 0] * x + p[2, 1] * y + p[2, 2] * z + p[2, 3]
    valid = w > DEPTH_EPS
    safe_w = np.where(valid, w, 1.0)
    uv = np.empty((pts.shape[0], 2))
    uv[:, 0] = (p[0, 0] * x + p[0, 1] * y + p[0, 2] * z + p[0, 3]) / safe_w
    uv[:, 1] = (p[1, 0] * x + p[1, 1] * y + p[1, 2] * z + p[1, 3]) / safe_w
    return uv, valid


def _points_in_box(uv: np.ndarray, valid: np.ndarray, box: Box2D) -> np.ndarray:
    inside = (
        (uv[:, 0] >= box.x_min)
        & (uv[:, 0] < box.x_max)
        & (uv[:, 1] >= box.y_min)
        & (uv[:, 1] < box.y_max)
    )
    return inside & valid


def transfer_labels(
    cloud: PointCloud,
    pbb: list[Box2D],
    npbb: list[Box2D],
    camera: CameraProjection,
    min_points: int = 1024,
    source: str = "auto",
) -> list[LabeledCluster]:
    """Back-project 2D boxes onto the cloud and cut out labeled clusters.

    A point joins a box's cluster when its projection lies inside the box
    (half-open test). Points behind the camera never label. A point inside
    both a pedestrian and a non-pedestrian box counts only for the pedestrian
    one. Clusters with at most ``min_points`` points are discarded. Output
    order is pedestrian boxes in input order, then non-pedestrian boxes.
    """
    if min_points < 0:
        raise ValueError("min_points must be >= 0")
    uv, valid = project_points(camera, cloud.points)
    in_pbb = np.zeros(len(cloud), dtype=bool)
    pbb_masks = []
    for box in pbb:
        mask = _points_in_box(uv, valid, box)
        pbb_masks.append(mask)
        in_pbb |= mask

    clusters: list[LabeledCluster] = []
    for box, mask in zip(pbb, pbb_masks):
        if int(mask.sum()) > min_points:
            clusters.append(
                LabeledCluster(
                    cloud.points[mask],
                    label=PEDESTRIAN,
                    source_box=box,
                    scene_id=cloud.scene_id,
                    frame_id=cloud.frame_id,
                    source=source,
                )
            )
    for box in npbb:
        mask = _points_in_box(uv, valid, box) & ~in_pbb
        if int(mask.sum()) > min_points:
            clusters.append(
                LabeledCluster(
                    cloud.points[mask],
                    label=NON_PEDESTRIAN,
                    source_box=box,
                    scene_id=cloud.scene_id,
                    frame_id=cloud.frame_id,
                    source=source,
                )
            )
    return clusters


@dataclass
class BoxCoverage:
    frame_id: str
    box_index: int
    label: str
    point_count: int
    kept: bool


@dataclass
class CoverageReport:
    """Per-frame accounting of how transfer went over a set of clouds."""

    total_points: int = 0
    labeled_points: int = 0
    unlabeled_points: int = 0
    behind_camera_points: int = 0
    kept_clusters: int = 0
    discarded_clusters: int = 0
    boxes: list[BoxCoverage] = field(default_factory=list)

    def consistent(self) -> bool:
        return self.labeled_points + self.unlabeled_points + self.behind_camera_points == self.total_points


def coverage_report(
    clouds: list[PointCloud],
    boxes_by_frame: dict[str, list[Box2D]],
    camera: CameraProjection,
    min_points: int = 1024,
) -> CoverageReport:
    """Summarize transfer coverage: points per box, discards, behind-camera counts.

    Pedestrian-labeled boxes take precedence for the labeled-point accounting,
    matching transfer_labels.
    """
    report = CoverageReport()
    for cloud in clouds:
        frame_boxes = boxes_by_frame.get(cloud.frame_id, [])
        uv, valid = project_points(camera, cloud.points)
        report.total_points += len(cloud)
        report.behind_camera_points += int((~valid).sum()) if len(cloud) else 0

        in_pbb = np.zeros(len(cloud), dtype=bool)
        for box in frame_boxes:
            if box.label == PEDESTRIAN:
                in_pbb |= _points_in_box(uv, valid, box)
        in_any = np.zeros(len(cloud), dtype=bool)
        for idx, box in enumerate(frame_boxes):
            mask = _points_in_box(uv, valid, box)
            if box.label != PEDESTRIAN:
                mask = mask & ~in_pbb
            in_any |= mask
            count = int(mask.sum())
            kept = count > min_points
            report.boxes.append(BoxCoverage(cloud.frame_id, idx, box.label, count, kept))
            if kept:
                report.kept_clusters += 1
            else:
                report.discarded_clusters += 1
        report.labeled_points += int(in_any.sum())
        report.unlabeled_points += int((valid & ~in_any).sum()) if len(cloud) else 0
    return report
