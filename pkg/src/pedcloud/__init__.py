"""pedcloud: build labeled 3D cluster datasets from RGB detections plus LIDAR,
and train a hierarchical point-set classifier on them."""

__version__ = "0.1.0"

from .model import (
    NON_PEDESTRIAN,
    PEDESTRIAN,
    Box2D,
    CameraProjection,
    ClusterManifest,
    LabeledCluster,
    ManifestEntry,
    PointCloud,
)

__all__ = [
    "NON_PEDESTRIAN",
    "PEDESTRIAN",
    "Box2D",
    "CameraProjection",
    "ClusterManifest",
    "LabeledCluster",
    "ManifestEntry",
    "PointCloud",
    "__version__",
]
