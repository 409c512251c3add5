import json

import numpy as np
import pytest

from pedcloud import io
from pedcloud.model import Box2D, PointCloud
from synth import backproject, pinhole_camera, points_for_box


@pytest.fixture(scope="session")
def disk_scene(tmp_path_factory):
    """A small on-disk capture: clouds for two scenes, detections, calibration.

    Every frame carries two fixed-size pedestrian boxes plus a dense uniform
    background, so transferred pedestrian clusters hold several hundred points
    and any similarly sized generated box lands on enough background points.
    """
    root = tmp_path_factory.mktemp("scene")
    cam = pinhole_camera()
    clouds_dir = root / "clouds"
    clouds_dir.mkdir()
    rng = np.random.default_rng(20)

    frames = [(f"f{i}", "s0") for i in range(4)] + [(f"g{i}", "s1") for i in range(2)]
    detections = {}
    for frame_id, scene_id in frames:
        pbbs = [
            Box2D(80.0, 150.0, 280.0, 550.0, label="pedestrian", score=0.95),
            Box2D(820.0, 300.0, 1020.0, 700.0, label="pedestrian", score=0.9),
        ]
        chunks = [points_for_box(cam, b, 300, rng) for b in pbbs]
        u = rng.uniform(0, cam.image_width, size=5120)
        v = rng.uniform(0, cam.image_height, size=5120)
        z = rng.uniform(2.0, 12.0, size=5120)
        background = np.array([backproject(cam, ui, vi, zi) for ui, vi, zi in zip(u, v, z)])
        cloud = PointCloud(np.vstack(chunks + [background]), frame_id=frame_id, scene_id=scene_id)
        io.save_point_cloud(cloud, clouds_dir / f"{frame_id}.ply")
        detections[frame_id] = pbbs

    pbb_path = root / "pbb.jsonl"
    io.save_detections(detections, pbb_path)
    calib_path = root / "calib.json"
    calib_path.write_bytes(io.write_calibration(cam))

    tiny_net = {
        "input_points": 48,
        "sa_layers": [
            {"num_centroids": 12, "branches": [{"radius": 0.4, "max_neighbors": 12, "mlp_widths": [16, 16]}]},
            {"num_centroids": 4, "branches": [{"radius": 0.9, "max_neighbors": 12, "mlp_widths": [32]}]},
        ],
        "global_mlp_widths": [32],
        "head_widths": [16, 2],
        "dropout_keep": 0.8,
    }
    net_path = root / "tiny_net.json"
    net_path.write_text(json.dumps(tiny_net))

    return {
        "root": root,
        "clouds": clouds_dir,
        "pbb": pbb_path,
        "calib": calib_path,
        "camera": cam,
        "net_spec": net_path,
        "detections": detections,
    }
