import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pedcloud import io
from pedcloud.errors import ParseError, SchemaVersionError
from pedcloud.model import (
    Box2D,
    CameraProjection,
    ClusterManifest,
    ManifestEntry,
    PointCloud,
)
from pedcloud.projection import project_point


class TestPointCloudPly:
    def test_parse_two_vertices(self):
        data = b"ply\nformat ascii 1.0\nelement vertex 2\nproperty float x\nproperty float y\nproperty float z\nend_header\n0 0 0\n1 2 3\n"
        cloud = io.parse_point_cloud(data)
        assert cloud.points.tolist() == [[0, 0, 0], [1, 2, 3]]

    def test_missing_end_header(self):
        data = b"ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\nproperty float y\nproperty float z\n0 0 0\n"
        with pytest.raises(ParseError, match="end_header"):
            io.parse_point_cloud(data)

    def test_count_mismatch(self):
        data = b"ply\nformat ascii 1.0\nelement vertex 3\nproperty float x\nproperty float y\nproperty float z\nend_header\n0 0 0\n"
        with pytest.raises(ParseError):
            io.parse_point_cloud(data)

    def test_non_numeric_coordinate(self):
        data = b"ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\nproperty float y\nproperty float z\nend_header\n0 zero 0\n"
        with pytest.raises(ParseError, match="non-numeric"):
            io.parse_point_cloud(data)

    def test_nan_rejected(self):
        data = b"ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\nproperty float y\nproperty float z\nend_header\nnan 0 0\n"
        with pytest.raises(ParseError, match="non-finite"):
            io.parse_point_cloud(data)

    def test_binary_ply_rejected(self):
        data = b"ply\nformat binary_little_endian 1.0\nelement vertex 0\nend_header\n"
        with pytest.raises(ParseError, match="ASCII"):
            io.parse_point_cloud(data)

    def test_empty_cloud_roundtrip(self):
        out = io.write_point_cloud(PointCloud(np.empty((0, 3))))
        assert b"element vertex 0" in out
        assert len(io.parse_point_cloud(out)) == 0

    def test_shortest_decimal_formatting(self):
        out = io.write_point_cloud(PointCloud([[1.5, -2.0, 0.25]]))
        assert out.decode().splitlines()[-1] == "1.5 -2 0.25"

    def test_large_cloud_roundtrips_bit_exact(self):
        rng = np.random.default_rng(0)
        pts = rng.normal(scale=20.0, size=(45_000, 3))
        cloud = PointCloud(pts, frame_id="f7", scene_id="s2")
        again = io.parse_point_cloud(io.write_point_cloud(cloud))
        assert again == cloud

    def test_extra_vertex_properties_are_skipped(self):
        data = (
            b"ply\nformat ascii 1.0\nelement vertex 1\nproperty float intensity\n"
            b"property float x\nproperty float y\nproperty float z\nend_header\n9 1 2 3\n"
        )
        cloud = io.parse_point_cloud(data)
        assert cloud.points.tolist() == [[1, 2, 3]]

    @settings(max_examples=50, deadline=None)
    @given(
        st.lists(
            st.tuples(
                st.floats(-1e6, 1e6, allow_nan=False),
                st.floats(-1e6, 1e6, allow_nan=False),
                st.floats(-1e6, 1e6, allow_nan=False),
            ),
            max_size=64,
        )
    )
    def test_roundtrip_property(self, pts):
        cloud = PointCloud(np.array(pts, dtype=np.float64).reshape(-1, 3))
        assert io.parse_point_cloud(io.write_point_cloud(cloud)) == cloud


class TestDetections:
    def test_single_box(self):
        line = json.dumps(
            {"frame_id": "f1", "boxes": [{"class": "pedestrian", "score": 0.9, "x_min": 10, "y_min": 20, "x_max": 30, "y_max": 80}]}
        ).encode()
        frames = io.parse_detections(line)
        assert list(frames) == ["f1"]
        (box,) = frames["f1"]
        assert box == Box2D(10, 20, 30, 80, label="pedestrian", score=0.9)

    def test_score_out_of_range(self):
        line = json.dumps(
            {"frame_id": "f1", "boxes": [{"class": "pedestrian", "score": 1.3, "x_min": 0, "y_min": 0, "x_max": 1, "y_max": 1}]}
        ).encode()
        with pytest.raises(ParseError):
            io.parse_detections(line)

    def test_inverted_box(self):
        line = json.dumps(
            {"frame_id": "f1", "boxes": [{"class": "pedestrian", "x_min": 5, "y_min": 0, "x_max": 1, "y_max": 1}]}
        ).encode()
        with pytest.raises(ParseError):
            io.parse_detections(line)

    def test_empty_boxes(self):
        frames = io.parse_detections(b'{"frame_id": "f2", "boxes": []}')
        assert frames == {"f2": []}

    def test_bad_json(self):
        with pytest.raises(ParseError, match="bad JSON"):
            io.parse_detections(b"{nope}")

    def test_duplicate_frame(self):
        data = b'{"frame_id": "a", "boxes": []}\n{"frame_id": "a", "boxes": []}'
        with pytest.raises(ParseError, match="duplicate"):
            io.parse_detections(data)

    def test_roundtrip(self):
        frames = {
            "f1": [Box2D(1, 2, 3, 4, label="pedestrian", score=0.5)],
            "f2": [],
            "f3": [Box2D(0.25, 0.5, 10.75, 20.5, label="non_pedestrian")],
        }
        assert io.parse_detections(io.write_detections(frames)) == frames


class TestCalibration:
    def test_identity_intrinsics(self):
        doc = json.dumps({"p": [1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0], "image_width": 1224, "image_height": 1024})
        cam = io.parse_calibration(doc.encode())
        assert cam.image_width == 1224 and cam.image_height == 1024
        # Row-major order check via a hand projection.
        assert project_point(cam, (0, 0, 1)) == (0.0, 0.0)

    def test_wrong_entry_count(self):
        doc = json.dumps({"p": [1] * 11})
        with pytest.raises(ParseError, match="12"):
            io.parse_calibration(doc.encode())

    def test_non_finite(self):
        doc = '{"p": [1,0,0,0, 0,1,0,0, 0,0,1, NaN]}'
        with pytest.raises(ParseError):
            io.parse_calibration(doc.encode())

    def test_non_positive_image(self):
        doc = json.dumps({"p": [1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0], "image_width": 0})
        with pytest.raises(ParseError):
            io.parse_calibration(doc.encode())

    def test_zero_bottom_row(self):
        doc = json.dumps({"p": [1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0]})
        with pytest.raises(ParseError):
            io.parse_calibration(doc.encode())

    def test_roundtrip(self):
        cam = CameraProjection([500, 0, 612, 1.5, 0, 500, 512, 0, 0, 0, 1, 0])
        again = io.parse_calibration(io.write_calibration(cam))
        assert np.array_equal(again.p, cam.p)
        assert (again.image_width, again.image_height) == (cam.image_width, cam.image_height)


def _entry(i: int, **kw) -> ManifestEntry:
    defaults = dict(
        cluster_id=f"c{i:04d}",
        path="",
        label="pedestrian" if i % 3 == 0 else "non_pedestrian",
        scene_id=f"s{i % 5}",
        frame_id=f"f{i:03d}",
        source="manual" if i % 10 == 0 else "auto",
        num_points=1500 + i,
    )
    defaults.update(kw)
    return ManifestEntry(**defaults)


class TestManifest:
    def test_empty_roundtrip(self, tmp_path):
        path = tmp_path / "m.json"
        io.save_manifest(ClusterManifest(), path)
        assert io.load_manifest(path) == ClusterManifest()

    def test_duplicate_cluster_id(self, tmp_path):
        path = tmp_path / "m.json"
        doc = {
            "schema_version": 1,
            "entries": [
                {"cluster_id": "a", "path": "", "label": "pedestrian"},
                {"cluster_id": "a", "path": "", "label": "pedestrian"},
            ],
        }
        path.write_text(json.dumps(doc))
        with pytest.raises(ParseError, match="duplicate"):
            io.load_manifest(path)

    def test_thousand_entry_roundtrip(self, tmp_path):
        box = Box2D(4, 8, 100, 300, label="pedestrian", score=0.75)
        entries = [_entry(i, source_box=box if i % 2 else None) for i in range(1000)]
        manifest = ClusterManifest(entries=entries)
        path = tmp_path / "m.json"
        io.save_manifest(manifest, path)
        assert io.load_manifest(path) == manifest

    def test_unknown_schema_version(self, tmp_path):
        path = tmp_path / "m.json"
        path.write_text(json.dumps({"schema_version": 99, "entries": []}))
        with pytest.raises(SchemaVersionError):
            io.load_manifest(path)

    def test_missing_referenced_file(self, tmp_path):
        manifest = ClusterManifest(entries=[_entry(0, path="nowhere.ply")])
        with pytest.raises(FileNotFoundError):
            io.save_manifest(manifest, tmp_path / "m.json")

    def test_existing_referenced_file_ok(self, tmp_path):
        (tmp_path / "c.ply").write_bytes(io.write_point_cloud(PointCloud([[0, 0, 0]])))
        manifest = ClusterManifest(entries=[_entry(0, path="c.ply")])
        io.save_manifest(manifest, tmp_path / "m.json")
        assert io.load_manifest(tmp_path / "m.json").entries[0].path == "c.ply"

    def test_atomic_write_leaves_no_temp(self, tmp_path):
        path = tmp_path / "m.json"
        io.save_manifest(ClusterManifest(entries=[_entry(1)]), path)
        io.save_manifest(ClusterManifest(entries=[_entry(1), _entry(2)]), path)
        assert sorted(p.name for p in tmp_path.iterdir()) == ["m.json"]
        assert len(io.load_manifest(path)) == 2
