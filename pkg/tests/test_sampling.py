import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pedcloud.errors import DegenerateClusterError, TooFewPointsError
from pedcloud.sampling import (
    AugmentSpec,
    SampleSpec,
    apply_sample_spec,
    augment,
    fps,
    normalize,
    random_sample,
    voxel_grid_filter,
)
from oracles import fps_bruteforce, voxel_groups_bruteforce


def rand_cloud(rng, n, scale=1.0):
    return rng.normal(scale=scale, size=(n, 3))


class TestRandomSample:
    def test_k_equals_n(self):
        pts = np.arange(30.0).reshape(10, 3)
        assert np.array_equal(random_sample(pts, 10, rng_seed=1), pts)

    def test_subset_preserving_order(self):
        rng = np.random.default_rng(0)
        pts = rand_cloud(rng, 7063)
        out = random_sample(pts, 1024, rng_seed=42)
        assert out.shape == (1024, 3)
        rows = {tuple(p): i for i, p in enumerate(pts)}
        positions = [rows[tuple(p)] for p in out]
        assert positions == sorted(positions)

    def test_deterministic(self):
        pts = rand_cloud(np.random.default_rng(1), 100)
        assert np.array_equal(random_sample(pts, 10, rng_seed=5), random_sample(pts, 10, rng_seed=5))

    def test_too_few(self):
        with pytest.raises(TooFewPointsError):
            random_sample(np.zeros((3, 3)), 4)


class TestVoxelGridFilter:
    def test_cube_collapses_to_center(self):
        corners = np.array(
            [[x, y, z] for x in (0.0, 1.0) for y in (0.0, 1.0) for z in (0.0, 1.0)]
        )
        out = voxel_grid_filter(corners, voxel_size=2.5)
        assert out.shape == (1, 3)
        assert np.allclose(out[0], [0.5, 0.5, 0.5])

    def test_tiny_voxels_keep_all_points(self):
        rng = np.random.default_rng(2)
        pts = rand_cloud(rng, 50, scale=5.0)
        out = voxel_grid_filter(pts, voxel_size=1e-6)
        assert out.shape == pts.shape
        assert set(map(tuple, np.round(out, 9))) == set(map(tuple, np.round(pts, 9)))

    def test_two_blobs_two_centroids(self):
        rng = np.random.default_rng(3)
        a = rng.normal(size=(40, 3)) * 0.05
        b = rng.normal(size=(40, 3)) * 0.05 + 10.0
        out = voxel_grid_filter(np.vstack([a, b]), voxel_size=5.0)
        assert out.shape == (2, 3)
        groups = voxel_groups_bruteforce(np.vstack([a, b]), 5.0)
        expected = sorted(
            np.vstack([a, b])[idx].mean(axis=0).tolist() for idx in groups.values()
        )
        assert np.allclose(sorted(out.tolist()), expected, atol=1e-12)

    def test_empty_input(self):
        assert voxel_grid_filter(np.empty((0, 3)), 0.5).shape == (0, 3)

    def test_matches_bruteforce_grouping(self):
        rng = np.random.default_rng(4)
        for _ in range(25):
            pts = rand_cloud(rng, int(rng.integers(1, 120)), scale=3.0)
            size = float(rng.uniform(0.2, 2.0))
            out = voxel_grid_filter(pts, size)
            groups = voxel_groups_bruteforce(pts, size)
            assert out.shape[0] == len(groups)
            means = {tuple(np.round(pts[idx].mean(axis=0), 10)) for idx in groups.values()}
            got = {tuple(np.round(p, 10)) for p in out}
            assert got == means
            # Groups partition the input.
            all_members = sorted(i for idx in groups.values() for i in idx)
            assert all_members == list(range(len(pts)))

    def test_output_sorted_by_voxel_index(self):
        pts = np.array([[2.5, 0, 0], [0.1, 0, 0], [1.3, 0, 0]])
        out = voxel_grid_filter(pts, voxel_size=1.0)
        assert np.array_equal(out, np.array([[0.1, 0, 0], [1.3, 0, 0], [2.5, 0, 0]]))


class TestFps:
    def test_k1_returns_seed(self):
        pts = np.array([[0.0, 0, 0], [5, 0, 0], [1, 1, 1]])
        assert fps(pts, 1, seed_index=2).tolist() == [2]

    def test_collinear_tie_breaks_low(self):
        pts = np.array([[float(i), 0.0, 0.0] for i in range(10)])
        assert fps(pts, 3, seed_index=0).tolist() == [0, 9, 4]

    def test_k_equals_n_is_permutation(self):
        rng = np.random.default_rng(5)
        pts = rand_cloud(rng, 33)
        sel = fps(pts, 33)
        assert sorted(sel.tolist()) == list(range(33))

    def test_default_seed_nearest_centroid(self):
        pts = np.array([[0.0, 0, 0], [1, 0, 0], [0.9, 0, 0], [4, 0, 0]])
        centroid = pts.mean(axis=0)
        d = ((pts - centroid) ** 2).sum(axis=1)
        assert fps(pts, 1).tolist() == [int(np.argmin(d))]

    def test_too_few(self):
        with pytest.raises(TooFewPointsError):
            fps(np.zeros((3, 3)), 4)
        with pytest.raises(TooFewPointsError):
            fps(np.zeros((3, 3)), 0)

    def test_matches_bruteforce_oracle(self):
        rng = np.random.default_rng(6)
        for _ in range(40):
            n = int(rng.integers(1, 64))
            k = int(rng.integers(1, n + 1))
            pts = rand_cloud(rng, n, scale=2.0)
            assert fps(pts, k).tolist() == fps_bruteforce(pts, k)

    def test_min_distance_beats_random_subsets(self):
        rng = np.random.default_rng(7)
        wins = 0
        trials = 60
        for t in range(trials):
            pts = rand_cloud(rng, 256)
            sel = pts[fps(pts, 32)]
            rand = random_sample(pts, 32, rng_seed=t)

            def min_pairwise(a):
                d = np.linalg.norm(a[:, None, :] - a[None, :, :], axis=2)
                return d[np.triu_indices(len(a), k=1)].min()

            wins += min_pairwise(sel) >= min_pairwise(rand)
        assert wins >= 0.95 * trials


class TestNormalize:
    def test_two_point_cluster(self):
        out = normalize(np.array([[1.0, 1, 1], [3, 1, 1]]))
        assert np.allclose(out, [[-1, 0, 0], [1, 0, 0]], atol=1e-12)

    def test_idempotent_on_normalized_pair(self):
        pts = np.array([[-1.0, 0, 0], [1, 0, 0]])
        assert np.allclose(normalize(pts), pts, atol=1e-12)

    def test_coincident_points_degenerate(self):
        with pytest.raises(DegenerateClusterError):
            normalize(np.array([[5.0, 5, 5]] * 3))

    def test_coincident_inexact_mean_degenerate(self):
        with pytest.raises(DegenerateClusterError):
            normalize(np.array([[0.1, 0.1, 0.1]] * 3))

    def test_random_clusters_centered_and_scaled(self):
        rng = np.random.default_rng(8)
        for _ in range(200):
            pts = rand_cloud(rng, int(rng.integers(2, 200)), scale=rng.uniform(0.1, 30))
            pts += rng.uniform(-50, 50, size=3)
            out = normalize(pts)
            assert np.abs(out.mean(axis=0)).max() <= 1e-9
            norms = np.linalg.norm(out, axis=1)
            assert 1 - 1e-9 <= norms.max() <= 1.0 + 1e-12

    def test_idempotence_within_tolerance(self):
        rng = np.random.default_rng(9)
        for _ in range(50):
            pts = rand_cloud(rng, 64, scale=4.0) + rng.uniform(-20, 20, size=3)
            once = normalize(pts)
            twice = normalize(once)
            assert np.abs(twice - once).max() <= 1e-9


class TestAugment:
    def test_identity_spec(self):
        spec = AugmentSpec(rotation_range=(0.0, 0.0), jitter_sigma=0.0)
        pts = np.random.default_rng(1).normal(size=(20, 3))
        out = augment(pts, spec, np.random.default_rng(0))
        assert np.array_equal(out, pts)

    def test_quarter_turn_about_z(self):
        spec = AugmentSpec(rotation_axis="z", rotation_range=(math.pi / 2, math.pi / 2), jitter_sigma=0.0)
        out = augment(np.array([[1.0, 0, 0]]), spec, np.random.default_rng(0))
        assert np.allclose(out, [[0, 1, 0]], atol=1e-12)

    def test_rotation_preserves_distances(self):
        rng = np.random.default_rng(10)
        pts = rng.normal(size=(40, 3))
        spec = AugmentSpec(rotation_axis="y", rotation_range=(0.0, 2 * math.pi), jitter_sigma=0.0)
        out = augment(pts, spec, np.random.default_rng(3))
        d_in = np.linalg.norm(pts[:, None] - pts[None, :], axis=2)
        d_out = np.linalg.norm(out[:, None] - out[None, :], axis=2)
        assert np.abs(d_in - d_out).max() < 1e-9

    def test_jitter_clipped_and_count_preserved(self):
        spec = AugmentSpec(rotation_range=(0.0, 0.0), jitter_sigma=0.5, jitter_clip=0.01)
        pts = np.zeros((500, 3))
        out = augment(pts, spec, np.random.default_rng(4))
        assert out.shape == (500, 3)
        assert np.abs(out).max() <= 0.01 + 1e-15


class TestPipeline:
    def test_fps_then_normalize_is_classifier_ready(self):
        rng = np.random.default_rng(11)
        pts = rand_cloud(rng, 4000, scale=1.5) + np.array([3.0, -2.0, 12.0])
        sel = fps(pts, 1024)
        assert sel.shape == (1024,)
        out = normalize(pts[sel])
        assert out.shape == (1024, 3)
        assert np.abs(out.mean(axis=0)).max() <= 1e-9
        assert abs(np.linalg.norm(out, axis=1).max() - 1.0) <= 1e-9

    def test_apply_sample_spec_dispatch(self):
        rng = np.random.default_rng(12)
        pts = rand_cloud(rng, 300)
        assert apply_sample_spec(pts, SampleSpec(method="random", target_count=50)).shape == (50, 3)
        assert apply_sample_spec(pts, SampleSpec(method="fps", target_count=50)).shape == (50, 3)
        voxeled = apply_sample_spec(pts, SampleSpec(method="voxel_grid", voxel_size=0.5))
        assert 1 <= voxeled.shape[0] <= 300


@settings(max_examples=60, deadline=None)
@given(
    st.lists(
        st.tuples(st.floats(-100, 100), st.floats(-100, 100), st.floats(-100, 100)),
        min_size=1,
        max_size=48,
    ),
    st.integers(min_value=1, max_value=48),
)
def test_fps_oracle_property(pts, k):
    pts = np.array(pts, dtype=np.float64).reshape(-1, 3)
    k = min(k, len(pts))
    assert fps(pts, k).tolist() == fps_bruteforce(pts, k)
