"""Color-weighted distance and matching, checked against brute-force argmin."""

import numpy as np
import pytest

from conftest import make_cloud, make_mixed_cloud
from krf.correspondence import (
    ColorDistanceParams,
    colored_distance,
    euclidean_distance,
    match_point,
    match_points_batch,
)
from krf.errors import InvalidInputError
from krf.geometry import ColoredPoint, ColoredPointCloud
from krf.spatial import SpatialIndex


def brute_match(target_pos, target_color, source_pos, source_colors, epsilon):
    """Global argmin of the dispatched distance, ties to the lowest index."""
    d1 = np.linalg.norm(source_pos - target_pos, axis=1)
    if target_color is None:
        d = d1
    else:
        d2 = np.linalg.norm(source_colors - target_color, axis=1)
        w = np.maximum(d1 / epsilon, 1.0)
        d = d1 + d2 / w
    best = d.min()
    return int(np.flatnonzero(d == best)[0]), float(best)


class TestColoredDistance:
    def test_close_pair_with_color_mismatch(self):
        # distance 1e-6 apart (well within epsilon, so w = 1): opposite
        # colors (1,0,0) vs (0,1,0) contribute their full norm sqrt(2)
        a = ColoredPoint(position=[0.0, 0.0, 0.0], color=[1.0, 0.0, 0.0])
        b = ColoredPoint(position=[1e-6, 0.0, 0.0], color=[0.0, 1.0, 0.0])
        d = colored_distance(a, b, ColorDistanceParams(epsilon=0.02))
        assert d == pytest.approx(np.sqrt(2.0) + 1e-6, abs=1e-9)

    def test_distant_pair_attenuates_color(self):
        # positions 0.04 apart, epsilon 0.02 -> w = 2; colors (0,0,0) vs
        # (1,0,1): |dc| = sqrt(2), so D = 0.04 + sqrt(2)/2 = 0.7471067811...
        a = ColoredPoint(position=[0.0, 0.0, 0.0], color=[0.0, 0.0, 0.0])
        b = ColoredPoint(position=[0.04, 0.0, 0.0], color=[1.0, 0.0, 1.0])
        d = colored_distance(a, b, ColorDistanceParams(epsilon=0.02))
        assert d == pytest.approx(0.04 + np.sqrt(2.0) / 2.0, abs=1e-9)

    def test_equal_colors_reduce_to_euclidean(self, rng):
        for _ in range(20):
            p, q = rng.normal(size=3), rng.normal(size=3)
            c = rng.uniform(0, 1, size=3)
            a = ColoredPoint(position=p, color=c)
            b = ColoredPoint(position=q, color=c)
            d = colored_distance(a, b, ColorDistanceParams())
            assert d == pytest.approx(euclidean_distance(a, b), abs=1e-15)

    def test_never_below_euclidean(self, rng):
        params = ColorDistanceParams()
        for _ in range(50):
            a = ColoredPoint(position=rng.normal(size=3), color=rng.uniform(0, 1, 3))
            b = ColoredPoint(position=rng.normal(size=3), color=rng.uniform(0, 1, 3))
            assert colored_distance(a, b, params) >= euclidean_distance(a, b)

    def test_requires_colors(self):
        a = ColoredPoint(position=np.zeros(3))
        b = ColoredPoint(position=np.ones(3), color=[0.1, 0.2, 0.3])
        with pytest.raises(InvalidInputError):
            colored_distance(a, b, ColorDistanceParams())

    def test_epsilon_must_be_positive(self):
        with pytest.raises(InvalidInputError):
            ColorDistanceParams(epsilon=0.0)


class TestMatchPoint:
    def test_uncolored_target_takes_euclidean_nearest(self, rng):
        source = make_cloud(rng, 40, colored=True)
        index = SpatialIndex(source.positions)
        target = ColoredPoint(position=rng.normal(size=3))
        got = match_point(target, index, source, ColorDistanceParams())
        expected, _ = brute_match(
            target.position, None, source.positions, source.colors, 0.02
        )
        assert got == expected

    def test_color_overrides_pure_proximity(self):
        # two candidates ~equally near in space; the farther one matches in
        # color, and within epsilon color dominates the choice
        positions = np.array([[0.001, 0.0, 0.0], [0.002, 0.0, 0.0]])
        colors = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
        source = ColoredPointCloud.colored(positions, colors)
        index = SpatialIndex(positions)
        target = ColoredPoint(position=[0.0, 0.0, 0.0], color=[0.0, 1.0, 0.0])
        got = match_point(target, index, source, ColorDistanceParams(), k_candidates=2)
        assert got == 1

    def test_full_candidate_set_is_global_argmin(self, rng):
        source = make_cloud(rng, 60, colored=True)
        index = SpatialIndex(source.positions)
        params = ColorDistanceParams()
        for _ in range(25):
            target = ColoredPoint(
                position=rng.uniform(-1, 1, 3), color=rng.uniform(0, 1, 3)
            )
            got = match_point(target, index, source, params, k_candidates=60)
            expected, _ = brute_match(
                target.position, target.color, source.positions, source.colors, 0.02
            )
            assert got == expected

    def test_source_must_be_fully_colored(self, rng):
        source = make_mixed_cloud(rng, 10)
        index = SpatialIndex(source.positions)
        with pytest.raises(InvalidInputError, match="fully colored"):
            match_point(ColoredPoint(position=np.zeros(3)), index, source,
                        ColorDistanceParams())

    def test_k_candidates_validated(self, rng):
        source = make_cloud(rng, 10, colored=True)
        index = SpatialIndex(source.positions)
        with pytest.raises(InvalidInputError):
            match_point(ColoredPoint(position=np.zeros(3)), index, source,
                        ColorDistanceParams(), k_candidates=0)


class TestMatchPointsBatch:
    def _batch_vs_single(self, rng, k_candidates, n_source=50, n_target=40):
        source = make_cloud(rng, n_source, colored=True)
        target = make_mixed_cloud(rng, n_target)
        index = SpatialIndex(source.positions)
        params = ColorDistanceParams()
        idx, dist = match_points_batch(
            target.positions, target.colors, target.color_mask,
            index, source.colors, params, k_candidates,
        )
        assert idx.shape == (n_target,) and dist.shape == (n_target,)
        for j in range(n_target):
            single = match_point(target.point(j), index, source, params, k_candidates)
            assert idx[j] == single, f"row {j} disagrees with match_point"
        return idx, dist

    def test_agrees_with_match_point_rowwise(self, rng):
        self._batch_vs_single(rng, k_candidates=10)

    def test_full_scan_branch_agrees_with_match_point(self, rng):
        self._batch_vs_single(rng, k_candidates=50)

    def test_oversized_k_agrees_with_brute_force(self, rng):
        source = make_cloud(rng, 30, colored=True)
        target = make_mixed_cloud(rng, 20)
        index = SpatialIndex(source.positions)
        idx, dist = match_points_batch(
            target.positions, target.colors, target.color_mask,
            index, source.colors, ColorDistanceParams(), 1000,
        )
        for j in range(20):
            color = target.colors[j] if target.color_mask[j] else None
            ei, ed = brute_match(
                target.positions[j], color, source.positions, source.colors, 0.02
            )
            assert idx[j] == ei
            assert dist[j] == pytest.approx(ed, abs=1e-12)

    def test_dispatched_distance_matches_metric_used(self, rng):
        source = make_cloud(rng, 25, colored=True)
        target = make_mixed_cloud(rng, 15)
        index = SpatialIndex(source.positions)
        params = ColorDistanceParams()
        idx, dist = match_points_batch(
            target.positions, target.colors, target.color_mask,
            index, source.colors, params, 25,
        )
        for j in range(15):
            src_pt = source.point(idx[j])
            if target.color_mask[j]:
                expected = colored_distance(target.point(j), src_pt, params)
            else:
                expected = euclidean_distance(target.point(j), src_pt)
            assert dist[j] == pytest.approx(expected, abs=1e-12)

    def test_ties_break_to_lowest_source_index(self):
        # identical source points: every tie must resolve to index 0
        positions = np.zeros((4, 3))
        colors = np.full((4, 3), 0.5)
        index = SpatialIndex(positions)
        idx, _ = match_points_batch(
            np.array([[0.1, 0.0, 0.0]]), np.array([[0.5, 0.5, 0.5]]),
            np.array([True]), index, colors, ColorDistanceParams(), 4,
        )
        assert idx[0] == 0

    def test_empty_target_batch(self, rng):
        source = make_cloud(rng, 10, colored=True)
        index = SpatialIndex(source.positions)
        idx, dist = match_points_batch(
            np.empty((0, 3)), np.empty((0, 3)), np.empty(0, dtype=bool),
            index, source.colors, ColorDistanceParams(), 5,
        )
        assert idx.shape == (0,) and dist.shape == (0,)
