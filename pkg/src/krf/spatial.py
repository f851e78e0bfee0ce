"""Spatial index over point-cloud positions.

Backed by scipy's cKDTree for candidate retrieval, with every distance
re-computed in numpy so that results (including ties, which are broken by
lowest point index) are defined by this module and not by kd-tree internals.
"""

from __future__ import annotations

import numpy as np
from scipy.spatial import cKDTree

from .errors import InvalidInputError
from .geometry import ColoredPointCloud, as_points, as_vec3


class SpatialIndex:
    """Immutable nearest-neighbor / radius index over a fixed set of points.

    Queries return indices into the source point order. Ties on distance are
    broken deterministically by the lowest index.
    """

    def __init__(self, points, leaf_size: int = 16):
        if isinstance(points, ColoredPointCloud):
            points = points.positions
        pts = as_points(points)
        if pts.shape[0] == 0:
            raise InvalidInputError("cannot index an empty cloud")
        self._points = pts.copy()
        self._points.flags.writeable = False
        self._tree = cKDTree(self._points, leafsize=leaf_size)

    def __len__(self):
        return self._points.shape[0]

    @property
    def points(self):
        return self._points

    def _exact_dists(self, idx, query):
        return np.linalg.norm(self._points[idx] - query, axis=-1)

    def nearest(self, query):
        """Index and distance of the closest point to ``query``.

        Returns (index, distance); ties resolved to the lowest index.
        """
        q = as_vec3(query, "query")
        n = len(self)
        k = min(4, n)
        while True:
            _, idx = self._tree.query(q, k=k)
            idx = np.atleast_1d(idx)
            dists = self._exact_dists(idx, q)
            dmin = dists.min()
            # safe to stop once the worst fetched candidate is strictly
            # farther than the best, or everything was fetched
            if k == n or dists.max() > dmin:
                tied = idx[dists == dmin]
                return int(tied.min()), float(dmin)
            k = min(2 * k, n)

    def k_nearest(self, query, k: int):
        """The k closest points, sorted by (distance, index) ascending.

        Returns a list of (index, distance) pairs, min(k, n) long.
        """
        if k < 1:
            raise InvalidInputError(f"k must be >= 1, got {k}")
        q = as_vec3(query, "query")
        n = len(self)
        k_eff = min(k, n)
        fetch = k_eff
        while True:
            _, idx = self._tree.query(q, k=fetch)
            idx = np.atleast_1d(idx)
            dists = self._exact_dists(idx, q)
            order = np.lexsort((idx, dists))
            idx, dists = idx[order], dists[order]
            # a tie crossing the k-th position may continue past what was
            # fetched; enlarge until the boundary is strict
            if fetch == n or dists[fetch - 1] > dists[k_eff - 1]:
                break
            fetch = min(2 * fetch, n)
        return [(int(i), float(d)) for i, d in zip(idx[:k_eff], dists[:k_eff])]

    def radius_search(self, center, radius: float):
        """Indices of all points strictly within ``radius`` of ``center``.

        Returns a sorted int array; strict inequality, so points exactly at
        the radius are excluded.
        """
        if not radius > 0.0:
            raise InvalidInputError(f"radius must be > 0, got {radius}")
        c = as_vec3(center, "center")
        idx = np.asarray(self._tree.query_ball_point(c, radius), dtype=np.intp)
        if idx.size == 0:
            return idx
        keep = self._exact_dists(idx, c) < radius
        return np.sort(idx[keep])

    # Batch variants used by the refinement inner loop. Semantics match the
    # scalar queries except that tie-breaking is left to the caller (the
    # caller re-ranks candidates anyway).

    def nearest_batch(self, queries):
        q = as_points(queries, "queries")
        dists, idx = self._tree.query(q, k=1)
        exact = np.linalg.norm(self._points[idx] - q, axis=1)
        return np.asarray(idx, dtype=np.intp), exact

    def k_nearest_batch(self, queries, k: int):
        """(m, k) candidate indices and exact distances, k clipped to n."""
        if k < 1:
            raise InvalidInputError(f"k must be >= 1, got {k}")
        q = as_points(queries, "queries")
        n = len(self)
        k_eff = min(k, n)
        if k_eff == n:
            # full scan: every point is a candidate, no tree walk needed
            idx = np.broadcast_to(np.arange(n, dtype=np.intp), (q.shape[0], n))
            exact = np.linalg.norm(q[:, None, :] - self._points[None, :, :], axis=2)
            return idx, exact
        _, idx = self._tree.query(q, k=k_eff)
        idx = np.asarray(idx, dtype=np.intp).reshape(q.shape[0], k_eff)
        exact = np.linalg.norm(self._points[idx] - q[:, None, :], axis=2)
        return idx, exact


def build(cloud: ColoredPointCloud, leaf_size: int = 16) -> SpatialIndex:
    """Build a SpatialIndex over a cloud's positions."""
    return SpatialIndex(cloud, leaf_size=leaf_size)


def brute_force_nearest(cloud, query):
    """Linear-scan nearest neighbor; the ground-truth oracle for the index.

    Accepts a ColoredPointCloud or an (n, 3) array. Ties break to the lowest
    index, matching SpatialIndex.nearest.
    """
    pts = cloud.positions if isinstance(cloud, ColoredPointCloud) else as_points(cloud)
    if pts.shape[0] == 0:
        raise InvalidInputError("cannot search an empty cloud")
    q = as_vec3(query, "query")
    d = np.linalg.norm(pts - q, axis=1)
    i = int(np.argmin(d))  # argmin returns the first (lowest) index on ties
    return i, float(d[i])
