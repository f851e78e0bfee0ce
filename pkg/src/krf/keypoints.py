"""Model keypoint selection by farthest point sampling."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError
from .geometry import ColoredPointCloud, as_points

DEFAULT_KEYPOINT_COUNT = 8


@dataclass(frozen=True)
class KeypointSet:
    """Object-frame landmark points driving per-keypoint refinement."""

    points: np.ndarray

    def __post_init__(self):
        pts = as_points(self.points, "keypoints")
        if pts.shape[0] < 3:
            raise InvalidInputError(f"a keypoint set needs >= 3 points, got {pts.shape[0]}")
        pts = pts.copy()
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)

    def __len__(self):
        return self.points.shape[0]


def default_seed_index(model: ColoredPointCloud) -> int:
    """Deterministic start point: the point farthest from the centroid."""
    c = model.positions.mean(axis=0)
    return int(np.argmax(np.linalg.norm(model.positions - c, axis=1)))


def farthest_point_sampling(
    model: ColoredPointCloud, k: int = DEFAULT_KEYPOINT_COUNT, seed_index: int | None = None
) -> KeypointSet:
    """Greedy max-min selection of k keypoints from the model cloud.

    Starting from ``seed_index`` (default: the point farthest from the
    centroid), repeatedly adds the point maximizing the minimum distance to
    the points already chosen. Deterministic given (model order, k,
    seed_index); every output point is an exact member of the model cloud.
    """
    n = len(model)
    if k < 3:
        raise InvalidInputError(f"keypoint count must be >= 3, got {k}")
    if k > n:
        raise InvalidInputError(f"cannot sample {k} keypoints from a {n}-point cloud")
    if seed_index is None:
        seed_index = default_seed_index(model)
    if not 0 <= seed_index < n:
        raise InvalidInputError(f"seed_index {seed_index} out of range for {n} points")

    pts = model.positions
    chosen = [seed_index]
    min_dist = np.linalg.norm(pts - pts[seed_index], axis=1)
    while len(chosen) < k:
        nxt = int(np.argmax(min_dist))  # first max wins ties (lowest index)
        chosen.append(nxt)
        min_dist = np.minimum(min_dist, np.linalg.norm(pts - pts[nxt], axis=1))
    return KeypointSet(points=pts[chosen])
