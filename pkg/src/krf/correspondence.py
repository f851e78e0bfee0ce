"""Color-weighted point distance and color-aware closest-point matching.

The distance between two colored points is their Euclidean distance plus a
color-space distance whose weight decays once the points are farther apart
than a threshold epsilon:

    D1 = |x1 - x2|,  D2 = |c1 - c2|,  w = max(D1 / epsilon, 1),  D = D1 + D2 / w

so the color term is fully counted (w = 1) for spatially close pairs and
attenuated as 1/w for distant ones.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError
from .geometry import ColoredPoint, ColoredPointCloud
from .spatial import SpatialIndex

DEFAULT_EPSILON = 0.02  # meters; full color weight within this spatial distance
DEFAULT_K_CANDIDATES = 10


@dataclass(frozen=True)
class ColorDistanceParams:
    """Tunable of the colored distance: the weight threshold epsilon (m)."""

    epsilon: float = DEFAULT_EPSILON

    def __post_init__(self):
        if not self.epsilon > 0.0:
            raise InvalidInputError(f"epsilon must be > 0, got {self.epsilon}")


def euclidean_distance(p1: ColoredPoint, p2: ColoredPoint) -> float:
    """Plain Euclidean distance between the two positions."""
    return float(np.linalg.norm(p1.position - p2.position))


def colored_distance(p1: ColoredPoint, p2: ColoredPoint, params: ColorDistanceParams) -> float:
    """Distance between two colored points; both must carry color.

    Always >= the Euclidean distance, with equality iff the colors agree.
    """
    if p1.color is None or p2.color is None:
        raise InvalidInputError("colored_distance requires both points to carry color")
    d1 = float(np.linalg.norm(p1.position - p2.position))
    d2 = float(np.linalg.norm(p1.color - p2.color))
    w = max(d1 / params.epsilon, 1.0)
    return d1 + d2 / w


def match_point(
    target_point: ColoredPoint,
    source_index: SpatialIndex,
    source_cloud: ColoredPointCloud,
    params: ColorDistanceParams,
    k_candidates: int = DEFAULT_K_CANDIDATES,
) -> int:
    """Index of the source point matching ``target_point``.

    Uncolored targets match the Euclidean nearest neighbor. Colored targets
    are matched among the ``k_candidates`` Euclidean-nearest source points by
    the colored distance; with k_candidates >= |source| this is the exact
    global argmin. Ties break to the lowest source index.

    The source cloud must be fully colored (it is the object model).
    """
    if len(source_cloud) == 0:
        raise InvalidInputError("cannot match against an empty source cloud")
    if k_candidates < 1:
        raise InvalidInputError(f"k_candidates must be >= 1, got {k_candidates}")
    if not source_cloud.is_fully_colored:
        raise InvalidInputError("source cloud must be fully colored")
    if target_point.color is None:
        idx, _ = source_index.nearest(target_point.position)
        return idx

    candidates = source_index.k_nearest(target_point.position, k_candidates)
    best_idx = -1
    best_d = np.inf
    for idx, d1 in candidates:
        d2 = float(np.linalg.norm(target_point.color - source_cloud.colors[idx]))
        w = max(d1 / params.epsilon, 1.0)
        d = d1 + d2 / w
        if d < best_d or (d == best_d and idx < best_idx):
            best_idx, best_d = idx, d
    return best_idx


def match_points_batch(
    target_positions: np.ndarray,
    target_colors: np.ndarray,
    target_color_mask: np.ndarray,
    source_index: SpatialIndex,
    source_colors: np.ndarray,
    params: ColorDistanceParams,
    k_candidates: int,
):
    """Vectorized match of many target points against one source cloud.

    Returns (match_indices, dispatched_distances) where the distance is the
    colored distance for colored targets and the Euclidean distance otherwise,
    i.e. exactly the quantity each match minimized. Agrees with match_point
    applied row by row.
    """
    m = target_positions.shape[0]
    match_idx = np.empty(m, dtype=np.intp)
    dispatched = np.empty(m, dtype=np.float64)

    uncolored = ~target_color_mask
    if uncolored.any():
        idx, dist = source_index.nearest_batch(target_positions[uncolored])
        match_idx[uncolored] = idx
        dispatched[uncolored] = dist

    colored = target_color_mask
    if colored.any():
        pos = target_positions[colored]
        col = target_colors[colored]
        cand_idx, d1 = source_index.k_nearest_batch(pos, k_candidates)
        d2 = np.linalg.norm(source_colors[cand_idx] - col[:, None, :], axis=2)
        w = np.maximum(d1 / params.epsilon, 1.0)
        d = d1 + d2 / w
        best = d.min(axis=1, keepdims=True)
        # ties to the lowest source index
        tied = np.where(d == best, cand_idx, np.iinfo(np.intp).max)
        chosen = tied.min(axis=1)
        match_idx[colored] = chosen
        dispatched[colored] = best[:, 0]

    return match_idx, dispatched
