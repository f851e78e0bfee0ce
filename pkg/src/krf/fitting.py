"""Least-squares fits used by the refinement loop.

Both fits minimize summed squared residuals: the translation-only fit has the
centroid-difference closed form, and the full rigid fit is the SVD (Kabsch)
solution with the usual reflection correction.
"""

from __future__ import annotations

import numpy as np

from .errors import DegenerateGeometryError, InvalidInputError
from .geometry import PoseSE3, as_points

_DEGENERACY_RTOL = 1e-9


def fit_translation(matched_source, targets) -> np.ndarray:
    """Translation T minimizing sum_j |targets[j] - (matched_source[j] + T)|^2.

    Closed form: centroid(targets) - centroid(matched_source).
    """
    src = as_points(matched_source, "matched_source")
    tgt = as_points(targets, "targets")
    if src.shape[0] == 0:
        raise InvalidInputError("cannot fit a translation to zero pairs")
    if src.shape != tgt.shape:
        raise InvalidInputError(
            f"point lists must have equal lengths, got {src.shape[0]} and {tgt.shape[0]}"
        )
    return tgt.mean(axis=0) - src.mean(axis=0)


def fit_rigid(source_points, target_points) -> PoseSE3:
    """Rigid pose (R, T) minimizing sum_i |R s_i + T - t_i|^2 (Kabsch).

    Needs >= 3 non-collinear source points; det(R) = +1 is enforced by
    flipping the smallest singular direction when the raw solution reflects.
    """
    # KeypointSet and plain arrays both expose the points via as_points
    src = as_points(getattr(source_points, "points", source_points), "source_points")
    tgt = as_points(getattr(target_points, "points", target_points), "target_points")
    if src.shape != tgt.shape:
        raise InvalidInputError(
            f"point lists must have equal lengths, got {src.shape[0]} and {tgt.shape[0]}"
        )
    if src.shape[0] < 3:
        raise InvalidInputError(f"rigid fit needs >= 3 pairs, got {src.shape[0]}")

    src_c = src.mean(axis=0)
    tgt_c = tgt.mean(axis=0)
    x = src - src_c
    y = tgt - tgt_c

    spread = np.linalg.svd(x, compute_uv=False)
    if spread[1] <= _DEGENERACY_RTOL * max(spread[0], np.finfo(float).tiny):
        raise DegenerateGeometryError(
            "source points are collinear; rotation is not determined"
        )

    h = x.T @ y
    u, _, vt = np.linalg.svd(h)
    d = np.sign(np.linalg.det(vt.T @ u.T))
    r = vt.T @ np.diag([1.0, 1.0, d]) @ u.T
    t = tgt_c - r @ src_c
    return PoseSE3(rotation=r, translation=t)


def rigid_residual_rms(pose: PoseSE3, source_points, target_points) -> float:
    """RMS residual of a pose over corresponding point pairs."""
    src = as_points(getattr(source_points, "points", source_points))
    tgt = as_points(getattr(target_points, "points", target_points))
    res = pose.apply(src) - tgt
    return float(np.sqrt(np.mean(np.sum(res * res, axis=1))))
