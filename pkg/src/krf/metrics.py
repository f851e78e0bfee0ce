"""Pose-accuracy metrics and the training-loss formulas as pure functions.

ADD is the mean distance between correspondingly indexed model points under
the predicted and ground-truth poses; ADD-S replaces index correspondence
with closest-point matching and is the appropriate variant for symmetric
objects. The accuracy summaries are the exact area under the
accuracy-vs-threshold curve (AUC) and the fraction of frames below a
diameter-relative threshold.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError
from .geometry import ColoredPointCloud, PoseSE3
from .spatial import SpatialIndex


def max_pairwise_distance(positions: np.ndarray) -> float:
    """Exact maximum pairwise distance, blocked to bound memory."""
    n = positions.shape[0]
    if n < 2:
        return 0.0
    best = 0.0
    block = 2048
    for i in range(0, n, block):
        chunk = positions[i : i + block]
        d2 = np.sum((chunk[:, None, :] - positions[None, :, :]) ** 2, axis=2)
        best = max(best, float(d2.max()))
    return float(np.sqrt(best))


@dataclass(frozen=True)
class ObjectModel:
    """An object's model cloud plus the metadata the metrics need."""

    cloud: ColoredPointCloud
    symmetric: bool
    diameter: float

    def __post_init__(self):
        if len(self.cloud) == 0:
            raise InvalidInputError("object model cloud must be non-empty")
        if not self.diameter > 0.0:
            raise InvalidInputError(f"diameter must be > 0, got {self.diameter}")

    @classmethod
    def from_cloud(cls, cloud: ColoredPointCloud, symmetric: bool = False) -> "ObjectModel":
        """Build a model computing the diameter from the cloud itself."""
        return cls(cloud=cloud, symmetric=symmetric,
                   diameter=max_pairwise_distance(cloud.positions))


@dataclass(frozen=True)
class LossWeights:
    """Weights of the combined training loss (keypoint, center, completion)."""

    alpha: float = 1.0
    beta: float = 1.0
    gamma: float = 10.0

    def __post_init__(self):
        if self.alpha < 0 or self.beta < 0 or self.gamma < 0:
            raise InvalidInputError("loss weights must be >= 0")
        if self.alpha == 0 and self.beta == 0 and self.gamma == 0:
            raise InvalidInputError("at least one loss weight must be non-zero")


def add_metric(model: ObjectModel, pred: PoseSE3, gt: PoseSE3) -> float:
    """Mean distance between the model points under the two poses."""
    p = pred.apply(model.cloud.positions)
    g = gt.apply(model.cloud.positions)
    return float(np.linalg.norm(p - g, axis=1).mean())


def add_s_metric(model: ObjectModel, pred: PoseSE3, gt: PoseSE3) -> float:
    """Closest-point variant of ADD for symmetric objects (always <= ADD)."""
    p = pred.apply(model.cloud.positions)
    g = gt.apply(model.cloud.positions)
    _, dists = SpatialIndex(g).nearest_batch(p)
    return float(dists.mean())


def add_s_for(model: ObjectModel, pred: PoseSE3, gt: PoseSE3) -> float:
    """ADD(S): ADD-S when the model is symmetric, ADD otherwise."""
    if model.symmetric:
        return add_s_metric(model, pred, gt)
    return add_metric(model, pred, gt)


def add_auc(distances, max_threshold: float) -> float:
    """Exact area under the accuracy-vs-threshold curve, normalized to [0, 1].

    accuracy(t) is the fraction of distances strictly below t; the integral
    over t in [0, max_threshold] has the closed form
    mean(max(1 - d / max_threshold, 0)).
    """
    d = np.asarray(distances, dtype=np.float64).reshape(-1)
    if d.size == 0:
        raise InvalidInputError("AUC of an empty distance list is undefined")
    if np.any(d < 0) or not np.all(np.isfinite(d)):
        raise InvalidInputError("distances must be finite and >= 0")
    if not max_threshold > 0:
        raise InvalidInputError(f"max_threshold must be > 0, got {max_threshold}")
    return float(np.mean(np.clip(1.0 - d / max_threshold, 0.0, 1.0)))


def accuracy_at_diameter(distances, model: ObjectModel, fraction: float = 0.1) -> float:
    """Fraction of distances strictly below fraction * model diameter."""
    d = np.asarray(distances, dtype=np.float64).reshape(-1)
    if d.size == 0:
        raise InvalidInputError("accuracy of an empty distance list is undefined")
    return float(np.mean(d < fraction * model.diameter))


def chamfer_loss(partial: ColoredPointCloud, dense: ColoredPointCloud) -> float:
    """Symmetric mean nearest-neighbor distance between two clouds (unsquared)."""
    if len(partial) == 0 or len(dense) == 0:
        raise InvalidInputError("chamfer distance needs two non-empty clouds")
    _, pd = SpatialIndex(dense).nearest_batch(partial.positions)
    _, dp = SpatialIndex(partial).nearest_batch(dense.positions)
    return float(pd.mean() + dp.mean())


def offset_loss(predicted_offsets, gt_offsets) -> float:
    """Keypoint-offset loss: (1/N) sum_i sum_j |of_ij - of_ij*|_2.

    Inputs are (N, K, 3); the sum over the K offsets is not averaged.
    """
    pred = np.asarray(predicted_offsets, dtype=np.float64)
    gt = np.asarray(gt_offsets, dtype=np.float64)
    if pred.shape != gt.shape:
        raise InvalidInputError(f"offset shapes differ: {pred.shape} vs {gt.shape}")
    if pred.ndim != 3 or pred.shape[2] != 3 or pred.shape[0] < 1:
        raise InvalidInputError(f"offsets must have shape (N, K, 3), got {pred.shape}")
    per_offset = np.linalg.norm(pred - gt, axis=2)
    return float(per_offset.sum(axis=1).mean())


def combined_loss(l_kp: float, l_c: float, l_cd: float, w: LossWeights) -> float:
    """Weighted sum of the keypoint, center and completion losses."""
    if l_kp < 0 or l_c < 0 or l_cd < 0:
        raise InvalidInputError("loss terms must be >= 0")
    return w.alpha * l_kp + w.beta * l_c + w.gamma * l_cd
