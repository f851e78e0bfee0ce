"""Pluggable point-cloud completion and assembly of the registration target.

Completion densifies the visible object-frame cloud before registration.
Providers stand in for a learned completion model: ``null`` adds nothing
(the no-completion baseline), ``file`` plugs in a precomputed dense cloud
(e.g. a real network output saved as PLY), and ``mirror`` reflects the
visible points through a symmetry plane of the object frame. Completed
points never carry color; matching falls back to plain Euclidean for them.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Protocol

import numpy as np

from .errors import DataError, InvalidInputError
from .geometry import (
    ColoredPointCloud,
    Frame,
    PoseSE3,
    apply_pose,
    as_vec3,
    concat_clouds,
    to_object_frame,
)
from .ply import ply_read


class CompletionProvider(Protocol):
    def complete(self, visible_object_frame: ColoredPointCloud) -> ColoredPointCloud: ...


class NullCompletion:
    """No completion: always yields an empty cloud."""

    kind = "null"

    def complete(self, visible_object_frame: ColoredPointCloud) -> ColoredPointCloud:
        return ColoredPointCloud.uncolored(np.empty((0, 3)), frame=Frame.OBJECT)


class FileCompletion:
    """Serves a precomputed dense object-frame cloud loaded from a PLY file."""

    kind = "file"

    def __init__(self, path):
        self.path = str(path)
        try:
            cloud = ply_read(path, frame=Frame.OBJECT)
        except InvalidInputError as e:
            raise DataError(str(e)) from e
        if len(cloud) == 0:
            raise DataError(f"completion file {path} contains no points")
        if cloud.color_mask.any():
            warnings.warn(
                f"completion file {path} carries colors; dropping them "
                "(completed points are uncolored by construction)",
                stacklevel=2,
            )
        self._cloud = cloud.without_colors()

    def complete(self, visible_object_frame: ColoredPointCloud) -> ColoredPointCloud:
        return self._cloud


class MirrorCompletion:
    """Reflects the visible points through a plane through the object origin.

    A cheap geometric stand-in for learned completion: usable whenever the
    object is roughly symmetric about the chosen plane in its canonical
    frame. The default plane (normal = z axis) is a heuristic only.
    """

    kind = "mirror"

    def __init__(self, plane_normal=(0.0, 0.0, 1.0)):
        n = as_vec3(plane_normal, "plane_normal")
        norm = np.linalg.norm(n)
        if norm == 0.0:
            raise InvalidInputError("mirror plane normal must be non-zero")
        self.plane_normal = n / norm

    def complete(self, visible_object_frame: ColoredPointCloud) -> ColoredPointCloud:
        pos = visible_object_frame.positions
        n = self.plane_normal
        reflected = pos - 2.0 * np.outer(pos @ n, n)
        return ColoredPointCloud.uncolored(reflected, frame=Frame.OBJECT)


@dataclass(frozen=True)
class CompletionSpec:
    """Config-level description of a provider: null, file(path), or mirror(normal)."""

    kind: str = "null"
    path: str | None = None
    plane_normal: tuple = (0.0, 0.0, 1.0)

    def __post_init__(self):
        if self.kind not in ("null", "file", "mirror"):
            raise InvalidInputError(f"unknown completion kind {self.kind!r}")
        if self.kind == "file" and not self.path:
            raise InvalidInputError("file completion requires a path")

    def create(self) -> CompletionProvider:
        if self.kind == "null":
            return NullCompletion()
        if self.kind == "file":
            return FileCompletion(self.path)
        return MirrorCompletion(self.plane_normal)


def null_completion() -> NullCompletion:
    return NullCompletion()


def file_completion(path) -> FileCompletion:
    return FileCompletion(path)


def mirror_completion(visible: ColoredPointCloud, plane_normal) -> ColoredPointCloud:
    """One-shot mirror reflection of a visible object-frame cloud."""
    return MirrorCompletion(plane_normal).complete(visible)


def build_target(
    visible_cam: ColoredPointCloud,
    init_pose: PoseSE3,
    provider: CompletionProvider,
) -> ColoredPointCloud:
    """Assemble the registration target: visible points plus completed points.

    The visible camera-frame cloud is converted to the object frame with the
    initial pose, completed there, and the completed (uncolored) points are
    transformed back into the camera frame and appended after the visible
    (colored) points. No deduplication is performed.
    """
    if len(visible_cam) == 0:
        raise InvalidInputError("visible cloud must be non-empty")
    if not visible_cam.is_fully_colored:
        raise InvalidInputError("visible cloud must be fully colored")
    assert visible_cam.frame == Frame.CAMERA

    visible_obj = to_object_frame(init_pose, visible_cam)
    completed = provider.complete(visible_obj)
    if completed.color_mask.any():
        raise InvalidInputError("completion providers must return uncolored points")
    if len(completed) == 0:
        return visible_cam
    completed_cam = apply_pose(init_pose, completed)
    return concat_clouds(visible_cam, completed_cam)
