"""Core geometric types: colored point clouds, SE(3) poses, frame conversions.

Conventions used throughout the package:
  * positions are float64 arrays of shape (n, 3), in meters
  * colors are float64 arrays of shape (n, 3), RGB in [0, 1]
  * a pose maps object-frame points into the camera frame: p_cam = R p_obj + T
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError, InvalidPoseError

ROTATION_TOL = 1e-9


class Frame(str, enum.Enum):
    """Coordinate frame a point cloud lives in."""

    CAMERA = "camera"
    OBJECT = "object"


def as_points(a, name="points"):
    """Coerce to a float64 (n, 3) array, rejecting non-finite values."""
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim == 1 and arr.shape == (3,):
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] != 3:
        raise InvalidInputError(f"{name} must have shape (n, 3), got {arr.shape}")
    if arr.size and not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} contains non-finite values")
    return arr


def as_vec3(a, name="vector"):
    arr = np.asarray(a, dtype=np.float64).reshape(-1)
    if arr.shape != (3,):
        raise InvalidInputError(f"{name} must have 3 components, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} contains non-finite values")
    return arr


def _readonly(arr):
    arr = np.ascontiguousarray(arr)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class ColoredPoint:
    """A single point with an optional RGB color (None = uncolored)."""

    position: np.ndarray
    color: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "position", _readonly(as_vec3(self.position, "position")))
        if self.color is not None:
            c = as_vec3(self.color, "color")
            if np.any(c < 0.0) or np.any(c > 1.0):
                raise InvalidInputError(f"color channels must lie in [0, 1], got {c}")
            object.__setattr__(self, "color", _readonly(c))

    @property
    def is_colored(self):
        return self.color is not None


@dataclass(frozen=True)
class ColoredPointCloud:
    """An ordered point cloud where each point may carry an RGB color.

    ``colors`` always has shape (n, 3); ``color_mask`` marks which rows are
    meaningful. Points produced by completion are uncolored (mask False).
    """

    positions: np.ndarray
    colors: np.ndarray | None = None
    color_mask: np.ndarray | None = None
    frame: Frame = Frame.CAMERA

    def __post_init__(self):
        pos = as_points(self.positions, "positions")
        n = pos.shape[0]
        colors = self.colors
        mask = self.color_mask
        if colors is None:
            colors = np.zeros((n, 3))
            if mask is None:
                mask = np.zeros(n, dtype=bool)
        else:
            colors = np.asarray(colors, dtype=np.float64)
            if colors.shape != (n, 3):
                raise InvalidInputError(
                    f"colors must have shape ({n}, 3), got {colors.shape}"
                )
            if mask is None:
                mask = np.ones(n, dtype=bool)
        mask = np.asarray(mask, dtype=bool).reshape(-1)
        if mask.shape != (n,):
            raise InvalidInputError(f"color_mask must have shape ({n},), got {mask.shape}")
        if n and mask.any():
            used = colors[mask]
            if not np.all(np.isfinite(used)) or np.any(used < 0.0) or np.any(used > 1.0):
                raise InvalidInputError("colors must be finite and lie in [0, 1]")
        object.__setattr__(self, "positions", _readonly(pos))
        object.__setattr__(self, "colors", _readonly(colors))
        object.__setattr__(self, "color_mask", _readonly(mask))
        object.__setattr__(self, "frame", Frame(self.frame))

    def __len__(self):
        return self.positions.shape[0]

    @classmethod
    def colored(cls, positions, colors, frame=Frame.CAMERA):
        return cls(positions=positions, colors=colors, frame=frame)

    @classmethod
    def uncolored(cls, positions, frame=Frame.CAMERA):
        return cls(positions=positions, frame=frame)

    @property
    def is_fully_colored(self):
        return bool(self.color_mask.all()) if len(self) else False

    def point(self, i):
        """The i-th point as a ColoredPoint (color None when unmasked)."""
        color = self.colors[i] if self.color_mask[i] else None
        return ColoredPoint(position=self.positions[i], color=color)

    def subset(self, indices):
        idx = np.asarray(indices, dtype=np.intp)
        return ColoredPointCloud(
            positions=self.positions[idx],
            colors=self.colors[idx],
            color_mask=self.color_mask[idx],
            frame=self.frame,
        )

    def without_colors(self):
        return ColoredPointCloud.uncolored(self.positions, frame=self.frame)

    def with_frame(self, frame):
        return ColoredPointCloud(
            positions=self.positions,
            colors=self.colors,
            color_mask=self.color_mask,
            frame=frame,
        )


def concat_clouds(a: ColoredPointCloud, b: ColoredPointCloud) -> ColoredPointCloud:
    """Concatenate two clouds in the same frame, preserving order (a then b)."""
    if a.frame != b.frame:
        raise InvalidInputError(f"cannot concatenate clouds in frames {a.frame} and {b.frame}")
    return ColoredPointCloud(
        positions=np.vstack([a.positions, b.positions]),
        colors=np.vstack([a.colors, b.colors]),
        color_mask=np.concatenate([a.color_mask, b.color_mask]),
        frame=a.frame,
    )


def _check_rotation(r):
    r = np.asarray(r, dtype=np.float64)
    if r.shape != (3, 3):
        raise InvalidPoseError(f"rotation must be 3x3, got shape {r.shape}")
    if not np.all(np.isfinite(r)):
        raise InvalidPoseError("rotation contains non-finite values")
    err = np.abs(r.T @ r - np.eye(3)).max()
    if err > ROTATION_TOL:
        raise InvalidPoseError(f"rotation is not orthonormal (max |R^T R - I| = {err:.3e})")
    det = np.linalg.det(r)
    if abs(det - 1.0) > ROTATION_TOL:
        raise InvalidPoseError(f"rotation determinant is {det:.12f}, expected +1")
    return r


@dataclass(frozen=True)
class PoseSE3:
    """Rigid object-to-camera transform: rotation (3x3, SO(3)) + translation (3,)."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "rotation", _readonly(_check_rotation(self.rotation)))
        object.__setattr__(self, "translation", _readonly(as_vec3(self.translation, "translation")))

    @classmethod
    def identity(cls):
        return cls(rotation=np.eye(3), translation=np.zeros(3))

    def apply(self, points):
        """Transform (n, 3) points: p -> R p + T."""
        pts = as_points(points)
        return pts @ self.rotation.T + self.translation

    def compose(self, other: "PoseSE3") -> "PoseSE3":
        """Pose applying ``other`` first, then ``self``."""
        return PoseSE3(
            rotation=self.rotation @ other.rotation,
            translation=self.rotation @ other.translation + self.translation,
        )

    def inverse(self) -> "PoseSE3":
        rt = self.rotation.T
        return PoseSE3(rotation=rt, translation=-(rt @ self.translation))


def apply_pose(pose: PoseSE3, cloud: ColoredPointCloud) -> ColoredPointCloud:
    """Transform an object-frame cloud into the camera frame.

    Colors and point order are preserved; only positions move.
    """
    if len(cloud) == 0:
        raise InvalidInputError("cannot transform an empty cloud")
    assert cloud.frame == Frame.OBJECT, "apply_pose expects an object-frame cloud"
    return ColoredPointCloud(
        positions=pose.apply(cloud.positions),
        colors=cloud.colors,
        color_mask=cloud.color_mask,
        frame=Frame.CAMERA,
    )


def to_object_frame(pose_init: PoseSE3, cloud_cam: ColoredPointCloud) -> ColoredPointCloud:
    """Convert a camera-frame cloud into the object frame of the given pose.

    Exact inverse of apply_pose with the same pose: p -> R^T (p - T).
    """
    if len(cloud_cam) == 0:
        raise InvalidInputError("cannot transform an empty cloud")
    assert cloud_cam.frame == Frame.CAMERA, "to_object_frame expects a camera-frame cloud"
    inv = pose_init.inverse()
    return ColoredPointCloud(
        positions=inv.apply(cloud_cam.positions),
        colors=cloud_cam.colors,
        color_mask=cloud_cam.color_mask,
        frame=Frame.OBJECT,
    )


def invert_pose(pose: PoseSE3) -> PoseSE3:
    return pose.inverse()


def centroid(cloud: ColoredPointCloud) -> np.ndarray:
    """Arithmetic mean of the positions."""
    if len(cloud) == 0:
        raise InvalidInputError("centroid of an empty cloud is undefined")
    return cloud.positions.mean(axis=0)


def model_radius(cloud: ColoredPointCloud) -> float:
    """Maximum distance from the centroid to any point of the cloud."""
    if len(cloud) == 0:
        raise InvalidInputError("radius of an empty cloud is undefined")
    c = cloud.positions.mean(axis=0)
    return float(np.linalg.norm(cloud.positions - c, axis=1).max())


def rotation_about_axis(axis, angle_rad: float) -> np.ndarray:
    """Rotation matrix for a right-handed rotation about ``axis`` (Rodrigues)."""
    a = as_vec3(axis, "axis")
    norm = np.linalg.norm(a)
    if norm == 0.0:
        raise InvalidInputError("rotation axis must be non-zero")
    x, y, z = a / norm
    k = np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])
    return np.eye(3) + np.sin(angle_rad) * k + (1.0 - np.cos(angle_rad)) * (k @ k)


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    """Uniform random rotation (random axis, uniform angle is not uniform on
    SO(3); this uses the QR-based Haar construction instead)."""
    m = rng.normal(size=(3, 3))
    q, r = np.linalg.qr(m)
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 2] = -q[:, 2]
    return q


def geodesic_angle(r1, r2) -> float:
    """Angle in radians of the relative rotation between two matrices."""
    c = (np.trace(np.asarray(r1).T @ np.asarray(r2)) - 1.0) / 2.0
    return float(np.arccos(np.clip(c, -1.0, 1.0)))
