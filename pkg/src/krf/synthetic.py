"""Ground-truthed synthetic scenes for benchmarking the refinement loop.

Parametric shapes (box, cylinder, sphere) are sampled uniformly by surface
area with exact analytic normals, colored deterministically from geometry,
posed, culled to a visibility fraction, noised, and paired with a perturbed
initial pose. Everything is driven by a single seeded generator per scene,
so a SceneSpec reproduces its scene bit for bit.

Colorings: "gradient" maps position linearly to RGB (every surface point
gets a distinct color, so color disambiguates poses that geometry alone
cannot); "two_tone" splits the surface into two flat colors by the sign of
object-frame x, the designed stimulus for color-ablation experiments on
rotationally symmetric shapes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .errors import InvalidInputError
from .geometry import (
    ColoredPointCloud,
    Frame,
    PoseSE3,
    apply_pose,
    as_vec3,
    random_rotation,
    rotation_about_axis,
)
from .keypoints import KeypointSet, farthest_point_sampling
from .metrics import ObjectModel

SHAPE_KINDS = ("box", "cylinder", "sphere")
COLORINGS = ("gradient", "two_tone")
_DIM_COUNTS = {"box": 3, "cylinder": 2, "sphere": 1}

TONE_A = np.array([0.85, 0.15, 0.15])
TONE_B = np.array([0.15, 0.15, 0.85])

_AXES = {"x": (1.0, 0.0, 0.0), "y": (0.0, 1.0, 0.0), "z": (0.0, 0.0, 1.0)}


@dataclass(frozen=True)
class ShapeSpec:
    """A parametric surface: box(w, h, d), cylinder(radius, height), sphere(radius)."""

    kind: str
    dimensions: Tuple[float, ...]
    coloring: str = "gradient"

    def __post_init__(self):
        if self.kind not in SHAPE_KINDS:
            raise InvalidInputError(f"unknown shape kind {self.kind!r}, expected one of {SHAPE_KINDS}")
        dims = tuple(float(d) for d in self.dimensions)
        object.__setattr__(self, "dimensions", dims)
        want = _DIM_COUNTS[self.kind]
        if len(dims) != want:
            raise InvalidInputError(f"{self.kind} takes {want} dimension(s), got {len(dims)}")
        if any(not d > 0 for d in dims):
            raise InvalidInputError(f"shape dimensions must be > 0, got {dims}")
        if self.coloring not in COLORINGS:
            raise InvalidInputError(f"unknown coloring {self.coloring!r}, expected one of {COLORINGS}")

    def diameter(self) -> float:
        """Exact diameter of the parametric surface."""
        if self.kind == "box":
            w, h, d = self.dimensions
            return math.sqrt(w * w + h * h + d * d)
        if self.kind == "cylinder":
            r, h = self.dimensions
            return math.sqrt(h * h + 4.0 * r * r)
        return 2.0 * self.dimensions[0]

    def extents(self) -> np.ndarray:
        """Axis-aligned bounding-box widths (full, not half)."""
        if self.kind == "box":
            return np.array(self.dimensions)
        if self.kind == "cylinder":
            r, h = self.dimensions
            return np.array([2.0 * r, 2.0 * r, h])
        r = self.dimensions[0]
        return np.array([2.0 * r, 2.0 * r, 2.0 * r])

    def is_rotation_symmetric(self) -> bool:
        return self.kind in ("cylinder", "sphere")


@dataclass(frozen=True)
class SceneSpec:
    """Recipe for one scene; rng_seed makes it fully reproducible.

    gt_pose = None draws the ground-truth pose from the scene RNG (random
    orientation, translation in a box in front of the camera). flip_axis
    composes an extra rotation of flip_angle_deg about that object axis
    into the initial pose, on top of the bounded perturbation — the
    construction for deliberately ambiguous initializations.
    """

    shape: ShapeSpec
    n_points: int = 2048
    visibility: float = 1.0
    noise_sigma: float = 0.0
    max_angle_deg: float = 0.0
    max_translation: float = 0.0
    n_keypoints: int = 8
    gt_pose: Optional[PoseSE3] = None
    flip_axis: Optional[str] = None
    flip_angle_deg: float = 180.0
    rng_seed: int = 0

    def __post_init__(self):
        if self.n_points < 16:
            raise InvalidInputError(f"n_points must be >= 16, got {self.n_points}")
        if not 0.0 < self.visibility <= 1.0:
            raise InvalidInputError(f"visibility must be in (0, 1], got {self.visibility}")
        if self.noise_sigma < 0:
            raise InvalidInputError(f"noise_sigma must be >= 0, got {self.noise_sigma}")
        if self.max_angle_deg < 0 or self.max_translation < 0:
            raise InvalidInputError("perturbation bounds must be >= 0")
        if self.n_keypoints < 3:
            raise InvalidInputError(f"n_keypoints must be >= 3, got {self.n_keypoints}")
        if self.n_keypoints > self.n_points:
            raise InvalidInputError("n_keypoints cannot exceed n_points")
        if self.flip_axis is not None and self.flip_axis not in _AXES:
            raise InvalidInputError(f"flip_axis must be one of {tuple(_AXES)} or None")


@dataclass(frozen=True)
class SyntheticScene:
    """A generated scene: model, observed cloud, true and initial poses."""

    model: ObjectModel
    visible_cam: ColoredPointCloud
    gt_pose: PoseSE3
    init_pose: PoseSE3
    keypoints: KeypointSet


def _sample_box(dims, n, rng):
    w, h, d = dims
    areas = np.array([h * d, h * d, w * d, w * d, w * h, w * h])
    face = rng.choice(6, size=n, p=areas / areas.sum())
    u = rng.uniform(-0.5, 0.5, size=n)
    v = rng.uniform(-0.5, 0.5, size=n)

    pos = np.empty((n, 3))
    nrm = np.zeros((n, 3))
    axis = face // 2               # 0 -> x faces, 1 -> y faces, 2 -> z faces
    sign = np.where(face % 2 == 0, 1.0, -1.0)
    half = np.array([w, h, d]) / 2.0
    others = np.array([[1, 2], [0, 2], [0, 1]])
    full = np.array([w, h, d])
    for a in range(3):
        m = axis == a
        o1, o2 = others[a]
        pos[m, a] = sign[m] * half[a]
        pos[m, o1] = u[m] * full[o1]
        pos[m, o2] = v[m] * full[o2]
        nrm[m, a] = sign[m]
    return pos, nrm


def _sample_cylinder(dims, n, rng):
    r, h = dims
    lateral = 2.0 * math.pi * r * h
    cap = math.pi * r * r
    areas = np.array([lateral, cap, cap])
    part = rng.choice(3, size=n, p=areas / areas.sum())
    theta = rng.uniform(0.0, 2.0 * math.pi, size=n)
    t = rng.uniform(0.0, 1.0, size=n)

    pos = np.empty((n, 3))
    nrm = np.zeros((n, 3))
    c, s = np.cos(theta), np.sin(theta)

    m = part == 0
    pos[m, 0] = r * c[m]
    pos[m, 1] = r * s[m]
    pos[m, 2] = (t[m] - 0.5) * h
    nrm[m, 0] = c[m]
    nrm[m, 1] = s[m]

    for which, zsign in ((1, 1.0), (2, -1.0)):
        m = part == which
        rad = r * np.sqrt(t[m])    # area-uniform over the disk
        pos[m, 0] = rad * c[m]
        pos[m, 1] = rad * s[m]
        pos[m, 2] = zsign * h / 2.0
        nrm[m, 2] = zsign
    return pos, nrm


def _sample_sphere(dims, n, rng):
    r = dims[0]
    v = rng.normal(size=(n, 3))
    norms = np.linalg.norm(v, axis=1)
    while np.any(norms < 1e-12):
        bad = norms < 1e-12
        v[bad] = rng.normal(size=(int(bad.sum()), 3))
        norms = np.linalg.norm(v, axis=1)
    nrm = v / norms[:, None]
    return r * nrm, nrm.copy()


_SAMPLERS = {"box": _sample_box, "cylinder": _sample_cylinder, "sphere": _sample_sphere}


def sample_surface(spec: ShapeSpec, n_points: int, rng: np.random.Generator):
    """Area-uniform surface samples with exact outward normals (both (n, 3))."""
    if n_points < 1:
        raise InvalidInputError(f"n_points must be >= 1, got {n_points}")
    return _SAMPLERS[spec.kind](spec.dimensions, n_points, rng)


def shape_colors(spec: ShapeSpec, positions: np.ndarray) -> np.ndarray:
    """Deterministic per-point colors for a shape's surface samples."""
    if spec.coloring == "two_tone":
        return np.where(positions[:, :1] >= 0.0, TONE_A, TONE_B)
    # gradient: linear position -> RGB, kept inside [0.05, 0.95]
    return 0.5 + 0.9 * positions / spec.extents()


def sample_shape(spec: ShapeSpec, n_points: int, rng: np.random.Generator) -> ObjectModel:
    """Sample an object-frame colored model; diameter is the analytic one."""
    positions, _ = sample_surface(spec, n_points, rng)
    cloud = ColoredPointCloud.colored(positions, shape_colors(spec, positions), frame=Frame.OBJECT)
    return ObjectModel(cloud=cloud, symmetric=spec.is_rotation_symmetric(), diameter=spec.diameter())


def cull_visibility(
    model_cam: ColoredPointCloud,
    normals_cam: np.ndarray,
    view_direction,
    fraction_target: float,
    rng: np.random.Generator,
) -> ColoredPointCloud:
    """Keep viewer-facing points, then subsample to fraction_target of the original count.

    A point faces the viewer when its outward normal opposes the view
    direction (normal . view < 0). If fewer points face the viewer than the
    target, all facing points are kept.
    """
    if len(model_cam) == 0:
        raise InvalidInputError("cannot cull an empty cloud")
    if not 0.0 < fraction_target <= 1.0:
        raise InvalidInputError(f"fraction_target must be in (0, 1], got {fraction_target}")
    view = as_vec3(view_direction, "view_direction")
    norm = np.linalg.norm(view)
    if norm < 1e-12:
        raise InvalidInputError("view_direction must be non-zero")
    view = view / norm
    normals_cam = np.asarray(normals_cam, dtype=np.float64)
    if normals_cam.shape != (len(model_cam), 3):
        raise InvalidInputError(
            f"normals shape {normals_cam.shape} does not match cloud of {len(model_cam)} points")

    facing = np.flatnonzero(normals_cam @ view < 0.0)
    if facing.size == 0:
        raise InvalidInputError("no points face the viewer")
    n_keep = min(int(round(fraction_target * len(model_cam))), facing.size)
    n_keep = max(n_keep, 1)
    if n_keep < facing.size:
        pick = rng.choice(facing.size, size=n_keep, replace=False)
        pick.sort()
        facing = facing[pick]
    return model_cam.subset(facing)


def perturb_pose(
    gt: PoseSE3,
    max_angle_deg: float,
    max_translation: float,
    rng: np.random.Generator,
) -> PoseSE3:
    """Compose gt with a bounded random rotation and a translation in a ball."""
    if max_angle_deg < 0 or max_translation < 0:
        raise InvalidInputError("perturbation bounds must be >= 0")
    axis = rng.normal(size=3)
    while np.linalg.norm(axis) < 1e-12:
        axis = rng.normal(size=3)
    angle = rng.uniform(0.0, math.radians(max_angle_deg))
    rotation = gt.rotation @ rotation_about_axis(axis, angle)

    direction = rng.normal(size=3)
    while np.linalg.norm(direction) < 1e-12:
        direction = rng.normal(size=3)
    direction /= np.linalg.norm(direction)
    radius = max_translation * rng.uniform(0.0, 1.0) ** (1.0 / 3.0)
    return PoseSE3(rotation=rotation, translation=gt.translation + radius * direction)


def add_noise(cloud: ColoredPointCloud, sigma: float, rng: np.random.Generator) -> ColoredPointCloud:
    """Add iid Gaussian noise to positions; colors pass through untouched."""
    if sigma < 0:
        raise InvalidInputError(f"sigma must be >= 0, got {sigma}")
    if sigma == 0.0:
        return cloud
    noisy = cloud.positions + rng.normal(0.0, sigma, size=cloud.positions.shape)
    return ColoredPointCloud(positions=noisy, colors=cloud.colors,
                             color_mask=cloud.color_mask, frame=cloud.frame)


def _draw_gt_pose(rng: np.random.Generator) -> PoseSE3:
    rotation = random_rotation(rng)
    translation = np.array([
        rng.uniform(-0.05, 0.05),
        rng.uniform(-0.05, 0.05),
        rng.uniform(0.45, 0.75),
    ])
    return PoseSE3(rotation=rotation, translation=translation)


def stage_scene(
    model: ObjectModel,
    normals: np.ndarray,
    keypoints: KeypointSet,
    spec: SceneSpec,
    rng: np.random.Generator,
) -> SyntheticScene:
    """Pose, cull, noise and perturb a pre-sampled model into a scene.

    Used directly when many scenes must share one model (the dataset
    layout stores a single model cloud). RNG consumption order:
    ground-truth pose (when drawn), visibility subsampling, sensor noise,
    initial-pose perturbation.
    """
    gt = spec.gt_pose if spec.gt_pose is not None else _draw_gt_pose(rng)

    model_cam = apply_pose(gt, model.cloud)
    normals_cam = normals @ gt.rotation.T
    t_norm = np.linalg.norm(gt.translation)
    view = gt.translation / t_norm if t_norm > 1e-9 else np.array([0.0, 0.0, 1.0])

    visible = cull_visibility(model_cam, normals_cam, view, spec.visibility, rng)
    visible = add_noise(visible, spec.noise_sigma, rng)

    init = perturb_pose(gt, spec.max_angle_deg, spec.max_translation, rng)
    if spec.flip_axis is not None:
        flip = rotation_about_axis(_AXES[spec.flip_axis], math.radians(spec.flip_angle_deg))
        init = PoseSE3(rotation=init.rotation @ flip, translation=init.translation)

    return SyntheticScene(model=model, visible_cam=visible, gt_pose=gt,
                          init_pose=init, keypoints=keypoints)


def generate_scene(spec: SceneSpec) -> SyntheticScene:
    """Generate one scene from its spec (bit-reproducible per rng_seed).

    RNG consumption order: surface sampling, then as in stage_scene.
    """
    rng = np.random.default_rng(spec.rng_seed)

    positions, normals = sample_surface(spec.shape, spec.n_points, rng)
    colors = shape_colors(spec.shape, positions)
    model_cloud = ColoredPointCloud.colored(positions, colors, frame=Frame.OBJECT)
    model = ObjectModel(cloud=model_cloud, symmetric=spec.shape.is_rotation_symmetric(),
                        diameter=spec.shape.diameter())
    keypoints = farthest_point_sampling(model_cloud, spec.n_keypoints)
    return stage_scene(model, normals, keypoints, spec, rng)


def scene_seeds(base_seed: int, count: int) -> Tuple[int, ...]:
    """Deterministic, well-spread per-scene seeds derived from one base seed."""
    if count < 1:
        raise InvalidInputError(f"count must be >= 1, got {count}")
    words = np.random.SeedSequence(base_seed).generate_state(count, dtype=np.uint64)
    return tuple(int(w) for w in words)
