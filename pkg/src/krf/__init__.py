"""krf: color-supported iterative keypoint refinement for 6D object poses.

The package refines an initial object-to-camera pose against an observed
colored point cloud: per-keypoint neighborhoods are matched with a
color-weighted distance, each keypoint is translated to its least-squares
alignment, and the keypoints vote for a rigid pose update. Around that core
sit pluggable cloud completion, evaluation metrics, a synthetic benchmark
generator, PLY I/O, an HTTP service, and the `krf` command-line client.
"""

__version__ = "0.1.0"

from .cikp import CikpConfig, IterationStats, RefineReport, refine, refine_global
from .completion import (
    CompletionSpec,
    FileCompletion,
    MirrorCompletion,
    NullCompletion,
    build_target,
)
from .correspondence import ColorDistanceParams, colored_distance, match_point
from .errors import (
    ConfigError,
    DataError,
    DegenerateGeometryError,
    InvalidInputError,
    InvalidPoseError,
    KrfError,
    PlyParseError,
)
from .fitting import fit_rigid, fit_translation
from .geometry import ColoredPoint, ColoredPointCloud, Frame, PoseSE3, apply_pose, to_object_frame
from .keypoints import KeypointSet, farthest_point_sampling
from .metrics import (
    LossWeights,
    ObjectModel,
    accuracy_at_diameter,
    add_auc,
    add_metric,
    add_s_metric,
    chamfer_loss,
    combined_loss,
    offset_loss,
)
from .ply import ply_read, ply_write
from .spatial import SpatialIndex
from .synthetic import SceneSpec, ShapeSpec, SyntheticScene, generate_scene

__all__ = [
    "__version__",
    "CikpConfig", "IterationStats", "RefineReport", "refine", "refine_global",
    "CompletionSpec", "FileCompletion", "MirrorCompletion", "NullCompletion", "build_target",
    "ColorDistanceParams", "colored_distance", "match_point",
    "KrfError", "InvalidInputError", "InvalidPoseError", "DegenerateGeometryError",
    "ConfigError", "DataError", "PlyParseError",
    "fit_rigid", "fit_translation",
    "ColoredPoint", "ColoredPointCloud", "Frame", "PoseSE3", "apply_pose", "to_object_frame",
    "KeypointSet", "farthest_point_sampling",
    "LossWeights", "ObjectModel", "accuracy_at_diameter", "add_auc", "add_metric",
    "add_s_metric", "chamfer_loss", "combined_loss", "offset_loss",
    "ply_read", "ply_write",
    "SpatialIndex",
    "SceneSpec", "ShapeSpec", "SyntheticScene", "generate_scene",
]
