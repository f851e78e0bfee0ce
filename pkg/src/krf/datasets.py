"""On-disk dataset layout and the JSON sidecar formats.

A dataset is a directory holding one model cloud plus one sub-directory per
scene:

    dataset/
      model.ply
      scene_0000/
        visible.ply      observed camera-frame cloud
        gt_pose.json     ground-truth object-to-camera pose
        init_pose.json   initial pose estimate to refine
        keypoints.json   object-frame keypoints
      scene_0001/
        ...

Pose JSON is {"rotation": [[3x3 row-major]], "translation": [x, y, z]} in
meters. All writers emit canonical JSON (sorted keys, two-space indent,
trailing newline) so identical data produces identical bytes.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Tuple

import numpy as np

from .errors import DataError
from .geometry import ColoredPointCloud, PoseSE3
from .keypoints import KeypointSet

SCENE_DIR_RE = re.compile(r"^scene_(\d{4,})$")

MODEL_FILENAME = "model.ply"
VISIBLE_FILENAME = "visible.ply"
GT_POSE_FILENAME = "gt_pose.json"
INIT_POSE_FILENAME = "init_pose.json"
KEYPOINTS_FILENAME = "keypoints.json"


def write_json(path, obj) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True)
    Path(path).write_text(text + "\n")


def read_json(path):
    path = Path(path)
    if not path.is_file():
        raise DataError(f"missing file: {path}")
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid JSON: {exc}") from exc


def pose_to_dict(pose: PoseSE3) -> dict:
    return {
        "rotation": [[float(v) for v in row] for row in pose.rotation],
        "translation": [float(v) for v in pose.translation],
    }


def pose_from_dict(obj, where: str = "pose") -> PoseSE3:
    if not isinstance(obj, dict) or set(obj) != {"rotation", "translation"}:
        raise DataError(f"{where}: expected keys rotation and translation")
    try:
        return PoseSE3(rotation=np.asarray(obj["rotation"], dtype=np.float64),
                       translation=np.asarray(obj["translation"], dtype=np.float64))
    except Exception as exc:
        raise DataError(f"{where}: {exc}") from exc


def write_pose(path, pose: PoseSE3) -> None:
    write_json(path, pose_to_dict(pose))


def read_pose(path) -> PoseSE3:
    return pose_from_dict(read_json(path), where=str(path))


def write_keypoints(path, keypoints: KeypointSet) -> None:
    write_json(path, {"keypoints": [[float(v) for v in p] for p in keypoints.points]})


def read_keypoints(path) -> KeypointSet:
    obj = read_json(path)
    if not isinstance(obj, dict) or "keypoints" not in obj:
        raise DataError(f"{path}: expected a keypoints field")
    try:
        return KeypointSet(points=np.asarray(obj["keypoints"], dtype=np.float64))
    except Exception as exc:
        raise DataError(f"{path}: {exc}") from exc


def scene_dir_name(index: int) -> str:
    return f"scene_{index:04d}"


@dataclass(frozen=True)
class SceneFiles:
    """One scene's on-disk records, loaded."""

    visible_cam: ColoredPointCloud
    gt_pose: Optional[PoseSE3]
    init_pose: PoseSE3
    keypoints: Optional[KeypointSet]


def write_scene(scene_dir, visible_cam: ColoredPointCloud, gt_pose: PoseSE3,
                init_pose: PoseSE3, keypoints: KeypointSet) -> None:
    """Write the four per-scene files (visible cloud as binary PLY)."""
    from .ply import ply_write

    scene_dir = Path(scene_dir)
    scene_dir.mkdir(parents=True, exist_ok=True)
    ply_write(visible_cam, scene_dir / VISIBLE_FILENAME, fmt="binary_le")
    write_pose(scene_dir / GT_POSE_FILENAME, gt_pose)
    write_pose(scene_dir / INIT_POSE_FILENAME, init_pose)
    write_keypoints(scene_dir / KEYPOINTS_FILENAME, keypoints)


def read_scene(scene_dir) -> SceneFiles:
    """Load one scene directory; gt pose and keypoints are optional on disk."""
    from .geometry import Frame
    from .ply import ply_read

    scene_dir = Path(scene_dir)
    visible_path = scene_dir / VISIBLE_FILENAME
    if not visible_path.is_file():
        raise DataError(f"missing file: {visible_path}")
    visible = ply_read(visible_path, frame=Frame.CAMERA)

    gt_path = scene_dir / GT_POSE_FILENAME
    gt = read_pose(gt_path) if gt_path.is_file() else None
    init = read_pose(scene_dir / INIT_POSE_FILENAME)
    kp_path = scene_dir / KEYPOINTS_FILENAME
    kps = read_keypoints(kp_path) if kp_path.is_file() else None
    return SceneFiles(visible_cam=visible, gt_pose=gt, init_pose=init, keypoints=kps)


def list_scene_dirs(dataset_dir) -> Tuple[Path, ...]:
    """Scene sub-directories of a dataset root, sorted by scene index."""
    dataset_dir = Path(dataset_dir)
    if not dataset_dir.is_dir():
        raise DataError(f"not a dataset directory: {dataset_dir}")
    found = []
    for child in dataset_dir.iterdir():
        m = SCENE_DIR_RE.match(child.name)
        if m and child.is_dir():
            found.append((int(m.group(1)), child))
    found.sort()
    return tuple(path for _, path in found)
