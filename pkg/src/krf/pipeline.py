"""Benchmark workflows: synth, refine, evaluate and ablate.

Each workflow takes a validated config plus a base seed, does its work, and
returns a plain-dict report; the run_* variants also write the report (JSON
and, where applicable, CSV) into an output directory. Reports are
deterministic for a fixed config and seed — the only nondeterministic value
is isolated in the single top-level "timing_s" field, which consumers must
ignore when comparing runs.

Per-frame RNG seeds are derived from the base seed with a seed sequence, so
results do not depend on the number of worker threads or on frame order.
"""

from __future__ import annotations

import csv
import io
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from itertools import product
from pathlib import Path
from typing import Optional, Sequence, Tuple

import numpy as np

from .cikp import CikpConfig, refine, refine_global
from .completion import CompletionSpec, build_target
from .datasets import (
    MODEL_FILENAME,
    list_scene_dirs,
    read_json,
    read_scene,
    scene_dir_name,
    write_json,
    write_pose,
    write_scene,
)
from .errors import ConfigError, DataError, InvalidInputError
from .geometry import ColoredPointCloud, Frame, PoseSE3
from .keypoints import KeypointSet, farthest_point_sampling
from .metrics import ObjectModel, accuracy_at_diameter, add_auc, add_metric, add_s_metric
from .ply import ply_read, ply_write
from .synthetic import (
    SceneSpec,
    ShapeSpec,
    sample_surface,
    scene_seeds,
    shape_colors,
    stage_scene,
)

CSV_COLUMNS = ("frame", "object", "add_init", "add_refined", "adds_init", "adds_refined")
REGISTRATION_MODES = ("keypoint", "global")
AUC_CAP = 0.1
DIAMETER_FRACTION = 0.1


# ---------------------------------------------------------------------------
# configs

@dataclass(frozen=True)
class SynthConfig:
    """Config for dataset generation: one shared model, count scenes."""

    shape: ShapeSpec
    count: int
    n_points: int = 2048
    visibility: float = 1.0
    noise_sigma: float = 0.0
    max_angle_deg: float = 0.0
    max_translation: float = 0.0
    n_keypoints: int = 8
    flip_axis: Optional[str] = None
    flip_angle_deg: float = 180.0

    def __post_init__(self):
        if self.count < 1:
            raise ConfigError(f"count must be >= 1, got {self.count}")

    def scene_spec(self, seed: int) -> SceneSpec:
        return SceneSpec(
            shape=self.shape,
            n_points=self.n_points,
            visibility=self.visibility,
            noise_sigma=self.noise_sigma,
            max_angle_deg=self.max_angle_deg,
            max_translation=self.max_translation,
            n_keypoints=self.n_keypoints,
            flip_axis=self.flip_axis,
            flip_angle_deg=self.flip_angle_deg,
            rng_seed=seed,
        )


@dataclass(frozen=True)
class RunConfig:
    """Config for one refinement run over a dataset or a synthetic spec."""

    cikp: CikpConfig
    completion: CompletionSpec
    n_keypoints: int = 8
    registration: str = "keypoint"
    use_color: bool = True
    symmetric: bool = False
    object_name: str = "object"
    dataset_dir: Optional[Path] = None
    model_path: Optional[Path] = None
    synth: Optional[SynthConfig] = None

    def __post_init__(self):
        if self.registration not in REGISTRATION_MODES:
            raise ConfigError(
                f"registration must be one of {REGISTRATION_MODES}, got {self.registration!r}")
        if self.n_keypoints < 3:
            raise ConfigError(f"k must be >= 3, got {self.n_keypoints}")
        if (self.dataset_dir is None) == (self.synth is None):
            raise ConfigError("config needs exactly one scene source: dataset or synth")


@dataclass(frozen=True)
class AblateConfig:
    """A refine config plus the variant matrix to sweep."""

    base: RunConfig
    color: Tuple[bool, ...]
    registration: Tuple[str, ...]
    completion: Tuple[CompletionSpec, ...]

    def __post_init__(self):
        if not (self.color and self.registration and self.completion):
            raise ConfigError("ablate matrix axes must be non-empty")
        for mode in self.registration:
            if mode not in REGISTRATION_MODES:
                raise ConfigError(
                    f"registration must be one of {REGISTRATION_MODES}, got {mode!r}")

    def variants(self) -> Tuple[RunConfig, ...]:
        out = []
        for color, mode, comp in product(self.color, self.registration, self.completion):
            out.append(replace(self.base, use_color=color, registration=mode, completion=comp))
        return tuple(out)


# ---------------------------------------------------------------------------
# config parsing (plain dicts from JSON; every problem is a ConfigError)

def _check_keys(obj, where, required=(), optional=()):
    if not isinstance(obj, dict):
        raise ConfigError(f"{where} must be a JSON object, got {type(obj).__name__}")
    missing = [k for k in required if k not in obj]
    if missing:
        raise ConfigError(f"{where} is missing required field(s): {', '.join(missing)}")
    unknown = [k for k in obj if k not in required and k not in optional]
    if unknown:
        raise ConfigError(f"{where} has unknown field(s): {', '.join(sorted(unknown))}")


def _as_config(ctor, where, /, **kwargs):
    try:
        return ctor(**kwargs)
    except (InvalidInputError, TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def parse_shape(obj) -> ShapeSpec:
    _check_keys(obj, "shape", required=("kind", "dimensions"), optional=("coloring",))
    return _as_config(ShapeSpec, "shape", kind=obj["kind"],
                      dimensions=tuple(obj["dimensions"]),
                      coloring=obj.get("coloring", "gradient"))


def parse_cikp(obj) -> CikpConfig:
    if obj is None:
        return CikpConfig()
    if "rng_seed" in obj:
        raise ConfigError("cikp.rng_seed is not a config field; use --seed")
    _check_keys(obj, "cikp", optional=(
        "radius_factor", "m1", "m2", "epsilon", "tau", "max_iterations", "k_candidates"))
    return _as_config(CikpConfig, "cikp", **obj)


def parse_completion(obj) -> CompletionSpec:
    if obj is None:
        return CompletionSpec(kind="null")
    _check_keys(obj, "completion", required=("kind",), optional=("path", "plane_normal"))
    kwargs = {"kind": obj["kind"]}
    if "path" in obj:
        kwargs["path"] = obj["path"]
    if "plane_normal" in obj:
        kwargs["plane_normal"] = tuple(obj["plane_normal"])
    spec = _as_config(CompletionSpec, "completion", **kwargs)
    if spec.kind == "file" and not Path(spec.path).is_file():
        raise ConfigError(f"completion file does not exist: {spec.path}")
    return spec


def parse_synth_config(obj) -> SynthConfig:
    _check_keys(obj, "synth config", required=("shape", "count"), optional=(
        "n_points", "visibility", "noise_sigma", "max_angle_deg", "max_translation",
        "n_keypoints", "flip_axis", "flip_angle_deg"))
    shape = parse_shape(obj["shape"])
    rest = {k: v for k, v in obj.items() if k not in ("shape",)}
    rest["shape"] = shape
    cfg = _as_config(SynthConfig, "synth config", **rest)
    # surface the SceneSpec field validation at config-load time
    _as_config(cfg.scene_spec, "synth config", seed=0)
    return cfg


def _resolve_dataset_paths(obj):
    dataset_dir = model_path = None
    if "dataset" in obj:
        dataset_dir = Path(obj["dataset"])
        if not dataset_dir.is_dir():
            raise ConfigError(f"dataset directory does not exist: {dataset_dir}")
        model_path = Path(obj["model"]) if "model" in obj else dataset_dir / MODEL_FILENAME
        if not model_path.is_file():
            raise ConfigError(f"model file does not exist: {model_path}")
    elif "model" in obj:
        raise ConfigError("model without dataset is not a valid scene source")
    return dataset_dir, model_path


def parse_run_config(obj) -> RunConfig:
    _check_keys(obj, "refine config", optional=(
        "dataset", "model", "object", "symmetric", "k", "completion", "registration",
        "use_color", "cikp", "synth"))
    dataset_dir, model_path = _resolve_dataset_paths(obj)
    synth = parse_synth_config(obj["synth"]) if "synth" in obj else None
    return _as_config(
        RunConfig, "refine config",
        cikp=parse_cikp(obj.get("cikp")),
        completion=parse_completion(obj.get("completion")),
        n_keypoints=int(obj.get("k", 8)),
        registration=obj.get("registration", "keypoint"),
        use_color=bool(obj.get("use_color", True)),
        symmetric=bool(obj.get("symmetric", False)),
        object_name=str(obj.get("object", "object")),
        dataset_dir=dataset_dir,
        model_path=model_path,
        synth=synth,
    )


def parse_ablate_config(obj) -> AblateConfig:
    _check_keys(obj, "ablate config", required=("dataset", "matrix"), optional=(
        "model", "object", "symmetric", "k", "cikp"))
    matrix = obj["matrix"]
    _check_keys(matrix, "matrix", optional=("color", "registration", "completion"))
    base = parse_run_config({k: v for k, v in obj.items() if k != "matrix"})
    color = tuple(bool(c) for c in matrix.get("color", [True]))
    registration = tuple(matrix.get("registration", ["keypoint"]))
    completion = tuple(parse_completion(c) for c in matrix.get("completion", [None]))
    return _as_config(AblateConfig, "ablate config", base=base, color=color,
                      registration=registration, completion=completion)


def load_config_file(path) -> dict:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file does not exist: {path}")
    try:
        obj = read_json(path)
    except DataError as exc:
        raise ConfigError(str(exc)) from exc
    if not isinstance(obj, dict):
        raise ConfigError(f"{path}: config root must be a JSON object")
    return obj


# ---------------------------------------------------------------------------
# frame assembly

@dataclass(frozen=True)
class FrameTask:
    """One unit of refinement work."""

    index: int
    visible_cam: ColoredPointCloud
    gt_pose: PoseSE3
    init_pose: PoseSE3
    keypoints: KeypointSet


def _load_model(model_path: Path, symmetric: bool) -> ObjectModel:
    cloud = ply_read(model_path, frame=Frame.OBJECT)
    if not cloud.is_fully_colored:
        raise DataError(f"{model_path}: model cloud must carry per-vertex colors")
    return ObjectModel.from_cloud(cloud, symmetric=symmetric)


def _frames_from_dataset(config: RunConfig, model: ObjectModel):
    scene_dirs = list_scene_dirs(config.dataset_dir)
    if not scene_dirs:
        raise DataError(f"no scene directories under {config.dataset_dir}")
    default_kps = None
    frames = []
    for i, scene_dir in enumerate(scene_dirs):
        rec = read_scene(scene_dir)
        if rec.gt_pose is None:
            raise DataError(f"{scene_dir}: gt_pose.json is required for benchmark runs")
        kps = rec.keypoints
        if kps is None:
            if default_kps is None:
                default_kps = farthest_point_sampling(model.cloud, config.n_keypoints)
            kps = default_kps
        frames.append(FrameTask(index=i, visible_cam=rec.visible_cam, gt_pose=rec.gt_pose,
                             init_pose=rec.init_pose, keypoints=kps))
    return frames


def _synth_shared_model(synth: SynthConfig, seed: int):
    """Sample the shared model and stage each scene from derived seeds."""
    words = scene_seeds(seed, synth.count + 1)
    model_rng = np.random.default_rng(words[0])
    positions, normals = sample_surface(synth.shape, synth.n_points, model_rng)
    cloud = ColoredPointCloud.colored(positions, shape_colors(synth.shape, positions),
                                      frame=Frame.OBJECT)
    model = ObjectModel(cloud=cloud, symmetric=synth.shape.is_rotation_symmetric(),
                        diameter=synth.shape.diameter())
    keypoints = farthest_point_sampling(cloud, synth.n_keypoints)
    scenes = []
    for i in range(synth.count):
        spec = synth.scene_spec(words[i + 1])
        rng = np.random.default_rng(spec.rng_seed)
        scenes.append(stage_scene(model, normals, keypoints, spec, rng))
    return model, keypoints, scenes


def _frames_from_synth(config: RunConfig, seed: int):
    model, keypoints, scenes = _synth_shared_model(config.synth, seed)
    if config.symmetric != model.symmetric:
        model = ObjectModel(cloud=model.cloud, symmetric=config.symmetric,
                            diameter=model.diameter)
    frames = [FrameTask(index=i, visible_cam=s.visible_cam, gt_pose=s.gt_pose,
                     init_pose=s.init_pose, keypoints=keypoints)
              for i, s in enumerate(scenes)]
    return model, frames


# ---------------------------------------------------------------------------
# refinement core

def _refine_one(model: ObjectModel, frame: FrameTask, config: RunConfig, frame_seed: int):
    provider = config.completion.create()
    target = build_target(frame.visible_cam, frame.init_pose, provider)
    if not config.use_color:
        target = target.without_colors()
    cikp = replace(config.cikp, rng_seed=frame_seed)
    if config.registration == "global":
        report = refine_global(model.cloud, target, frame.init_pose, cikp)
    else:
        report = refine(model.cloud, target, frame.keypoints, frame.init_pose, cikp)

    row = {
        "frame": frame.index,
        "object": config.object_name,
        "add_init": add_metric(model, frame.init_pose, frame.gt_pose),
        "add_refined": add_metric(model, report.final_pose, frame.gt_pose),
        "adds_init": add_s_metric(model, frame.init_pose, frame.gt_pose),
        "adds_refined": add_s_metric(model, report.final_pose, frame.gt_pose),
        "iterations": report.iterations_run,
        "converged": report.converged,
    }
    return row, report.final_pose


def _fraction_below(dists, threshold: float) -> float:
    return float(sum(d < threshold for d in dists)) / len(dists)


def _aggregate(rows, model: ObjectModel, symmetric: bool) -> dict:
    key = "adds" if symmetric else "add"
    init = [r[f"{key}_init"] for r in rows]
    refined = [r[f"{key}_refined"] for r in rows]
    return {
        "frames": len(rows),
        "auc_init": add_auc(init, AUC_CAP),
        "auc_refined": add_auc(refined, AUC_CAP),
        "add01_init": accuracy_at_diameter(init, model, DIAMETER_FRACTION),
        "add01_refined": accuracy_at_diameter(refined, model, DIAMETER_FRACTION),
        "mean_iterations": sum(r["iterations"] for r in rows) / len(rows),
        "converged": sum(1 for r in rows if r["converged"]),
    }


def _run_frames(model: ObjectModel, frames, config: RunConfig, seed: int, jobs: int):
    frame_seeds = scene_seeds(seed, len(frames))

    def work(i):
        return _refine_one(model, frames[i], config, frame_seeds[i])

    if jobs <= 1:
        results = [work(i) for i in range(len(frames))]
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(work, range(len(frames))))
    rows = [row for row, _ in results]
    poses = [pose for _, pose in results]
    return rows, poses


def _config_echo(config: RunConfig) -> dict:
    cikp = config.cikp
    return {
        "object": config.object_name,
        "symmetric": config.symmetric,
        "k": config.n_keypoints,
        "registration": config.registration,
        "use_color": config.use_color,
        "completion": {"kind": config.completion.kind,
                       "path": None if config.completion.path is None else str(config.completion.path),
                       "plane_normal": list(config.completion.plane_normal)},
        "dataset": None if config.dataset_dir is None else str(config.dataset_dir),
        "model": None if config.model_path is None else str(config.model_path),
        "cikp": {"radius_factor": cikp.radius_factor, "m1": cikp.m1, "m2": cikp.m2,
                 "epsilon": cikp.epsilon, "tau": cikp.tau,
                 "max_iterations": cikp.max_iterations, "k_candidates": cikp.k_candidates},
    }


def refine_run(config: RunConfig, seed: int, jobs: int = 1):
    """Refine every frame of the configured source; return (report, poses)."""
    start = time.perf_counter()
    if config.synth is not None:
        model, frames = _frames_from_synth(config, seed)
    else:
        model = _load_model(config.model_path, config.symmetric)
        frames = _frames_from_dataset(config, model)
    rows, poses = _run_frames(model, frames, config, seed, jobs)
    report = {
        "kind": "refine",
        "object": config.object_name,
        "symmetric": config.symmetric,
        "diameter": model.diameter,
        "seed": seed,
        "config": _config_echo(config),
        "frames": rows,
        "aggregate": _aggregate(rows, model, config.symmetric),
        "timing_s": time.perf_counter() - start,
    }
    return report, poses


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for r in rows:
        writer.writerow([r["frame"], r["object"], repr(r["add_init"]), repr(r["add_refined"]),
                         repr(r["adds_init"]), repr(r["adds_refined"])])
    return buf.getvalue()


def run_refine(config: RunConfig, seed: int, jobs: int, output_dir) -> dict:
    """refine_run plus on-disk outputs: report.json, report.csv, refined poses."""
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    report, poses = refine_run(config, seed, jobs)
    for row, pose in zip(report["frames"], poses):
        write_pose(output_dir / f"refined_{row['frame']:04d}.json", pose)
    write_json(output_dir / "report.json", report)
    (output_dir / "report.csv").write_text(rows_to_csv(report["frames"]))
    return report


# ---------------------------------------------------------------------------
# synth

def run_synth(config: SynthConfig, seed: int, output_dir) -> dict:
    """Generate a dataset directory; returns a small summary report."""
    start = time.perf_counter()
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    model, keypoints, scenes = _synth_shared_model(config, seed)
    ply_write(model.cloud, output_dir / MODEL_FILENAME, fmt="binary_le")
    for i, scene in enumerate(scenes):
        write_scene(output_dir / scene_dir_name(i), scene.visible_cam, scene.gt_pose,
                    scene.init_pose, keypoints)
    report = {
        "kind": "synth",
        "dataset": str(output_dir),
        "count": config.count,
        "model_points": len(model.cloud),
        "diameter": model.diameter,
        "seed": seed,
        "scenes": [scene_dir_name(i) for i in range(config.count)],
        "timing_s": time.perf_counter() - start,
    }
    write_json(output_dir / "synth.json", report)
    return report


# ---------------------------------------------------------------------------
# evaluate

def _load_fragment(path) -> dict:
    obj = read_json(path)
    if not isinstance(obj, dict) or obj.get("kind") != "refine" or "frames" not in obj:
        raise DataError(f"{path}: not a refine report")
    return obj


def evaluate_reports(report_paths: Sequence) -> dict:
    """Merge refine-report fragments and recompute the aggregate metrics."""
    if not report_paths:
        raise ConfigError("evaluate needs at least one report path")
    fragments = [_load_fragment(p) for p in report_paths]

    meta = [(f["object"], f["symmetric"], f["diameter"]) for f in fragments]
    if len(set(meta)) != 1:
        raise DataError(
            "inconsistent object metadata across fragments: "
            + "; ".join(f"{p}: object={m[0]} symmetric={m[1]} diameter={m[2]}"
                        for p, m in zip(map(str, report_paths), meta)))
    object_name, symmetric, diameter = meta[0]

    rows = [row for f in fragments for row in f["frames"]]
    key = "adds" if symmetric else "add"
    init = [r[f"{key}_init"] for r in rows]
    refined = [r[f"{key}_refined"] for r in rows]
    aggregate = {
        "frames": len(rows),
        "auc_init": add_auc(init, AUC_CAP),
        "auc_refined": add_auc(refined, AUC_CAP),
        "add01_init": _fraction_below(init, DIAMETER_FRACTION * diameter),
        "add01_refined": _fraction_below(refined, DIAMETER_FRACTION * diameter),
        "mean_iterations": sum(r["iterations"] for r in rows) / len(rows),
        "converged": sum(1 for r in rows if r["converged"]),
    }
    return {
        "kind": "evaluate",
        "object": object_name,
        "symmetric": symmetric,
        "diameter": diameter,
        "fragments": [str(p) for p in report_paths],
        "frames": rows,
        "aggregate": aggregate,
    }


def run_evaluate(report_paths: Sequence, output_dir) -> dict:
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    report = evaluate_reports(report_paths)
    report["timing_s"] = time.perf_counter() - start
    write_json(output_dir / "evaluate.json", report)
    (output_dir / "evaluate.csv").write_text(rows_to_csv(report["frames"]))
    return report


# ---------------------------------------------------------------------------
# ablate

ABLATE_CSV_COLUMNS = ("color", "registration", "completion",
                      "add01_init", "add01_refined", "auc_refined", "mean_iterations")


def ablate_run(config: AblateConfig, seed: int, jobs: int = 1) -> dict:
    """Run the variant cross product; one table row per variant."""
    start = time.perf_counter()
    variants = []
    for run_cfg in config.variants():
        report, _ = refine_run(run_cfg, seed, jobs)
        agg = report["aggregate"]
        variants.append({
            "color": run_cfg.use_color,
            "registration": run_cfg.registration,
            "completion": run_cfg.completion.kind,
            "add01_init": agg["add01_init"],
            "add01_refined": agg["add01_refined"],
            "auc_refined": agg["auc_refined"],
            "mean_iterations": agg["mean_iterations"],
        })
    return {
        "kind": "ablate",
        "object": config.base.object_name,
        "symmetric": config.base.symmetric,
        "seed": seed,
        "variants": variants,
        "timing_s": time.perf_counter() - start,
    }


def ablate_to_csv(report: dict) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(ABLATE_CSV_COLUMNS)
    for v in report["variants"]:
        writer.writerow(["on" if v["color"] else "off", v["registration"], v["completion"],
                         repr(v["add01_init"]), repr(v["add01_refined"]),
                         repr(v["auc_refined"]), repr(v["mean_iterations"])])
    return buf.getvalue()


def run_ablate(config: AblateConfig, seed: int, jobs: int, output_dir) -> dict:
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    report = ablate_run(config, seed, jobs)
    write_json(output_dir / "ablate.json", report)
    (output_dir / "ablate.csv").write_text(ablate_to_csv(report))
    return report
