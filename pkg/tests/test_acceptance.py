"""Release acceptance gate: ten criteria, each printing one PASS/FAIL line.

Run `pytest tests/test_acceptance.py -v -s` to see the verdict lines inline.
Every criterion is a single test with its tolerance pinned in the assertion;
the suite is self-contained and seeds every RNG it uses.
"""

import json
import math
import time

import numpy as np

from krf.cikp import CikpConfig, refine
from krf.cli import main as cli_main
from krf.completion import MirrorCompletion, build_target
from krf.correspondence import ColorDistanceParams, colored_distance
from krf.fitting import fit_rigid
from krf.geometry import ColoredPoint, ColoredPointCloud, PoseSE3, geodesic_angle, random_rotation
from krf.metrics import ObjectModel, LossWeights, add_auc, add_metric, add_s_metric, chamfer_loss, combined_loss, offset_loss
from krf.spatial import SpatialIndex
from krf.synthetic import SceneSpec, ShapeSpec, generate_scene

SHAPES = [
    ShapeSpec("box", (0.08, 0.1, 0.06)),
    ShapeSpec("cylinder", (0.04, 0.12)),
    ShapeSpec("sphere", (0.05,)),
]


def _verdict(criterion: str, ok: bool, detail: str = ""):
    status = "PASS" if ok else "FAIL"
    suffix = f" ({detail})" if detail else ""
    print(f"\n[acceptance] {criterion}: {status}{suffix}")
    assert ok, f"{criterion} failed{suffix}"


def test_01_spatial_index_equals_brute_force_at_scale():
    rng = np.random.default_rng(101)
    points = rng.uniform(-1.0, 1.0, size=(10_000, 3))
    points[5_000:5_010] = points[:10]  # duplicates force distance ties
    queries = rng.uniform(-1.1, 1.1, size=(1_000, 3))
    queries[:10] = points[20:30]  # zero-distance queries
    k, radius = 10, 0.15

    started = time.perf_counter()
    index = SpatialIndex(points)
    dist = np.linalg.norm(queries[:, None, :] - points[None, :, :], axis=2)
    bf_nearest = dist.argmin(axis=1)  # first occurrence = lowest index
    bf_k = np.argsort(dist, axis=1, kind="stable")[:, :k]

    ok = True
    for qi, q in enumerate(queries):
        ni, nd = index.nearest(q)
        ok &= ni == bf_nearest[qi] and nd == dist[qi, ni]
        got_k = index.k_nearest(q, k)
        ok &= [i for i, _ in got_k] == list(bf_k[qi])
        ok &= all(d == dist[qi, i] for i, d in got_k)
        ok &= np.array_equal(index.radius_search(q, radius),
                             np.nonzero(dist[qi] < radius)[0])
        if not ok:
            break
    elapsed = time.perf_counter() - started
    _verdict("criterion-1 spatial-index oracle equivalence",
             ok and elapsed < 10.0,
             f"1000 queries x 10k points, exact={ok}, {elapsed:.1f}s < 10s")


def test_02_color_distance_hand_values():
    params = ColorDistanceParams()  # epsilon = 0.02
    same_pos = colored_distance(
        ColoredPoint(np.array([0.3, -0.1, 0.7]), np.array([1.0, 0.0, 0.0])),
        ColoredPoint(np.array([0.3, -0.1, 0.7]), np.array([0.0, 1.0, 0.0])),
        params,
    )
    apart = colored_distance(
        ColoredPoint(np.array([0.0, 0.0, 0.0]), np.array([1.0, 0.0, 0.0])),
        ColoredPoint(np.array([0.04, 0.0, 0.0]), np.array([0.0, 1.0, 0.0])),
        params,
    )
    err_a = abs(same_pos - math.sqrt(2.0))
    err_b = abs(apart - (0.04 + math.sqrt(2.0) / 2.0))
    _verdict("criterion-2 color-distance hand values",
             err_a < 1e-9 and err_b < 1e-9,
             f"errors {err_a:.1e}, {err_b:.1e} < 1e-9")


def test_03_rigid_fit_recovers_random_poses():
    rng = np.random.default_rng(303)
    worst_rot, worst_trans = 0.0, 0.0
    for _ in range(1000):
        rotation = random_rotation(rng)
        translation = rng.uniform(-1.0, 1.0, size=3)
        gt = PoseSE3(rotation=rotation, translation=translation)
        source = rng.normal(scale=0.2, size=(8, 3))
        fitted = fit_rigid(source, gt.apply(source))
        worst_rot = max(worst_rot, geodesic_angle(fitted.rotation, rotation))
        worst_trans = max(worst_trans,
                          float(np.linalg.norm(fitted.translation - translation)))
    _verdict("criterion-3 rigid-fit exactness",
             worst_rot < 1e-7 and worst_trans < 1e-9,
             f"1000 poses, worst rotation {worst_rot:.1e} rad < 1e-7, "
             f"worst translation {worst_trans:.1e} m < 1e-9")


def test_04_refinement_fixed_point():
    worst_add, worst_iters = 0.0, 0
    for i, shape in enumerate(SHAPES):
        spec = SceneSpec(shape=shape, n_points=512, visibility=1.0,
                         noise_sigma=0.0, max_angle_deg=0.0, max_translation=0.0,
                         n_keypoints=8, rng_seed=404 + i)
        scene = generate_scene(spec)
        report = refine(scene.model.cloud, scene.visible_cam, scene.keypoints,
                        scene.init_pose, CikpConfig(rng_seed=1))
        worst_add = max(worst_add,
                        add_metric(scene.model, report.final_pose, scene.gt_pose))
        worst_iters = max(worst_iters, report.iterations_run)
    _verdict("criterion-4 refinement fixed point",
             worst_add < 1e-6 and worst_iters <= 2,
             f"3 shapes, worst ADD {worst_add:.1e} m < 1e-6, "
             f"worst iterations {worst_iters} <= 2")


def test_05_refinement_converges_on_perturbed_scenes():
    started = time.perf_counter()
    improved = below_5mm = 0
    for t in range(100):
        spec = SceneSpec(shape=SHAPES[t % 3], n_points=1024, visibility=0.5,
                         noise_sigma=0.001, max_angle_deg=5.0, max_translation=0.01,
                         n_keypoints=8, rng_seed=50_000 + t)
        scene = generate_scene(spec)
        report = refine(scene.model.cloud, scene.visible_cam, scene.keypoints,
                        scene.init_pose, CikpConfig(rng_seed=60_000 + t))
        add_init = add_metric(scene.model, scene.init_pose, scene.gt_pose)
        add_final = add_metric(scene.model, report.final_pose, scene.gt_pose)
        improved += add_final < add_init
        below_5mm += add_final < 0.005
    elapsed = time.perf_counter() - started
    _verdict("criterion-5 convergence on 100 perturbed scenes",
             improved >= 95 and below_5mm >= 90 and elapsed < 120.0,
             f"improved {improved}/100 >= 95, <5mm {below_5mm}/100 >= 90, "
             f"{elapsed:.1f}s < 120s")


def test_06_color_ablation_on_tone_symmetric_scenes():
    shape = ShapeSpec("cylinder", (0.04, 0.12), coloring="two_tone")
    threshold = 0.1 * shape.diameter()
    seed0 = 42
    rng = np.random.default_rng(seed0)
    hits_on = hits_off = 0
    for t in range(100):
        # near-axis-symmetric initialization: z-flip of 90-150 degrees either way
        angle = rng.uniform(90.0, 150.0) * (1.0 if rng.random() < 0.5 else -1.0)
        spec = SceneSpec(shape=shape, n_points=1024, visibility=0.85,
                         noise_sigma=0.0005, max_angle_deg=3.0, max_translation=0.005,
                         n_keypoints=8, flip_axis="z", flip_angle_deg=angle,
                         rng_seed=seed0 + 1000 + t)
        scene = generate_scene(spec)
        config = CikpConfig(m2=300, max_iterations=40, k_candidates=128,
                            rng_seed=seed0 + 5000 + t)
        with_color = refine(scene.model.cloud, scene.visible_cam, scene.keypoints,
                            scene.init_pose, config)
        without_color = refine(scene.model.cloud, scene.visible_cam.without_colors(),
                               scene.keypoints, scene.init_pose, config)
        hits_on += add_metric(scene.model, with_color.final_pose,
                              scene.gt_pose) < threshold
        hits_off += add_metric(scene.model, without_color.final_pose,
                               scene.gt_pose) < threshold
    _verdict("criterion-6 color ablation",
             hits_on - hits_off >= 10,
             f"success rate color-on {hits_on}/100 vs color-off {hits_off}/100, "
             f"gap {hits_on - hits_off}pp >= 10pp")


def test_07_completion_ablation_at_low_visibility():
    shape = ShapeSpec("box", (0.08, 0.1, 0.06), coloring="gradient")
    threshold = 0.1 * shape.diameter()
    hits_null = hits_mirror = 0
    for t in range(100):
        spec = SceneSpec(shape=shape, n_points=1024, visibility=0.30,
                         noise_sigma=0.0005, max_angle_deg=5.0, max_translation=0.01,
                         n_keypoints=8, rng_seed=42 + 1000 + t)
        scene = generate_scene(spec)
        config = CikpConfig(rng_seed=42 + 5000 + t)
        plain = refine(scene.model.cloud, scene.visible_cam, scene.keypoints,
                       scene.init_pose, config)
        target = build_target(scene.visible_cam, scene.init_pose, MirrorCompletion())
        completed = refine(scene.model.cloud, target, scene.keypoints,
                           scene.init_pose, config)
        hits_null += add_metric(scene.model, plain.final_pose,
                                scene.gt_pose) < threshold
        hits_mirror += add_metric(scene.model, completed.final_pose,
                                  scene.gt_pose) < threshold
    _verdict("criterion-7 completion ablation",
             hits_mirror >= hits_null,
             f"30% visibility, mirror {hits_mirror}/100 >= null {hits_null}/100")


def test_08_metric_identities():
    rng = np.random.default_rng(808)
    ok_order = True
    for _ in range(1000):
        cloud = ColoredPointCloud.uncolored(rng.normal(scale=0.1, size=(24, 3)))
        model = ObjectModel.from_cloud(cloud)
        pred = PoseSE3(rotation=random_rotation(rng),
                       translation=rng.uniform(-0.2, 0.2, size=3))
        gt = PoseSE3(rotation=random_rotation(rng),
                     translation=rng.uniform(-0.2, 0.2, size=3))
        ok_order &= add_s_metric(model, pred, gt) <= add_metric(model, pred, gt) + 1e-12

    worst_brute = 0.0
    for m in range(2, 51):  # a 1-point model has zero diameter and is rejected
        cloud = ColoredPointCloud.uncolored(rng.normal(scale=0.1, size=(m, 3)))
        model = ObjectModel.from_cloud(cloud)
        pred = PoseSE3(rotation=random_rotation(rng),
                       translation=rng.uniform(-0.2, 0.2, size=3))
        gt = PoseSE3(rotation=random_rotation(rng),
                     translation=rng.uniform(-0.2, 0.2, size=3))
        p, g = pred.apply(cloud.positions), gt.apply(cloud.positions)
        brute = float(np.linalg.norm(p[:, None, :] - g[None, :, :], axis=2)
                      .min(axis=1).mean())
        worst_brute = max(worst_brute, abs(add_s_metric(model, pred, gt) - brute))

    auc_zero = add_auc([0.0] * 7, 0.1)
    auc_half = add_auc([0.05], 0.1)
    _verdict("criterion-8 metric identities",
             ok_order and worst_brute < 1e-12 and auc_zero == 1.0
             and abs(auc_half - 0.5) < 1e-12,
             f"closest-point <= paired on 1000 triples: {ok_order}; "
             f"brute-force gap {worst_brute:.1e} < 1e-12 on sizes 2-50; "
             f"AUC(zeros)={auc_zero}, |AUC(half-cap)-0.5|={abs(auc_half - 0.5):.1e}")


def test_09_loss_formula_hand_values():
    chamfer = chamfer_loss(
        ColoredPointCloud.uncolored(np.zeros((1, 3))),
        ColoredPointCloud.uncolored(np.array([[1.0, 0.0, 0.0]])),
    )
    offset_unit = offset_loss(np.zeros((1, 1, 3)), np.array([[[1.0, 0.0, 0.0]]]))
    # two samples, two offsets each: norms (1.0, 0.5) and (2.0, 1.5) -> mean 2.5
    pred = np.zeros((2, 2, 3))
    gt = np.array([[[1.0, 0.0, 0.0], [0.0, 0.5, 0.0]],
                   [[0.0, 0.0, 2.0], [1.5, 0.0, 0.0]]])
    offset_pair = offset_loss(pred, gt)
    combined = combined_loss(0.25, 0.5, 0.05, LossWeights(alpha=1.0, beta=1.0, gamma=10.0))
    errs = [abs(chamfer - 2.0), abs(offset_unit - 1.0), abs(offset_pair - 2.5),
            abs(combined - 1.25)]
    _verdict("criterion-9 loss formula hand values",
             max(errs) < 1e-12,
             "chamfer 2.0, offsets 1.0 and 2.5, combined 1.25; "
             f"max error {max(errs):.1e} < 1e-12")


def _strip_timing(path):
    return b"".join(line for line in path.read_bytes().splitlines(keepends=True)
                    if b'"timing_s"' not in line)


def test_10_end_to_end_determinism(tmp_path, capsys):
    synth_config = tmp_path / "synth.json"
    synth_config.write_text(json.dumps({
        "shape": {"kind": "box", "dimensions": [0.08, 0.1, 0.06]},
        "count": 2, "n_points": 256, "visibility": 0.5, "noise_sigma": 0.001,
        "max_angle_deg": 5.0, "max_translation": 0.01,
    }))
    dataset = tmp_path / "ds"
    assert cli_main(["synth", "--config", str(synth_config), "--seed", "3",
                     "--output", str(dataset)]) == 0

    refine_config = tmp_path / "refine.json"
    refine_config.write_text(json.dumps({"dataset": str(dataset)}))
    ablate_config = tmp_path / "ablate.json"
    ablate_config.write_text(json.dumps({
        "dataset": str(dataset), "matrix": {"color": [True, False]},
    }))

    for run in ("a", "b"):
        assert cli_main(["refine", "--config", str(refine_config), "--seed", "11",
                         "--output", str(tmp_path / f"refine-{run}")]) == 0
        assert cli_main(["ablate", "--config", str(ablate_config), "--seed", "11",
                         "--output", str(tmp_path / f"ablate-{run}")]) == 0
    capsys.readouterr()

    pairs = [
        ("refine", "report.json", True), ("refine", "report.csv", False),
        ("refine", "refined_0000.json", False), ("refine", "refined_0001.json", False),
        ("ablate", "ablate.json", True), ("ablate", "ablate.csv", False),
    ]
    ok = True
    for command, name, has_timing in pairs:
        first = tmp_path / f"{command}-a" / name
        second = tmp_path / f"{command}-b" / name
        if has_timing:
            ok &= _strip_timing(first) == _strip_timing(second)
        else:
            ok &= first.read_bytes() == second.read_bytes()
    _verdict("criterion-10 end-to-end determinism",
             ok, "refine + ablate reports byte-identical across runs "
                 "(timing field excluded)")
