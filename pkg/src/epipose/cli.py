"""Command-line front end.

Exit codes: 0 success, 1 check failed, 2 usage or parse error, 3 estimation
failure.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import io
from .camera import CameraIntrinsics
from .errors import EpiposeError, InsufficientData, InvalidInput, ModelLoadError, ParseError
from .evaluation import (PoseErrorRecord, aggregate_pose_errors, position_rmse, relative_trajectory_errors,
                         sampson_inlier_table, umeyama_sim3_align)
from .gradcheck import run_all
from .losses import rotation_error, translation_angular_error
from .robust import (GemanMcClurePredictor, HuberPredictor, IrlsConfig, MLPWeightPredictor,
                     RansacConfig, UniformPredictor, estimate_relative_pose)
from .rotations import rodrigues_vector, rotation_to_quaternion
from .synthetic import (CorruptionConfig, SceneConfig, corrupt, generate_scene, project_scene,
                        scene_ground_truth)

EXIT_OK, EXIT_CHECK, EXIT_USAGE, EXIT_ESTIMATION = 0, 1, 2, 3
METHODS = ("ransac", "irls-uniform", "irls-gm", "irls-huber", "irls-mlp")
GRAD_TOL = 1e-5
MIXED_PRESETS = ("random", "forward", "lateral")


class UsageError(Exception):
    pass


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer, int)):
        return int(x)
    if isinstance(x, (np.floating, float)):
        return float(x) if math.isfinite(x) else None
    return x


def dump_json(obj) -> str:
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True, allow_nan=False) + "\n"


def _emit(text, out):
    if out:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _float_list(text):
    try:
        vals = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad number list {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


# ---------------------------------------------------------------- estimators

def build_estimator(method, iterations=5, gm_scale=5.0, huber_delta=2.0, mlp_path=None,
                    threshold=2.0, max_iterations=1000, confidence=0.999, seed=0):
    """Map a CLI method name to ``(pipeline method, config)``."""
    if method == "ransac":
        return "ransac", RansacConfig(threshold, max_iterations, confidence, seed)
    if method == "irls-uniform":
        predictor = UniformPredictor()
    elif method == "irls-gm":
        predictor = GemanMcClurePredictor(gm_scale)
    elif method == "irls-huber":
        predictor = HuberPredictor(huber_delta)
    elif method == "irls-mlp":
        if mlp_path is None:
            raise UsageError("irls-mlp needs a model file")
        predictor = MLPWeightPredictor.from_file(mlp_path)
    else:
        raise UsageError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")
    return "irls", IrlsConfig(iterations, predictor)


# ---------------------------------------------------------------- synth-bench

_BENCH_KEYS = {"num_scenes", "seed", "scene", "corruption", "methods", "irls", "ransac",
               "thresholds", "output", "workers"}
_SCENE_KEYS = {"num_points", "depth_range", "rotation_magnitude", "translation_direction",
               "image_size", "intrinsics", "baseline"}
_CORRUPTION_KEYS = {"noise_sigma", "outlier_ratio", "outlier_min_offset"}
_IRLS_KEYS = {"iterations", "gm_scale", "huber_delta", "mlp_path"}
_RANSAC_KEYS = {"threshold", "max_iterations", "confidence"}
_OUTPUT_KEYS = {"csv", "summary"}


def _check_keys(section, allowed, name):
    if not isinstance(section, dict):
        raise UsageError(f"{name} must be an object")
    unknown = set(section) - allowed
    if unknown:
        raise UsageError(f"unknown key(s) in {name}: {', '.join(sorted(unknown))}")


def load_bench_config(path, out_dir=None, seed=None):
    """Parse and validate a synth-bench JSON config."""
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from None
    _check_keys(cfg, _BENCH_KEYS, "config")
    for key, allowed in (("scene", _SCENE_KEYS), ("corruption", _CORRUPTION_KEYS),
                         ("irls", _IRLS_KEYS), ("ransac", _RANSAC_KEYS), ("output", _OUTPUT_KEYS)):
        cfg.setdefault(key, {})
        _check_keys(cfg[key], allowed, key)
    methods = cfg.get("methods")
    if not isinstance(methods, list) or not methods:
        raise UsageError("methods must be a non-empty list")
    for m in methods:
        if m not in METHODS:
            raise UsageError(f"unknown method {m!r}")
    if len(set(methods)) != len(methods):
        raise UsageError("duplicate methods")
    if "irls-mlp" in methods:
        mlp = cfg["irls"].get("mlp_path")
        if mlp is None or not os.path.isfile(mlp):
            raise UsageError(f"mlp_path {mlp!r} does not exist")
    if seed is not None:
        cfg["seed"] = seed
    cfg.setdefault("seed", 0)
    cfg.setdefault("num_scenes", 10)
    if not isinstance(cfg["num_scenes"], int) or cfg["num_scenes"] < 1:
        raise UsageError("num_scenes must be a positive integer")
    cfg.setdefault("thresholds", [1.0, 2.0, 5.0, 10.0])
    cfg.setdefault("workers", 1)
    if out_dir is not None:
        cfg["output"] = {"csv": os.path.join(out_dir, "results.csv"),
                         "summary": os.path.join(out_dir, "summary.json")}
    for key in ("csv", "summary"):
        p = cfg["output"].get(key)
        if p is None:
            raise UsageError(f"output.{key} missing (or pass --out DIR)")
        parent = os.path.dirname(os.path.abspath(p))
        if not os.path.isdir(parent):
            raise UsageError(f"output directory {parent} does not exist")
    try:
        _scene_config(cfg, 0)
        CorruptionConfig(**cfg["corruption"])
        for m in methods:
            build_estimator(m, **_estimator_kwargs(cfg, 0))
    except (TypeError, EpiposeError) as exc:
        raise UsageError(f"invalid config: {exc}") from None
    return cfg


def _pair_seeds(seed, pair_id):
    return [int(x) for x in np.random.SeedSequence([seed, pair_id]).generate_state(3, np.uint32)]


def _scene_config(cfg, pair_id):
    sc = dict(cfg["scene"])
    if "intrinsics" in sc:
        sc["intrinsics"] = CameraIntrinsics(**sc["intrinsics"])
    for key in ("depth_range", "image_size"):
        if key in sc:
            sc[key] = tuple(sc[key])
    if sc.get("translation_direction") == "mixed":
        sc["translation_direction"] = MIXED_PRESETS[pair_id % len(MIXED_PRESETS)]
    return SceneConfig(seed=_pair_seeds(cfg["seed"], pair_id)[0], **sc)


def _estimator_kwargs(cfg, seed):
    kw = dict(cfg["irls"])
    kw.update(cfg["ransac"])
    kw["seed"] = seed
    return kw


def run_bench_pair(cfg, pair_id):
    """Rows ``(pair_id, method, rot_err_deg, trans_err_deg)`` for one scene."""
    s_scene, s_corrupt, s_ransac = _pair_seeds(cfg["seed"], pair_id)
    scene = generate_scene(_scene_config(cfg, pair_id))
    corr = project_scene(scene)
    _, pose_gt = scene_ground_truth(scene)
    corr, _ = corrupt(corr, CorruptionConfig(seed=s_corrupt, **cfg["corruption"]))
    K = scene.intrinsics
    rows = []
    for m in cfg["methods"]:
        method, config = build_estimator(m, **_estimator_kwargs(cfg, s_ransac))
        try:
            est = estimate_relative_pose(corr, K, K, method, config)
            rows.append((pair_id, m, rotation_error(est.pose.rotation, pose_gt.rotation),
                         translation_angular_error(est.pose.translation, pose_gt.translation)))
        except EpiposeError:
            rows.append((pair_id, m, float("nan"), float("nan")))
    return rows


def _bench_worker(args):
    return run_bench_pair(*args)


def run_bench(cfg):
    jobs = [(cfg, k) for k in range(cfg["num_scenes"])]
    if cfg["workers"] > 1:
        with ProcessPoolExecutor(cfg["workers"]) as pool:
            chunks = list(pool.map(_bench_worker, jobs))
    else:
        chunks = [_bench_worker(j) for j in jobs]
    rows = sorted((r for c in chunks for r in c), key=lambda r: (r[0], cfg["methods"].index(r[1])))
    summary = {"num_scenes": cfg["num_scenes"], "seed": cfg["seed"], "methods": {}}
    for m in cfg["methods"]:
        recs = [PoseErrorRecord(r[0], r[2], r[3]) for r in rows if r[1] == m]
        rot, trans = aggregate_pose_errors(recs, cfg["thresholds"])
        summary["methods"][m] = {"rotation": rot.__dict__, "translation": trans.__dict__}
    return rows, summary


def format_bench_csv(rows) -> str:
    lines = ["pair_id,method,rot_err_deg,trans_err_deg"]
    lines += [f"{p},{m},{io.fmt(r)},{io.fmt(t)}" for p, m, r, t in rows]
    return "\n".join(lines) + "\n"


def cmd_synth_bench(args):
    cfg = load_bench_config(args.config, args.out, args.seed)
    rows, summary = run_bench(cfg)
    _emit(format_bench_csv(rows), cfg["output"]["csv"])
    _emit(dump_json(summary), cfg["output"]["summary"])
    return EXIT_OK


# ---------------------------------------------------------------- estimate

def cmd_estimate(args):
    try:
        corr, weights = io.read_correspondences(args.correspondences)
    except OSError as exc:
        raise UsageError(str(exc)) from None
    if len(corr) < 8:
        raise UsageError(f"need at least 8 correspondences, got {len(corr)}")
    K1 = CameraIntrinsics.parse(args.intrinsics)
    K2 = CameraIntrinsics.parse(args.intrinsics2) if args.intrinsics2 else K1
    try:
        method, config = build_estimator(
            args.method, args.iterations, args.gm_scale, args.huber_delta, args.mlp,
            args.threshold, args.max_iterations, args.confidence, args.seed)
    except (ModelLoadError, InvalidInput) as exc:
        raise UsageError(str(exc)) from None
    est = estimate_relative_pose(corr, K1, K2, method, config,
                                 initial_weights=weights if method == "irls" else None)
    R = est.pose.rotation
    report = {
        "method": args.method,
        "num_correspondences": len(corr),
        "rotation": {"matrix": R, "quaternion": rotation_to_quaternion(R),
                     "rodrigues": rodrigues_vector(R)},
        "translation": est.pose.translation,
        "F": est.F,
    }
    report.update({k: v for k, v in est.diagnostics.items() if k != "method"})
    _emit(dump_json(report), args.out)
    return EXIT_OK


# ---------------------------------------------------------------- eval-traj

def _stats_dict(stats):
    return dict(stats.__dict__)


def cmd_eval_traj(args):
    try:
        est = io.read_kitti_poses(args.estimate)
        gt = io.read_kitti_poses(args.ground_truth)
    except OSError as exc:
        raise UsageError(str(exc)) from None
    if len(est) != len(gt):
        raise UsageError(f"trajectory lengths differ: {len(est)} vs {len(gt)}")
    if len(gt) <= args.step:
        raise UsageError("trajectory shorter than step")
    align = umeyama_sim3_align(est, gt)
    records = relative_trajectory_errors(align.aligned, gt, args.step)
    rot, trans = aggregate_pose_errors(records, args.thresholds)
    dist = np.array([r.translation_distance for r in records])
    report = {
        "num_poses": len(gt),
        "step": args.step,
        "alignment": {"scale": align.scale, "rotation": align.R, "translation": align.t},
        "ate_rmse": position_rmse(align.aligned, gt),
        "rotation_error_deg": _stats_dict(rot),
        "translation_angular_error_deg": _stats_dict(trans),
        "translation_distance_m": {"mean": float(dist.mean()),
                                   "median": float(np.sort(dist)[(len(dist) - 1) // 2])},
    }
    _emit(dump_json(report), args.out)
    return EXIT_OK


# ---------------------------------------------------------------- grad-check

def cmd_grad_check(args):
    if args.trials < 1:
        raise UsageError("trials must be >= 1")
    reports = run_all(args.seed, args.trials)
    ok = True
    for r in reports:
        status = "ok" if r.max_rel_error < GRAD_TOL else "FAIL"
        ok &= status == "ok"
        print(f"{r.name}: trials={r.trials} max_rel_error={io.fmt(r.max_rel_error)} "
              f"worst_trial={r.worst_trial} {status}")
    return EXIT_OK if ok else EXIT_CHECK


# ---------------------------------------------------------------- sampson-table

def cmd_sampson_table(args):
    try:
        corr, _ = io.read_correspondences(args.correspondences)
        F = io.read_matrix(args.fundamental)
    except OSError as exc:
        raise UsageError(str(exc)) from None
    table = sampson_inlier_table(corr, F, args.thresholds)
    lines = ["threshold,inlier_ratio,num_correspondences"]
    lines += [f"{io.fmt(t)},{io.fmt(r)},{table.num_correspondences}" for t, r in table.rows()]
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


# ---------------------------------------------------------------- parser

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser():
    p = _Parser(prog="epipose", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    b = sub.add_parser("synth-bench", help="benchmark estimators on seeded synthetic scenes")
    b.add_argument("--config", required=True)
    b.add_argument("--out", help="directory for results.csv and summary.json")
    b.add_argument("--seed", type=int)
    b.set_defaults(func=cmd_synth_bench)

    e = sub.add_parser("estimate", help="relative pose from a correspondence CSV")
    e.add_argument("correspondences")
    e.add_argument("--intrinsics", required=True, help='"fx,fy,cx,cy"')
    e.add_argument("--intrinsics2", help="camera-2 intrinsics when they differ")
    e.add_argument("--method", choices=METHODS, default="irls-gm")
    e.add_argument("--iterations", type=int, default=5)
    e.add_argument("--gm-scale", type=float, default=5.0)
    e.add_argument("--huber-delta", type=float, default=2.0)
    e.add_argument("--mlp", help="MLP weight model JSON (irls-mlp)")
    e.add_argument("--threshold", type=float, default=2.0)
    e.add_argument("--max-iterations", type=int, default=1000)
    e.add_argument("--confidence", type=float, default=0.999)
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--out")
    e.set_defaults(func=cmd_estimate)

    t = sub.add_parser("eval-traj", help="Sim(3)-aligned relative trajectory errors")
    t.add_argument("estimate")
    t.add_argument("ground_truth")
    t.add_argument("--step", type=int, default=1)
    t.add_argument("--thresholds", type=_float_list, default=[1.0, 2.0, 5.0, 10.0])
    t.add_argument("--out")
    t.set_defaults(func=cmd_eval_traj)

    g = sub.add_parser("grad-check", help="finite-difference check of analytic gradients")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--trials", type=int, default=1000)
    g.set_defaults(func=cmd_grad_check)

    s = sub.add_parser("sampson-table", help="inlier ratio per Sampson threshold")
    s.add_argument("correspondences")
    s.add_argument("fundamental", help="3x3 F, row-major text")
    s.add_argument("--thresholds", type=_float_list, default=[0.2, 0.5, 1.0, 2.0])
    s.add_argument("--out")
    s.set_defaults(func=cmd_sampson_table)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except (UsageError, ParseError, InsufficientData) as exc:
        print(f"epipose: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except InvalidInput as exc:
        print(f"epipose: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except EpiposeError as exc:
        print(f"epipose: estimation failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ESTIMATION


if __name__ == "__main__":
    sys.exit(main())
