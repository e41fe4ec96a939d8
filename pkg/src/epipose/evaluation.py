"""Pose error statistics, Sampson inlier tables and trajectory evaluation.

Trajectories are ``(M, 3, 4)`` arrays of camera-to-world poses ``[R | t]``
(KITTI odometry convention), positions in meters.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .camera import check_rotation
from .errors import DegenerateAlignment, InvalidInput
from .geometry import sampson_residual
from .losses import rotation_error, translation_angular_error

DEFAULT_SAMPSON_THRESHOLDS = (0.2, 0.5, 1.0, 2.0)


@dataclass(frozen=True)
class PoseErrorRecord:
    pair_id: object
    rotation_error: float     # degrees
    translation_error: float  # degrees
    translation_distance: float | None = None  # meters, trajectory records only


@dataclass(frozen=True)
class ErrorStats:
    mean: float
    median: float
    inlier_ratios: dict
    count: int
    failures: int = 0


def _stats(values, thresholds) -> ErrorStats:
    values = np.asarray(values, dtype=float)
    finite = np.sort(values[np.isfinite(values)])
    if finite.size:
        mean = float(finite.mean())
        median = float(finite[(finite.size - 1) // 2])
    else:
        mean = median = float("nan")
    ratios = {float(t): float(np.count_nonzero(finite < t) / values.size) for t in thresholds}
    return ErrorStats(mean, median, ratios, int(values.size), int(values.size - finite.size))


def aggregate_pose_errors(records, thresholds=(1.0, 2.0, 5.0, 10.0)):
    """Mean, lower-middle median and fraction-below-threshold for both error kinds.

    Non-finite errors (failed estimates) are left out of mean and median,
    count as outliers in every ratio, and are tallied in ``failures``.
    """
    records = list(records)
    if not records:
        raise InvalidInput("no records to aggregate")
    rot = _stats([r.rotation_error for r in records], thresholds)
    trans = _stats([r.translation_error for r in records], thresholds)
    return rot, trans


@dataclass(frozen=True)
class SampsonTable:
    thresholds: tuple
    inlier_ratios: tuple
    num_correspondences: int

    def rows(self):
        return list(zip(self.thresholds, self.inlier_ratios))


def sampson_inlier_table(corr, F_gt, thresholds=DEFAULT_SAMPSON_THRESHOLDS) -> SampsonTable:
    """Fraction of correspondences whose residual under ``F_gt`` is <= each threshold."""
    corr = np.asarray(corr, dtype=float).reshape(-1, 4)
    thresholds = tuple(float(t) for t in thresholds)
    n = len(corr)
    if n == 0:
        return SampsonTable(thresholds, tuple(0.0 for _ in thresholds), 0)
    r = sampson_residual(corr, F_gt)
    ratios = tuple(float(np.count_nonzero(r <= t) / n) for t in thresholds)
    return SampsonTable(thresholds, ratios, n)


def as_trajectory(poses) -> np.ndarray:
    T = np.asarray(poses, dtype=float)
    if T.ndim == 2 and T.shape[1] == 12:
        T = T.reshape(-1, 3, 4)
    if T.ndim != 3 or T.shape[1:] != (3, 4):
        raise InvalidInput(f"trajectory must have shape (M, 3, 4), got {T.shape}")
    return T


def _homogeneous(T):
    out = np.zeros((len(T), 4, 4))
    out[:, :3, :] = T
    out[:, 3, 3] = 1.0
    return out


class Sim3Alignment(NamedTuple):
    scale: float
    R: np.ndarray
    t: np.ndarray
    aligned: np.ndarray


def umeyama_sim3_align(est, gt) -> Sim3Alignment:
    """Least-squares similarity ``gt_i ~ s R est_i + t`` over trajectory positions.

    Closed form after Umeyama: SVD of the cross-covariance, with the last
    singular direction flipped when needed so that ``det(R) = +1``.
    """
    est = as_trajectory(est)
    gt = as_trajectory(gt)
    if len(est) != len(gt):
        raise InvalidInput("trajectories differ in length")
    if len(est) < 3:
        raise DegenerateAlignment("need at least 3 poses")
    x = est[:, :, 3]
    y = gt[:, :, 3]
    mx, my = x.mean(axis=0), y.mean(axis=0)
    xc, yc = x - mx, y - my
    for pts in (xc, yc):
        sv = np.linalg.svd(pts, compute_uv=False)
        if not sv[1] > 1e-12 * max(sv[0], 1e-300):
            raise DegenerateAlignment("positions are collinear or coincident")
    sigma2 = np.mean(np.sum(xc**2, axis=1))
    cov = yc.T @ xc / len(x)
    U, D, Vt = np.linalg.svd(cov)
    S = np.ones(3)
    if np.linalg.det(U) * np.linalg.det(Vt) < 0:
        S[2] = -1.0
    R = (U * S) @ Vt
    s = float(np.sum(D * S) / sigma2)
    t = my - s * R @ mx
    aligned = np.empty_like(est)
    aligned[:, :, :3] = R @ est[:, :, :3]
    aligned[:, :, 3] = s * x @ R.T + t
    return Sim3Alignment(s, R, t, aligned)


def position_rmse(est, gt) -> float:
    d = as_trajectory(est)[:, :, 3] - as_trajectory(gt)[:, :, 3]
    return float(np.sqrt(np.mean(np.sum(d**2, axis=1))))


def relative_trajectory_errors(est_aligned, gt, step: int = 1) -> list[PoseErrorRecord]:
    """Errors of the motions ``T_i^-1 T_{i+step}``, one record per ``i``.

    Records hold rotation error (deg), translation direction error (deg; NaN
    when either motion has no translation) and translation distance (m).
    """
    est = as_trajectory(est_aligned)
    gt = as_trajectory(gt)
    if len(est) != len(gt):
        raise InvalidInput("trajectories differ in length")
    if step < 1 or len(est) <= step:
        raise InvalidInput("need step >= 1 and more poses than step")
    He, Hg = _homogeneous(est), _homogeneous(gt)
    records = []
    for i in range(len(est) - step):
        de = np.linalg.solve(He[i], He[i + step])
        dg = np.linalg.solve(Hg[i], Hg[i + step])
        rot = rotation_error(_nearest_rotation(de[:3, :3]), _nearest_rotation(dg[:3, :3]))
        te, tg = de[:3, 3], dg[:3, 3]
        if np.linalg.norm(te) > 0 and np.linalg.norm(tg) > 0:
            ang = translation_angular_error(te, tg)
        else:
            ang = 0.0 if not (np.any(te) or np.any(tg)) else float("nan")
        records.append(PoseErrorRecord(i, rot, ang, float(np.linalg.norm(te - tg))))
    return records


def _nearest_rotation(M):
    # solve() leaves round-off of order 1e-15; project back onto SO(3)
    U, _, Vt = np.linalg.svd(M)
    R = U @ Vt
    if np.linalg.det(R) < 0:
        R = U @ np.diag([1.0, 1.0, -1.0]) @ Vt
    return R


def compose_trajectory(relative_poses, step_length: float = 1.0) -> np.ndarray:
    """Chain ``T_{i+1} = T_i [R_i | step_length * t_i]`` from the identity.

    Each relative pose is the motion of frame ``i+1`` expressed in frame
    ``i``. A two-view estimate (which maps frame-``i`` coordinates into
    frame ``i+1``) should be passed through ``RelativePose.inverse()`` first.
    """
    relative_poses = list(relative_poses)
    if not relative_poses:
        raise InvalidInput("need at least one relative pose")
    T = np.eye(4)
    out = [T[:3].copy()]
    for p in relative_poses:
        step = np.eye(4)
        step[:3, :3] = check_rotation(p.rotation)
        step[:3, 3] = np.asarray(p.translation, dtype=float) * step_length
        T = T @ step
        out.append(T[:3].copy())
    return np.stack(out)
