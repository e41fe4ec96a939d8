"""Supervision losses (F-loss, pose-loss) and pose error metrics."""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .camera import check_rotation
from .errors import InvalidInput
from .geometry import homogenize
from .rotations import rodrigues_vector, rotation_to_quaternion


@dataclass(frozen=True)
class FLossConfig:
    image_width: float
    image_height: float
    grid_rows: int = 10
    grid_cols: int = 10
    margin: float = 0.05  # fraction of the image size kept clear on every side

    def __post_init__(self):
        if self.grid_rows < 2 or self.grid_cols < 2:
            raise InvalidInput("grid must be at least 2x2")
        if not 0 < self.margin < 0.5:
            raise InvalidInput("margin must lie in (0, 0.5)")

    def grid(self) -> np.ndarray:
        xs = np.linspace(self.margin, 1 - self.margin, self.grid_cols) * self.image_width
        ys = np.linspace(self.margin, 1 - self.margin, self.grid_rows) * self.image_height
        X, Y = np.meshgrid(xs, ys)
        return np.column_stack([X.ravel(), Y.ravel()])


@dataclass(frozen=True)
class PoseLossConfig:
    c_r: float = 0.1
    c_t: float = 0.5
    lambda_rt: float = 0.1

    def __post_init__(self):
        if not (self.c_r > 0 and self.c_t > 0 and self.lambda_rt > 0):
            raise InvalidInput("pose-loss constants must be positive")


def virtual_correspondences(F_gt, config: FLossConfig):
    """Grid points in image 1 with matches placed on their ground-truth epipolar lines.

    Each match is the point of ``F_gt g`` closest to the image center.
    Returns ``(corr, skipped)`` where skipped grid points were epipoles.
    """
    g = config.grid()
    lines = homogenize(g) @ np.asarray(F_gt, dtype=float).T
    n2 = lines[:, 0] ** 2 + lines[:, 1] ** 2
    ok = n2 > 1e-24 * np.max(np.abs(lines), axis=1, initial=0.0) ** 2
    g, lines, n2 = g[ok], lines[ok], n2[ok]
    center = np.array([config.image_width / 2, config.image_height / 2])
    off = (lines[:, :2] @ center + lines[:, 2]) / n2
    m = center - off[:, None] * lines[:, :2]
    return np.hstack([g, m]), int(np.count_nonzero(~ok))


def f_loss(F_est, F_gt, config: FLossConfig, return_skipped: bool = False):
    """Mean symmetric epipolar distance of the virtual grid pairs under ``F_est``.

    For one pair this is ``(d(m, F_est g) + d(g, F_est^T m)) / 2`` in pixels.
    A term whose line is degenerate under ``F_est`` (the point is an epipole
    of ``F_est``) is undefined and left out; the pair then contributes its
    other term alone. Pairs with no defined term count as skipped.
    """
    corr, skipped = virtual_correspondences(F_gt, config)
    F = np.asarray(F_est, dtype=float)
    p1 = homogenize(corr[:, :2])
    p2 = homogenize(corr[:, 2:])
    l2 = p1 @ F.T
    l1 = p2 @ F
    e = np.abs(np.sum(p2 * l2, axis=1))
    scale = np.linalg.norm(F)
    terms = []
    for line, p in ((l2, p1), (l1, p2)):
        n = np.hypot(line[:, 0], line[:, 1])
        ok = n > 1e-12 * scale * np.linalg.norm(p, axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            terms.append(np.where(ok, e / n, np.nan))
    terms = np.column_stack(terms)
    defined = np.isfinite(terms).any(axis=1)
    if not defined.any():
        raise InvalidInput("no virtual pair has a defined epipolar distance")
    d = np.nanmean(terms[defined], axis=1)
    loss = float(d.mean())
    skipped += int(np.count_nonzero(~defined))
    return (loss, skipped) if return_skipped else loss


def quaternion_distance(R_a, R_b) -> float:
    """L2 distance between unit quaternions, taking the closer of ``+-q``."""
    qa = rotation_to_quaternion(R_a)
    qb = rotation_to_quaternion(R_b)
    return float(min(np.linalg.norm(qa - qb), np.linalg.norm(qa + qb)))


class PoseLoss(NamedTuple):
    total: float
    rotation: float
    translation: float


def pose_loss(candidates, gt, config: PoseLossConfig = PoseLossConfig(),
              joint: bool = False) -> PoseLoss:
    """Clamped rotation/translation loss against the closest candidate.

    ``L_pose = min(L_rot, c_r) + lambda_rt * min(L_trans, c_t)``. By default
    ``L_rot`` and ``L_trans`` are minimized over the candidates independently;
    ``joint=True`` instead uses the single candidate with the smallest
    ``L_pose``.
    """
    candidates = list(candidates)
    if not 1 <= len(candidates) <= 4:
        raise InvalidInput("pose_loss needs between 1 and 4 candidates")
    t_gt = np.asarray(gt.translation, dtype=float)
    rot = np.array([quaternion_distance(c.rotation, gt.rotation) for c in candidates])
    trans = np.array([np.linalg.norm(np.asarray(c.translation) - t_gt) for c in candidates])

    def clamp(lr, lt):
        return min(lr, config.c_r) + config.lambda_rt * min(lt, config.c_t)

    if joint:
        totals = [clamp(lr, lt) for lr, lt in zip(rot, trans)]
        k = int(np.argmin(totals))
        return PoseLoss(float(totals[k]), float(rot[k]), float(trans[k]))
    lr, lt = float(rot.min()), float(trans.min())
    return PoseLoss(float(clamp(lr, lt)), lr, lt)


def rotation_error(R_est, R_gt) -> float:
    """Angle of ``R_est R_gt^T`` in degrees."""
    R_est = check_rotation(R_est)
    R_gt = check_rotation(R_gt)
    return float(np.degrees(np.linalg.norm(rodrigues_vector(R_est @ R_gt.T))))


def translation_angular_error(t_est, t_gt) -> float:
    """Angle between two translation directions in degrees, in [0, 180].

    Computed as ``atan2(|a x b|, a . b)``, which equals the arccos of the
    normalized dot product but stays accurate near 0 and 180 degrees.
    """
    a = np.asarray(t_est, dtype=float).reshape(3)
    b = np.asarray(t_gt, dtype=float).reshape(3)
    if not (np.linalg.norm(a) > 0 and np.linalg.norm(b) > 0):
        raise InvalidInput("translation vectors must be nonzero")
    return float(np.degrees(np.arctan2(np.linalg.norm(np.cross(a, b)), a @ b)))
