"""Two-view epipolar geometry.

Correspondences are ``(N, 4)`` float arrays with rows ``(u1, v1, u2, v2)``:
pixel coordinates of a point in image 1 followed by its match in image 2.
Fundamental matrices follow ``p2^T F p1 = 0`` with ``p = (u, v, 1)``.
"""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .camera import RelativePose, intrinsics_matrix
from .errors import (DegenerateConfiguration, EpipoleDegenerate, GradientUndefined,
                     InsufficientData, InvalidInput, NoValidPose, PointAtInfinity,
                     ZeroMatrix)
from .rotations import skew

SQRT2 = np.sqrt(2.0)
# entries within this relative margin of the max magnitude count as tied
_CANON_TIE_RTOL = 1e-6
_RANK_RTOL = 1e-10

_W = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]])


def as_correspondences(corr) -> np.ndarray:
    corr = np.asarray(corr, dtype=float)
    if corr.ndim == 1 and corr.size == 4:
        corr = corr.reshape(1, 4)
    if corr.ndim != 2 or corr.shape[1] != 4:
        raise InvalidInput(f"correspondences must have shape (N, 4), got {corr.shape}")
    if not np.all(np.isfinite(corr)):
        raise InvalidInput("correspondences contain non-finite values")
    return corr


def homogenize(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return np.concatenate([x, np.ones(x.shape[:-1] + (1,))], axis=-1)


def _similarity(pts):
    c = pts.mean(axis=0)
    d = np.linalg.norm(pts - c, axis=1).mean()
    if not d > 1e-12 * max(1.0, np.abs(c).max()):
        raise DegenerateConfiguration("all points coincide in one image")
    s = SQRT2 / d
    return np.array([[s, 0.0, -s * c[0]], [0.0, s, -s * c[1]], [0.0, 0.0, 1.0]])


def hartley_normalize(corr):
    """Condition both images: zero centroid and mean distance sqrt(2).

    Returns ``(normalized, T1, T2)`` where ``T1``/``T2`` map homogeneous pixel
    coordinates of image 1/2 to the normalized frame.
    """
    corr = as_correspondences(corr)
    if len(corr) == 0:
        raise InsufficientData("need at least one correspondence")
    T1 = _similarity(corr[:, :2])
    T2 = _similarity(corr[:, 2:])
    out = np.empty_like(corr)
    out[:, :2] = corr[:, :2] * T1[0, 0] + T1[:2, 2]
    out[:, 2:] = corr[:, 2:] * T2[0, 0] + T2[:2, 2]
    return out, T1, T2


def canonicalize_fundamental(F) -> np.ndarray:
    """Scale to unit Frobenius norm with the largest-magnitude entry positive.

    Ties within a relative 1e-6 of the maximum resolve to the first entry in
    row-major order, so near-symmetric matrices keep a stable sign.
    """
    F = np.asarray(F, dtype=float)
    n = np.linalg.norm(F)
    if n == 0 or not np.isfinite(n):
        raise ZeroMatrix("cannot canonicalize a zero or non-finite matrix")
    F = F / n
    a = np.abs(F).ravel()
    k = int(np.flatnonzero(a >= a.max() * (1 - _CANON_TIE_RTOL))[0])
    return -F if F.flat[k] < 0 else F


def enforce_rank2(F) -> np.ndarray:
    """Closest rank-2 matrix in Frobenius norm, canonically scaled."""
    F = np.asarray(F, dtype=float)
    if F.shape != (3, 3) or not np.all(np.isfinite(F)):
        raise InvalidInput("F must be a finite 3x3 matrix")
    if not np.any(F):
        raise ZeroMatrix("zero matrix has no rank-2 approximation")
    U, S, Vt = np.linalg.svd(F)
    return canonicalize_fundamental((U * [S[0], S[1], 0.0]) @ Vt)


def _design_matrix(corr):
    p1 = homogenize(corr[:, :2])
    p2 = homogenize(corr[:, 2:])
    return (p2[:, :, None] * p1[:, None, :]).reshape(len(corr), 9)


def weighted_eight_point(corr, weights=None) -> np.ndarray:
    """Weighted normalized 8-point estimate of F.

    Minimizes ``sum_i w_i (p2_i^T F p1_i)^2`` over unit-norm F in Hartley
    coordinates, then enforces rank 2 and returns the canonical F in pixels.
    Only points with positive weight take part in the normalization.
    """
    corr = as_correspondences(corr)
    n = len(corr)
    if weights is None:
        w = np.ones(n)
    else:
        w = np.asarray(weights, dtype=float).reshape(-1)
        if w.shape != (n,):
            raise InvalidInput(f"expected {n} weights, got {w.shape[0]}")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise InvalidInput("weights must be finite and nonnegative")
    active = w > 0
    if np.count_nonzero(active) < 8:
        raise InsufficientData("need at least 8 correspondences with positive weight")
    corr, w = corr[active], w[active] / w.max()
    normed, T1, T2 = hartley_normalize(corr)
    A = _design_matrix(normed) * np.sqrt(w)[:, None]
    _, s, Vt = np.linalg.svd(A, full_matrices=True)
    sv = np.zeros(9)
    sv[: s.size] = s
    if sv[7] <= _RANK_RTOL * sv[0]:
        raise DegenerateConfiguration("design matrix null space has dimension > 1")
    F_hat = Vt[-1].reshape(3, 3)
    U, S, Vt = np.linalg.svd(F_hat)
    F_hat = (U * [S[0], S[1], 0.0]) @ Vt
    return canonicalize_fundamental(T2.T @ F_hat @ T1)


def algebraic_error(corr, F) -> np.ndarray:
    corr = as_correspondences(corr)
    p1 = homogenize(corr[:, :2])
    p2 = homogenize(corr[:, 2:])
    return np.einsum("ni,ij,nj->n", p2, F, p1)


def _lines(corr, F):
    p1 = homogenize(corr[:, :2])
    p2 = homogenize(corr[:, 2:])
    l2 = p1 @ F.T  # F p1: line in image 2
    l1 = p2 @ F    # F^T p2: line in image 1
    e = np.sum(p2 * l2, axis=1)
    return e, l1, l2


def sampson_residual(corr, F, full_line_norm: bool = False, return_degenerate: bool = False):
    """Symmetric reciprocal-norm residual ``|e| (1/||F^T p2|| + 1/||F p1||)``.

    ``e = p2^T F p1``. By default the line norms use the two in-plane
    components, which makes each term a point-to-line distance in pixels.
    ``full_line_norm=True`` takes the norm of the whole homogeneous 3-vector.

    Accepts a single ``(4,)`` row or an ``(N, 4)`` array. Terms whose line
    normal vanishes are dropped; those rows are reported as degenerate.
    """
    F = np.asarray(F, dtype=float)
    single = np.ndim(corr) == 1
    corr = as_correspondences(corr)
    e, l1, l2 = _lines(corr, F)
    k = 3 if full_line_norm else 2
    n1 = np.linalg.norm(l1[:, :k], axis=1)
    n2 = np.linalg.norm(l2[:, :k], axis=1)
    with np.errstate(divide="ignore"):
        inv = np.where(n1 > 0, 1.0 / n1, 0.0) + np.where(n2 > 0, 1.0 / n2, 0.0)
    r = np.abs(e) * inv
    degenerate = (n1 == 0) | (n2 == 0)
    if single:
        r, degenerate = float(r[0]), bool(degenerate[0])
    return (r, degenerate) if return_degenerate else r


def classical_sampson_distance(corr, F):
    """First-order geometric error ``|e| / sqrt(l1x^2 + l1y^2 + l2x^2 + l2y^2)``."""
    F = np.asarray(F, dtype=float)
    single = np.ndim(corr) == 1
    e, l1, l2 = _lines(as_correspondences(corr), F)
    d = np.abs(e) / np.sqrt(l1[:, 0] ** 2 + l1[:, 1] ** 2 + l2[:, 0] ** 2 + l2[:, 1] ** 2)
    return float(d[0]) if single else d


def sampson_gradient(c, F, full_line_norm: bool = False):
    """Analytic gradient of :func:`sampson_residual` for one correspondence.

    Returns ``(d_points, d_F)`` with ``d_points`` ordered ``(u1, v1, u2, v2)``.
    At ``e == 0`` the right derivative of ``|e|`` is used.
    """
    F = np.asarray(F, dtype=float)
    c = as_correspondences(c)
    if len(c) != 1:
        raise InvalidInput("sampson_gradient takes a single correspondence")
    p1 = homogenize(c[0, :2])
    p2 = homogenize(c[0, 2:])
    l2 = F @ p1
    l1 = F.T @ p2
    e = p2 @ l2
    k = 3 if full_line_norm else 2
    m = np.zeros(3)
    m[:k] = 1.0
    n1 = np.linalg.norm(l1 * m)
    n2 = np.linalg.norm(l2 * m)
    if n1 == 0 or n2 == 0:
        raise GradientUndefined("epipolar line normal vanishes")
    sign = -1.0 if e < 0 else 1.0
    inv = 1.0 / n1 + 1.0 / n2

    # e: de/dp1 = F^T p2, de/dp2 = F p1, de/dF = p2 p1^T
    de_p1, de_p2, de_F = l1, l2, np.outer(p2, p1)
    # n2 = ||m * (F p1)||, n1 = ||m * (F^T p2)||
    g2 = (m * l2) / n2
    g1 = (m * l1) / n1
    dn2_p1, dn2_F = F.T @ g2, np.outer(g2, p1)
    dn1_p2, dn1_F = F @ g1, np.outer(p2, g1)

    d_p1 = sign * (de_p1 * inv - e * dn2_p1 / n2**2)
    d_p2 = sign * (de_p2 * inv - e * dn1_p2 / n1**2)
    d_F = sign * (de_F * inv - e * (dn1_F / n1**2 + dn2_F / n2**2))
    return np.concatenate([d_p1[:2], d_p2[:2]]), d_F


def epipolar_line(F, p, which_image: int = 2) -> np.ndarray:
    """Epipolar line ``(a, b, c)`` with ``a^2 + b^2 = 1``.

    ``which_image=2``: ``p`` lies in image 1, returns ``F p`` (a line in image 2).
    ``which_image=1``: ``p`` lies in image 2, returns ``F^T p``.
    """
    F = np.asarray(F, dtype=float)
    ph = homogenize(np.asarray(p, dtype=float).reshape(2))
    if which_image == 2:
        line = F @ ph
    elif which_image == 1:
        line = F.T @ ph
    else:
        raise InvalidInput("which_image must be 1 or 2")
    n = np.hypot(line[0], line[1])
    if n == 0:
        raise EpipoleDegenerate("point is an epipole; its epipolar line is undefined")
    return line / n


def fundamental_from_pose(K1, K2, pose: RelativePose) -> np.ndarray:
    """``F = K2^-T [t]_x R K1^-1``, canonicalized."""
    K1 = intrinsics_matrix(K1)
    K2 = intrinsics_matrix(K2)
    E = skew(pose.translation) @ pose.rotation
    return canonicalize_fundamental(np.linalg.solve(K2.T, E) @ np.linalg.inv(K1))


def essential_from_fundamental(F, K1, K2) -> np.ndarray:
    """``E = K2^T F K1`` projected onto the essential manifold, ``||E||_F = sqrt(2)``."""
    E = intrinsics_matrix(K2).T @ np.asarray(F, dtype=float) @ intrinsics_matrix(K1)
    U, S, Vt = np.linalg.svd(E)
    if not S[1] > _RANK_RTOL * S[0]:
        raise DegenerateConfiguration("essential matrix has rank < 2")
    return (U * [1.0, 1.0, 0.0]) @ Vt


def decompose_essential(E) -> list[RelativePose]:
    """The four ``(R, t)`` candidates, ordered ``(R1,+t), (R1,-t), (R2,+t), (R2,-t)``."""
    U, _, Vt = np.linalg.svd(np.asarray(E, dtype=float))
    if np.linalg.det(U) < 0:
        U = -U
    if np.linalg.det(Vt) < 0:
        Vt = -Vt
    R1 = U @ _W @ Vt
    R2 = U @ _W.T @ Vt
    t = U[:, 2]
    return [RelativePose(R1, t), RelativePose(R1, -t), RelativePose(R2, t), RelativePose(R2, -t)]


class Triangulation(NamedTuple):
    points: np.ndarray   # (N, 3) in camera-1 frame
    depth1: np.ndarray
    depth2: np.ndarray
    valid: np.ndarray    # False where the point is at infinity or undetermined


def triangulate_points(corr, pose: RelativePose, K1, K2) -> Triangulation:
    """Linear (DLT) triangulation of every correspondence under ``pose``.

    Works in normalized camera coordinates for conditioning. Invalid rows get
    NaN points and depths.
    """
    corr = as_correspondences(corr)
    x1 = homogenize(corr[:, :2]) @ np.linalg.inv(intrinsics_matrix(K1)).T
    x2 = homogenize(corr[:, 2:]) @ np.linalg.inv(intrinsics_matrix(K2)).T
    x1 = x1 / x1[:, 2:]
    x2 = x2 / x2[:, 2:]
    P1 = np.eye(3, 4)
    P2 = pose.matrix
    A = np.stack([
        x1[:, 0, None] * P1[2] - P1[0],
        x1[:, 1, None] * P1[2] - P1[1],
        x2[:, 0, None] * P2[2] - P2[0],
        x2[:, 1, None] * P2[2] - P2[1],
    ], axis=1)
    _, s, Vt = np.linalg.svd(A)
    Xh = Vt[:, -1, :]
    w = Xh[:, 3]
    valid = (np.abs(w) > 1e-12) & (s[:, 2] > 1e-12 * s[:, 0])
    with np.errstate(divide="ignore", invalid="ignore"):
        X = Xh[:, :3] / w[:, None]
    X[~valid] = np.nan
    depth2 = X @ pose.rotation[2] + pose.translation[2]
    return Triangulation(X, X[:, 2].copy(), depth2, valid)


def triangulate_dlt(c, pose: RelativePose, K1, K2):
    """Triangulate one correspondence; returns ``(point3d, depth1, depth2)``."""
    tri = triangulate_points(c, pose, K1, K2)
    if len(tri.valid) != 1:
        raise InvalidInput("triangulate_dlt takes a single correspondence")
    if not tri.valid[0]:
        raise PointAtInfinity("triangulated point is at infinity or undetermined")
    return tri.points[0], float(tri.depth1[0]), float(tri.depth2[0])


class CheiralityResult(NamedTuple):
    pose: RelativePose
    positive_depth_counts: list
    index: int
    tie_broken: bool


def cheirality_select(candidates, corr, K1, K2) -> CheiralityResult:
    """Pick the candidate with the most points in front of both cameras.

    Ties go to the lowest index and set ``tie_broken``.
    """
    corr = as_correspondences(corr)
    if len(corr) == 0:
        raise InsufficientData("need at least one correspondence")
    counts = []
    for pose in candidates:
        tri = triangulate_points(corr, pose, K1, K2)
        with np.errstate(invalid="ignore"):
            front = tri.valid & (tri.depth1 > 0) & (tri.depth2 > 0)
        counts.append(int(np.count_nonzero(front)))
    best = max(counts)
    if best == 0:
        raise NoValidPose("no candidate places any point in front of both cameras")
    index = counts.index(best)
    return CheiralityResult(candidates[index], counts, index, counts.count(best) > 1)


def epipoles(F):
    """Homogeneous right and left null vectors ``(e1, e2)`` with ``F e1 = 0``, ``F^T e2 = 0``."""
    U, _, Vt = np.linalg.svd(np.asarray(F, dtype=float))
    return Vt[-1], U[:, -1]
