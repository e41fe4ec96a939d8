"""Finite-difference checks of the analytic Softargmax and Sampson gradients.

Errors are normwise: ``max|analytic - numeric| / max|numeric|`` per case.
"""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .geometry import enforce_rank2, sampson_gradient, sampson_residual
from .keypoints import softargmax_gradient, softargmax_offsets

FD_STEP = 1e-6


class GradCheckReport(NamedTuple):
    name: str
    trials: int
    max_rel_error: float
    worst_trial: int


def _rel(analytic, numeric):
    scale = max(np.max(np.abs(numeric)), 1e-12)
    return float(np.max(np.abs(analytic - numeric)) / scale)


def random_sampson_case(rng):
    """A generic rank-2 F and a correspondence safely off its epipolar line."""
    while True:
        F = enforce_rank2(rng.normal(size=(3, 3)))
        c = rng.uniform(-1.0, 1.0, size=4)
        r, degenerate = sampson_residual(c, F, return_degenerate=True)
        p1 = np.append(c[:2], 1.0)
        p2 = np.append(c[2:], 1.0)
        n1 = np.hypot(*(F.T @ p2)[:2])
        n2 = np.hypot(*(F @ p1)[:2])
        if not degenerate and abs(p2 @ F @ p1) > 1e-2 and min(n1, n2) > 1e-1:
            return c, F


def sampson_fd(c, F, h=FD_STEP):
    dp = np.zeros(4)
    for k in range(4):
        e = np.zeros(4)
        e[k] = h
        dp[k] = (sampson_residual(c + e, F) - sampson_residual(c - e, F)) / (2 * h)
    dF = np.zeros((3, 3))
    for i in range(3):
        for j in range(3):
            E = np.zeros((3, 3))
            E[i, j] = h
            dF[i, j] = (sampson_residual(c, F + E) - sampson_residual(c, F - E)) / (2 * h)
    return dp, dF


def softargmax_fd(patch, h=FD_STEP):
    J = np.zeros((2, patch.size))
    for k in range(patch.size):
        E = np.zeros(patch.size)
        E[k] = h
        E = E.reshape(patch.shape)
        J[:, k] = (np.array(softargmax_offsets(patch + E))
                   - np.array(softargmax_offsets(patch - E))) / (2 * h)
    return J


def check_sampson(rng, trials: int) -> GradCheckReport:
    worst, at = 0.0, -1
    for k in range(trials):
        c, F = random_sampson_case(rng)
        dp, dF = sampson_gradient(c, F)
        np_, nF = sampson_fd(c, F)
        err = _rel(np.concatenate([dp, dF.ravel()]), np.concatenate([np_, nF.ravel()]))
        if err > worst:
            worst, at = err, k
    return GradCheckReport("sampson", trials, worst, at)


def check_softargmax(rng, trials: int, size: int = 5) -> GradCheckReport:
    worst, at = 0.0, -1
    for k in range(trials):
        patch = rng.normal(scale=2.0, size=(size, size))
        err = _rel(softargmax_gradient(patch), softargmax_fd(patch))
        if err > worst:
            worst, at = err, k
    return GradCheckReport("softargmax", trials, worst, at)


def run_all(seed: int = 0, trials: int = 1000):
    rng = np.random.default_rng(seed)
    return [check_softargmax(rng, trials), check_sampson(rng, trials)]
