"""Reweighted least-squares and RANSAC estimation of F, and the full pose pipeline.

The recurrent estimator alternates three steps: solve a weighted 8-point
problem, measure every correspondence's epipolar residual, and let a weight
predictor turn (points, previous weights, residuals) into new weights.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Protocol

import numpy as np
from scipy.special import expit

from .camera import RelativePose
from .errors import (DegenerateConfiguration, InsufficientData, InvalidInput, ModelLoadError,
                     NoConsensus, WeightCollapse)
from .geometry import (as_correspondences, cheirality_select, decompose_essential, epipoles,
                       essential_from_fundamental, sampson_residual, weighted_eight_point)


class WeightPredictor(Protocol):
    def update(self, corr: np.ndarray, prev_weights: np.ndarray,
               residuals: np.ndarray) -> np.ndarray: ...


class UniformPredictor:
    """Keeps every weight at 1: IRLS then reduces to a single 8-point solve."""

    def update(self, corr, prev_weights, residuals):
        return np.ones(len(residuals))


@dataclass(frozen=True)
class GemanMcClurePredictor:
    scale: float = 1.0

    def __post_init__(self):
        if not self.scale > 0:
            raise InvalidInput("scale must be positive")

    def update(self, corr, prev_weights, residuals):
        s2 = self.scale**2
        return s2 / (s2 + np.asarray(residuals, dtype=float) ** 2) ** 2


@dataclass(frozen=True)
class HuberPredictor:
    delta: float = 1.0

    def __post_init__(self):
        if not self.delta > 0:
            raise InvalidInput("delta must be positive")

    def update(self, corr, prev_weights, residuals):
        r = np.asarray(residuals, dtype=float)
        with np.errstate(divide="ignore"):
            return np.where(r <= self.delta, 1.0, self.delta / r)


def geman_mcclure_predictor(scale: float) -> GemanMcClurePredictor:
    return GemanMcClurePredictor(scale)


def huber_predictor(delta: float) -> HuberPredictor:
    return HuberPredictor(delta)


class MLPWeightPredictor:
    """Per-point scorer: an MLP over ``(u1, v1, u2, v2, residual, prev_weight)``.

    Hidden layers use ReLU; the single output passes through a sigmoid.
    Each layer computes ``W x + b`` with ``W`` of shape ``(rows, cols)``.
    """

    n_inputs = 6

    def __init__(self, layers):
        self.layers = [(np.asarray(W, dtype=float), np.asarray(b, dtype=float)) for W, b in layers]
        prev = self.n_inputs
        for k, (W, b) in enumerate(self.layers):
            if W.ndim != 2 or W.shape[1] != prev or b.shape != (W.shape[0],):
                raise ModelLoadError(f"layer {k}: shape {W.shape} does not chain from {prev}")
            prev = W.shape[0]
        if not self.layers or prev != 1:
            raise ModelLoadError("the last layer must have exactly one output")

    @classmethod
    def from_dict(cls, model) -> "MLPWeightPredictor":
        try:
            if set(model) - {"layers", "activation"}:
                raise ModelLoadError(f"unknown keys {sorted(set(model) - {'layers', 'activation'})}")
            if model.get("activation", "relu") != "relu":
                raise ModelLoadError("only 'relu' hidden activation is supported")
            layers = []
            for k, layer in enumerate(model["layers"]):
                rows, cols = int(layer["rows"]), int(layer["cols"])
                weights = [float(x) for x in layer["weights"]]
                bias = [float(x) for x in layer["bias"]]
                if len(weights) != rows * cols or len(bias) != rows:
                    raise ModelLoadError(f"layer {k}: weight/bias lengths do not match rows x cols")
                layers.append((np.reshape(weights, (rows, cols)), np.asarray(bias)))
        except ModelLoadError:
            raise
        except (KeyError, TypeError, ValueError, AttributeError) as exc:
            raise ModelLoadError(f"malformed model: {exc}") from exc
        return cls(layers)

    @classmethod
    def from_file(cls, path) -> "MLPWeightPredictor":
        try:
            with open(path, encoding="utf-8") as fh:
                model = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ModelLoadError(f"cannot read model {path}: {exc}") from exc
        if not isinstance(model, dict):
            raise ModelLoadError("model file must hold a JSON object")
        return cls.from_dict(model)

    def to_dict(self):
        return {
            "activation": "relu",
            "layers": [{"rows": W.shape[0], "cols": W.shape[1], "weights": W.ravel().tolist(),
                        "bias": b.tolist()} for W, b in self.layers],
        }

    def forward(self, features) -> np.ndarray:
        h = np.atleast_2d(np.asarray(features, dtype=float))
        for k, (W, b) in enumerate(self.layers):
            h = h @ W.T + b
            if k < len(self.layers) - 1:
                h = np.maximum(h, 0.0)
        return expit(h[:, 0])

    def update(self, corr, prev_weights, residuals):
        features = np.column_stack([corr, residuals, prev_weights])
        return self.forward(features)


def file_weight_predictor(path) -> MLPWeightPredictor:
    return MLPWeightPredictor.from_file(path)


@dataclass(frozen=True)
class IrlsConfig:
    iterations: int = 5
    predictor: object = field(default_factory=UniformPredictor)

    def __post_init__(self):
        if self.iterations < 1:
            raise InvalidInput("iterations must be >= 1")


class IrlsResult(NamedTuple):
    F: np.ndarray
    weights: np.ndarray
    residual_means: list


def _rescale(w):
    w = np.asarray(w, dtype=float)
    if w.ndim != 1 or not np.all(np.isfinite(w)) or np.any(w < 0):
        raise WeightCollapse("predictor returned invalid weights")
    m = w.max(initial=0.0)
    if m <= 0:
        raise WeightCollapse("predictor returned all-zero weights")
    return w / m


def irls_estimate(corr, config: IrlsConfig = IrlsConfig(), initial_weights=None) -> IrlsResult:
    """Run ``config.iterations`` rounds of solve / residual / reweight.

    Weights start uniform unless ``initial_weights`` is given and are rescaled
    to max 1 after every prediction. The returned weights are the ones that
    produced the returned F.
    """
    corr = as_correspondences(corr)
    if len(corr) < 8:
        raise InsufficientData("need at least 8 correspondences")
    w = np.ones(len(corr)) if initial_weights is None else _rescale(initial_weights)
    means = []
    for k in range(config.iterations):
        F = weighted_eight_point(corr, w)
        r = sampson_residual(corr, F)
        means.append(float(r.mean()))
        if k < config.iterations - 1:
            w = _rescale(config.predictor.update(corr, w, r))
    return IrlsResult(F, w, means)


@dataclass(frozen=True)
class RansacConfig:
    threshold: float = 2.0  # pixels, on sampson_residual
    max_iterations: int = 1000
    confidence: float = 0.999
    seed: int = 0

    def __post_init__(self):
        if not self.threshold > 0:
            raise InvalidInput("threshold must be positive")
        if not 0 < self.confidence < 1:
            raise InvalidInput("confidence must lie in (0, 1)")
        if self.max_iterations < 1:
            raise InvalidInput("max_iterations must be >= 1")


class RansacResult(NamedTuple):
    F: np.ndarray
    inlier_mask: np.ndarray
    iterations: int


def _iteration_bound(ratio, confidence, cap):
    if ratio >= 1.0:
        return 0
    denom = math.log1p(-ratio**8)
    if denom == 0:
        return cap
    return min(cap, int(math.ceil(math.log(1 - confidence) / denom)))


def ransac_estimate(corr, config: RansacConfig = RansacConfig()) -> RansacResult:
    """Hypothesize-and-verify with 8-point minimal samples and a final refit.

    Input rows are sorted lexicographically before sampling, so the result
    depends only on the set of correspondences and the seed, not their order.
    """
    corr = as_correspondences(corr)
    n = len(corr)
    if n < 8:
        raise InsufficientData("need at least 8 correspondences")
    order = np.lexsort(corr.T[::-1])
    pts = corr[order]
    rng = np.random.default_rng(config.seed)
    best_mask, best_count = None, 0
    bound = config.max_iterations
    it = 0
    while it < bound:
        it += 1
        sample = rng.choice(n, size=8, replace=False)
        try:
            F = weighted_eight_point(pts[sample])
        except DegenerateConfiguration:
            continue
        mask = sampson_residual(pts, F) <= config.threshold
        count = int(np.count_nonzero(mask))
        if count > best_count:
            best_mask, best_count = mask, count
            bound = min(bound, max(it, _iteration_bound(count / n, config.confidence,
                                                        config.max_iterations)))
    if best_count < 8:
        raise NoConsensus(f"best hypothesis has {best_count} inliers (< 8)")
    F = weighted_eight_point(pts[best_mask])
    mask = sampson_residual(pts, F) <= config.threshold
    if np.count_nonzero(mask) < 8:
        mask = best_mask
    inliers = np.empty(n, dtype=bool)
    inliers[order] = mask
    return RansacResult(F, inliers, it)


class PoseEstimate(NamedTuple):
    pose: RelativePose
    F: np.ndarray
    diagnostics: dict


def pose_from_fundamental(F, corr, K1, K2):
    """Essential conversion, 4-way decomposition and cheirality selection."""
    E = essential_from_fundamental(F, K1, K2)
    return cheirality_select(decompose_essential(E), corr, K1, K2)


def estimate_relative_pose(corr, K1, K2, method: str = "irls", config=None,
                           image_size=None, initial_weights=None) -> PoseEstimate:
    """Correspondences to relative pose via IRLS (``"irls"``) or RANSAC (``"ransac"``).

    Cheirality is evaluated on the RANSAC inliers, or on all points for IRLS.
    When ``image_size = (W, H)`` is given the diagnostics report whether each
    epipole falls inside its image (typical for forward motion).
    """
    corr = as_correspondences(corr)
    if len(corr) < 8:
        raise InsufficientData("need at least 8 correspondences")
    diag = {"method": method}
    if method == "irls":
        res = irls_estimate(corr, config or IrlsConfig(), initial_weights)
        F = res.F
        diag.update(weights=res.weights, residual_means=res.residual_means)
        support = corr
    elif method == "ransac":
        res = ransac_estimate(corr, config or RansacConfig())
        F = res.F
        diag.update(inlier_mask=res.inlier_mask, iterations=res.iterations,
                    residual_means=[float(sampson_residual(corr[res.inlier_mask], F).mean())])
        support = corr[res.inlier_mask]
    else:
        raise InvalidInput(f"unknown method {method!r}")
    sel = pose_from_fundamental(F, support, K1, K2)
    diag.update(positive_depth_counts=sel.positive_depth_counts, candidate_index=sel.index,
                tie_broken=sel.tie_broken)
    e1, e2 = epipoles(F)
    for name, e in (("epipole1", e1), ("epipole2", e2)):
        diag[name] = (e[:2] / e[2]).tolist() if abs(e[2]) > 1e-12 else None
    if image_size is not None:
        W, H = image_size
        for name in ("epipole1", "epipole2"):
            p = diag[name]
            diag[name + "_in_image"] = p is not None and 0 <= p[0] < W and 0 <= p[1] < H
    return PoseEstimate(sel.pose, F, diag)
