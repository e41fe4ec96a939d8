"""Synthetic two-view scenes with exact correspondences.

All randomness comes from ``numpy.random.Generator(PCG64(seed))`` so a
config plus seed always reproduces the same scene.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .camera import CameraIntrinsics, RelativePose
from .errors import GenerationFailed, InvalidInput, ZeroBaseline
from .geometry import as_correspondences, epipolar_line, fundamental_from_pose
from .rotations import axis_angle_rotation

TRANSLATION_PRESETS = {
    "lateral": np.array([1.0, 0.0, 0.0]),
    "forward": np.array([0.0, 0.0, 1.0]),
}


def default_intrinsics() -> CameraIntrinsics:
    return CameraIntrinsics(500.0, 500.0, 320.0, 240.0)


@dataclass(frozen=True)
class SceneConfig:
    num_points: int = 100
    depth_range: tuple = (4.0, 20.0)
    rotation_magnitude: float = 5.0  # degrees
    translation_direction: object = "random"  # "forward" | "lateral" | "random" | 3-vector
    image_size: tuple = (640, 480)
    intrinsics: CameraIntrinsics = field(default_factory=default_intrinsics)
    baseline: float = 1.0  # meters
    seed: int = 0
    max_attempts: int = 100

    def __post_init__(self):
        if self.num_points < 8:
            raise InvalidInput("num_points must be at least 8")
        lo, hi = self.depth_range
        if not 0 < lo <= hi:
            raise InvalidInput("depth range must satisfy 0 < min <= max")
        if self.baseline < 0:
            raise InvalidInput("baseline must be nonnegative")


@dataclass(frozen=True, eq=False)
class SyntheticScene:
    points3d: np.ndarray          # (N, 3), camera-1 frame
    pose: RelativePose            # unit translation
    baseline: float               # metric length of the translation
    intrinsics: CameraIntrinsics
    image_size: tuple

    @property
    def metric_translation(self) -> np.ndarray:
        return self.pose.translation * self.baseline


@dataclass(frozen=True)
class CorruptionConfig:
    noise_sigma: float = 0.0
    outlier_ratio: float = 0.0
    outlier_min_offset: float = 20.0
    seed: int = 0

    def __post_init__(self):
        if self.noise_sigma < 0:
            raise InvalidInput("noise_sigma must be nonnegative")
        if not 0 <= self.outlier_ratio < 1:
            raise InvalidInput("outlier_ratio must lie in [0, 1)")
        if self.outlier_ratio > 0 and not self.outlier_min_offset > 5 * self.noise_sigma:
            raise InvalidInput("outlier_min_offset must exceed 5 * noise_sigma")


def _translation_direction(direction, rng):
    if isinstance(direction, str):
        if direction == "random":
            t = rng.normal(size=3)
            return t / np.linalg.norm(t)
        try:
            return TRANSLATION_PRESETS[direction].copy()
        except KeyError:
            raise InvalidInput(f"unknown translation preset {direction!r}") from None
    t = np.asarray(direction, dtype=float).reshape(3)
    return t / np.linalg.norm(t)


def _project(K, X):
    x = X @ K.T
    return x[:, :2] / x[:, 2:]


def _inside(uv, size):
    W, H = size
    return (uv[:, 0] >= 0) & (uv[:, 0] < W) & (uv[:, 1] >= 0) & (uv[:, 1] < H)


def sample_points(pose: RelativePose, baseline: float, config: SceneConfig, rng) -> np.ndarray:
    """Rejection-sample points visible in both cameras for a fixed pose."""
    K = config.intrinsics.matrix
    Kinv = np.linalg.inv(K)
    W, H = config.image_size
    t = pose.translation * baseline
    need = config.num_points
    kept = []
    for _ in range(config.max_attempts):
        m = 4 * need
        uv = rng.uniform([0.0, 0.0], [W, H], size=(m, 2))
        z = rng.uniform(*config.depth_range, size=m)
        X = (np.column_stack([uv, np.ones(m)]) @ Kinv.T) * z[:, None]
        X2 = X @ pose.rotation.T + t
        ok = (X2[:, 2] > 0) & _inside(_project(K, np.where(X2[:, 2:] > 0, X2, 1.0)), config.image_size)
        # image-1 bounds are guaranteed by construction, but uv == W is possible in theory
        ok &= _inside(uv, config.image_size)
        kept.append(X[ok])
        if sum(len(k) for k in kept) >= need:
            return np.concatenate(kept)[:need]
    raise GenerationFailed(f"could not place {need} visible points in {config.max_attempts} rounds")


def generate_scene(config: SceneConfig) -> SyntheticScene:
    """Random pose of the configured magnitude plus visible 3D points."""
    rng = np.random.default_rng(config.seed)
    axis = rng.normal(size=3)
    R = axis_angle_rotation(axis, np.deg2rad(config.rotation_magnitude))
    t = _translation_direction(config.translation_direction, rng)
    pose = RelativePose(R, t)
    points = sample_points(pose, config.baseline, config, rng)
    return SyntheticScene(points, pose, float(config.baseline), config.intrinsics,
                          tuple(config.image_size))


def project_scene(scene: SyntheticScene) -> np.ndarray:
    """Exact pinhole projections as an ``(N, 4)`` correspondence array."""
    K = scene.intrinsics.matrix
    X2 = scene.points3d @ scene.pose.rotation.T + scene.metric_translation
    return np.hstack([_project(K, scene.points3d), _project(K, X2)])


def scene_ground_truth(scene: SyntheticScene):
    """``(F_gt, pose_gt)``; raises ZeroBaseline for a pure rotation."""
    if scene.baseline == 0:
        raise ZeroBaseline("fundamental matrix undefined without translation")
    K = scene.intrinsics
    return fundamental_from_pose(K, K, scene.pose), scene.pose


def corrupt(corr, config: CorruptionConfig, F=None):
    """Add Gaussian noise to inliers and displace a random subset as outliers.

    Only image-2 coordinates change. Exactly ``floor(ratio * N)`` rows become
    outliers, moved by a magnitude drawn uniformly from
    ``[outlier_min_offset, 2 * outlier_min_offset]``. The direction is uniform
    at random, or, when ``F`` is given, along the normal of each point's
    epipolar line in image 2 so that the offset shows up fully in its
    epipolar distance.

    Returns ``(corrupted, inlier_mask)``.
    """
    corr = as_correspondences(corr).copy()
    n = len(corr)
    rng = np.random.default_rng(config.seed)
    k = int(np.floor(config.outlier_ratio * n))
    mask = np.ones(n, dtype=bool)
    mask[rng.choice(n, size=k, replace=False)] = False
    if config.noise_sigma > 0:
        corr[mask, 2:] += rng.normal(scale=config.noise_sigma, size=(n - k, 2))
    if k:
        mag = rng.uniform(config.outlier_min_offset, 2 * config.outlier_min_offset, size=k)
        if F is None:
            phi = rng.uniform(0, 2 * np.pi, size=k)
            d = np.column_stack([np.cos(phi), np.sin(phi)])
        else:
            sign = rng.choice([-1.0, 1.0], size=k)
            d = np.array([epipolar_line(F, p, 2)[:2] for p in corr[~mask, :2]]) * sign[:, None]
        corr[~mask, 2:] += d * mag[:, None]
    return corr, mask
