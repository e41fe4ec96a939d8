"""Camera intrinsics and relative pose containers."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInput, InvalidRotation

ORTHO_TOL = 1e-6


def check_rotation(R, tol: float = ORTHO_TOL) -> np.ndarray:
    """Return ``R`` as a float array, raising InvalidRotation unless it is in SO(3)."""
    R = np.asarray(R, dtype=float)
    if R.shape != (3, 3) or not np.all(np.isfinite(R)):
        raise InvalidRotation(f"expected a finite 3x3 matrix, got shape {R.shape}")
    if np.linalg.norm(R @ R.T - np.eye(3)) > tol or np.linalg.det(R) < 0:
        raise InvalidRotation("matrix is not a proper rotation")
    return R


@dataclass(frozen=True)
class CameraIntrinsics:
    fx: float
    fy: float
    cx: float
    cy: float
    skew: float = 0.0

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise InvalidInput("focal lengths must be positive")

    @property
    def matrix(self) -> np.ndarray:
        return np.array([[self.fx, self.skew, self.cx],
                         [0.0, self.fy, self.cy],
                         [0.0, 0.0, 1.0]])

    @classmethod
    def from_matrix(cls, K) -> "CameraIntrinsics":
        K = np.asarray(K, dtype=float)
        if K.shape != (3, 3) or K[1, 0] or K[2, 0] or K[2, 1] or K[2, 2] != 1.0:
            raise InvalidInput("K must be upper triangular with K[2, 2] == 1")
        return cls(K[0, 0], K[1, 1], K[0, 2], K[1, 2], K[0, 1])

    @classmethod
    def parse(cls, text: str) -> "CameraIntrinsics":
        """Parse ``"fx,fy,cx,cy"`` (optionally a fifth skew value)."""
        try:
            values = [float(x) for x in text.split(",")]
        except ValueError as exc:
            raise InvalidInput(f"bad intrinsics string {text!r}") from exc
        if len(values) not in (4, 5):
            raise InvalidInput("intrinsics need 4 or 5 comma-separated values")
        return cls(*values)


def intrinsics_matrix(K) -> np.ndarray:
    """Accept CameraIntrinsics, a 3x3 array, or None (identity)."""
    if K is None:
        return np.eye(3)
    if isinstance(K, CameraIntrinsics):
        return K.matrix
    K = np.asarray(K, dtype=float)
    if K.shape != (3, 3):
        raise InvalidInput("intrinsics matrix must be 3x3")
    return K


@dataclass(frozen=True, eq=False)
class RelativePose:
    """Rigid motion mapping camera-1 coordinates into camera 2: ``X2 = R X1 + t``.

    The translation is stored as a unit vector; metric scale is not observable
    from two views.
    """

    rotation: np.ndarray
    translation: np.ndarray = field(default_factory=lambda: np.array([1.0, 0.0, 0.0]))

    def __post_init__(self):
        R = check_rotation(self.rotation).copy()
        t = np.asarray(self.translation, dtype=float).reshape(-1).copy()
        if t.shape != (3,) or not np.all(np.isfinite(t)):
            raise InvalidInput("translation must be a finite 3-vector")
        n = np.linalg.norm(t)
        if n == 0:
            raise InvalidInput("translation direction must be nonzero")
        t = t / n
        R.flags.writeable = False
        t.flags.writeable = False
        object.__setattr__(self, "rotation", R)
        object.__setattr__(self, "translation", t)

    @property
    def matrix(self) -> np.ndarray:
        return np.column_stack([self.rotation, self.translation])

    def inverse(self) -> "RelativePose":
        return RelativePose(self.rotation.T, -self.rotation.T @ self.translation)

    def __repr__(self):
        return f"RelativePose(rotation={self.rotation.tolist()}, translation={self.translation.tolist()})"
