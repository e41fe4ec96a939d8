"""Rotation parameterizations: unit quaternions and Rodrigues vectors."""
import numpy as np

from .camera import check_rotation

# below this angle the Rodrigues map uses its Taylor series
_SMALL_ANGLE = 1e-8


def skew(v) -> np.ndarray:
    x, y, z = np.asarray(v, dtype=float).reshape(3)
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def vee(S) -> np.ndarray:
    """Inverse of :func:`skew` applied to the antisymmetric part of ``S``."""
    S = np.asarray(S, dtype=float)
    return 0.5 * np.array([S[2, 1] - S[1, 2], S[0, 2] - S[2, 0], S[1, 0] - S[0, 1]])


def canonical_quaternion(q) -> np.ndarray:
    """Normalize ``q = (w, x, y, z)`` and fix the sign so that ``w >= 0``.

    When ``w == 0`` the first nonzero vector component is made positive.
    """
    q = np.asarray(q, dtype=float).reshape(4)
    q = q / np.linalg.norm(q)
    if q[0] < 0:
        q = -q
    elif q[0] == 0:
        nz = np.flatnonzero(q[1:])
        if nz.size and q[1 + nz[0]] < 0:
            q = -q
    return q


def rotation_to_quaternion(R) -> np.ndarray:
    """Convert a rotation matrix to a canonical unit quaternion ``(w, x, y, z)``.

    Uses Shepperd's method: the largest of ``trace, R00, R11, R22`` picks
    the branch, so the square root is never taken of a small number.
    """
    R = check_rotation(R)
    tr = np.trace(R)
    d = np.diag(R)
    k = int(np.argmax([tr, d[0], d[1], d[2]]))
    if k == 0:
        w = 0.5 * np.sqrt(1.0 + tr)
        f = 0.25 / w
        q = [w, (R[2, 1] - R[1, 2]) * f, (R[0, 2] - R[2, 0]) * f, (R[1, 0] - R[0, 1]) * f]
    elif k == 1:
        x = 0.5 * np.sqrt(1.0 + R[0, 0] - R[1, 1] - R[2, 2])
        f = 0.25 / x
        q = [(R[2, 1] - R[1, 2]) * f, x, (R[0, 1] + R[1, 0]) * f, (R[0, 2] + R[2, 0]) * f]
    elif k == 2:
        y = 0.5 * np.sqrt(1.0 - R[0, 0] + R[1, 1] - R[2, 2])
        f = 0.25 / y
        q = [(R[0, 2] - R[2, 0]) * f, (R[0, 1] + R[1, 0]) * f, y, (R[1, 2] + R[2, 1]) * f]
    else:
        z = 0.5 * np.sqrt(1.0 - R[0, 0] - R[1, 1] + R[2, 2])
        f = 0.25 / z
        q = [(R[1, 0] - R[0, 1]) * f, (R[0, 2] + R[2, 0]) * f, (R[1, 2] + R[2, 1]) * f, z]
    return canonical_quaternion(q)


def quaternion_to_rotation(q) -> np.ndarray:
    w, x, y, z = np.asarray(q, dtype=float).reshape(4) / np.linalg.norm(q)
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def rotation_angle(R) -> float:
    """Rotation angle in radians, accurate over the whole range [0, pi]."""
    R = check_rotation(R)
    s = np.linalg.norm(vee(R))
    c = 0.5 * (np.trace(R) - 1.0)
    return float(np.arctan2(s, c))


def rodrigues_vector(R) -> np.ndarray:
    """Axis-angle vector of ``R``; its norm is the rotation angle in [0, pi]."""
    R = check_rotation(R)
    s_vec = vee(R)  # sin(theta) * axis
    s = np.linalg.norm(s_vec)
    c = 0.5 * (np.trace(R) - 1.0)
    theta = np.arctan2(s, c)
    if theta < _SMALL_ANGLE:
        return s_vec * (1.0 + theta * theta / 6.0)
    if c > 0:
        return s_vec * (theta / s)
    # near pi: axis from the symmetric part, (R + R^T)/2 - cos I = (1 - cos) a a^T
    B = 0.5 * (R + R.T) - c * np.eye(3)
    col = int(np.argmax(np.diag(B)))
    axis = B[:, col] / np.linalg.norm(B[:, col])
    if axis @ s_vec < 0:
        axis = -axis
    return axis * theta


def rodrigues_to_rotation(v) -> np.ndarray:
    v = np.asarray(v, dtype=float).reshape(3)
    theta = np.linalg.norm(v)
    K = skew(v)
    if theta < _SMALL_ANGLE:
        return np.eye(3) + K + 0.5 * K @ K
    return np.eye(3) + (np.sin(theta) / theta) * K + ((1.0 - np.cos(theta)) / theta**2) * K @ K


def axis_angle_rotation(axis, angle: float) -> np.ndarray:
    """Rotation by ``angle`` radians about ``axis`` (normalized internally)."""
    axis = np.asarray(axis, dtype=float).reshape(3)
    return rodrigues_to_rotation(axis / np.linalg.norm(axis) * angle)
