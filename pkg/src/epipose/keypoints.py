"""Heatmap keypoints: NMS, Softargmax subpixel refinement, descriptors, matching.

Coordinates are ``(u, v)`` = (column, row); pixel ``(u, v)`` has its
center at the integer position. Heatmaps are ``(H, W)`` arrays and
descriptor maps are ``(H/8, W/8, D)`` arrays.
"""
from __future__ import annotations

from typing import NamedTuple

import numpy as np
from scipy.ndimage import minimum_filter
from scipy.spatial.distance import cdist

from .errors import InvalidInput

DESCRIPTOR_CELL = 8


class Keypoint(NamedTuple):
    u: float
    v: float
    score: float


def _as_heatmap(heatmap) -> np.ndarray:
    heatmap = np.asarray(heatmap, dtype=float)
    if heatmap.ndim != 2:
        raise InvalidInput(f"heatmap must be 2-D, got shape {heatmap.shape}")
    if not np.all(np.isfinite(heatmap)):
        raise InvalidInput("heatmap contains non-finite values")
    return heatmap


def nms(heatmap, window: int = 4, score_threshold: float = 0.0) -> list[Keypoint]:
    """Non-maximum suppression over the ``(2w+1) x (2w+1)`` neighborhood.

    A pixel survives when no neighbor within Chebyshev distance ``window``
    beats it, where equal scores are won by the smaller row-major index.
    Results are sorted by descending score (ties by index).
    """
    if window < 1:
        raise InvalidInput("window must be >= 1")
    heat = _as_heatmap(heatmap)
    flat = heat.ravel()
    order = np.lexsort((np.arange(flat.size), -flat))
    rank = np.empty(flat.size, dtype=np.int64)
    rank[order] = np.arange(flat.size)
    rank = rank.reshape(heat.shape)
    local_min = minimum_filter(rank, size=2 * window + 1, mode="constant",
                               cval=np.iinfo(np.int64).max)
    keep = (rank == local_min) & (heat >= score_threshold)
    rows, cols = np.nonzero(keep)
    sel = np.argsort(rank[rows, cols], kind="stable")
    return [Keypoint(int(cols[i]), int(rows[i]), float(heat[rows[i], cols[i]])) for i in sel]


def _softmax_offsets(f, di, dj):
    w = np.exp(f - f.max())
    w /= w.sum()
    return w, float(np.sum(w * di)), float(np.sum(w * dj))


def softargmax_offsets(patch) -> tuple[float, float]:
    """``(du, dv)``: softmax-weighted mean of the offsets of a square patch.

    ``patch[j, i]`` holds the score at row offset ``j`` and column offset
    ``i``, both centered on the middle element.
    """
    patch = np.asarray(patch, dtype=float)
    r = patch.shape[0] // 2
    if patch.shape != (2 * r + 1, 2 * r + 1):
        raise InvalidInput("patch must be square with odd size")
    off = np.arange(-r, r + 1, dtype=float)
    _, du, dv = _softmax_offsets(patch, off[None, :], off[:, None])
    return du, dv


def softargmax_refine(heatmap, seed, patch: int = 5) -> Keypoint:
    """Refine an integer seed to subpixel accuracy with a local Softargmax.

    Near the border the window is cropped to the image; offsets stay relative
    to the seed, so ``|du|, |dv| <= patch // 2`` always holds.
    """
    heat = _as_heatmap(heatmap)
    H, W = heat.shape
    u0, v0 = int(round(seed[0])), int(round(seed[1]))
    if not (0 <= u0 < W and 0 <= v0 < H):
        raise InvalidInput("seed lies outside the heatmap")
    r = patch // 2
    r0, r1 = max(0, v0 - r), min(H, v0 + r + 1)
    c0, c1 = max(0, u0 - r), min(W, u0 + r + 1)
    di = np.arange(c0, c1, dtype=float)[None, :] - u0
    dj = np.arange(r0, r1, dtype=float)[:, None] - v0
    _, du, dv = _softmax_offsets(heat[r0:r1, c0:c1], di, dj)
    return Keypoint(u0 + du, v0 + dv, float(heat[v0, u0]))


def softargmax_gradient(patch) -> np.ndarray:
    """Jacobian of ``(du, dv)`` w.r.t. the flattened (row-major) patch, shape ``(2, P*P)``.

    ``d du / d f[j, i] = softmax(f)[j, i] * (i - du)``, and likewise for ``dv``.
    """
    patch = np.asarray(patch, dtype=float)
    r = patch.shape[0] // 2
    if patch.shape != (2 * r + 1, 2 * r + 1):
        raise InvalidInput("patch must be square with odd size")
    off = np.arange(-r, r + 1, dtype=float)
    di = np.broadcast_to(off[None, :], patch.shape)
    dj = np.broadcast_to(off[:, None], patch.shape)
    w, du, dv = _softmax_offsets(patch, di, dj)
    return np.stack([(w * (di - du)).ravel(), (w * (dj - dv)).ravel()])


def detect_keypoints(heatmap, window: int = 4, score_threshold: float = 0.0,
                     patch: int = 5) -> list[Keypoint]:
    """NMS followed by Softargmax refinement of every surviving seed."""
    heat = _as_heatmap(heatmap)
    return [softargmax_refine(heat, (k.u, k.v), patch) for k in nms(heat, window, score_threshold)]


def render_gaussian_labels(points, width: int, height: int, sigma: float = 0.2) -> np.ndarray:
    """Ground-truth detection heatmap: a sum of unit-peak Gaussians, clipped at 1."""
    if not sigma > 0:
        raise InvalidInput("sigma must be positive")
    heat = np.zeros((height, width))
    xs = np.arange(width, dtype=float)
    ys = np.arange(height, dtype=float)
    for p in points:
        u, v = float(p[0]), float(p[1])
        gx = np.exp(-((xs - u) ** 2) / (2 * sigma**2))
        gy = np.exp(-((ys - v) ** 2) / (2 * sigma**2))
        heat += np.outer(gy, gx)
    return np.minimum(heat, 1.0)


def heatmap_logits(heatmap, floor: float = 1e-300) -> np.ndarray:
    """Log of a probability-like heatmap, so Softargmax weights equal the heatmap."""
    return np.log(np.maximum(np.asarray(heatmap, dtype=float), floor))


def _normalize(d):
    n = np.linalg.norm(d, axis=-1, keepdims=True)
    return np.divide(d, n, out=np.zeros_like(d), where=n > 0)


def sample_descriptors(desc_map, points, cell: int = DESCRIPTOR_CELL) -> np.ndarray:
    """Bilinearly interpolate ``(Hc, Wc, D)`` descriptors at full-resolution points.

    Point ``p`` maps to cell coordinate ``p / cell``; cell centers sit at
    integer cell coordinates and samples outside are clamped to the border.
    Each result is L2-normalized.
    """
    desc = np.asarray(desc_map, dtype=float)
    if desc.ndim != 3 or desc.shape[2] < 1:
        raise InvalidInput("descriptor map must have shape (Hc, Wc, D)")
    Hc, Wc, _ = desc.shape
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    x = np.clip(pts[:, 0] / cell, 0, Wc - 1)
    y = np.clip(pts[:, 1] / cell, 0, Hc - 1)
    x0 = np.minimum(np.floor(x).astype(int), max(Wc - 2, 0))
    y0 = np.minimum(np.floor(y).astype(int), max(Hc - 2, 0))
    x1 = np.minimum(x0 + 1, Wc - 1)
    y1 = np.minimum(y0 + 1, Hc - 1)
    ax = (x - x0)[:, None]
    ay = (y - y0)[:, None]
    d = ((1 - ax) * (1 - ay) * desc[y0, x0] + ax * (1 - ay) * desc[y0, x1]
         + (1 - ax) * ay * desc[y1, x0] + ax * ay * desc[y1, x1])
    return _normalize(d)


def bilinear_sample_descriptor(desc_map, point, cell: int = DESCRIPTOR_CELL) -> np.ndarray:
    return sample_descriptors(desc_map, [point], cell)[0]


def mutual_nearest_neighbor_match(desc_a, desc_b, max_distance: float = np.inf) -> np.ndarray:
    """Index pairs ``(i, j)`` that are each other's L2 nearest neighbor.

    Returns an ``(K, 2)`` integer array sorted by ``i``. Distance ties resolve
    to the lower index.
    """
    A = np.atleast_2d(np.asarray(desc_a, dtype=float))
    B = np.atleast_2d(np.asarray(desc_b, dtype=float))
    if A.size == 0 or B.size == 0:
        return np.zeros((0, 2), dtype=int)
    D = cdist(A, B)
    ab = np.argmin(D, axis=1)
    ba = np.argmin(D, axis=0)
    i = np.arange(len(A))
    keep = (ba[ab] == i) & (D[i, ab] <= max_distance)
    return np.column_stack([i[keep], ab[keep]])
