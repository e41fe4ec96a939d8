import itertools

import numpy as np
import pytest

from conftest import PRESETS, make_scene, random_rotation
from epipose.camera import CameraIntrinsics, RelativePose
from epipose.errors import (DegenerateConfiguration, EpipoleDegenerate, GradientUndefined,
                            InsufficientData, NoValidPose, PointAtInfinity, ZeroMatrix)
from epipose.geometry import (algebraic_error, canonicalize_fundamental, cheirality_select,
                              classical_sampson_distance, decompose_essential, enforce_rank2,
                              epipolar_line, essential_from_fundamental, fundamental_from_pose,
                              hartley_normalize, sampson_gradient, sampson_residual,
                              triangulate_dlt, triangulate_points, weighted_eight_point)
from epipose.gradcheck import random_sampson_case, sampson_fd
from epipose.losses import rotation_error
from epipose.rotations import rodrigues_vector, skew

EX = np.array([1.0, 0.0, 0.0])


# ---------------------------------------------------------------- normalization

def _stats(pts):
    c = pts.mean(axis=0)
    return c, np.linalg.norm(pts - c, axis=1).mean()


def test_hartley_identity_when_already_normalized():
    a = np.sqrt(2) / np.sqrt(2)  # corners of a square at distance sqrt(2)
    pts = np.array([[a, a], [-a, a], [a, -a], [-a, -a]])
    _, T1, T2 = hartley_normalize(np.hstack([pts, pts]))
    np.testing.assert_allclose(T1, np.eye(3), atol=1e-15)
    np.testing.assert_allclose(T2, np.eye(3), atol=1e-15)


def test_hartley_square():
    pts = np.array([[0, 0], [2, 0], [0, 2], [2, 2]], dtype=float)
    out, _, _ = hartley_normalize(np.hstack([pts, pts]))
    for half in (out[:, :2], out[:, 2:]):
        c, d = _stats(half)
        np.testing.assert_allclose(c, 0, atol=1e-12)
        assert abs(d - np.sqrt(2)) < 1e-12


def test_hartley_random_recompute(rng):
    corr = rng.uniform(0, 600, size=(20, 4))
    out, T1, T2 = hartley_normalize(corr)
    for half, T, src in ((out[:, :2], T1, corr[:, :2]), (out[:, 2:], T2, corr[:, 2:])):
        c, d = _stats(half)
        np.testing.assert_allclose(c, 0, atol=1e-12)
        assert abs(d - np.sqrt(2)) < 1e-12
        mapped = np.column_stack([src, np.ones(20)]) @ T.T
        np.testing.assert_allclose(mapped[:, :2], half, atol=1e-12)
        assert abs(np.linalg.det(T)) > 0


def test_hartley_degenerate():
    corr = np.tile([5.0, 5.0, 1.0, 2.0], (10, 1))
    corr[:, 2:] += np.arange(10)[:, None]
    with pytest.raises(DegenerateConfiguration):
        hartley_normalize(corr)


# ---------------------------------------------------------------- eight point

@pytest.mark.parametrize("preset", PRESETS)
def test_eight_point_exact(preset):
    _, corr, F_gt, _ = make_scene(3, preset)
    assert np.linalg.norm(weighted_eight_point(corr) - F_gt) < 1e-8


def test_eight_point_weight_scaling(scene):
    _, corr, _, _ = scene
    w = np.random.default_rng(0).uniform(0.1, 1, len(corr))
    np.testing.assert_array_equal(weighted_eight_point(corr, w), weighted_eight_point(corr, 2 * w))
    np.testing.assert_allclose(weighted_eight_point(corr, w), weighted_eight_point(corr, 3.7 * w),
                               atol=1e-12)


def test_eight_point_ignores_zero_weight_outliers(scene, rng):
    _, corr, F_gt, _ = scene
    corr = corr.copy()
    half = len(corr) // 2
    corr[half:, 2:] += rng.uniform(30, 80, size=(len(corr) - half, 2))
    w = np.r_[np.ones(half), np.zeros(len(corr) - half)]
    assert np.linalg.norm(weighted_eight_point(corr, w) - F_gt) < 1e-8
    assert np.linalg.norm(weighted_eight_point(corr) - F_gt) > 1e-3


def test_eight_point_minimal_and_insufficient(scene):
    _, corr, F_gt, _ = scene
    assert np.linalg.norm(weighted_eight_point(corr[:8]) - F_gt) < 1e-6
    with pytest.raises(InsufficientData):
        weighted_eight_point(corr[:7])
    w = np.zeros(len(corr))
    w[:7] = 1
    with pytest.raises(InsufficientData):
        weighted_eight_point(corr, w)


def test_eight_point_planar_scene_is_degenerate(rng):
    K = CameraIntrinsics(500, 500, 320, 240)
    X = np.column_stack([rng.uniform(-2, 2, 30), rng.uniform(-2, 2, 30), np.full(30, 8.0)])
    pose = RelativePose(random_rotation(rng, 0.1), [1, 0.2, 0.1])
    X2 = X @ pose.rotation.T + pose.translation
    p1 = X @ K.matrix.T
    p2 = X2 @ K.matrix.T
    corr = np.hstack([p1[:, :2] / p1[:, 2:], p2[:, :2] / p2[:, 2:]])
    with pytest.raises(DegenerateConfiguration):
        weighted_eight_point(corr)


def test_canonical_fundamental_invariants(rng):
    for _ in range(50):
        F = weighted_eight_point(rng.uniform(0, 500, size=(30, 4)))
        assert abs(np.linalg.det(F)) < 1e-10
        assert abs(np.linalg.norm(F) - 1) < 1e-12
        assert F.flat[np.argmax(np.abs(F))] > 0


# ---------------------------------------------------------------- rank 2

def test_rank2_idempotent(scene):
    F = scene[2]
    np.testing.assert_allclose(enforce_rank2(F), F, atol=1e-12)


def test_rank2_diagonal():
    expected = np.diag([3.0, 2.0, 0.0]) / np.sqrt(13.0)
    np.testing.assert_allclose(enforce_rank2(np.diag([3.0, 2.0, 1.0])), expected, atol=1e-15)


def test_rank2_is_closest_among_single_sigma_zeroings(rng):
    for _ in range(50):
        F = rng.normal(size=(3, 3))
        Fn = F / np.linalg.norm(F)
        U, S, Vt = np.linalg.svd(Fn)
        cands = []
        for k in range(3):
            s = S.copy()
            s[k] = 0
            cands.append((U * s) @ Vt)
        dists = [np.linalg.norm(c - Fn) for c in cands]
        best = cands[int(np.argmin(dists))]
        out = enforce_rank2(F)
        assert np.linalg.matrix_rank(out, tol=1e-12) == 2
        np.testing.assert_allclose(out, canonicalize_fundamental(best), atol=1e-12)
        assert int(np.argmin(dists)) == 2


def test_rank2_zero_matrix():
    with pytest.raises(ZeroMatrix):
        enforce_rank2(np.zeros((3, 3)))


# ---------------------------------------------------------------- residuals

def _residual_by_loops(c, F):
    p1 = [c[0], c[1], 1.0]
    p2 = [c[2], c[3], 1.0]
    e = sum(p2[i] * F[i][j] * p1[j] for i in range(3) for j in range(3))
    l2 = [sum(F[i][j] * p1[j] for j in range(3)) for i in range(3)]
    l1 = [sum(F[i][j] * p2[i] for i in range(3)) for j in range(3)]
    return abs(e) * (1 / (l1[0] ** 2 + l1[1] ** 2) ** 0.5 + 1 / (l2[0] ** 2 + l2[1] ** 2) ** 0.5)


def test_residual_zero_on_exact(scene):
    _, corr, F, _ = scene
    assert sampson_residual(corr, F).max() < 1e-9


def test_residual_matches_scalar_loops(scene, rng):
    _, corr, F, _ = scene
    noisy = corr + rng.normal(scale=2.0, size=corr.shape)
    r = sampson_residual(noisy, F)
    expected = [_residual_by_loops(c, F.tolist()) for c in noisy]
    # e = p2^T F p1 cancels terms of order 1 at pixel scale; compare in pixels
    np.testing.assert_allclose(r, expected, rtol=1e-9, atol=1e-9)


def test_residual_one_pixel_perpendicular_offset():
    # lateral motion with identity intrinsics: epipolar lines are rows, unit normals
    F = skew(EX)
    c = np.array([0.3, 0.2, 0.5, 0.2 + 1.0])
    assert abs(sampson_residual(c, F) - _residual_by_loops(c, F.tolist())) < 1e-15
    assert abs(sampson_residual(c, F) - 2.0) < 1e-12


def test_residual_scale_invariant(scene, rng):
    _, corr, F, _ = scene
    noisy = corr + rng.normal(size=corr.shape)
    for lam in (2.0, -3.0, 1e-3):
        np.testing.assert_allclose(sampson_residual(noisy, lam * F), sampson_residual(noisy, F),
                                   rtol=1e-9, atol=1e-10)
        np.testing.assert_allclose(sampson_residual(noisy, lam * F, full_line_norm=True),
                                   sampson_residual(noisy, F, full_line_norm=True),
                                   rtol=1e-9, atol=1e-10)


def test_residual_full_line_norm_variant(rng):
    F = enforce_rank2(rng.normal(size=(3, 3)))
    c = rng.normal(size=4)
    p1, p2 = np.r_[c[:2], 1], np.r_[c[2:], 1]
    expected = abs(p2 @ F @ p1) * (1 / np.linalg.norm(F.T @ p2) + 1 / np.linalg.norm(F @ p1))
    assert abs(sampson_residual(c, F, full_line_norm=True) - expected) < 1e-14


def test_residual_degenerate_flag():
    F = np.array([[0.0, 0, 0], [0, 0, 0], [0, 0, 1.0]])
    r, flag = sampson_residual([1.0, 2.0, 3.0, 4.0], F, return_degenerate=True)
    assert flag and r == 0.0


def test_classical_sampson_small_offset(scene):
    _, corr, F, _ = scene
    c = corr[0].copy()
    ln = epipolar_line(F, c[:2], 2)
    c[2:] += 0.01 * ln[:2]
    d = classical_sampson_distance(c, F)
    assert 0.005 < d < 0.011  # between perpendicular offset split over views and full offset


# ---------------------------------------------------------------- gradient

def test_sampson_gradient_matches_fd_100(rng):
    for _ in range(100):
        c, F = random_sampson_case(rng)
        dp, dF = sampson_gradient(c, F)
        np_, nF = sampson_fd(c, F)
        a = np.r_[dp, dF.ravel()]
        n = np.r_[np_, nF.ravel()]
        assert np.max(np.abs(a - n)) / np.max(np.abs(n)) < 1e-5


def test_sampson_gradient_pixel_scale(scene, rng):
    _, corr, F, _ = scene
    c = corr[5] + [0, 0, 1.5, -2.0]
    dp, _ = sampson_gradient(c, F)
    h = 1e-4
    fd = [(sampson_residual(c + h * e, F) - sampson_residual(c - h * e, F)) / (2 * h)
          for e in np.eye(4)]
    np.testing.assert_allclose(dp, fd, rtol=1e-6, atol=1e-9)


def test_sampson_gradient_full_norm_matches_fd(rng):
    c, F = random_sampson_case(rng)
    dp, dF = sampson_gradient(c, F, full_line_norm=True)
    h = 1e-6
    fd = [(sampson_residual(c + h * e, F, True) - sampson_residual(c - h * e, F, True)) / (2 * h)
          for e in np.eye(4)]
    np.testing.assert_allclose(dp, fd, rtol=1e-6, atol=1e-9)


def test_sampson_gradient_on_line_is_one_sided():
    F = skew(EX)
    c = np.array([0.1, 0.4, 0.7, 0.4])  # exactly on the epipolar line
    dp, _ = sampson_gradient(c, F)
    h = 1e-7
    right = (sampson_residual(c + [0, 0, 0, h], F) - sampson_residual(c, F)) / h
    assert abs(abs(dp[3]) - abs(right)) < 1e-6
    assert abs(dp[3]) > 0


def test_sampson_gradient_zero_along_epipolar_line():
    F = skew(EX)
    c = np.array([0.1, 0.4, 0.7, 0.55])
    dp, _ = sampson_gradient(c, F)
    assert abs(dp @ [1.0, 0.0, 1.0, 0.0]) < 1e-9
    h = 1e-6
    d = np.array([1.0, 0.0, 1.0, 0.0])
    fd = (sampson_residual(c + h * d, F) - sampson_residual(c - h * d, F)) / (2 * h)
    assert abs(fd) < 1e-9


def test_sampson_gradient_degenerate():
    F = np.array([[0.0, 0, 0], [0, 0, 0], [0, 0, 1.0]])
    with pytest.raises(GradientUndefined):
        sampson_gradient([1.0, 2.0, 3.0, 4.0], F)


# ---------------------------------------------------------------- F from pose

def test_fundamental_from_pose_pure_translation():
    F = fundamental_from_pose(None, None, RelativePose(np.eye(3), EX))
    expected = np.array([[0, 0, 0], [0, 0, -1.0], [0, 1.0, 0]]) / np.sqrt(2)
    assert min(np.linalg.norm(F - expected), np.linalg.norm(F + expected)) < 1e-15


@pytest.mark.parametrize("seed", range(5))
def test_fundamental_from_pose_epipolar_identity(seed):
    _, corr, F, _ = make_scene(seed, PRESETS[seed % 3])
    assert np.abs(algebraic_error(corr, F)).max() < 1e-10


def test_fundamental_swap_transposes(scene):
    sc, _, F, pose = scene
    K = sc.intrinsics
    F_swapped = fundamental_from_pose(K, K, pose.inverse())
    np.testing.assert_allclose(F_swapped, canonicalize_fundamental(F.T), atol=1e-12)


# ---------------------------------------------------------------- essential

def test_essential_identity_intrinsics(rng):
    # with K = I the projection keeps F's singular vectors and equalizes sigma1 = sigma2
    F = enforce_rank2(rng.normal(size=(3, 3)))
    E = essential_from_fundamental(F, np.eye(3), np.eye(3))
    U, _, Vt = np.linalg.svd(F)
    np.testing.assert_allclose(E, U @ np.diag([1.0, 1.0, 0.0]) @ Vt, atol=1e-12)
    F_equal = U @ np.diag([0.7, 0.7, 0.0]) @ Vt
    E2 = essential_from_fundamental(F_equal, None, None)
    np.testing.assert_allclose(canonicalize_fundamental(E2), canonicalize_fundamental(F_equal),
                               atol=1e-12)


def test_essential_singular_values(scene):
    sc, _, F, _ = scene
    E = essential_from_fundamental(F, sc.intrinsics, sc.intrinsics)
    np.testing.assert_allclose(np.linalg.svd(E, compute_uv=False), [1, 1, 0], atol=1e-9)
    assert abs(np.linalg.norm(E) - np.sqrt(2)) < 1e-12


def test_essential_degenerate():
    with pytest.raises(DegenerateConfiguration):
        essential_from_fundamental(np.diag([1.0, 0, 0]), None, None)


def test_essential_round_trip(scene):
    sc, corr, F, _ = scene
    K = sc.intrinsics
    sel = cheirality_select(decompose_essential(essential_from_fundamental(F, K, K)), corr, K, K)
    assert np.linalg.norm(fundamental_from_pose(K, K, sel.pose) - F) < 1e-8


# ---------------------------------------------------------------- decomposition

def _matches(c, pose):
    return (np.linalg.norm(rodrigues_vector(c.rotation @ pose.rotation.T)) < 1e-8
            and c.translation @ pose.translation > 1 - 1e-10)


@pytest.mark.parametrize("seed", range(6))
def test_decompose_contains_truth(seed):
    sc, _, F, pose = make_scene(seed, PRESETS[seed % 3])
    E = essential_from_fundamental(F, sc.intrinsics, sc.intrinsics)
    cands = decompose_essential(E)
    assert sum(_matches(c, pose) for c in cands) == 1
    for c in cands:
        assert abs(np.linalg.det(c.rotation) - 1) < 1e-12
        assert abs(np.linalg.norm(c.translation) - 1) < 1e-15


def test_decompose_pure_translation():
    cands = decompose_essential(skew(EX))
    found = [np.allclose(c.rotation, np.eye(3), atol=1e-12) and abs(c.translation @ EX) > 1 - 1e-12
             for c in cands]
    assert sum(found) == 2


def test_decompose_candidates_differ_by_half_turn_about_t(rng):
    for _ in range(20):
        E = skew(rng.normal(size=3)) @ random_rotation(rng)
        R1, t = decompose_essential(E)[0].rotation, decompose_essential(E)[0].translation
        R2 = decompose_essential(E)[2].rotation
        v = rodrigues_vector(R1.T @ R2)
        assert abs(np.linalg.norm(v) - np.pi) < 1e-8
        w = rodrigues_vector(R2 @ R1.T)
        assert abs(abs(w @ t) / np.linalg.norm(w) - 1) < 1e-8


# ---------------------------------------------------------------- triangulation

def test_triangulate_recovers_scene_up_to_scale(scene):
    sc, corr, _, pose = scene
    K = sc.intrinsics
    for k in range(10):
        X, d1, d2 = triangulate_dlt(corr[k], pose, K, K)
        Xs = sc.points3d[k] / sc.baseline
        assert np.linalg.norm(X - Xs) / np.linalg.norm(Xs) < 1e-6
        assert d1 > 0 and d2 > 0
        x1 = K.matrix @ X
        x2 = K.matrix @ (pose.rotation @ X + pose.translation)
        assert np.linalg.norm(x1[:2] / x1[2] - corr[k, :2]) < 1e-6
        assert np.linalg.norm(x2[:2] / x2[2] - corr[k, 2:]) < 1e-6


def test_triangulate_baseline_point_is_at_infinity():
    pose = RelativePose(np.eye(3), [0.0, 0.0, 1.0])
    # the optical axis is the baseline for forward motion; both images see the epipole
    with pytest.raises(PointAtInfinity):
        triangulate_dlt([0.0, 0.0, 0.0, 0.0], pose, None, None)


# ---------------------------------------------------------------- cheirality

@pytest.mark.parametrize("seed", range(6))
def test_cheirality_selects_truth(seed):
    sc, corr, F, pose = make_scene(seed, PRESETS[seed % 3])
    K = sc.intrinsics
    cands = decompose_essential(essential_from_fundamental(F, K, K))
    sel = cheirality_select(cands, corr, K, K)
    assert _matches(sel.pose, pose)
    counts = sel.positive_depth_counts
    assert counts[sel.index] == len(corr)
    assert all(c < len(corr) for k, c in enumerate(counts) if k != sel.index)
    assert not sel.tie_broken


def test_cheirality_single_correspondence(scene):
    sc, corr, F, pose = scene
    K = sc.intrinsics
    sel = cheirality_select(decompose_essential(essential_from_fundamental(F, K, K)), corr[:1], K, K)
    assert max(sel.positive_depth_counts) == 1
    assert _matches(sel.pose, pose)


def test_cheirality_with_outliers(rng):
    sc, corr, F, pose = make_scene(11)
    K = sc.intrinsics
    corr = corr.copy()
    bad = rng.choice(len(corr), 20, replace=False)
    corr[bad, 2:] = rng.uniform(0, 480, size=(20, 2))
    sel = cheirality_select(decompose_essential(essential_from_fundamental(F, K, K)), corr, K, K)
    assert _matches(sel.pose, pose)


def test_cheirality_tie_flag_and_no_valid_pose():
    pose = RelativePose(np.eye(3), EX)
    # identical candidates tie
    K = np.eye(3)
    X = np.array([[0.1, 0.2, 4.0], [-0.3, 0.1, 5.0]])
    x2 = X + EX
    corr = np.hstack([X[:, :2] / X[:, 2:], x2[:, :2] / x2[:, 2:]])
    sel = cheirality_select([pose, pose], corr, K, K)
    assert sel.tie_broken and sel.index == 0
    with pytest.raises(NoValidPose):
        cheirality_select([RelativePose(np.eye(3), -EX)], corr, K, K)


def test_triangulate_points_batch_matches_single(scene):
    sc, corr, _, pose = scene
    tri = triangulate_points(corr[:5], pose, sc.intrinsics, sc.intrinsics)
    for k in range(5):
        X, d1, d2 = triangulate_dlt(corr[k], pose, sc.intrinsics, sc.intrinsics)
        np.testing.assert_allclose(tri.points[k], X)


# ---------------------------------------------------------------- epipolar lines

def test_epipolar_line_distance(scene):
    _, corr, F, _ = scene
    for c in corr[:10]:
        l2 = epipolar_line(F, c[:2], 2)
        l1 = epipolar_line(F, c[2:], 1)
        assert abs(np.hypot(*l2[:2]) - 1) < 1e-15
        assert abs(l2 @ [c[2], c[3], 1]) < 1e-9
        assert abs(l1 @ [c[0], c[1], 1]) < 1e-9


def test_epipolar_line_lateral():
    line = epipolar_line(skew(EX), [0.0, 0.0], 2)
    assert abs(line[0]) < 1e-15 and abs(abs(line[1]) - 1) < 1e-15 and abs(line[2]) < 1e-15


def test_epipolar_line_at_epipole():
    F = fundamental_from_pose(None, None, RelativePose(np.eye(3), [0.0, 0.0, 1.0]))
    with pytest.raises(EpipoleDegenerate):
        epipolar_line(F, [0.0, 0.0], 2)


def test_residual_agrees_with_geometric_symmetric_distance(scene, rng):
    _, corr, F, _ = scene
    for c in corr[:20]:
        c = c + rng.normal(scale=0.01, size=4)
        l2 = epipolar_line(F, c[:2], 2)
        l1 = epipolar_line(F, c[2:], 1)
        geometric = abs(l2 @ [c[2], c[3], 1]) + abs(l1 @ [c[0], c[1], 1])
        assert 0.9 <= sampson_residual(c, F) / geometric <= 1.1


def test_full_norm_residual_agrees_in_normalized_coordinates(rng):
    # with identity intrinsics and image points near the origin the homogeneous
    # line offset is small, so both norms nearly coincide
    F = skew(EX)
    for _ in range(20):
        p = rng.uniform(-0.05, 0.05, size=2)
        c = np.r_[p, p + [0.2, 0.0]] + rng.normal(scale=0.01, size=4)
        ratio = sampson_residual(c, F, full_line_norm=True) / sampson_residual(c, F)
        assert 0.9 <= ratio <= 1.1


# ---------------------------------------------------------------- invariants

@pytest.mark.parametrize("seed", range(20))
def test_fundamental_essential_pose_round_trip(seed):
    sc, corr, F, pose = make_scene(100 + seed, PRESETS[seed % 3])
    K = sc.intrinsics
    sel = cheirality_select(decompose_essential(essential_from_fundamental(F, K, K)), corr, K, K)
    assert np.linalg.norm(fundamental_from_pose(K, K, sel.pose) - F) < 1e-8
    assert rotation_error(sel.pose.rotation, pose.rotation) < 1e-6
