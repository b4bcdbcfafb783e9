import numpy as np
import pytest

from revoprofile.axis import (
    CorrespondenceSet, axis_objective, brute_force_axis, estimate_axis, estimate_direction, estimate_point,
    polish_axis, symmetric_eigen3,
)
from revoprofile.errors import DegenerateDirection, RankDeficient
from revoprofile.geometry import Axis, axis_angle
from revoprofile.synthetic import ScanConfig, make_rng, random_correspondences, scan

from conftest import random_rotation, rotation_about


def _cylinder_set(rng, axis, n=40, radius=30.0):
    return random_correspondences(rng, n, axis, radial_range=(radius, radius))[0]


def test_symmetric_eigen3_matches_numpy(rng):
    for _ in range(200):
        a = rng.standard_normal((3, 3))
        a = a @ a.T
        w, v = symmetric_eigen3(a)
        assert np.allclose(w, np.linalg.eigvalsh(a), atol=1e-9 * np.abs(w).max())
        assert np.allclose(a @ v, v * w, atol=1e-8 * np.abs(w).max())
        assert np.allclose(v.T @ v, np.eye(3), atol=1e-10)


def test_symmetric_eigen3_repeated_values():
    w, v = symmetric_eigen3(np.diag([2.0, 2.0, 5.0]))
    assert np.allclose(w, [2, 2, 5])
    assert np.allclose(v.T @ v, np.eye(3), atol=1e-12)
    w, v = symmetric_eigen3(np.zeros((3, 3)))
    assert np.allclose(w, 0) and np.allclose(v, np.eye(3))


def test_direction_forced_by_planar_differences(rng):
    s = rng.standard_normal((10, 3))
    diff = np.column_stack([rng.standard_normal((10, 2)), np.zeros(10)])
    p = estimate_direction(CorrespondenceSet(s, s - diff))
    assert np.allclose(p, [0, 0, 1], atol=1e-10)


def test_direction_on_tilted_cylinder(rng):
    truth = Axis(np.array([1, 2, 2]) / 3.0, (4, -2, 1))
    S = _cylinder_set(rng, truth)
    p = estimate_direction(S)
    assert axis_angle(Axis(p), truth) < 1e-9


def test_direction_beats_random_unit_vectors(rng):
    S, _ = random_correspondences(rng, 30, noise_sigma=0.5)
    p = estimate_direction(S)
    diff = S.s - S.d
    q = rng.standard_normal((100_000, 3))
    q /= np.linalg.norm(q, axis=1, keepdims=True)
    best = np.min(np.sum((q @ diff.T) ** 2, axis=1))
    assert np.sum((diff @ p) ** 2) <= best


def test_point_of_offset_cylinder(rng):
    S = _cylinder_set(rng, Axis((0, 0, 1), (5, -3, 0)))
    m = estimate_point(S, (0, 0, 1))
    assert np.allclose(m, (5, -3, 0), atol=1e-9)


def test_point_translation_equivariance(rng):
    truth = Axis(rng.standard_normal(3), rng.standard_normal(3) * 10)
    S, _ = random_correspondences(rng, 30, truth, noise_sigma=0.05)
    p = estimate_direction(S)
    t = np.cross(p, rng.standard_normal(3)) * 7.0
    m0 = estimate_point(S, p)
    m1 = estimate_point(S.transformed(np.eye(3), t), p)
    assert np.allclose(m1, m0 + t, atol=1e-8)
    assert abs(m1 @ p) < 1e-9


def _eq6(S, p, m):
    rs = np.linalg.norm(np.cross(S.s - m, p), axis=1)
    rd = np.linalg.norm(np.cross(S.d - m, p), axis=1)
    return float(np.sum((rs - rd) ** 2))


def test_point_is_a_local_minimum(rng):
    truth = Axis((0.2, 0.1, 1.0), (3, 4, 0))
    S = _cylinder_set(rng, truth, 60)
    p = estimate_direction(S)
    m = estimate_point(S, p)
    f0 = _eq6(S, p, m)
    u = np.cross(p, rng.standard_normal((10_000, 3)))
    u = 0.01 * u / np.linalg.norm(u, axis=1, keepdims=True)
    assert all(f0 <= _eq6(S, p, m + du) for du in u[:2000])


def test_exact_correspondences_give_zero_objective(rng):
    truth = Axis(rng.standard_normal(3), rng.standard_normal(3) * 10)
    S, _ = random_correspondences(rng, 50, truth)
    est = estimate_axis(S)
    scale = np.abs(np.vstack([S.s, S.d])).max()
    assert est.objective <= 1e-16 * len(S) * scale ** 2 * 10
    assert axis_objective(S, truth) <= 1e-16 * len(S) * scale ** 2 * 10
    assert est.direction_gap >= 1


def test_wheel_true_correspondences_recover_axis(wheel_scans):
    for profiles, truth in wheel_scans:
        S = truth.true_correspondences(profiles)
        est = estimate_axis(S)
        assert axis_angle(est.axis, truth.axis) < 1e-8
        assert np.linalg.norm(est.axis.point - truth.axis.point) < 1e-6


def _noisy_wheel_direction_errors(wheel, n):
    from revoprofile.synthetic import wheel_viewpoints

    pose = wheel_viewpoints(wheel)[1]
    out = []
    for seed in range(n):
        profiles, truth = scan(wheel, pose, ScanConfig(noise_sigma=0.03, seed=seed))
        S = truth.true_correspondences(profiles)
        est = estimate_axis(S)
        out.append((S, truth, est))
    return out


def test_wheel_noisy_direction_tracks_joint_minimum(wheel):
    # the closed form lands as close to the truth as the joint minimiser does
    for S, truth, est in _noisy_wheel_direction_errors(wheel, 5):
        oracle = brute_force_axis(S, est.axis)
        assert est.objective <= 1.01 * oracle.objective
        assert axis_angle(est.axis, oracle.axis) < 2e-3
        assert axis_objective(S, truth.axis) >= oracle.objective


@pytest.mark.xfail(strict=True, reason="an 80 mm view of a 520 mm radius wheel leaves the axis tilt weakly "
                                       "determined; the joint minimum itself sits ~7e-3 rad from the truth")
def test_wheel_noisy_direction_error_below_1e3(wheel):
    errs = [axis_angle(est.axis, truth.axis) for _, truth, est in _noisy_wheel_direction_errors(wheel, 100)]
    assert np.percentile(errs, 95) < 1e-3


def test_rigid_motion_equivariance_and_swap_symmetry(rng):
    for _ in range(100):
        S, _ = random_correspondences(rng, 40, noise_sigma=0.1)
        est = estimate_axis(S).axis
        r, t = random_rotation(rng), rng.uniform(-100, 100, 3)
        moved = estimate_axis(S.transformed(r, t)).axis
        expect = est.transformed(r, t)
        assert np.allclose(moved.direction, expect.direction, atol=1e-8)
        assert np.allclose(moved.point, expect.point, atol=1e-8 * 100)
        sw = estimate_axis(S.swapped()).axis
        assert np.allclose(sw.direction, est.direction, atol=1e-8)
        assert np.allclose(sw.point, est.point, atol=1e-8)


def test_scale_behaviour(rng):
    S, _ = random_correspondences(rng, 40, noise_sigma=0.2)
    a = estimate_axis(S)
    b = estimate_axis(CorrespondenceSet(3.0 * S.s, 3.0 * S.d, S.src_profile, S.dst_profile, S.src_index, S.dst_index))
    assert np.allclose(a.axis.direction, b.axis.direction, atol=1e-10)
    assert b.objective == pytest.approx(9.0 * a.objective, rel=1e-8)


def test_brute_force_oracle_agrees_noise_free(rng):
    for _ in range(3):
        S, truth = random_correspondences(rng, 30)
        est = estimate_axis(S)
        init = Axis(rotation_about(rng.standard_normal(3), 0.02) @ truth.direction, truth.point + rng.normal(0, 0.5, 3))
        oracle = brute_force_axis(S, init)
        assert axis_angle(oracle.axis, est.axis) < 1e-6
        assert np.linalg.norm(oracle.axis.point - est.axis.point) < 1e-4


def test_brute_force_oracle_noisy_objective(rng):
    S, truth = random_correspondences(rng, 40, noise_sigma=0.03)
    est = estimate_axis(S)
    oracle = brute_force_axis(S, est.axis)
    assert oracle.objective <= est.objective
    assert est.objective <= 1.01 * oracle.objective


def test_brute_force_from_truth_terminates_at_zero(rng):
    S, truth = random_correspondences(rng, 30)
    res = brute_force_axis(S, truth)
    scale = np.abs(np.vstack([S.s, S.d])).max()
    assert res.objective <= 1e-16 * len(S) * scale ** 2 * 10


def test_degenerate_inputs():
    s = np.array([[1.0, 0, 0], [0, 1, 0], [-1, 0, 0]])
    with pytest.raises(DegenerateDirection):
        estimate_axis(CorrespondenceSet(s, s + [[1, 0, 0]] * 3))
    with pytest.raises(DegenerateDirection):
        estimate_axis(CorrespondenceSet(s[:2], s[:2] + 1))
    # differences parallel to the axis leave the point undetermined
    S = CorrespondenceSet(s, s + [[0, 0, 1]] * 3)
    with pytest.raises(RankDeficient):
        estimate_point(S, (0, 0, 1))


def test_correspondence_set_invariants():
    s = np.zeros((2, 3))
    with pytest.raises(ValueError):
        CorrespondenceSet(s, s, [0, 0], [0, 1], [0, 1], [0, 1])
    with pytest.raises(ValueError):
        CorrespondenceSet(s, s, [0, 0], [1, 1], [0, 0], [0, 0])
    with pytest.raises(ValueError):
        CorrespondenceSet(s, [[0, 0, np.inf], [0, 0, 0]])
    S = CorrespondenceSet(np.eye(3), 2 * np.eye(3))
    assert len(S.pairs) == 3 and S.pairs[1].src_index == 1
    assert CorrespondenceSet.from_pairs(S.pairs).key_set() == S.key_set()
    assert len(CorrespondenceSet.concatenate([S, CorrespondenceSet.from_pairs([])])) == 3


def test_polish_reaches_joint_minimum_and_closed_form_stays_available(rng):
    for _ in range(5):
        S, truth = random_correspondences(rng, 40, noise_sigma=0.03)
        two_step = estimate_axis(S, polish=False)
        polished = estimate_axis(S)
        oracle = brute_force_axis(S, truth)
        assert polished.objective <= two_step.objective
        assert polished.objective <= oracle.objective * (1 + 1e-6)
        assert abs(polished.axis.direction @ polished.axis.point) < 1e-9
        assert polished.direction_gap == two_step.direction_gap
        assert axis_angle(two_step.axis, Axis(estimate_direction(S))) == 0.0


def test_polish_keeps_exact_axis(rng):
    S, truth = random_correspondences(rng, 30)
    a = estimate_axis(S, polish=False).axis
    assert polish_axis(S, a) is a or axis_angle(polish_axis(S, a), a) < 1e-12
