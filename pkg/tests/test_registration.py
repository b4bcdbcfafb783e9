import math

import numpy as np
import pytest

from revoprofile.errors import InsufficientOverlap
from revoprofile.evaluation import points_to_curve_distance
from revoprofile.geometry import NormalSectionProfile
from revoprofile.registration import (
    RegistrationConfig, Rigid2D, align_pair, coarse_align, icp_2d, procrustes_2d, register_partials,
)


def _curve(x0=0.0, x1=40.0, n=201):
    x = np.linspace(x0, x1, n)
    return np.column_stack([x, 60 + 3 * np.sin(x / 4) + 0.02 * x * x])


def test_rigid_algebra(rng):
    for _ in range(50):
        a = Rigid2D(rng.uniform(-4, 4), tuple(rng.normal(0, 5, 2)), bool(rng.integers(2)))
        b = Rigid2D(rng.uniform(-4, 4), tuple(rng.normal(0, 5, 2)), bool(rng.integers(2)))
        p = rng.normal(0, 10, (7, 2))
        assert np.allclose(a.then(b).apply(p), b.apply(a.apply(p)), atol=1e-10)
        assert np.allclose(a.inverse().apply(a.apply(p)), p, atol=1e-10)
        assert -math.pi < a.rotation <= math.pi
        assert Rigid2D.from_dict(a.as_dict()) == a
    assert Rigid2D(-math.pi).rotation == math.pi


def test_reflection_flips_axial():
    t = Rigid2D(reflection=True)
    assert np.array_equal(t.apply([[2.0, 5.0]]), [[-2.0, 5.0]])


def test_procrustes_recovers_motion(rng):
    src = rng.normal(0, 10, (30, 2))
    t = Rigid2D(0.3, (1.5, -2.0))
    theta, trans = procrustes_2d(src, t.apply(src))
    assert theta == pytest.approx(0.3, abs=1e-12) and np.allclose(trans, [1.5, -2.0], atol=1e-12)


def test_icp_self_is_identity():
    c = NormalSectionProfile(_curve())
    t, rms = icp_2d(c, c)
    assert abs(t.rotation) < 1e-12 and np.allclose(t.translation, 0, atol=1e-12) and rms == 0.0


def test_icp_recovers_constructed_transform():
    target = _curve()
    moved = Rigid2D(0.1, (1.0, 2.0)).apply(target)
    t, rms = icp_2d(NormalSectionProfile(moved), NormalSectionProfile(target), Rigid2D(),
                    RegistrationConfig(max_dist=10.0))
    inv = Rigid2D(0.1, (1.0, 2.0)).inverse()
    assert t.rotation == pytest.approx(inv.rotation, abs=1e-6)
    assert np.allclose(t.translation, inv.translation, atol=1e-6)
    assert rms < 1e-6


def test_icp_residual_non_increasing(rng):
    target = _curve()
    src = Rigid2D(0.02, (0.4, -0.3)).apply(target[20:150]) + rng.normal(0, 0.03, (130, 2))
    history = []
    icp_2d(NormalSectionProfile(src), NormalSectionProfile(target), Rigid2D(), RegistrationConfig(max_dist=2.0), history)
    assert len(history) > 2
    assert all(b <= a + 1e-12 for a, b in zip(history, history[1:]))


def test_icp_idempotent(rng):
    target = _curve()
    src = Rigid2D(0.01, (0.3, 0.2)).apply(target[30:170]) + rng.normal(0, 0.03, (140, 2))
    cfg = RegistrationConfig(max_dist=2.0)
    t, _ = icp_2d(NormalSectionProfile(src), NormalSectionProfile(target), Rigid2D(), cfg)
    again, _ = icp_2d(NormalSectionProfile(t.apply(src)), NormalSectionProfile(target), Rigid2D(), cfg)
    assert abs(again.rotation) < 1e-6 and np.allclose(again.translation, 0, atol=1e-6)


def test_register_to_self_within_basin(rng):
    c = NormalSectionProfile(_curve())
    for _ in range(10):
        init = Rigid2D(rng.uniform(-0.01, 0.01), tuple(rng.uniform(-0.3, 0.3, 2)))
        t, _ = icp_2d(c, c, init)
        assert abs(t.rotation) < 1e-6 and np.allclose(t.translation, 0, atol=1e-6)


def test_align_pair_finds_reflection():
    target = _curve()
    src = target[60:190].copy()
    src[:, 0] = 17.0 - src[:, 0]
    t, rms = align_pair(NormalSectionProfile(src[::-1]), NormalSectionProfile(target))
    assert t.reflection and rms < 1e-6
    assert points_to_curve_distance(t.apply(src), target).max() < 1e-6


def test_coarse_align_close_to_truth():
    target = _curve()
    src = target[40:160] + [5.3, 0.0]
    t, _ = coarse_align(NormalSectionProfile(src), NormalSectionProfile(target), False)
    assert abs(t.translation[0] + 5.3) < 0.5


def test_register_single_partial_passthrough():
    p = NormalSectionProfile(_curve())
    res = register_partials([p])
    assert res.transforms == [Rigid2D()] and np.array_equal(res.complete.points, p.points)
    assert res.residual_rms == 0.0


def test_register_disjoint_partials_names_pair():
    a = NormalSectionProfile(_curve(0, 20, 101))
    b = NormalSectionProfile(np.column_stack([np.linspace(0, 20, 101), np.full(101, 300.0)]))
    with pytest.raises(InsufficientOverlap, match="partial 1"):
        register_partials([a, b])
    assert InsufficientOverlap.exit_code == 18


def test_register_noise_free_wheel_partials(wheel, wheel_results):
    from revoprofile.evaluation import align_to
    from revoprofile.synthetic import ground_truth_normal_profile

    gt = ground_truth_normal_profile(wheel, None, 0.2)
    reg = register_partials([r.partial_profile for r in wheel_results])
    aligned, _ = align_to(reg.complete, gt)
    d = points_to_curve_distance(aligned.points, gt)
    assert np.sqrt(np.mean(d * d)) < 0.2 / 5
    arc = reg.complete.arc_lengths
    assert np.all(np.diff(arc) > 0)
    assert all(abs(t.rotation) < 1e-6 for t in reg.transforms)


def test_noisy_partials_residual(wheel):
    from revoprofile.features import initial_correspondences
    from revoprofile.reconstruction import refine
    from revoprofile.synthetic import ScanConfig, scan, wheel_viewpoints

    sigma = 0.03
    partials = []
    for v, pose in enumerate(wheel_viewpoints(wheel)[:2]):
        profiles, _ = scan(wheel, pose, ScanConfig(noise_sigma=sigma, seed=40 + v))
        partials.append(refine(profiles, initial_correspondences(profiles)).partial_profile)
    _, rms = align_pair(partials[1], partials[0])
    assert rms <= 3 * sigma


def test_config_validation():
    with pytest.raises(ValueError):
        RegistrationConfig(max_tilt=0)
    with pytest.raises(ValueError):
        RegistrationConfig(min_overlap_points=2)
    with pytest.raises(ValueError):
        RegistrationConfig(max_radial_offset=0)
