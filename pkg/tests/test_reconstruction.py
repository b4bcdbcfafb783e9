import re

import numpy as np
import pytest

from revoprofile.axis import CorrespondenceSet
from revoprofile.errors import CorrespondenceCollapse, ProfilesDisjoint
from revoprofile.evaluation import points_to_curve_distance
from revoprofile.features import initial_correspondences
from revoprofile.geometry import Axis, NormalSectionProfile, axis_angle, profile_to_normal
from revoprofile.reconstruction import (
    ReconstructionConfig, bin_fuse, closest_point_pairs, common_parameterization, correspondence_rms,
    fuse_profiles, refine,
)
from revoprofile.synthetic import ScanConfig, make_rng, scan, wheel_viewpoints

LOG_LINE = re.compile(r"^iter=\d+ e=\S+ pairs=\d+ dP=\S+ dM=\S+$")


def _line(n=50, y=5.0):
    x = np.linspace(0, 10, n)
    return NormalSectionProfile(np.column_stack([x, np.full(n, y)]))


def test_closest_pairs_identity():
    L = _line()
    assert closest_point_pairs(L, L, 1.0) == [(i, i) for i in range(len(L))]


def test_closest_pairs_gated():
    L = _line()
    shifted = NormalSectionProfile(L.points + [2.0, 0.0])
    far = NormalSectionProfile(np.column_stack([L.points[:, 0] + 2 * 20.0, L.points[:, 1]]))
    assert closest_point_pairs(L, far, 20.0) == []
    assert all(abs(L.points[i, 0] - shifted.points[j, 0]) <= 1.0 for i, j in closest_point_pairs(L, shifted, 1.0))


def test_closest_pairs_are_mutual(rng):
    a = NormalSectionProfile(np.column_stack([np.sort(rng.uniform(0, 10, 60)), rng.uniform(4, 6, 60)]))
    b = NormalSectionProfile(np.column_stack([np.sort(rng.uniform(0, 10, 50)), rng.uniform(4, 6, 50)]))
    for i, j in closest_point_pairs(a, b, 5.0):
        assert j == np.argmin(np.linalg.norm(b.points - a.points[i], axis=1))
        assert i == np.argmin(np.linalg.norm(a.points - b.points[j], axis=1))


def test_closest_pairs_on_true_projections(wheel_scans):
    profiles, truth = wheel_scans[0]
    normals = [profile_to_normal(p, truth.axis) for p in profiles]
    pairs = closest_point_pairs(normals[0], normals[1], 1.0)
    assert len(pairs) > 50
    d = [np.linalg.norm(normals[0].points[i] - normals[1].points[j]) for i, j in pairs]
    assert max(d) < ScanConfig().sample_step


def test_correspondence_rms_fixtures():
    axis = Axis((0, 0, 1))
    exact = CorrespondenceSet([[1, 0, 0], [0, 2, 1], [3, 0, 2]], [[0, 1, 0], [-2, 0, 1], [0, -3, 2]])
    assert correspondence_rms(exact, axis) == 0.0
    one = CorrespondenceSet([[1, 0, 0]], [[0, 1.1, 0]])
    assert correspondence_rms(one, axis) == pytest.approx(0.1, abs=1e-15)
    assert correspondence_rms(one, axis, "printed") == pytest.approx(np.sqrt(0.1), abs=1e-15)
    with pytest.raises(ValueError):
        correspondence_rms(one, axis, "other")


def test_refine_noise_free_wheel(wheel_scans, wheel_results):
    for (profiles, truth), res in zip(wheel_scans, wheel_results):
        assert res.converged and not res.partial_flagged
        assert axis_angle(res.final_axis, truth.axis) < 1e-6
        assert np.linalg.norm(res.final_axis.point - truth.axis.point) < 1e-4
        assert res.history[-1].correspondence_rms < 1e-6
        assert all(LOG_LINE.match(rec.log_line()) for rec in res.history)


def test_refine_exact_start_is_fixed_point(wheel_scans):
    profiles, truth = wheel_scans[1]
    S = truth.true_correspondences(profiles)
    res = refine(profiles, S, ReconstructionConfig(initial_search=False))
    assert res.converged and res.iterations <= 2
    assert axis_angle(res.history[0].axis, truth.axis) < 1e-9


def test_refine_noise_free_error_non_increasing(wheel_scans):
    for profiles, _ in wheel_scans:
        res = refine(profiles, initial_correspondences(profiles), ReconstructionConfig(initial_search=False))
        e = [rec.correspondence_rms for rec in res.history]
        assert all(b <= a + 1e-12 for a, b in zip(e, e[1:])), e


def test_refine_noisy_converges(wheel):
    pose = wheel_viewpoints(wheel)[0]
    sigma = 0.03
    for seed in range(3):
        profiles, _ = scan(wheel, pose, ScanConfig(noise_sigma=sigma, seed=seed))
        res = refine(profiles, initial_correspondences(profiles))
        assert res.converged and res.iterations <= 20
        e = [rec.correspondence_rms for rec in res.history]
        assert sigma <= e[-1] <= 3 * sigma
        assert e[-1] <= e[0]


def test_refine_is_deterministic(wheel):
    profiles, _ = scan(wheel, wheel_viewpoints(wheel)[2], ScanConfig(noise_sigma=0.03, seed=5))
    S0 = initial_correspondences(profiles)
    a, b = refine(profiles, S0), refine(profiles, S0)
    assert [r.log_line() for r in a.history] == [r.log_line() for r in b.history]
    assert np.array_equal(a.partial_profile.points, b.partial_profile.points)


def test_refine_withholds_unconverged_profile(wheel):
    profiles, _ = scan(wheel, wheel_viewpoints(wheel)[0], ScanConfig(noise_sigma=0.03, seed=1))
    S0 = initial_correspondences(profiles)
    res = refine(profiles, S0, ReconstructionConfig(max_iterations=1))
    assert not res.converged and res.partial_profile is None
    flagged = refine(profiles, S0, ReconstructionConfig(max_iterations=1, allow_partial=True))
    assert flagged.partial_profile is not None and flagged.partial_flagged


def test_refine_rejects_tiny_start(wheel_scans):
    profiles, truth = wheel_scans[0]
    S = truth.true_correspondences(profiles)
    tiny = CorrespondenceSet(S.s[:2], S.d[:2], S.src_profile[:2], S.dst_profile[:2], S.src_index[:2], S.dst_index[:2])
    with pytest.raises(CorrespondenceCollapse):
        refine(profiles, tiny)


def test_fuse_identical_profiles():
    x = np.linspace(0, 20, 101)
    L = NormalSectionProfile(np.column_stack([x, 50 + 2 * np.sin(x / 3)]))
    fused = fuse_profiles([L, L], 0.2)
    assert points_to_curve_distance(fused.points, L).max() <= 0.1
    assert fused.source_id is None


def test_fuse_averages_offset_pair():
    rng = make_rng(11)
    x = np.linspace(0, 20, 201)
    mean = np.column_stack([x, 50 + 2 * np.sin(x / 3)])
    delta = 0.05
    a = NormalSectionProfile(mean + [0, delta] + rng.uniform(-0.01, 0.01, mean.shape))
    b = NormalSectionProfile(mean - [0, delta] + rng.uniform(-0.01, 0.01, mean.shape))
    fused = fuse_profiles([a, b], 0.2)

    def rms(p):
        d = points_to_curve_distance(p, mean)
        return np.sqrt(np.mean(d * d))

    assert rms(fused.points) < min(rms(a.points), rms(b.points))


def test_fuse_noise_free_wheel(wheel_scans, wheel_results):
    for (_, truth), res in zip(wheel_scans, wheel_results):
        d = points_to_curve_distance(res.partial_profile.points, truth.normal_profile)
        assert np.sqrt(np.mean(d * d)) < 0.2 / 10


def test_fuse_rejects_disjoint():
    with pytest.raises(ProfilesDisjoint):
        fuse_profiles([_line(y=5.0), _line(y=9.0)], 0.2)
    with pytest.raises(ValueError):
        fuse_profiles([_line()])


def test_common_parameterization_extends_reference():
    x = np.linspace(0, 10, 51)
    a = np.column_stack([x, np.full_like(x, 3.0)])
    b = np.column_stack([x + 4, np.full_like(x, 3.0)])[::-1]
    ref = common_parameterization([a, b])
    assert ref[0, 0] == pytest.approx(0.0) and ref[-1, 0] == pytest.approx(14.0)
    assert np.all(np.diff(ref[:, 0]) > 0)
    fused = bin_fuse([a, b], 0.5)
    assert np.all(np.diff(fused[:, 0]) > 0)


def test_config_validation():
    with pytest.raises(ValueError):
        ReconstructionConfig(max_dist=0)
    with pytest.raises(ValueError):
        ReconstructionConfig(rms_form="mean")
    with pytest.raises(ValueError):
        ReconstructionConfig(max_iterations=0)
