import numpy as np
import pytest

from revoprofile.evaluation import (
    AccuracySummary, ErrorCurve, accuracy, align_to, point_to_curve_distance, points_to_curve_distance,
    pointwise_error, segment_summary, summarize, trim_to_coverage,
)
from revoprofile.geometry import NormalSectionProfile
from revoprofile.registration import Rigid2D


def _straight(n=201, radius=520.0):
    x = np.linspace(0.0, 100.0, n)
    return np.column_stack([x, np.full(n, radius)])


def _wavy(n=400):
    x = np.linspace(0.0, 80.0, n)
    return np.column_stack([x, 500 + 10 * np.sin(x / 9) + 0.01 * x * x])


def test_point_to_curve_fixtures():
    L = np.array([[-1.0, 0.0], [1.0, 0.0]])
    assert point_to_curve_distance((0.0, 1.0), L) == 1.0
    assert point_to_curve_distance((1.0, 0.0), L) == 0.0
    assert point_to_curve_distance((3.0, 0.0), L) == 2.0


def test_segment_distance_beats_vertex_oracle(rng):
    L = _wavy(40)
    # dense refinement by linear interpolation along each segment
    t = np.linspace(0, 1, 2565, endpoint=False)
    dense = np.vstack([a + t[:, None] * (b - a) for a, b in zip(L[:-1], L[1:])] + [L[-1:]])
    step = np.linalg.norm(np.diff(dense, axis=0), axis=1).max()
    assert len(dense) >= 100_000
    p = np.column_stack([rng.uniform(0, 80, 200), rng.uniform(480, 530, 200)])
    seg = points_to_curve_distance(p, L)
    vert = np.array([np.min(np.linalg.norm(dense - q, axis=1)) for q in p])
    assert np.all(seg <= vert + 1e-12)
    assert np.all(vert - seg <= step)


def test_identical_curves():
    L = NormalSectionProfile(_wavy())
    assert accuracy(L, L) == 0.0
    assert np.all(pointwise_error(L, L).eps == 0.0)


def test_uniform_radial_offset():
    gt = _straight()
    rec = gt + [0.0, 0.05]
    assert accuracy(gt, rec) == pytest.approx(0.05, abs=1e-9)
    assert np.allclose(pointwise_error(gt, rec).eps, 0.05, atol=1e-9)
    assert accuracy(gt, rec, "printed") == pytest.approx(np.sqrt(0.05), abs=1e-9)
    with pytest.raises(ValueError):
        accuracy(gt, rec, "mean")


def test_rigid_invariance(rng):
    gt = _wavy()
    rec = gt[::3] + rng.normal(0, 0.05, gt[::3].shape)
    a0 = accuracy(gt, rec)
    for _ in range(10):
        t = Rigid2D(rng.uniform(-np.pi, np.pi), tuple(rng.uniform(-100, 100, 2)), bool(rng.integers(2)))
        assert accuracy(t.apply(gt), t.apply(rec)) == pytest.approx(a0, abs=1e-9)


def test_error_against_own_refinement_bounded():
    L = _wavy(60)
    dense = np.vstack([np.linspace(a, b, 8, endpoint=False) for a, b in zip(L[:-1], L[1:])] + [L[-1:]])
    step = np.linalg.norm(np.diff(L, axis=0), axis=1).max()
    assert pointwise_error(dense, L).eps.max() <= step
    assert pointwise_error(L, dense).eps.max() <= step


def test_pointwise_error_arc_length():
    gt = _straight(11)
    curve = pointwise_error(gt, gt)
    assert np.allclose(curve.x, np.linspace(0, 100, 11))


def test_segment_summary_fixtures():
    c = ErrorCurve(np.linspace(0, 10, 101), np.full(101, 0.05))
    assert np.allclose(segment_summary(c, 4), 0.05)
    eps = np.linspace(0, 1, 101)
    c2 = ErrorCurve(np.linspace(0, 10, 101), eps)
    assert segment_summary(c2, 1)[0] == pytest.approx(eps.mean())
    s = segment_summary(c2, 4)
    assert np.all(np.diff(s) > 0)
    with pytest.raises(ValueError):
        segment_summary(c2, 0)


def test_error_curve_validation():
    with pytest.raises(ValueError):
        ErrorCurve([0, 2, 1], [0, 0, 0])
    with pytest.raises(ValueError):
        ErrorCurve([0, 1], [0, -1])


def test_summarize():
    s = summarize([0.1, 0.2, 0.3], [[0.1, 0.2], [0.3, 0.4], [0.2, 0.3]])
    assert s.mean == pytest.approx(0.2) and s.min == 0.1 and s.max == 0.3 and s.n == 3
    assert s.std == pytest.approx(np.std([0.1, 0.2, 0.3]))
    assert s.segment_means == pytest.approx([0.2, 0.3])
    assert s.as_dict()["n"] == 3
    with pytest.raises(ValueError):
        AccuracySummary(0.1, 0.5, 0.0, 0.1, 0.2)
    with pytest.raises(ValueError):
        summarize([])


def test_trim_to_coverage():
    gt = _straight()
    rec = gt[50:151] + [0.0, 0.01]
    covered = trim_to_coverage(gt, rec)
    # an end point whose foot is the reconstruction's end counts only when it touches it
    assert 25.0 <= covered[0, 0] <= 25.5 and 74.5 <= covered[-1, 0] <= 75.0
    touching = trim_to_coverage(gt, gt[50:151])
    assert touching[0, 0] == 25.0 and touching[-1, 0] == 75.0
    assert len(trim_to_coverage(gt, gt)) == len(gt)
    assert len(trim_to_coverage(gt, rec, margin=5.0)) < len(covered)


def test_align_to_recovers_offset():
    gt = NormalSectionProfile(_wavy())
    moved = NormalSectionProfile(Rigid2D(0.005, (3.0, -0.7)).apply(gt.points[50:300]))
    aligned, transform = align_to(moved, gt)
    assert accuracy(gt, aligned) < 1e-6
