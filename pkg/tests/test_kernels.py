"""The compiled kernels and the numpy fallback must agree."""
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from revoprofile import _fallback, kernels

compiled = pytest.importorskip("revoprofile._kernels")

coord = st.floats(-100, 100, allow_nan=False, allow_infinity=False, width=64)


def points(min_size, max_size):
    return st.integers(min_size, max_size).flatmap(lambda n: arrays(np.float64, (n, 2), elements=coord))


def test_backend_reported():
    assert kernels.BACKEND in ("compiled", "python")


@settings(max_examples=200, deadline=None)
@given(points(1, 40), points(1, 30))
def test_polyline_distance_agrees(q, poly):
    d1, s1, t1 = compiled.polyline_distance(q, poly)
    d2, s2, t2 = _fallback.polyline_distance(q, poly)
    assert np.allclose(d1, d2, atol=1e-9, rtol=1e-12)
    if len(poly) > 1:
        f1 = poly[s1] + t1[:, None] * (poly[np.minimum(s1 + 1, len(poly) - 1)] - poly[s1])
        for i in range(len(q)):
            # equidistant segments may be picked differently; the distance must not differ
            assert np.linalg.norm(q[i] - f1[i]) == pytest.approx(d2[i], abs=1e-9)


@settings(max_examples=200, deadline=None)
@given(points(0, 40), points(0, 40), st.floats(0.01, 300))
def test_mutual_nearest_agrees(a, b, max_dist):
    # ties between distinct points are measure-zero for continuous data; drop exact duplicates
    a = np.unique(a, axis=0) if len(a) else a
    b = np.unique(b, axis=0) if len(b) else b
    i1, j1 = compiled.mutual_nearest_pairs(a, b, max_dist)
    i2, j2 = _fallback.mutual_nearest_pairs(a, b, max_dist)
    assert np.array_equal(i1, i2) and np.array_equal(j1, j2)


@settings(max_examples=100, deadline=None)
@given(st.integers(5, 80), st.floats(0.5, 200), st.floats(0.05, 3.0), st.integers(0, 2**32 - 1))
def test_windowed_curvature_agrees(n, radius, window, seed):
    rng = np.random.default_rng(seed)
    t = np.sort(rng.uniform(0, 2.0, n)) + np.arange(n) * 1e-3
    uv = np.column_stack([radius * np.cos(t / 2), radius * np.sin(t / 2)]) + rng.normal(0, 0.01, (n, 2))
    arc = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(uv, axis=0), axis=1))])
    c1 = np.asarray(compiled.windowed_curvature(uv, arc, window))
    c2 = np.asarray(_fallback.windowed_curvature(uv, arc, window))
    assert np.array_equal(np.isnan(c1), np.isnan(c2))
    ok = ~np.isnan(c1)
    assert np.allclose(c1[ok], c2[ok], rtol=1e-6, atol=1e-9)


def test_fixed_cases():
    poly = np.array([[-1.0, 0.0], [1.0, 0.0]])
    for impl in (compiled, _fallback):
        d, s, t = impl.polyline_distance(np.array([[0.0, 1.0], [3.0, 0.0]]), poly)
        assert d.tolist() == [1.0, 2.0] and t.tolist() == [0.5, 1.0]
        i, j = impl.mutual_nearest_pairs(poly, poly + [0.1, 0.0], 0.5)
        assert i.tolist() == [0, 1] and j.tolist() == [0, 1]
