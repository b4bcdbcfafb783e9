"""Curvature-extremum features and the initial correspondence set.

Curvature is estimated in each profile's best-fit plane. Extrema of the
signed curvature sequence become feature points; features on two profiles are
paired when their curvature magnitudes are close, and mean-shift clustering of
the arc-length offsets of the candidate pairs keeps the mutually consistent
ones.
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Sequence

import numpy as np
from scipy.signal import find_peaks

from . import kernels
from .axis import CorrespondenceSet
from .errors import NoCluster, TooShort
from .geometry import GeneralSectionProfile

__all__ = [
    "FeatureConfig",
    "FeaturePoint",
    "MatchCandidate",
    "plane_coordinates",
    "curvature_sequence",
    "detect_features",
    "matching_distance",
    "match_features",
    "mean_shift",
    "cluster_candidates",
    "initial_correspondences",
]


@dataclass(frozen=True)
class FeatureConfig:
    window: float = 5.0
    min_prominence: float = 0.04
    match_threshold: float = 0.2
    bandwidth: float = 5.0

    def __post_init__(self):
        if self.window <= 0 or self.bandwidth <= 0 or self.min_prominence < 0:
            raise ValueError("window and bandwidth must be positive, min_prominence non-negative")
        if not 0 < self.match_threshold <= 1:
            raise ValueError("match_threshold must lie in (0, 1]")


@dataclass(frozen=True)
class FeaturePoint:
    profile_id: int
    index: int
    arc_length: float
    curvature: float
    position: tuple = ()


@dataclass(frozen=True)
class MatchCandidate:
    a: FeaturePoint
    b: FeaturePoint
    distance: float


def plane_coordinates(points: np.ndarray) -> np.ndarray:
    """2D coordinates of a 3D polyline in its best-fit plane.

    The in-plane basis is oriented so that the polyline turns counter-clockwise
    overall, which makes curvature signs independent of the sensor frame.
    """
    pts = np.asarray(points, dtype=float)
    centred = pts - pts.mean(axis=0)
    _, _, vt = np.linalg.svd(centred, full_matrices=False)
    uv = centred @ vt[:2].T
    seg = np.diff(uv, axis=0)
    turn = np.arctan2(seg[:-1, 0] * seg[1:, 1] - seg[:-1, 1] * seg[1:, 0],
                      np.einsum("ij,ij->i", seg[:-1], seg[1:]))
    if turn.sum() < 0:
        uv[:, 1] = -uv[:, 1]
    return uv


def curvature_sequence(profile: GeneralSectionProfile, window: float = 2.0) -> np.ndarray:
    """Signed curvature (1/mm) at every point from local quadratic fits.

    Each point's neighbours within ``window`` of arc length are fitted with
    ``v = a u^2 + b u + c`` in tangent coordinates; the magnitude is
    ``|2a| / (1 + b^2)^1.5``. Points whose window is cut to less than half its
    width by a profile end take the value of the nearest point that is not.
    """
    if window <= 0:
        raise ValueError("window must be positive")
    arc = profile.arc_lengths
    if arc[-1] <= 3.0 * window:
        raise TooShort(f"profile {profile.id} is {arc[-1]:.3g} mm long, needs more than {3 * window:g} mm")
    uv = plane_coordinates(profile.points)
    curv = np.asarray(kernels.windowed_curvature(uv, arc, window))
    interior = (arc >= arc[0] + window / 2) & (arc <= arc[-1] - window / 2) & np.isfinite(curv)
    idx = np.flatnonzero(interior)
    if len(idx) == 0:
        raise TooShort(f"profile {profile.id} has no interior point for window {window:g} mm")
    first, last = idx[0], idx[-1]
    curv[:first] = curv[first]
    curv[last + 1:] = curv[last]
    bad = ~np.isfinite(curv)
    if bad.any():
        # isolated gaps (duplicate chords) take the nearest valid neighbour
        good = np.flatnonzero(~bad)
        nearest = good[np.clip(np.searchsorted(good, np.flatnonzero(bad)), 0, len(good) - 1)]
        curv[bad] = curv[nearest]
    return curv


def detect_features(curvatures, profile: GeneralSectionProfile, min_prominence: float = 0.03) -> list[FeaturePoint]:
    """Maxima and minima of the signed curvature with enough prominence, by arc length."""
    c = np.asarray(curvatures, dtype=float)
    if len(c) != len(profile):
        raise ValueError("curvature sequence length must match the profile")
    found = []
    for sign in (1.0, -1.0):
        peaks, _ = find_peaks(sign * c, prominence=(min_prominence, None))
        found.extend(peaks.tolist())
    found = sorted(set(found))
    return [
        FeaturePoint(profile.id, i, float(profile.arc_lengths[i]), float(c[i]), tuple(profile.points[i].tolist()))
        for i in found
    ]


def matching_distance(cp: float, cq: float) -> float:
    """``|C_p - C_q| / max(C_p, C_q)`` on curvature magnitudes; NaN if both vanish."""
    cp, cq = abs(cp), abs(cq)
    m = max(cp, cq)
    if m == 0.0:
        return float("nan")
    return abs(cp - cq) / m


def match_features(fi: Sequence[FeaturePoint], fj: Sequence[FeaturePoint], threshold: float = 0.2) -> list[MatchCandidate]:
    if not 0 < threshold <= 1:
        raise ValueError("threshold must lie in (0, 1]")
    out = []
    for a in fi:
        for b in fj:
            if a.profile_id == b.profile_id:
                raise ValueError("features must come from different profiles")
            dis = matching_distance(a.curvature, b.curvature)
            if dis == dis and dis <= threshold:
                out.append(MatchCandidate(a, b, dis))
    return out


def mean_shift(x, bandwidth: float, tol: float = 1e-6, max_shifts: int = 500) -> tuple[np.ndarray, np.ndarray]:
    """Flat-kernel mean shift; returns ``(labels, centres)``.

    Every sample is shifted to the mean of the samples within ``bandwidth``
    until the shift drops below ``tol * bandwidth``. Modes closer than
    ``bandwidth`` are merged, stronger modes first.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    n = len(x)
    modes = x.copy()
    for k in range(n):
        m = modes[k]
        for _ in range(max_shifts):
            near = np.linalg.norm(x - m, axis=1) <= bandwidth
            new = x[near].mean(axis=0)
            moved = np.linalg.norm(new - m)
            m = new
            if moved < tol * bandwidth:
                break
        modes[k] = m
    support = np.array([np.count_nonzero(np.linalg.norm(x - m, axis=1) <= bandwidth) for m in modes])
    order = np.lexsort((np.arange(n), -support))
    centres: list[np.ndarray] = []
    for k in order:
        if not any(np.linalg.norm(modes[k] - c) < bandwidth for c in centres):
            centres.append(modes[k])
    centres_arr = np.array(centres)
    labels = np.argmin(np.linalg.norm(modes[:, None, :] - centres_arr[None, :, :], axis=2), axis=1)
    return labels, centres_arr


def cluster_candidates(candidates: Sequence[MatchCandidate], bandwidth: float = 5.0) -> CorrespondenceSet:
    """Keep the mutually consistent candidates of one profile pair.

    Candidates are embedded by the arc-length offset ``b.arc_length -
    a.arc_length``; true matches on two cuts of one surface share nearly the
    same offset. The most populated mean-shift cluster is kept and each
    feature of the first profile retains only its closest partner.
    """
    if bandwidth <= 0:
        raise ValueError("bandwidth must be positive")
    if len(candidates) < 3:
        raise NoCluster(f"only {len(candidates)} match candidates")
    offsets = np.array([c.b.arc_length - c.a.arc_length for c in candidates])
    labels, _ = mean_shift(offsets, bandwidth)
    counts = np.bincount(labels)
    mean_dis = np.array([np.mean([c.distance for c, l in zip(candidates, labels) if l == k]) for k in range(len(counts))])
    best = min(range(len(counts)), key=lambda k: (-counts[k], mean_dis[k], k))
    members = [c for c, l in zip(candidates, labels) if l == best]
    chosen: dict[int, MatchCandidate] = {}
    for c in members:
        cur = chosen.get(c.a.index)
        if cur is None or (c.distance, c.b.index) < (cur.distance, cur.b.index):
            chosen[c.a.index] = c
    pairs = [chosen[k] for k in sorted(chosen)]
    if len(pairs) < 3:
        raise NoCluster(f"largest cluster yields {len(pairs)} pairs, need at least 3")
    return CorrespondenceSet(
        [c.a.position for c in pairs],
        [c.b.position for c in pairs],
        [c.a.profile_id for c in pairs],
        [c.b.profile_id for c in pairs],
        [c.a.index for c in pairs],
        [c.b.index for c in pairs],
    )


def initial_correspondences(profiles: Sequence[GeneralSectionProfile], config: FeatureConfig = FeatureConfig()) -> CorrespondenceSet:
    """Union of clustered feature matches over every unordered profile pair."""
    if len(profiles) < 2:
        raise ValueError("need at least two profiles")
    ids = [p.id for p in profiles]
    if len(set(ids)) != len(ids):
        raise ValueError("profile ids must be distinct")
    features = [detect_features(curvature_sequence(p, config.window), p, config.min_prominence) for p in profiles]
    sets = []
    for i, j in combinations(range(len(profiles)), 2):
        cands = match_features(features[i], features[j], config.match_threshold)
        try:
            sets.append(cluster_candidates(cands, config.bandwidth))
        except NoCluster:
            continue
    union = CorrespondenceSet.concatenate(sets)
    if len(union) < 3:
        raise NoCluster(f"initial correspondence set has {len(union)} pairs, need at least 3")
    return union
