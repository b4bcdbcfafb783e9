"""Per-viewpoint iterative reconstruction of the normal section profile.

Starting from an initial correspondence set, the loop alternates:

1. estimate the axis from the current correspondences;
2. project every general profile into the axis frame and stop once the axis
   no longer moves;
3. pair up mutual closest points between every two projected profiles and
   take the 3D points with the same indices as the next correspondence set.

Sparse feature correspondences pin down the tilt of the axis within the laser
planes only weakly, and the alternation above cannot leave a wrong tilt once
its pairings agree with it. ``initial_axis`` therefore seeds the loop: both
low-variance directions of the initial chords are tried, each is polished by
minimising the point-to-curve overlap of the projected profiles, and the one
with the better overlap wins.

The converged projections are then fused into one partial profile.
"""
from __future__ import annotations

import dataclasses
import logging
import math
from dataclasses import dataclass
from itertools import combinations
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import least_squares

from . import kernels
from .axis import CorrespondenceSet, estimate_axis, estimate_point, symmetric_eigen3, DEFAULT_EIGEN_GAP, DEFAULT_MAX_CONDITION
from .errors import CorrespondenceCollapse, DegenerateDirection, ProfilesDisjoint, RankDeficient
from .geometry import Axis, GeneralSectionProfile, NormalSectionProfile, axis_angle, profile_to_normal, project_points

__all__ = [
    "ReconstructionConfig",
    "IterationRecord",
    "ReconstructionResult",
    "closest_point_pairs",
    "correspondence_rms",
    "refine",
    "initial_axis",
    "seed_axes",
    "overlap_residuals",
    "fuse_profiles",
    "common_parameterization",
    "bin_fuse",
    "overlap_hausdorff",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ReconstructionConfig:
    max_dist: float = 1.0
    tol_angle: float = 1e-7
    tol_point: float = 1e-4
    max_iterations: int = 50
    resample_step: float = 0.2
    fusion_gate: float = 1.0
    allow_partial: bool = False
    initial_search: bool = True
    search_points: int = 100
    search_angles: tuple = (0.0, -0.15, 0.15, -0.3, 0.3)
    rms_form: str = "rms"
    eigen_gap: float = DEFAULT_EIGEN_GAP
    max_condition: float = DEFAULT_MAX_CONDITION

    def __post_init__(self):
        if self.max_dist <= 0 or self.resample_step <= 0 or self.fusion_gate <= 0:
            raise ValueError("max_dist, resample_step and fusion_gate must be positive")
        if self.tol_angle <= 0 or self.tol_point <= 0:
            raise ValueError("convergence tolerances must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if self.search_points < 10:
            raise ValueError("search_points must be at least 10")
        if len(self.search_angles) < 1:
            raise ValueError("search_angles must not be empty")
        object.__setattr__(self, "search_angles", tuple(float(a) for a in self.search_angles))
        if self.rms_form not in ("rms", "printed"):
            raise ValueError("rms_form must be 'rms' or 'printed'")


@dataclass(frozen=True)
class IterationRecord:
    t: int
    axis: Axis
    correspondence_rms: float
    n_correspondences: int
    angle_change: float = math.nan
    point_change: float = math.nan

    def log_line(self) -> str:
        return (f"iter={self.t} e={self.correspondence_rms:.9g} pairs={self.n_correspondences} "
                f"dP={self.angle_change:.9g} dM={self.point_change:.9g}")


@dataclass
class ReconstructionResult:
    history: list
    final_axis: Axis
    partial_profile: Optional[NormalSectionProfile]
    converged: bool
    per_profile_normals: list
    correspondences: Optional[CorrespondenceSet] = None
    partial_flagged: bool = False

    @property
    def iterations(self) -> int:
        return len(self.history)


def closest_point_pairs(li: NormalSectionProfile, lj: NormalSectionProfile, max_dist: float = 1.0):
    """Mutual nearest neighbours of two projected profiles within ``max_dist``.

    Returns a list of ``(index_i, index_j)`` tuples ordered by ``index_i``.
    """
    a, b = kernels.mutual_nearest_pairs(li.points, lj.points, max_dist)
    return list(zip(a.tolist(), b.tolist()))


def correspondence_rms(S: CorrespondenceSet, axis: Axis, form: str = "rms") -> float:
    """Root mean square distance between projected members of each pair.

    ``form="printed"`` gives the square root of the mean (unsquared) distance
    instead, for comparison with published figures that use that variant.
    """
    if len(S) < 1:
        raise ValueError("empty correspondence set")
    dist = np.linalg.norm(project_points(S.s, axis) - project_points(S.d, axis), axis=1)
    if form == "rms":
        return float(np.sqrt(np.mean(dist * dist)))
    if form == "printed":
        return float(np.sqrt(np.mean(dist)))
    raise ValueError("form must be 'rms' or 'printed'")


def _rebuild(profiles: Sequence[GeneralSectionProfile], normals: Sequence[NormalSectionProfile], max_dist: float) -> CorrespondenceSet:
    sets = []
    for i, j in combinations(range(len(profiles)), 2):
        a, b = kernels.mutual_nearest_pairs(normals[i].points, normals[j].points, max_dist)
        if len(a) == 0:
            continue
        sets.append(CorrespondenceSet(
            profiles[i].points[a], profiles[j].points[b],
            np.full(len(a), profiles[i].id), np.full(len(a), profiles[j].id), a, b,
        ))
    return CorrespondenceSet.concatenate(sets)


def overlap_residuals(curves: Sequence[np.ndarray], gate: float) -> np.ndarray:
    """Point-to-curve distances between every two 2D curves, both ways.

    Points whose foot lies on an end of the other curve, or farther than
    ``gate``, contribute zero so the vector length stays fixed.
    """
    out = []
    for i, j in combinations(range(len(curves)), 2):
        for a, b in ((curves[i], curves[j]), (curves[j], curves[i])):
            dist, seg, t = kernels.polyline_distance(a, b)
            outside = ((seg == 0) & (t <= 0.0)) | ((seg == len(b) - 2) & (t >= 1.0)) | (dist > gate)
            out.append(np.where(outside, 0.0, dist))
    return np.concatenate(out)


def _polish(points: Sequence[np.ndarray], start: Axis, gate: float):
    p0 = start.direction
    helper = np.eye(3)[int(np.argmin(np.abs(p0)))]
    u = np.cross(p0, helper)
    u /= np.linalg.norm(u)
    v = np.cross(p0, u)
    centre = np.vstack(points).mean(axis=0)
    foot = start.point + ((centre - start.point) @ p0) * p0

    def chart(x) -> Axis:
        return Axis(p0 + x[0] * u + x[1] * v, foot + x[2] * u + x[3] * v)

    def fun(x):
        return overlap_residuals([project_points(p, chart(x)) for p in points], gate)

    sol = least_squares(fun, np.zeros(4), x_scale=[0.01, 0.01, 10.0, 10.0], diff_step=1e-6, max_nfev=100)
    return chart(sol.x), float(np.sqrt(np.mean(sol.fun ** 2)))


def initial_axis(
    profiles: Sequence[GeneralSectionProfile],
    S0: CorrespondenceSet,
    config: ReconstructionConfig = ReconstructionConfig(),
) -> Axis:
    """Starting axis for the alternation, robust to a sparse, noisy ``S0``.

    Candidates are the two eigenvectors of the chord scatter with the smallest
    eigenvalues, each with its least-squares axis point. Each candidate is
    polished on thinned profiles by minimising ``overlap_residuals`` and the
    lowest-cost result is returned.
    """
    diff = S0.s - S0.d
    _, vectors = symmetric_eigen3(diff.T @ diff)
    points = [p.points[:: max(1, len(p) // config.search_points)] for p in profiles]
    gate = 2.0 * config.max_dist
    best = None
    for k in (0, 1):
        direction = vectors[:, k]
        try:
            start = Axis(direction, estimate_point(S0, direction, config.max_condition))
        except RankDeficient:
            continue
        axis, cost = _polish(points, start, gate)
        if best is None or cost < best[1]:
            best = (axis, cost)
    if best is None:
        return estimate_axis(S0, config.eigen_gap, config.max_condition).axis
    return best[0]


def _rotation(axis_vector: np.ndarray, angle: float) -> np.ndarray:
    k = np.array([[0.0, -axis_vector[2], axis_vector[1]],
                  [axis_vector[2], 0.0, -axis_vector[0]],
                  [-axis_vector[1], axis_vector[0], 0.0]])
    return np.eye(3) + math.sin(angle) * k + (1.0 - math.cos(angle)) * (k @ k)


def seed_axes(
    profiles: Sequence[GeneralSectionProfile],
    S0: CorrespondenceSet,
    config: ReconstructionConfig = ReconstructionConfig(),
) -> list[Axis]:
    """``initial_axis`` and copies of it turned by ``config.search_angles``
    about the dominant chord direction, through the data centroid.

    Overlap alone hardly fixes that rotation; the alternation started from
    each copy settles it by correspondence error.
    """
    base = initial_axis(profiles, S0, config)
    p = base.direction
    diff = S0.s - S0.d
    _, vectors = symmetric_eigen3(diff.T @ diff)
    n = vectors[:, 2] - (vectors[:, 2] @ p) * p
    if np.linalg.norm(n) < 1e-9:
        return [base]
    n /= np.linalg.norm(n)
    centre = np.vstack([q.points for q in profiles]).mean(axis=0)
    foot = base.point + ((centre - base.point) @ p) * p
    seeds = []
    for angle in config.search_angles:
        rot = _rotation(n, angle)
        seeds.append(Axis(rot @ p, foot + rot @ (base.point - foot)))
    return seeds


def _alternate(profiles, S: CorrespondenceSet, config: ReconstructionConfig):
    history: list[IterationRecord] = []
    prev: Optional[Axis] = None
    converged = False
    normals: list[NormalSectionProfile] = []
    for t in range(config.max_iterations):
        axis = estimate_axis(S, config.eigen_gap, config.max_condition).axis
        normals = [profile_to_normal(p, axis) for p in profiles]
        d_angle = math.nan if prev is None else axis_angle(axis, prev)
        d_point = math.nan if prev is None else float(np.linalg.norm(axis.point - prev.point))
        history.append(IterationRecord(t, axis, correspondence_rms(S, axis, config.rms_form), len(S), d_angle, d_point))
        if prev is not None and d_angle < config.tol_angle and d_point < config.tol_point:
            converged = True
            break
        prev = axis
        if t + 1 == config.max_iterations:
            break
        S = _rebuild(profiles, normals, config.max_dist)
        if len(S) < 3:
            raise CorrespondenceCollapse(f"iteration {t + 1} produced {len(S)} correspondences")
    return history, converged, normals, S


def refine(
    profiles: Sequence[GeneralSectionProfile],
    S0: CorrespondenceSet,
    config: ReconstructionConfig = ReconstructionConfig(),
) -> ReconstructionResult:
    """Alternate axis estimation and closest-point correspondence updates.

    With ``config.initial_search`` the alternation is started from every axis
    of ``seed_axes`` (correspondences rebuilt from that axis) and the run with
    the lowest final correspondence error is kept; otherwise it starts from
    ``S0`` directly.
    """
    if len(profiles) < 2:
        raise ValueError("need at least two profiles")
    if len(S0) < 3:
        raise CorrespondenceCollapse(f"initial correspondence set has {len(S0)} pairs")
    starts = []
    if config.initial_search:
        for axis in seed_axes(profiles, S0, config):
            seeded = _rebuild(profiles, [profile_to_normal(p, axis) for p in profiles], config.max_dist)
            if len(seeded) >= 3:
                starts.append(seeded)
    if not starts:
        starts.append(S0)

    best = None
    failure: Optional[Exception] = None
    for S in starts:
        try:
            run = _alternate(profiles, S, config)
        except CorrespondenceCollapse as exc:
            failure = exc
            continue
        # converged runs first, then lower error
        key = (not run[1], run[0][-1].correspondence_rms)
        if best is None or key < best[0]:
            best = (key, run)
    if best is None:
        raise failure
    history, converged, normals, S = best[1]
    if starts[0] is not S0:
        history = _with_initial_record(S0, history, config)
    for rec in history:
        log.info(rec.log_line())

    partial = None
    flagged = False
    if converged or config.allow_partial:
        partial = fuse_profiles(normals, config.resample_step, config.fusion_gate)
        flagged = not converged
    return ReconstructionResult(history, history[-1].axis, partial, converged, normals, S, flagged)


def _with_initial_record(S0, history, config):
    """Prefix the record of the plain estimate from ``S0`` so the history
    starts where the alternation would have without seeding."""
    try:
        axis = estimate_axis(S0, config.eigen_gap, config.max_condition).axis
    except (DegenerateDirection, RankDeficient):
        return history
    out = [IterationRecord(0, axis, correspondence_rms(S0, axis, config.rms_form), len(S0))]
    prev = axis
    for rec in history:
        d_angle, d_point = rec.angle_change, rec.point_change
        if rec.t == 0:
            d_angle = axis_angle(rec.axis, prev)
            d_point = float(np.linalg.norm(rec.axis.point - prev.point))
        out.append(dataclasses.replace(rec, t=rec.t + 1, angle_change=d_angle, point_change=d_point))
    return out


def _project_onto(points: np.ndarray, poly: np.ndarray, cum: np.ndarray):
    """Arc-length parameter of the foot of each point on ``poly``, plus the
    distance and whether the foot is clamped to an end of the polyline.
    """
    dist, seg, t = kernels.polyline_distance(points, poly)
    param = cum[seg] + t * (cum[seg + 1] - cum[seg])
    at_start = (seg == 0) & (t <= 0.0)
    at_end = (seg == len(poly) - 2) & (t >= 1.0)
    return param, dist, at_start, at_end


def _cumulative(poly: np.ndarray) -> np.ndarray:
    return np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(poly, axis=0), axis=1))])


def common_parameterization(curves: Sequence[np.ndarray], gate: float = 1.0) -> np.ndarray:
    """Reference polyline spanning all curves: the longest one, extended at
    either end by the overhanging parts of the others.

    A curve overlaps the reference between its first and last point lying
    within ``gate`` of the reference interior; what lies beyond replaces the
    reference past the foot of that point. Points further than ``gate`` are
    overhang even when their foot is interior (a steep wall seen past the end
    of the reference projects onto it from the side).
    """
    lengths = [_cumulative(c)[-1] for c in curves]
    ref = np.asarray(curves[int(np.argmax(lengths))], dtype=float)
    for c in curves:
        c = np.asarray(c, dtype=float)
        if c is ref or len(c) < 2:
            continue
        near = _near_interior(c, ref, gate)
        if len(near) < 2:
            continue
        param = _project_onto(c, ref, _cumulative(ref))[0]
        if param[near[-1]] < param[near[0]]:
            c = c[::-1]
            near = _near_interior(c, ref, gate)
        if near[0] > 0:
            foot = int(kernels.polyline_distance(c[[near[0]]], ref)[1][0])
            ref = np.vstack([c[:near[0]], ref[foot + 1:]])
        if near[-1] < len(c) - 1:
            foot = int(kernels.polyline_distance(c[[near[-1]]], ref)[1][0])
            ref = np.vstack([ref[:foot + 1], c[near[-1] + 1:]])
    keep = np.concatenate([[True], np.linalg.norm(np.diff(ref, axis=0), axis=1) > 0])
    return ref[keep]


def _near_interior(c: np.ndarray, ref: np.ndarray, gate: float) -> np.ndarray:
    _, dist, at_start, at_end = _project_onto(c, ref, _cumulative(ref))
    return np.flatnonzero(~(at_start | at_end) & (dist <= gate))


def bin_fuse(curves: Sequence[np.ndarray], step: float, reference: Optional[np.ndarray] = None,
             gate: float = 1.0) -> np.ndarray:
    """Pool points, order them along a common arc length and average per bin."""
    ref = common_parameterization(curves, gate) if reference is None else reference
    pts = np.vstack([np.asarray(c, dtype=float) for c in curves])
    param, _, _, _ = _project_onto(pts, ref, _cumulative(ref))
    bins = np.floor(param / step).astype(np.int64)
    order = np.lexsort((param, bins))
    bins, pts = bins[order], pts[order]
    uniq, start = np.unique(bins, return_index=True)
    sums = np.add.reduceat(pts, start, axis=0)
    counts = np.diff(np.append(start, len(pts)))
    return sums / counts[:, None]


def overlap_hausdorff(a: np.ndarray, b: np.ndarray, gate: float) -> float:
    """Symmetric Hausdorff distance restricted to where the curves overlap.

    The overlap of each curve is the stretch between its first and last point
    that is a mutual nearest neighbour of the other curve within ``gate``.
    Curves without any such pair are at infinite distance.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    ia, ib = kernels.mutual_nearest_pairs(a, b, gate)
    if len(ia) == 0:
        return math.inf
    ta = a[ia.min(): ia.max() + 1]
    tb = b[ib.min(): ib.max() + 1]
    if len(ta) < 2 or len(tb) < 2:
        return float(np.linalg.norm(a[ia[0]] - b[ib[0]]))
    return float(max(kernels.polyline_distance(ta, tb)[0].max(), kernels.polyline_distance(tb, ta)[0].max()))


def fuse_profiles(normals: Sequence[NormalSectionProfile], resample_step: float = 0.2, fusion_gate: float = 1.0) -> NormalSectionProfile:
    """Merge overlapping projections into one profile binned at ``resample_step``."""
    if len(normals) < 2:
        raise ValueError("need at least two profiles to fuse")
    curves = [n.points for n in normals]
    for i, j in combinations(range(len(curves)), 2):
        h = overlap_hausdorff(curves[i], curves[j], fusion_gate)
        if h >= fusion_gate:
            raise ProfilesDisjoint(f"profiles {i} and {j} differ by {h:.3g} mm over their overlap (gate {fusion_gate:g} mm)")
    fused = bin_fuse(curves, resample_step, gate=fusion_gate)
    fused[:, 1] = np.maximum(fused[:, 1], 0.0)
    return NormalSectionProfile(fused, source_id=None, axis_used=normals[0].axis_used)
