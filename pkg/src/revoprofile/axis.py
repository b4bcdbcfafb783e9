"""Axis estimation from point correspondences.

The joint objective over direction ``P`` and point ``M`` is::

    sum (P.(s - d))^2 + sum (|(s - M) x P| - |(d - M) x P|)^2

It is split into two linear problems. ``P`` is the eigenvector of ``D^T D``
(rows of ``D`` are ``(s - d)^T``) for the smallest eigenvalue. With ``P``
fixed, equal distance from the axis gives one linear equation in ``M`` per
pair; the extra row ``P^T M = 0`` pins ``M`` along the axis. That equation
weights each pair by the sum of its radii, so the two-step answer is only
close to the joint minimum; ``estimate_axis`` finishes with a few
Gauss-Newton steps on the joint objective unless ``polish=False``.

``brute_force_axis`` minimises the joint objective directly and is only used
as an independent check of the two-step solution.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, NamedTuple, Optional, Sequence

import numpy as np
from scipy.optimize import least_squares

from .errors import DegenerateDirection, NoConvergence, RankDeficient
from .geometry import Axis, canonical_direction

__all__ = [
    "Correspondence",
    "CorrespondenceSet",
    "AxisEstimate",
    "symmetric_eigen3",
    "estimate_direction",
    "estimate_point",
    "estimate_axis",
    "axis_objective",
    "polish_axis",
    "brute_force_axis",
]

DEFAULT_EIGEN_GAP = 1e-6
DEFAULT_MAX_CONDITION = 1e12


class Correspondence(NamedTuple):
    s: np.ndarray
    d: np.ndarray
    src_profile: int
    dst_profile: int
    src_index: int
    dst_index: int


class CorrespondenceSet:
    """Pairs ``(s, d)`` of 3D points on two different profiles, held column-wise.

    Point coordinates are stored as ``(N, 3)`` arrays and the provenance
    (profile ids and point indices) as integer arrays of length ``N``.
    """

    def __init__(self, s, d, src_profile=None, dst_profile=None, src_index=None, dst_index=None):
        s = np.array(s, dtype=float).reshape(-1, 3)
        d = np.array(d, dtype=float).reshape(-1, 3)
        if s.shape != d.shape:
            raise ValueError("s and d must have the same shape")
        n = len(s)
        if src_profile is None:
            src_profile, dst_profile = np.zeros(n, int), np.ones(n, int)
        if src_index is None:
            src_index, dst_index = np.arange(n), np.arange(n)
        self.src_profile = np.asarray(src_profile, dtype=np.int64).reshape(n)
        self.dst_profile = np.asarray(dst_profile, dtype=np.int64).reshape(n)
        self.src_index = np.asarray(src_index, dtype=np.int64).reshape(n)
        self.dst_index = np.asarray(dst_index, dtype=np.int64).reshape(n)
        if np.any(self.src_profile == self.dst_profile):
            raise ValueError("a correspondence must join two different profiles")
        keys = np.stack([self.src_profile, self.src_index, self.dst_profile, self.dst_index], axis=1)
        if n and len(np.unique(keys, axis=0)) != n:
            raise ValueError("duplicate correspondences")
        if not (np.all(np.isfinite(s)) and np.all(np.isfinite(d))):
            raise ValueError("correspondence coordinates must be finite")
        for a in (s, d, self.src_profile, self.dst_profile, self.src_index, self.dst_index):
            a.setflags(write=False)
        self.s = s
        self.d = d

    def __len__(self):
        return len(self.s)

    def __iter__(self) -> Iterator[Correspondence]:
        for k in range(len(self)):
            yield self[k]

    def __getitem__(self, k) -> Correspondence:
        return Correspondence(
            self.s[k], self.d[k],
            int(self.src_profile[k]), int(self.dst_profile[k]),
            int(self.src_index[k]), int(self.dst_index[k]),
        )

    @property
    def pairs(self) -> list[Correspondence]:
        return list(self)

    @classmethod
    def from_pairs(cls, pairs: Sequence[Correspondence]) -> "CorrespondenceSet":
        if not pairs:
            return cls(np.empty((0, 3)), np.empty((0, 3)), [], [], [], [])
        cols = list(zip(*pairs))
        return cls(np.array(cols[0]), np.array(cols[1]), *cols[2:])

    @classmethod
    def concatenate(cls, sets: Sequence["CorrespondenceSet"]) -> "CorrespondenceSet":
        sets = [c for c in sets if len(c)]
        if not sets:
            return cls.from_pairs([])
        return cls(
            np.concatenate([c.s for c in sets]),
            np.concatenate([c.d for c in sets]),
            np.concatenate([c.src_profile for c in sets]),
            np.concatenate([c.dst_profile for c in sets]),
            np.concatenate([c.src_index for c in sets]),
            np.concatenate([c.dst_index for c in sets]),
        )

    def swapped(self) -> "CorrespondenceSet":
        return CorrespondenceSet(self.d, self.s, self.dst_profile, self.src_profile, self.dst_index, self.src_index)

    def transformed(self, rotation, translation) -> "CorrespondenceSet":
        r = np.asarray(rotation, float)
        t = np.asarray(translation, float)
        return CorrespondenceSet(
            self.s @ r.T + t, self.d @ r.T + t,
            self.src_profile, self.dst_profile, self.src_index, self.dst_index,
        )

    def key_set(self) -> set:
        return set(zip(self.src_profile.tolist(), self.src_index.tolist(),
                       self.dst_profile.tolist(), self.dst_index.tolist()))


@dataclass(frozen=True)
class AxisEstimate:
    axis: Axis
    objective: float
    direction_gap: float


def symmetric_eigen3(a) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a symmetric 3x3 matrix without iteration.

    Eigenvalues come from the trigonometric roots of the characteristic cubic;
    each eigenvector is the largest cross product of two rows of ``A - lambda I``.
    Returns ``(values, vectors)`` with values ascending and vectors as columns.
    """
    a = np.asarray(a, dtype=float)
    a = 0.5 * (a + a.T)
    scale = float(np.max(np.abs(a)))
    if scale == 0.0:
        return np.zeros(3), np.eye(3)
    a = a / scale
    p1 = a[0, 1] ** 2 + a[0, 2] ** 2 + a[1, 2] ** 2
    q = np.trace(a) / 3.0
    p2 = (a[0, 0] - q) ** 2 + (a[1, 1] - q) ** 2 + (a[2, 2] - q) ** 2 + 2.0 * p1
    p = math.sqrt(p2 / 6.0)
    if p < 1e-300:
        return np.full(3, q * scale), np.eye(3)
    b = (a - q * np.eye(3)) / p
    r = min(1.0, max(-1.0, np.linalg.det(b) / 2.0))
    phi = math.acos(r) / 3.0
    hi = q + 2.0 * p * math.cos(phi)
    lo = q + 2.0 * p * math.cos(phi + 2.0 * math.pi / 3.0)
    mid = 3.0 * q - hi - lo
    values = np.array([lo, mid, hi])

    vectors = np.zeros((3, 3))
    for k, lam in enumerate(values):
        v = _null_vector(a, lam)
        if v is not None:
            # one Rayleigh-quotient correction of the root sharpens the vector
            # when the eigenvalue is tiny next to the others
            v = _null_vector(a, float(v @ a @ v)) if k != 1 else v
        vectors[:, k] = np.nan if v is None else v
    # repeated eigenvalues leave some columns undefined; complete an orthonormal frame
    if np.isnan(vectors).any():
        vectors = _complete_frame(vectors)
    else:
        # re-orthogonalise the middle vector against the outer ones
        v0, v2 = vectors[:, 0], vectors[:, 2]
        v2 = v2 - (v2 @ v0) * v0
        v2 /= np.linalg.norm(v2)
        vectors[:, 2] = v2
        vectors[:, 1] = np.cross(v2, v0)
    return values * scale, vectors


def _null_vector(a: np.ndarray, lam: float):
    m = a - lam * np.eye(3)
    crosses = [np.cross(m[0], m[1]), np.cross(m[0], m[2]), np.cross(m[1], m[2])]
    norms = [float(c @ c) for c in crosses]
    best = int(np.argmax(norms))
    if norms[best] <= 1e-28:
        return None
    return crosses[best] / math.sqrt(norms[best])


def _complete_frame(vectors: np.ndarray) -> np.ndarray:
    good = [vectors[:, k] for k in range(3) if not np.isnan(vectors[:, k]).any()]
    basis: list[np.ndarray] = []
    for v in good + list(np.eye(3)):
        for b in basis:
            v = v - (v @ b) * b
        n = np.linalg.norm(v)
        if n > 1e-8:
            basis.append(v / n)
        if len(basis) == 3:
            break
    out = vectors.copy()
    for k in range(3):
        if np.isnan(out[:, k]).any():
            for b in basis:
                if all(abs(b @ out[:, j]) < 1e-8 for j in range(3) if not np.isnan(out[:, j]).any()):
                    out[:, k] = b
                    break
    return out


def _direction_and_gap(s: np.ndarray, d: np.ndarray, eigen_gap: float) -> tuple[np.ndarray, float]:
    diff = s - d
    scatter = diff.T @ diff
    values, vectors = symmetric_eigen3(scatter)
    lo, mid, hi = values
    if hi <= 0.0 or (mid - lo) < eigen_gap * hi:
        raise DegenerateDirection(
            f"axis direction not identifiable: eigenvalues {values.tolist()} "
            f"(relative gap {(mid - lo) / hi if hi > 0 else 0.0:.3g} < {eigen_gap:g})"
        )
    gap = math.inf if lo <= 0.0 else float(mid / lo)
    return canonical_direction(vectors[:, 0]), gap


def estimate_direction(S: CorrespondenceSet, eigen_gap: float = DEFAULT_EIGEN_GAP) -> np.ndarray:
    """Unit direction minimising ``sum (P.(s - d))^2`` subject to ``|P| = 1``."""
    if len(S) < 3:
        raise DegenerateDirection(f"need at least 3 correspondences, got {len(S)}")
    return _direction_and_gap(S.s, S.d, eigen_gap)[0]


def estimate_point(S: CorrespondenceSet, direction, max_condition: float = DEFAULT_MAX_CONDITION) -> np.ndarray:
    """Axis point ``M`` with ``P.M = 0`` given the direction.

    Solves the stacked system ``H M = B`` by SVD. Rows of ``H`` are the parts
    of ``s - d`` orthogonal to ``P``; the last row is ``P`` itself, weighted by
    the mean norm of the other rows.
    """
    if len(S) < 3:
        raise RankDeficient(f"need at least 3 correspondences, got {len(S)}")
    p = np.asarray(direction, dtype=float)
    p = p / np.linalg.norm(p)
    # work relative to the data centroid; the solution is unchanged
    c = 0.5 * (S.s.mean(axis=0) + S.d.mean(axis=0))
    s = S.s - c
    d = S.d - c
    diff = s - d
    h = diff - np.outer(diff @ p, p)  # (I - P P^T)(s - d) == [P]x^T [P]x (s - d)
    b = 0.5 * np.einsum("ij,ij->i", s + d, h)
    w = float(np.mean(np.linalg.norm(h, axis=1)))
    if w == 0.0:
        raise RankDeficient("all correspondence differences are parallel to the axis")
    H = np.vstack([h, w * p])
    B = np.concatenate([b, [-w * float(p @ c)]])
    sol, _, rank, sv = np.linalg.lstsq(H, B, rcond=None)
    cond = math.inf if sv[-1] == 0.0 else float((sv[0] / sv[-1]) ** 2)
    if rank < 3 or cond > max_condition:
        raise RankDeficient(f"axis point not identifiable: cond(H^T H) = {cond:.3g} > {max_condition:g}")
    m = sol + c
    return m - (m @ p) * p


def axis_objective(S: CorrespondenceSet, axis: Axis) -> float:
    """The joint objective (sum of squared axial and radial disagreements), mm^2."""
    p, m = axis.direction, axis.point
    axial = (S.s - S.d) @ p
    rs = np.linalg.norm(np.cross(S.s - m, p), axis=1)
    rd = np.linalg.norm(np.cross(S.d - m, p), axis=1)
    return float(axial @ axial + (rs - rd) @ (rs - rd))


def _joint_residuals(s: np.ndarray, d: np.ndarray, p: np.ndarray, m: np.ndarray) -> np.ndarray:
    rs = np.linalg.norm(np.cross(s - m, p), axis=1)
    rd = np.linalg.norm(np.cross(d - m, p), axis=1)
    return np.concatenate([(s - d) @ p, rs - rd])


def polish_axis(S: CorrespondenceSet, axis: Axis) -> Axis:
    """Levenberg-Marquardt on the joint objective, started at ``axis``.

    Chart: two tilts of the direction and two shifts of the point across it,
    around the data centroid. The start is returned when no step lowers the
    objective.
    """
    p0 = axis.direction
    u, v = _perp_basis(p0)
    c = 0.5 * (S.s.mean(axis=0) + S.d.mean(axis=0))
    s, d = S.s - c, S.d - c
    m0 = axis.point - c
    m0 = m0 - (m0 @ p0) * p0
    spread = float(np.sqrt(np.mean(np.sum(np.vstack([s, d]) ** 2, axis=1)))) or 1.0

    def unpack(x):
        p = p0 + x[0] * u + x[1] * v
        p = p / np.linalg.norm(p)
        return p, m0 + spread * (x[2] * u + x[3] * v)

    def fun(x):
        return _joint_residuals(s, d, *unpack(x))

    def jac(x):
        q = p0 + x[0] * u + x[1] * v
        nq = np.linalg.norm(q)
        p, m = unpack(x)
        proj = np.eye(3) - np.outer(p, p)
        dp = proj @ np.column_stack([u, v]) / nq  # dP / d(tilts)
        dm = spread * np.column_stack([u, v])  # dM / d(shifts)

        def radial(w):
            t = w @ p
            r = np.linalg.norm(w - np.outer(t, p), axis=1)
            r = np.where(r > 0.0, r, np.inf)
            return (-t[:, None] * w / r[:, None]) @ dp, (-(w - np.outer(t, p)) / r[:, None]) @ dm

        ds_p, ds_m = radial(s - m)
        dd_p, dd_m = radial(d - m)
        top = np.hstack([(s - d) @ dp, np.zeros((len(s), 2))])
        return np.vstack([top, np.hstack([ds_p - dd_p, ds_m - dd_m])])

    f0 = fun(np.zeros(4))
    sol = least_squares(fun, np.zeros(4), jac=jac, method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=200)
    if not np.all(np.isfinite(sol.x)) or sol.fun @ sol.fun >= f0 @ f0:
        return axis
    p, m = unpack(sol.x)
    return Axis(p, m + c)


def estimate_axis(
    S: CorrespondenceSet,
    eigen_gap: float = DEFAULT_EIGEN_GAP,
    max_condition: float = DEFAULT_MAX_CONDITION,
    polish: bool = True,
) -> AxisEstimate:
    """Closed-form direction, then point, then (optionally) a joint polish.

    ``direction_gap`` always describes the closed-form eigenproblem.
    """
    if len(S) < 3:
        raise DegenerateDirection(f"need at least 3 correspondences, got {len(S)}")
    p, gap = _direction_and_gap(S.s, S.d, eigen_gap)
    m = estimate_point(S, p, max_condition)
    axis = Axis(p, m)
    if polish:
        axis = polish_axis(S, axis)
    return AxisEstimate(axis, axis_objective(S, axis), gap)


def _perp_basis(p: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    helper = np.eye(3)[int(np.argmin(np.abs(p)))]
    u = np.cross(p, helper)
    u /= np.linalg.norm(u)
    return u, np.cross(p, u)


def brute_force_axis(
    S: CorrespondenceSet,
    init: Axis,
    step_tol: float = 1e-10,
    max_evaluations: int = 100_000,
    initial_step: float = 1e-2,
) -> AxisEstimate:
    """Minimise the joint objective directly by Hooke-Jeeves pattern search.

    The chart has four coordinates: two tilt angles of the direction and two
    shifts of the axis in the plane orthogonal to it, both taken around the
    data centroid so the coordinates are nearly decoupled. Position steps are
    scaled by the spread of the data. Search stops when the step falls below
    ``step_tol``.
    """
    if len(S) < 1:
        raise ValueError("empty correspondence set")
    p0 = init.direction
    u, v = _perp_basis(p0)
    pts = np.vstack([S.s, S.d])
    c = pts.mean(axis=0)
    foot = init.point + ((c - init.point) @ p0) * p0
    spread = float(np.sqrt(np.mean(np.sum((pts - c) ** 2, axis=1)))) or 1.0
    scales = np.array([1.0, 1.0, spread, spread])

    def chart(x) -> Axis:
        direction = p0 + x[0] * u + x[1] * v
        return Axis(direction, foot + x[2] * u + x[3] * v)

    evaluations = 0

    def f(x) -> float:
        nonlocal evaluations
        evaluations += 1
        if evaluations > max_evaluations:
            raise NoConvergence(f"brute-force axis search exceeded {max_evaluations} evaluations")
        return axis_objective(S, chart(x))

    def explore(base, fbase, h):
        x = base.copy()
        fx = fbase
        for k in range(4):
            for sign in (1.0, -1.0):
                trial = x.copy()
                trial[k] += sign * h * scales[k]
                ft = f(trial)
                if ft < fx:
                    x, fx = trial, ft
                    break
        return x, fx

    x = np.zeros(4)
    fx = f(x)
    h = initial_step
    while h >= step_tol:
        nx, nfx = explore(x, fx, h)
        if nfx < fx:
            # pattern moves while they keep paying off
            while True:
                px = nx + (nx - x)
                x, fx = nx, nfx
                cand, fc = explore(px, f(px), h)
                if fc < fx:
                    nx, nfx = cand, fc
                else:
                    break
        else:
            h *= 0.5
    axis = chart(x)
    return AxisEstimate(axis, axis_objective(S, axis), _gap_only(S))


def _gap_only(S: CorrespondenceSet) -> float:
    diff = S.s - S.d
    values, _ = symmetric_eigen3(diff.T @ diff)
    return math.inf if values[0] <= 0.0 else float(values[1] / values[0])
