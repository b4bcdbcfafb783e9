"""Registration of partial normal section profiles into a complete one.

Partials from different viewpoints share the generatrix but not the axial
origin, and their axial direction may be flipped. Each partial is brought onto
the running composite by a coarse axial-shift search followed by 2D ICP, for
both orientations; the better fit is merged into the composite.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import kernels
from .errors import InsufficientOverlap, NoConvergence
from .geometry import NormalSectionProfile
from .reconstruction import bin_fuse

__all__ = [
    "Rigid2D",
    "RegistrationConfig",
    "RegistrationResult",
    "procrustes_2d",
    "icp_2d",
    "coarse_align",
    "align_pair",
    "register_partials",
]


def _wrap(angle: float) -> float:
    a = math.remainder(angle, 2.0 * math.pi)
    return math.pi if a == -math.pi else a


@dataclass(frozen=True)
class Rigid2D:
    """``p -> R(rotation) F p + translation`` with ``F`` flipping the axial
    coordinate when ``reflection`` is set."""

    rotation: float = 0.0
    translation: tuple = (0.0, 0.0)
    reflection: bool = False

    def __post_init__(self):
        object.__setattr__(self, "rotation", _wrap(float(self.rotation)))
        object.__setattr__(self, "translation", (float(self.translation[0]), float(self.translation[1])))
        object.__setattr__(self, "reflection", bool(self.reflection))

    @property
    def matrix(self) -> np.ndarray:
        c, s = math.cos(self.rotation), math.sin(self.rotation)
        m = np.array([[c, -s], [s, c]])
        if self.reflection:
            m = m @ np.diag([-1.0, 1.0])
        return m

    def apply(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        return pts @ self.matrix.T + np.asarray(self.translation)

    def then(self, other: "Rigid2D") -> "Rigid2D":
        """This transform followed by ``other``."""
        m = other.matrix @ self.matrix
        t = other.matrix @ np.asarray(self.translation) + np.asarray(other.translation)
        return Rigid2D._from_matrix(m, t)

    def inverse(self) -> "Rigid2D":
        m = self.matrix.T
        return Rigid2D._from_matrix(m, -m @ np.asarray(self.translation))

    @staticmethod
    def _from_matrix(m: np.ndarray, t) -> "Rigid2D":
        reflection = np.linalg.det(m) < 0
        r = m @ np.diag([-1.0, 1.0]) if reflection else m
        return Rigid2D(math.atan2(r[1, 0], r[0, 0]), tuple(t), reflection)

    def as_dict(self) -> dict:
        return {"rotation": self.rotation, "translation": list(self.translation), "reflection": self.reflection}

    @classmethod
    def from_dict(cls, d) -> "Rigid2D":
        return cls(d["rotation"], tuple(d["translation"]), d.get("reflection", False))


@dataclass(frozen=True)
class RegistrationConfig:
    max_dist: float = 1.0
    tolerance: float = 1e-8
    max_iterations: int = 100
    min_overlap_points: int = 10
    resample_step: float = 0.2
    coarse_window: float = 3.0
    max_tilt: float = 0.05
    max_radial_offset: float = 20.0

    def __post_init__(self):
        if self.max_dist <= 0 or self.tolerance <= 0 or self.resample_step <= 0 or self.coarse_window <= 0:
            raise ValueError("max_dist, tolerance, resample_step and coarse_window must be positive")
        if not 0 < self.max_tilt < 1:
            raise ValueError("max_tilt must lie in (0, 1)")
        if self.max_radial_offset <= 0:
            raise ValueError("max_radial_offset must be positive")
        if self.max_iterations < 1 or self.min_overlap_points < 3:
            raise ValueError("max_iterations must be >= 1 and min_overlap_points >= 3")


@dataclass
class RegistrationResult:
    transforms: list
    complete: NormalSectionProfile
    residual_rms: float
    pair_residuals: list = field(default_factory=list)


def procrustes_2d(src: np.ndarray, dst: np.ndarray) -> tuple[float, np.ndarray]:
    """Rotation angle and translation minimising ``sum |R src + t - dst|^2``."""
    cs, cd = src.mean(axis=0), dst.mean(axis=0)
    a, b = src - cs, dst - cd
    h = a.T @ b
    theta = math.atan2(h[0, 1] - h[1, 0], h[0, 0] + h[1, 1])
    c, s = math.cos(theta), math.sin(theta)
    r = np.array([[c, -s], [s, c]])
    return theta, cd - r @ cs


def _matches(points: np.ndarray, target: np.ndarray, max_dist: float):
    dist, seg, t = kernels.polyline_distance(points, target)
    clamped = ((seg == 0) & (t <= 0.0)) | ((seg == len(target) - 2) & (t >= 1.0))
    keep = (~clamped) & (dist <= max_dist)
    foot = target[seg] + t[:, None] * (target[seg + 1] - target[seg])
    return keep, foot, dist


def _inlier_rms(base, transform, tgt, max_dist):
    keep, foot, dist = _matches(transform.apply(base), tgt, max_dist)
    return keep, foot, dist, (float(np.sqrt(np.mean(dist[keep] ** 2))) if keep.any() else math.inf)


def _icp(base, tgt, current, config, history=None):
    """ICP loop on unreflected ``base``; returns ``(transform, converged)``.

    Closest points on a polyline let the source slide along flat stretches
    one small step at a time. When successive updates keep their direction
    and shrink geometrically, the remaining geometric series is added in one
    jump, accepted only if it does not raise the inlier residual over the
    plain update.
    """
    scale = float(np.sqrt(np.mean(np.sum((base - base.mean(axis=0)) ** 2, axis=1)))) or 1.0
    prev_dq = None
    for _ in range(config.max_iterations):
        keep, foot, _, rms = _inlier_rms(base, current, tgt, config.max_dist)
        if np.count_nonzero(keep) < config.min_overlap_points:
            raise InsufficientOverlap(f"only {np.count_nonzero(keep)} points overlap within {config.max_dist:g} mm")
        if history is not None:
            history.append(rms)
        theta, t = procrustes_2d(base[keep], foot[keep])
        step = max(abs(_wrap(theta - current.rotation)), float(np.max(np.abs(t - np.asarray(current.translation)))))
        nxt = Rigid2D(theta, tuple(t))
        if step < config.tolerance:
            return nxt, True
        dq = np.array([_wrap(theta - current.rotation) * scale, *(t - np.asarray(current.translation))])
        if prev_dq is not None:
            n0, n1 = np.linalg.norm(prev_dq), np.linalg.norm(dq)
            ratio = n1 / n0
            if ratio < 1.0 and dq @ prev_dq > 0.99 * n0 * n1:
                jump = min(ratio / (1.0 - ratio), 50.0) * dq
                cand = Rigid2D(theta + jump[0] / scale, (t[0] + jump[1], t[1] + jump[2]))
                ck, _, _, crms = _inlier_rms(base, cand, tgt, config.max_dist)
                if np.count_nonzero(ck) >= config.min_overlap_points and crms <= _inlier_rms(base, nxt, tgt, config.max_dist)[3]:
                    nxt, dq = cand, None
        prev_dq = dq
        current = nxt
    return current, False


def icp_2d(source: NormalSectionProfile, target: NormalSectionProfile, init: Rigid2D = Rigid2D(),
           config: RegistrationConfig = RegistrationConfig(), history: Optional[list] = None):
    """Point-to-point ICP of ``source`` onto ``target``.

    Each source point is paired with its closest point on the target polyline
    when that lies within ``max_dist`` and not on a target end; the rigid
    update is the closed-form 2D Procrustes solution. Stops when rotation and
    translation change by less than ``tolerance``. The reflection flag of
    ``init`` is kept. Returns ``(transform, inlier_rms)``; the residual of each
    iteration is appended to ``history`` when given.
    """
    base, tgt = _prepare(source, target, init)
    current, converged = _icp(base, tgt, Rigid2D(init.rotation, init.translation, False), config, history)
    if not converged:
        raise NoConvergence(f"ICP did not settle within {config.max_iterations} iterations")
    return _finish(base, tgt, current, init.reflection, config)


def _prepare(source, target, init):
    src = np.asarray(source.points if isinstance(source, NormalSectionProfile) else source, dtype=float)
    tgt = np.asarray(target.points if isinstance(target, NormalSectionProfile) else target, dtype=float)
    if len(tgt) < 2:
        raise InsufficientOverlap("target needs at least 2 points")
    base = src.copy()
    if init.reflection:
        base[:, 0] = -base[:, 0]
    return base, tgt


def _finish(base, tgt, current, reflection, config):
    keep, _, _, rms = _inlier_rms(base, current, tgt, config.max_dist)
    if np.count_nonzero(keep) < config.min_overlap_points:
        raise InsufficientOverlap(f"only {np.count_nonzero(keep)} points overlap within {config.max_dist:g} mm")
    return Rigid2D(current.rotation, current.translation, reflection), rms


def coarse_align(source: NormalSectionProfile, target: NormalSectionProfile, reflection: bool,
                 config: RegistrationConfig = RegistrationConfig()):
    """Best axial shift at ``resample_step`` granularity, then a rigid fit.

    For every shift the target's radial profile is sampled at the shifted
    source axial positions; a straight line in axial absorbs a radial offset
    and a small tilt, and the median absolute misfit after it scores the
    shift. Tilts steeper than ``max_tilt`` and radial offsets beyond
    ``max_radial_offset`` are not considered: a free line can make almost any
    stretch of a smooth curve look like any other. Returns ``(Rigid2D, score)``
    or raises InsufficientOverlap.
    """
    src = np.asarray(source.points, dtype=float).copy()
    if reflection:
        src[:, 0] = -src[:, 0]
    tgt = np.asarray(target.points, dtype=float)
    order = np.argsort(tgt[:, 0], kind="stable")
    tx, ty = tgt[order, 0], tgt[order, 1]
    step = config.resample_step
    lo = tx[0] - src[:, 0].max()
    hi = tx[-1] - src[:, 0].min()
    shifts = lo + step * np.arange(int(math.floor((hi - lo) / step)) + 1)
    best = None
    for s in shifts:
        x = src[:, 0] + s
        inside = (x > tx[0]) & (x < tx[-1])
        if np.count_nonzero(inside) < config.min_overlap_points:
            continue
        diff = np.interp(x[inside], tx, ty) - src[inside, 1]
        coef = np.polyfit(x[inside], diff, 1)
        if abs(coef[0]) > config.max_tilt or abs(np.polyval(coef, x[inside].mean())) > config.max_radial_offset:
            continue
        misfit = np.abs(diff - np.polyval(coef, x[inside]))
        key = (-int(np.count_nonzero(misfit <= step)), float(np.median(misfit)))
        if best is None or key < best[0]:
            best = (key, s, inside, coef)
    if best is None:
        raise InsufficientOverlap("profiles share no axial range within the tilt and offset bounds")
    (_, score), s, inside, coef = best
    x = src[inside, 0] + s
    moved = np.column_stack([x, src[inside, 1] + np.polyval(coef, x)])
    theta, t = procrustes_2d(src[inside], moved)
    return Rigid2D(theta, tuple(t), reflection), score


def align_pair(source: NormalSectionProfile, target: NormalSectionProfile,
               config: RegistrationConfig = RegistrationConfig(), reflections=(False, True)):
    """Coarse search plus ICP for each orientation.

    The lower residual wins unless the other orientation keeps markedly more
    source points within ``max_dist`` of the target (a wrong orientation can
    slide off the target until only a handful of points overlap, and fit
    those well). Returns ``(Rigid2D, residual_rms)``.
    """
    fits = []
    failure: Optional[Exception] = None
    for flip in reflections:
        try:
            init, _ = coarse_align(source, target, flip, config)
            transform, rms = _icp_widening(source, target, init, config)
        except (InsufficientOverlap, NoConvergence) as exc:
            failure = exc
            continue
        base, tgt = _prepare(source, target, transform)
        n = int(np.count_nonzero(_inlier_rms(base, Rigid2D(transform.rotation, transform.translation), tgt, config.max_dist)[0]))
        fits.append((transform, rms, n))
    if not fits:
        raise failure
    most = max(f[2] for f in fits)
    transform, rms, _ = min((f for f in fits if f[2] >= 0.8 * most), key=lambda f: f[1])
    return transform, rms


def _icp_widening(source, target, init, config):
    # the coarse fit can be a few tenths of a millimetre off; a wide first
    # pass, with a larger budget since the wide gate lets the source slide
    # slowly, whose end state is kept even when it runs out of iterations
    wide = RegistrationConfig(
        max_dist=config.coarse_window, tolerance=max(config.tolerance, 1e-6),
        max_iterations=10 * config.max_iterations, min_overlap_points=config.min_overlap_points,
        resample_step=config.resample_step, coarse_window=config.coarse_window, max_tilt=config.max_tilt,
        max_radial_offset=config.max_radial_offset,
    )
    base, tgt = _prepare(source, target, init)
    current, _ = _icp(base, tgt, Rigid2D(init.rotation, init.translation, False), wide)
    return icp_2d(source, target, Rigid2D(current.rotation, current.translation, init.reflection), config)


def register_partials(partials: Sequence[NormalSectionProfile],
                      config: RegistrationConfig = RegistrationConfig()) -> RegistrationResult:
    """Chain partials onto a growing composite, in the given order."""
    if len(partials) < 1:
        raise ValueError("need at least one partial")
    first = partials[0]
    transforms = [Rigid2D()]
    if len(partials) == 1:
        return RegistrationResult(transforms, NormalSectionProfile(first.points, None, first.axis_used), 0.0, [])
    composite = np.asarray(first.points, dtype=float)
    residuals = []
    for k in range(1, len(partials)):
        target = NormalSectionProfile(composite)
        try:
            transform, rms = align_pair(partials[k], target, config)
        except (InsufficientOverlap, NoConvergence) as exc:
            raise type(exc)(f"partial {k} onto composite of partials 0..{k - 1}: {exc}") from exc
        transforms.append(transform)
        residuals.append(rms)
        composite = bin_fuse([composite, transform.apply(partials[k].points)], config.resample_step)
    composite[:, 1] = np.maximum(composite[:, 1], 0.0)
    total = float(np.sqrt(np.mean(np.square(residuals))))
    return RegistrationResult(transforms, NormalSectionProfile(composite, None, first.axis_used), total, residuals)
