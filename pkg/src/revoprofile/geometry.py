"""Geometric value types and the projection into the axis frame.

A point ``q`` in the sensor frame maps to the axis frame as::

    axial  = (q - M) . P
    radial = |(q - M) x P|

where ``P`` is the unit axis direction and ``M`` the axis point with
``P . M = 0``. Every point of a surface of revolution lands on its generatrix
under the true axis, whatever its angle around the axis.

All lengths are millimetres.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Optional

import numpy as np

__all__ = [
    "PlanarPoint",
    "Axis",
    "LaserPlane",
    "GeneralSectionProfile",
    "NormalSectionProfile",
    "canonical_direction",
    "project_to_axis_frame",
    "project_points",
    "residual",
    "profile_to_normal",
    "axis_angle",
]


class PlanarPoint(NamedTuple):
    """A point of the axis frame. Fields are named; never rely on their order."""

    axial: float
    radial: float


def _readonly(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def canonical_direction(v) -> np.ndarray:
    """Unit vector with the sign chosen so its largest-magnitude component is positive."""
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v)
    if not np.isfinite(n) or n == 0.0:
        raise ValueError("direction must be a finite non-zero vector")
    v = v / n
    if v[np.argmax(np.abs(v))] < 0:
        v = -v
    return v


@dataclass(frozen=True, eq=False)
class Axis:
    """Revolution axis in canonical form.

    On construction the direction is normalised and sign-canonicalised and the
    point is moved along the axis so that ``direction . point == 0``. Any two
    descriptions of the same line therefore produce the same ``Axis``.
    """

    direction: np.ndarray
    point: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        d = canonical_direction(self.direction)
        # renormalise once more so |d| == 1 to the last ulp as far as possible
        d = d / np.sqrt(d @ d)
        m = np.asarray(self.point, dtype=float).reshape(3)
        if not np.all(np.isfinite(m)):
            raise ValueError("axis point must be finite")
        m = m - (m @ d) * d
        object.__setattr__(self, "direction", _readonly(d))
        object.__setattr__(self, "point", _readonly(m))

    def __repr__(self):
        d = ", ".join(f"{c:.9g}" for c in self.direction)
        m = ", ".join(f"{c:.9g}" for c in self.point)
        return f"Axis(direction=({d}), point=({m}))"

    def as_dict(self) -> dict:
        return {"direction": self.direction.tolist(), "point": self.point.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "Axis":
        return cls(d["direction"], d["point"])

    def transformed(self, rotation: np.ndarray, translation) -> "Axis":
        """The axis moved by the rigid motion ``x -> R x + t``."""
        r = np.asarray(rotation, dtype=float)
        return Axis(r @ self.direction, r @ self.point + np.asarray(translation, dtype=float))


def axis_angle(a: Axis, b: Axis) -> float:
    """Unsigned angle between two axis directions, insensitive to orientation."""
    c = abs(float(a.direction @ b.direction))
    s = float(np.linalg.norm(np.cross(a.direction, b.direction)))
    return float(np.arctan2(s, c))


@dataclass(frozen=True, eq=False)
class LaserPlane:
    """Plane ``a0*x + a1*y + a2*z + a3 = 0``, stored with a unit normal."""

    a0: float
    a1: float
    a2: float
    a3: float

    def __post_init__(self):
        n = np.array([self.a0, self.a1, self.a2], dtype=float)
        k = np.linalg.norm(n)
        if not np.isfinite(k) or k == 0.0 or not np.isfinite(self.a3):
            raise ValueError("plane coefficients must be finite with a non-zero normal")
        for name, v in zip(("a0", "a1", "a2", "a3"), (*(n / k), self.a3 / k)):
            object.__setattr__(self, name, float(v))

    @property
    def normal(self) -> np.ndarray:
        return np.array([self.a0, self.a1, self.a2])

    @classmethod
    def from_point_normal(cls, point, normal) -> "LaserPlane":
        n = np.asarray(normal, dtype=float)
        n = n / np.linalg.norm(n)
        return cls(n[0], n[1], n[2], -float(n @ np.asarray(point, dtype=float)))

    def signed_distance(self, points) -> np.ndarray:
        return np.asarray(points, dtype=float) @ self.normal + self.a3


def _arc_lengths(points: np.ndarray) -> np.ndarray:
    seg = np.linalg.norm(np.diff(points, axis=0), axis=1)
    return np.concatenate([[0.0], np.cumsum(seg)])


@dataclass(frozen=True, eq=False)
class GeneralSectionProfile:
    """Ordered 3D polyline where one laser plane meets the surface."""

    id: int
    points: np.ndarray
    arc_lengths: np.ndarray = field(init=False)

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 3:
            raise ValueError("profile points must have shape (n, 3)")
        if len(pts) < 3:
            raise ValueError(f"profile {self.id} has {len(pts)} points, need at least 3")
        if not np.all(np.isfinite(pts)):
            raise ValueError(f"profile {self.id} has non-finite coordinates")
        arc = _arc_lengths(pts)
        if np.any(np.diff(arc) <= 0.0):
            raise ValueError(f"profile {self.id} has repeated consecutive points")
        pts.setflags(write=False)
        arc.setflags(write=False)
        object.__setattr__(self, "id", int(self.id))
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "arc_lengths", arc)

    def __len__(self):
        return len(self.points)

    @property
    def length(self) -> float:
        return float(self.arc_lengths[-1])


@dataclass(frozen=True, eq=False)
class NormalSectionProfile:
    """Ordered 2D polyline in the axis frame; column 0 is axial, column 1 radial."""

    points: np.ndarray
    source_id: Optional[int] = None
    axis_used: Optional[Axis] = None

    def __post_init__(self):
        pts = np.array(self.points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2:
            raise ValueError("normal profile points must have shape (n, 2)")
        if len(pts) < 3:
            raise ValueError(f"normal profile has {len(pts)} points, need at least 3")
        if not np.all(np.isfinite(pts)):
            raise ValueError("normal profile has non-finite coordinates")
        if np.any(pts[:, 1] < 0.0):
            raise ValueError("radial coordinates must be non-negative")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def __len__(self):
        return len(self.points)

    @property
    def axial(self) -> np.ndarray:
        return self.points[:, 0]

    @property
    def radial(self) -> np.ndarray:
        return self.points[:, 1]

    @property
    def arc_lengths(self) -> np.ndarray:
        return _arc_lengths(self.points)

    def planar_points(self) -> list[PlanarPoint]:
        return [PlanarPoint(float(a), float(r)) for a, r in self.points]


def project_points(points, axis: Axis) -> np.ndarray:
    """Vectorised projection of ``(n, 3)`` points into ``(n, 2)`` axis-frame rows."""
    q = np.asarray(points, dtype=float) - axis.point
    axial = q @ axis.direction
    radial = np.linalg.norm(np.cross(q, axis.direction), axis=-1)
    return np.stack([axial, radial], axis=-1)


def project_to_axis_frame(q, axis: Axis) -> PlanarPoint:
    a, r = project_points(np.asarray(q, dtype=float).reshape(1, 3), axis)[0]
    return PlanarPoint(float(a), float(r))


def residual(s, d, axis: Axis) -> tuple[float, float]:
    """(axial, radial) disagreement of a candidate correspondence under ``axis``.

    Both components vanish for a true correspondence.
    """
    ps, pd = project_points(np.stack([np.asarray(s, float), np.asarray(d, float)]), axis)
    return float(ps[0] - pd[0]), float(ps[1] - pd[1])


def profile_to_normal(profile: GeneralSectionProfile, axis: Axis) -> NormalSectionProfile:
    return NormalSectionProfile(project_points(profile.points, axis), source_id=profile.id, axis_used=axis)
