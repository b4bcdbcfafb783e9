"""Analytic surfaces of revolution and simulated multi-line laser scans.

Surfaces are never meshed. A plane cut is solved in closed form for every
sample of a shared axial grid, so noise-free cuts of different planes contain
points with exactly the same generatrix parameter; those are the true
correspondences.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq
from scipy.spatial.transform import Rotation

from .axis import CorrespondenceSet
from .errors import NoIntersection
from .geometry import Axis, GeneralSectionProfile, LaserPlane, NormalSectionProfile

__all__ = [
    "SurfaceOfRevolution",
    "SensorPose",
    "ScanConfig",
    "GroundTruth",
    "make_cylinder",
    "make_cone",
    "make_wheel_generatrix",
    "intersect_branches",
    "intersect_plane",
    "scan",
    "ground_truth_normal_profile",
    "viewpoint_pose",
    "random_pose",
    "wheel_viewpoints",
    "random_correspondences",
    "make_rng",
]

WHEEL_TREAD_RADIUS = 520.0  # 1040 mm wheel diameter
WHEEL_TAPE_LINE = 70.0  # axial position where the tread radius is measured


def make_rng(seed: int) -> np.random.Generator:
    """PCG64 generator; streams are identical across platforms for a given seed."""
    return np.random.Generator(np.random.PCG64(int(seed) & 0xFFFF_FFFF_FFFF_FFFF))


def _perp_frame(p: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    helper = np.eye(3)[int(np.argmin(np.abs(p)))]
    e1 = np.cross(p, helper)
    e1 /= np.linalg.norm(e1)
    return e1, np.cross(p, e1)


class SurfaceOfRevolution:
    """Generatrix ``radius(axial)`` swept around an axis.

    ``axial`` is measured along ``axis.direction`` from ``axis.point``. The
    generatrix is a clamped cubic spline through the samples: end slopes are
    taken from ``end_slopes`` or from one-sided differences.
    """

    def __init__(self, axis: Axis, axial, radius, end_slopes: Optional[tuple[float, float]] = None,
                 grid_anchor: float = 0.0):
        y = np.array(axial, dtype=float)
        r = np.array(radius, dtype=float)
        if y.ndim != 1 or y.shape != r.shape or len(y) < 2:
            raise ValueError("generatrix needs matching 1D axial and radius samples")
        if np.any(np.diff(y) <= 0):
            raise ValueError("generatrix axial samples must be strictly increasing")
        if np.any(r <= 0):
            raise ValueError("generatrix radius must be positive")
        if end_slopes is None:
            end_slopes = ((r[1] - r[0]) / (y[1] - y[0]), (r[-1] - r[-2]) / (y[-1] - y[-2]))
        self.axis = axis
        self.axial = y
        self.radii = r
        self.end_slopes = (float(end_slopes[0]), float(end_slopes[1]))
        # scan samples sit at grid_anchor + k * step; the anchor moves with the surface
        self.grid_anchor = float(grid_anchor)
        self.spline = CubicSpline(y, r, bc_type=((1, self.end_slopes[0]), (1, self.end_slopes[1])))
        self._d1 = self.spline.derivative(1)
        self._d2 = self.spline.derivative(2)
        self.e1, self.e2 = _perp_frame(axis.direction)
        fine = np.linspace(y[0], y[-1], 20 * len(y) + 1)
        fr = self.spline(fine)
        if np.any(fr <= 0):
            raise ValueError("interpolated radius must stay positive")
        self.max_radius = float(fr.max())
        self.max_slope = float(np.abs(self._d1(fine)).max())

    @property
    def domain(self) -> tuple[float, float]:
        return float(self.axial[0]), float(self.axial[-1])

    def radius(self, y):
        return self.spline(y)

    def slope(self, y):
        return self._d1(y)

    def curvature(self, y):
        """Signed curvature of the generatrix curve ``(axial, radius(axial))``."""
        d1 = self._d1(y)
        return self._d2(y) / (1.0 + d1 * d1) ** 1.5

    def point(self, y, theta) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        theta = np.asarray(theta, dtype=float)
        r = self.radius(y)
        radial_dir = np.cos(theta)[..., None] * self.e1 + np.sin(theta)[..., None] * self.e2
        return self.axis.point + y[..., None] * self.axis.direction + r[..., None] * radial_dir

    def normal(self, y, theta) -> np.ndarray:
        """Outward unit surface normal."""
        theta = np.asarray(theta, dtype=float)
        radial_dir = np.cos(theta)[..., None] * self.e1 + np.sin(theta)[..., None] * self.e2
        n = radial_dir - np.asarray(self.slope(y))[..., None] * self.axis.direction
        return n / np.linalg.norm(n, axis=-1, keepdims=True)

    def transformed(self, rotation, translation) -> "SurfaceOfRevolution":
        """The same surface moved by ``x -> R x + t``.

        The generatrix is re-expressed in the canonical frame of the moved axis
        (which may flip the axial direction and shift its origin).
        """
        r = np.asarray(rotation, dtype=float)
        t = np.asarray(translation, dtype=float)
        raw_dir = r @ self.axis.direction
        new_axis = Axis(raw_dir, r @ self.axis.point + t)
        sign = 1.0 if new_axis.direction @ raw_dir > 0 else -1.0
        shift = float((r @ self.axis.point + t) @ new_axis.direction)
        y = shift + sign * self.axial
        slopes = (sign * self.end_slopes[0], sign * self.end_slopes[1])
        anchor = shift + sign * self.grid_anchor
        if sign < 0:
            return SurfaceOfRevolution(new_axis, y[::-1], self.radii[::-1], (slopes[1], slopes[0]), anchor)
        return SurfaceOfRevolution(new_axis, y, self.radii, slopes, anchor)


def make_cylinder(radius: float, axial_range=(-50.0, 50.0), axis: Optional[Axis] = None) -> SurfaceOfRevolution:
    axis = axis or Axis([0.0, 0.0, 1.0])
    y = np.linspace(axial_range[0], axial_range[1], 11)
    return SurfaceOfRevolution(axis, y, np.full_like(y, radius), (0.0, 0.0))


def make_cone(r0: float, slope: float, axial_range=(0.0, 100.0), axis: Optional[Axis] = None) -> SurfaceOfRevolution:
    """Cone with ``radius = r0 + slope * axial``; the spline reproduces it exactly."""
    axis = axis or Axis([0.0, 0.0, 1.0])
    y = np.linspace(axial_range[0], axial_range[1], 11)
    return SurfaceOfRevolution(axis, y, r0 + slope * y, (slope, slope))


def _softplus(x):
    return np.logaddexp(0.0, x)


def wheel_radius_function(y):
    """Smooth wheel-like generatrix; tread radius 520 mm at the tape line.

    Flange bump of about 28 mm, tread with 1:40 conicity and two gentle
    undulations, and a rounded chamfer towards the rim face.
    """
    y = np.asarray(y, dtype=float)
    flange = 27.0 * np.exp(-0.5 * ((y - 20.0) / 6.5) ** 2)
    conicity = -0.025 * (y - WHEEL_TAPE_LINE)
    hollow = -1.2 * np.exp(-0.5 * ((y - 52.0) / 4.0) ** 2) + 1.0 * np.exp(-0.5 * ((y - 92.0) / 3.5) ** 2)
    k = 1.2
    chamfer = -k * (_softplus((y - 118.0) / k) - _softplus((y - 124.0) / k))
    return WHEEL_TREAD_RADIUS + flange + conicity + hollow + chamfer


def make_wheel_generatrix(axis: Optional[Axis] = None, step: float = 0.5) -> SurfaceOfRevolution:
    """Railway-wheel-like surface, 1040 mm tread diameter, axial extent 0..140 mm.

    The axis defaults to the canonical Z axis through the origin.
    """
    axis = axis or Axis([0.0, 0.0, 1.0])
    y = np.arange(0.0, 140.0 + step / 2, step)
    r = wheel_radius_function(y)
    h = 1e-4
    slopes = tuple((wheel_radius_function(v + h) - wheel_radius_function(v - h)) / (2 * h) for v in (y[0], y[-1]))
    return SurfaceOfRevolution(axis, y, r, slopes)


@dataclass
class _Piece:
    points: np.ndarray
    axial: np.ndarray
    theta: np.ndarray


def _runs(mask: np.ndarray) -> list[tuple[int, int]]:
    """Half-open index ranges of consecutive True entries."""
    if not mask.any():
        return []
    m = np.concatenate([[False], mask, [False]]).astype(np.int8)
    d = np.diff(m)
    return list(zip(np.flatnonzero(d == 1), np.flatnonzero(d == -1)))


def _axial_grid(surface: SurfaceOfRevolution, step: float) -> np.ndarray:
    lo, hi = surface.domain
    a = surface.grid_anchor
    k0 = math.ceil((lo - a) / step - 1e-9)
    k1 = math.floor((hi - a) / step + 1e-9)
    return np.clip(a + np.arange(k0, k1 + 1) * step, lo, hi)


def intersect_branches(surface: SurfaceOfRevolution, plane: LaserPlane, step: float) -> list[_Piece]:
    """Connected pieces of the plane/surface intersection, each ordered.

    If the curve is a graph over the axial coordinate on each side, it is
    sampled on the axial grid ``grid_anchor + k * step`` (shared by every plane); otherwise
    (planes nearly orthogonal to the axis) it is sampled in angle.
    """
    if step <= 0:
        raise ValueError("step must be positive")
    n = plane.normal
    p = surface.axis.direction
    n_axial = float(n @ p)
    n_perp = float(np.linalg.norm(n - n_axial * p))
    if abs(n_axial) > 1.05 * surface.max_slope * n_perp and abs(n_axial) > 1e-12:
        pieces = _branches_by_angle(surface, plane, step)
    else:
        pieces = _branches_by_axial(surface, plane, step)
    return [pc for pc in pieces if len(pc.points)]


def _branches_by_axial(surface, plane, step):
    n = plane.normal
    y = _axial_grid(surface, step)
    r = surface.radius(y)
    a = r * (n @ surface.e1)
    b = r * (n @ surface.e2)
    c = -plane.a3 - n @ surface.axis.point - y * (n @ surface.axis.direction)
    rho = np.hypot(a, b)
    valid = np.abs(c) <= rho * (1.0 + 1e-15)
    base = np.arctan2(b, a)
    with np.errstate(invalid="ignore", divide="ignore"):
        half = np.arccos(np.clip(np.where(rho > 0, c / np.where(rho > 0, rho, 1.0), 2.0), -1.0, 1.0))
    pieces = []
    for sign in (1.0, -1.0):
        theta = base + sign * half
        for i0, i1 in _runs(valid):
            yy, tt = y[i0:i1], theta[i0:i1]
            pieces.append(_Piece(surface.point(yy, tt), yy, tt))
    return pieces


def _branches_by_angle(surface, plane, step):
    n = plane.normal
    p = surface.axis.direction
    n_axial = float(n @ p)
    lo, hi = surface.domain
    count = max(8, int(math.ceil(2 * math.pi * surface.max_radius / step)))
    thetas = np.arange(count) * (2 * math.pi / count)
    const = float(n @ surface.axis.point + plane.a3)
    ys = np.full(count, np.nan)
    for k, th in enumerate(thetas):
        radial = math.cos(th) * (n @ surface.e1) + math.sin(th) * (n @ surface.e2)

        def g(v):
            return n_axial * v + float(surface.radius(v)) * radial + const

        glo, ghi = g(lo), g(hi)
        if glo == 0.0:
            ys[k] = lo
        elif ghi == 0.0:
            ys[k] = hi
        elif glo * ghi < 0:
            ys[k] = brentq(g, lo, hi, xtol=1e-14, rtol=4 * np.finfo(float).eps, maxiter=200)
    valid = np.isfinite(ys)
    runs = _runs(valid)
    # the angle parameter is periodic: merge a run touching both ends
    if len(runs) > 1 and runs[0][0] == 0 and runs[-1][1] == count:
        first = runs.pop(0)
        last = runs.pop()
        order = np.concatenate([np.arange(last[0], last[1]), np.arange(first[0], first[1])])
        runs_idx = [order] + [np.arange(i0, i1) for i0, i1 in runs]
    else:
        runs_idx = [np.arange(i0, i1) for i0, i1 in runs]
    pieces = []
    for idx in runs_idx:
        yy, tt = ys[idx], thetas[idx]
        pieces.append(_Piece(surface.point(yy, tt), yy, tt))
    return pieces


def _stitch(pieces: list[_Piece]) -> _Piece:
    """Join pieces into one polyline by nearest-endpoint continuation."""
    pieces = sorted(pieces, key=lambda pc: -len(pc.points))
    cur = pieces.pop(0)
    pts, ys, ts = [cur.points], [cur.axial], [cur.theta]
    tail = cur.points[-1]
    while pieces:
        best = None
        for i, pc in enumerate(pieces):
            for rev in (False, True):
                end = pc.points[-1] if rev else pc.points[0]
                dist = float(np.linalg.norm(end - tail))
                if best is None or dist < best[0]:
                    best = (dist, i, rev)
        _, i, rev = best
        pc = pieces.pop(i)
        sl = slice(None, None, -1) if rev else slice(None)
        pts.append(pc.points[sl])
        ys.append(pc.axial[sl])
        ts.append(pc.theta[sl])
        tail = pts[-1][-1]
    points = np.concatenate(pts)
    axial = np.concatenate(ys)
    theta = np.concatenate(ts)
    # a tangency yields the same point on both branches
    keep = np.concatenate([[True], np.linalg.norm(np.diff(points, axis=0), axis=1) > 1e-12])
    return _Piece(points[keep], axial[keep], theta[keep])


def intersect_plane(surface: SurfaceOfRevolution, plane: LaserPlane, step: float, profile_id: int = 0) -> GeneralSectionProfile:
    """Whole intersection curve of a plane with the surface as one ordered profile."""
    pieces = intersect_branches(surface, plane, step)
    if not pieces or sum(len(pc.points) for pc in pieces) < 3:
        raise NoIntersection(f"plane {profile_id} does not intersect the surface")
    joined = _stitch(pieces)
    return GeneralSectionProfile(profile_id, joined.points)


@dataclass(frozen=True, eq=False)
class SensorPose:
    """Rigid transform from the canonical sensor frame to the world.

    ``rotation`` is a unit quaternion in scalar-first order ``(w, x, y, z)``.
    """

    rotation: tuple
    translation: tuple

    def __post_init__(self):
        q = np.asarray(self.rotation, dtype=float).reshape(4)
        nq = np.linalg.norm(q)
        if not np.isfinite(nq) or nq == 0:
            raise ValueError("quaternion must be non-zero")
        q = q / nq
        if q[0] < 0:
            q = -q
        object.__setattr__(self, "rotation", tuple(float(v) for v in q))
        t = np.asarray(self.translation, dtype=float).reshape(3)
        object.__setattr__(self, "translation", tuple(float(v) for v in t))

    @property
    def matrix(self) -> np.ndarray:
        w, x, y, z = self.rotation
        return Rotation.from_quat([x, y, z, w]).as_matrix()

    @property
    def origin(self) -> np.ndarray:
        return np.array(self.translation)

    @classmethod
    def from_matrix(cls, rotation, translation) -> "SensorPose":
        x, y, z, w = Rotation.from_matrix(np.asarray(rotation, dtype=float)).as_quat()
        return cls((w, x, y, z), tuple(translation))

    def compose(self, rotation, translation) -> "SensorPose":
        """``(R, t)`` applied after this pose."""
        r = np.asarray(rotation, dtype=float)
        return SensorPose.from_matrix(r @ self.matrix, r @ self.origin + np.asarray(translation, dtype=float))


@dataclass(frozen=True)
class ScanConfig:
    n_planes: int = 3
    plane_spacing: float = 20.0
    sample_step: float = 0.2
    noise_sigma: float = 0.0
    seed: int = 0
    field_of_view: float = 80.0
    min_points: int = 20

    def __post_init__(self):
        if self.n_planes < 2:
            raise ValueError("n_planes must be at least 2")
        if self.sample_step <= 0:
            raise ValueError("sample_step must be positive")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be non-negative")
        if self.plane_spacing <= 0 or self.field_of_view <= 0:
            raise ValueError("plane_spacing and field_of_view must be positive")


@dataclass(eq=False)
class GroundTruth:
    """Exact answers for one scan, expressed in the frame of the emitted profiles.

    ``generatrix_axial[k]`` holds the generatrix parameter of every point of
    profile ``k`` in the output-frame axial coordinate; ``grid_index[k]`` the
    shared axial-grid index, equal for true correspondences.
    """

    axis: Axis
    surface: SurfaceOfRevolution
    normal_profile: NormalSectionProfile
    generatrix_axial: list = field(default_factory=list)
    grid_index: list = field(default_factory=list)
    planes: list = field(default_factory=list)

    def true_correspondences(self, profiles: Sequence[GeneralSectionProfile]) -> CorrespondenceSet:
        """All pairs of points sharing a grid index, over every profile pair."""
        sets = []
        for a in range(len(profiles)):
            for b in range(a + 1, len(profiles)):
                ia = {int(g): i for i, g in enumerate(self.grid_index[a])}
                rows = [(ia[int(g)], j) for j, g in enumerate(self.grid_index[b]) if int(g) in ia]
                if not rows:
                    continue
                i, j = np.array(rows).T
                sets.append(CorrespondenceSet(
                    profiles[a].points[i], profiles[b].points[j],
                    np.full(len(i), profiles[a].id), np.full(len(i), profiles[b].id), i, j,
                ))
        return CorrespondenceSet.concatenate(sets)


def ground_truth_normal_profile(surface: SurfaceOfRevolution, axial_range=None, step: float = 0.2) -> NormalSectionProfile:
    lo, hi = surface.domain
    if axial_range is not None:
        if axial_range[0] < lo - 1e-9 or axial_range[1] > hi + 1e-9:
            raise ValueError("axial range outside the generatrix domain")
        lo, hi = max(lo, axial_range[0]), min(hi, axial_range[1])
    n = int(math.floor((hi - lo) / step + 1e-9))
    y = lo + step * np.arange(n + 1)
    if hi - y[-1] > 1e-9 * max(1.0, abs(hi)):
        y = np.append(y, hi)
    return NormalSectionProfile(np.column_stack([y, surface.radius(y)]), axis_used=surface.axis)


def _sensor_planes(pose: SensorPose, cfg: ScanConfig, planes=None) -> list[LaserPlane]:
    rot = pose.matrix
    if planes is not None:
        # calibrated planes a0 x + a1 y + a2 z + a3 = 0 given in the sensor frame
        out = []
        for pl in planes:
            pl = pl if isinstance(pl, LaserPlane) else LaserPlane(*pl)
            out.append(LaserPlane.from_point_normal(rot @ (-pl.a3 * pl.normal) + pose.origin, rot @ pl.normal))
        if len(out) < 2:
            raise ValueError("need at least two light planes")
        return out
    normal = rot[:, 0]
    planes = []
    for k in range(cfg.n_planes):
        offset = (k - (cfg.n_planes - 1) / 2.0) * cfg.plane_spacing
        planes.append(LaserPlane.from_point_normal(pose.origin + offset * normal, normal))
    return planes


def scan(surface: SurfaceOfRevolution, pose: SensorPose, cfg: ScanConfig, frame: str = "sensor", planes=None):
    """Simulate one exposure of the multi-line sensor.

    Planes ``x = offset_k`` of the sensor frame (or the given ``planes``,
    coefficient rows ``a0 a1 a2 a3`` in the sensor frame) are cut with the
    surface on the shared axial grid. Only points in front of the sensor, facing it and within
    ``|y| <= field_of_view / 2`` are kept; of these the longest contiguous run
    per plane forms the stripe. Isotropic Gaussian noise is added in the
    output frame (``"sensor"`` or ``"world"``).

    Returns ``(profiles, GroundTruth)``.
    """
    if frame not in ("sensor", "world"):
        raise ValueError("frame must be 'sensor' or 'world'")
    rot = pose.matrix
    origin = pose.origin
    rng = make_rng(cfg.seed)
    out_surface = surface if frame == "world" else surface.transformed(rot.T, -rot.T @ origin)
    shift = float(out_surface.axis.direction @ (rot.T @ (surface.axis.point - origin))) if frame == "sensor" else 0.0
    sign = 1.0
    if frame == "sensor":
        sign = 1.0 if out_surface.axis.direction @ (rot.T @ surface.axis.direction) > 0 else -1.0

    profiles, gen_axial, grid_index = [], [], []
    planes = _sensor_planes(pose, cfg, planes)
    for k, plane in enumerate(planes):
        pieces = intersect_branches(surface, plane, cfg.sample_step)
        best = None
        for pc in pieces:
            local = (pc.points - origin) @ rot
            facing = np.einsum("ij,ij->i", surface.normal(pc.axial, pc.theta), origin - pc.points) > 0
            keep = (local[:, 2] > 0) & (np.abs(local[:, 1]) <= cfg.field_of_view / 2) & facing
            for i0, i1 in _runs(keep):
                if best is None or i1 - i0 > len(best[1]):
                    best = (pc, np.arange(i0, i1))
        if best is None or len(best[1]) < max(3, cfg.min_points):
            raise NoIntersection(f"laser plane {k} does not see the surface")
        pc, idx = best
        along = (pc.points[idx] - origin) @ rot[:, 1]
        if along[-1] < along[0]:
            # traverse along the stripe direction of the sensor, whatever the axis sign
            idx = idx[::-1]
        pts = pc.points[idx]
        if frame == "sensor":
            pts = (pts - origin) @ rot
        noise = rng.standard_normal(pts.shape) * cfg.noise_sigma
        profiles.append(GeneralSectionProfile(k, pts + noise))
        gen_axial.append(shift + sign * pc.axial[idx])
        grid_index.append(np.rint((pc.axial[idx] - surface.grid_anchor) / cfg.sample_step).astype(np.int64))

    truth = GroundTruth(
        axis=out_surface.axis,
        surface=out_surface,
        normal_profile=ground_truth_normal_profile(out_surface, None, cfg.sample_step),
        generatrix_axial=gen_axial,
        grid_index=grid_index,
        planes=planes,
    )
    return profiles, truth


def _rot(axis_index: int, angle: float) -> np.ndarray:
    v = np.zeros(3)
    v[axis_index] = angle
    return Rotation.from_rotvec(v).as_matrix()


def viewpoint_pose(
    surface: SurfaceOfRevolution,
    axial_center: float,
    azimuth: float = 0.0,
    standoff: float = 400.0,
    off_angle: float = 0.0,
    tilt: float = 0.0,
    pitch: float = 0.0,
    offset: float = 0.0,
) -> SensorPose:
    """Pose looking radially inward at the generatrix point ``axial_center``.

    In the unperturbed pose the stripes run along the axis and the middle
    plane contains it. ``off_angle`` rotates about the viewing direction,
    ``tilt`` about the stripe direction, ``pitch`` about the plane normal
    (radians); ``offset`` shifts the sensor along the plane normal (mm).
    """
    p = surface.axis.direction
    radial = np.cos(azimuth) * surface.e1 + np.sin(azimuth) * surface.e2
    target = surface.axis.point + axial_center * p + float(surface.radius(axial_center)) * radial
    z_s = -radial
    y_s = p
    x_s = np.cross(y_s, z_s)
    base = np.column_stack([x_s, y_s, z_s])
    rot = base @ _rot(2, off_angle) @ _rot(1, tilt) @ _rot(0, pitch)
    origin = target - standoff * rot[:, 2] + offset * rot[:, 0]
    return SensorPose.from_matrix(rot, origin)


def random_pose(
    surface: SurfaceOfRevolution,
    rng: np.random.Generator,
    axial_center: Optional[float] = None,
    max_off_angle: float = math.radians(15.0),
    max_tilt: float = math.radians(10.0),
    max_pitch: float = math.radians(10.0),
    max_offset: float = 15.0,
) -> SensorPose:
    """A pose drawn uniformly from a box of perturbations around a radial view."""
    lo, hi = surface.domain
    if axial_center is None:
        axial_center = rng.uniform(lo + 0.2 * (hi - lo), hi - 0.2 * (hi - lo))
    return viewpoint_pose(
        surface,
        axial_center,
        azimuth=rng.uniform(0.0, 2.0 * math.pi),
        standoff=rng.uniform(350.0, 450.0),
        off_angle=rng.uniform(-max_off_angle, max_off_angle),
        tilt=rng.uniform(-max_tilt, max_tilt),
        pitch=rng.uniform(-max_pitch, max_pitch),
        offset=rng.uniform(-max_offset, max_offset),
    )


def wheel_viewpoints(surface: SurfaceOfRevolution, rng: Optional[np.random.Generator] = None) -> list[SensorPose]:
    """Three views: flange side, tread, rim face. Random perturbations if ``rng`` is given."""
    centers = (30.0, 70.0, 110.0)
    if rng is None:
        fixed = [
            dict(azimuth=0.3, off_angle=math.radians(6), tilt=math.radians(-4), pitch=math.radians(3), offset=4.0),
            dict(azimuth=1.4, off_angle=math.radians(-8), tilt=math.radians(5), pitch=math.radians(-5), offset=-6.0),
            dict(azimuth=2.6, off_angle=math.radians(10), tilt=math.radians(3), pitch=math.radians(6), offset=8.0),
        ]
        return [viewpoint_pose(surface, c, **kw) for c, kw in zip(centers, fixed)]
    return [random_pose(surface, rng, axial_center=c) for c in centers]


def random_correspondences(
    rng: np.random.Generator,
    n: int = 60,
    axis: Optional[Axis] = None,
    noise_sigma: float = 0.0,
    axial_range=(-50.0, 50.0),
    radial_range=(20.0, 120.0),
    n_profiles: int = 3,
):
    """Pairs of points sharing (axial, radial) at two random angles about ``axis``.

    Returns ``(CorrespondenceSet, true_axis)``; a random axis is drawn when none
    is given. Noise is added independently to both members.
    """
    if axis is None:
        axis = Axis(rng.standard_normal(3), rng.uniform(-100.0, 100.0, 3))
    e1, e2 = _perp_frame(axis.direction)
    y = rng.uniform(*axial_range, n)
    r = rng.uniform(*radial_range, n)
    t1 = rng.uniform(0, 2 * math.pi, n)
    t2 = rng.uniform(0, 2 * math.pi, n)

    def pts(t):
        return axis.point + y[:, None] * axis.direction + r[:, None] * (np.cos(t)[:, None] * e1 + np.sin(t)[:, None] * e2)

    s = pts(t1) + noise_sigma * rng.standard_normal((n, 3))
    d = pts(t2) + noise_sigma * rng.standard_normal((n, 3))
    src = rng.integers(0, n_profiles, n)
    dst = (src + rng.integers(1, n_profiles, n)) % n_profiles
    return CorrespondenceSet(s, d, src, dst, np.arange(n), np.arange(n)), axis
