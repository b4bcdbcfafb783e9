"""Accuracy of reconstructed normal section profiles against ground truth.

Distances are measured from points to polylines segment by segment. The
overall accuracy is the RMS of the distances from reconstructed points to
the ground-truth curve; the point-wise error curve runs the other way, from
every ground-truth point to the reconstruction, indexed by arc length.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import kernels
from .geometry import NormalSectionProfile

__all__ = [
    "ErrorCurve",
    "AccuracySummary",
    "point_to_curve_distance",
    "points_to_curve_distance",
    "pointwise_error",
    "accuracy",
    "segment_summary",
    "summarize",
    "trim_to_coverage",
    "align_to",
]


@dataclass(frozen=True)
class ErrorCurve:
    x: np.ndarray
    eps: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        eps = np.asarray(self.eps, dtype=float)
        if x.shape != eps.shape or x.ndim != 1:
            raise ValueError("x and eps must be 1D arrays of equal length")
        if np.any(np.diff(x) < 0):
            raise ValueError("x must be non-decreasing")
        if np.any(eps < 0):
            raise ValueError("errors must be non-negative")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "eps", eps)

    def __len__(self):
        return len(self.x)

    @property
    def samples(self) -> np.ndarray:
        return np.column_stack([self.x, self.eps])


@dataclass
class AccuracySummary:
    acc: float
    mean: float
    std: float
    min: float
    max: float
    segment_means: list = field(default_factory=list)
    n: int = 1

    def __post_init__(self):
        if not self.min <= self.mean <= self.max:
            raise ValueError("summary must satisfy min <= mean <= max")

    def as_dict(self) -> dict:
        return {
            "acc": self.acc, "mean": self.mean, "std": self.std, "min": self.min, "max": self.max,
            "segment_means": list(self.segment_means), "n": self.n,
        }


def _curve(L) -> np.ndarray:
    pts = L.points if isinstance(L, NormalSectionProfile) else np.asarray(L, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ValueError("curve must be an (n, 2) array")
    return pts


def points_to_curve_distance(points, L) -> np.ndarray:
    """Distance from each 2D point to the polyline ``L``."""
    poly = _curve(L)
    if len(poly) < 2:
        raise ValueError("curve needs at least 2 points")
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    return np.asarray(kernels.polyline_distance(pts, poly)[0])


def point_to_curve_distance(p, L) -> float:
    return float(points_to_curve_distance(np.asarray(p, dtype=float)[None, :], L)[0])


def pointwise_error(ground_truth, reconstructed) -> ErrorCurve:
    """For every ground-truth point, its distance to the reconstructed curve,
    against arc length along the ground truth."""
    gt = _curve(ground_truth)
    if len(gt) == 0:
        raise ValueError("empty ground truth")
    x = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(gt, axis=0), axis=1))])
    return ErrorCurve(x, points_to_curve_distance(gt, reconstructed))


def accuracy(ground_truth, reconstructed, form: str = "rms") -> float:
    """RMS distance from reconstructed points to the ground-truth curve.

    ``form="printed"`` returns the square root of the mean distance instead.
    """
    d = points_to_curve_distance(_curve(reconstructed), ground_truth)
    if form == "rms":
        return float(np.sqrt(np.mean(d * d)))
    if form == "printed":
        return float(np.sqrt(np.mean(d)))
    raise ValueError("form must be 'rms' or 'printed'")


def segment_summary(curve: ErrorCurve, n_segments: int = 4) -> np.ndarray:
    """Mean error over ``n_segments`` equal arc-length segments.

    Empty segments (possible only for very sparse curves) give NaN.
    """
    if n_segments < 1:
        raise ValueError("n_segments must be at least 1")
    if len(curve) == 0:
        raise ValueError("empty error curve")
    x0, x1 = curve.x[0], curve.x[-1]
    if x1 == x0:
        return np.full(n_segments, float(curve.eps.mean()))
    k = np.minimum(((curve.x - x0) / (x1 - x0) * n_segments).astype(np.int64), n_segments - 1)
    sums = np.bincount(k, weights=curve.eps, minlength=n_segments)
    counts = np.bincount(k, minlength=n_segments)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(counts > 0, sums / np.maximum(counts, 1), np.nan)


def summarize(accs: Sequence[float], segment_means: Optional[Sequence] = None) -> AccuracySummary:
    """Statistics of accuracies over repetitions. ``acc`` is the mean."""
    a = np.asarray(accs, dtype=float)
    if len(a) == 0:
        raise ValueError("no accuracies")
    seg = [] if segment_means is None else np.nanmean(np.asarray(segment_means, dtype=float), axis=0).tolist()
    mean = float(a.mean())
    return AccuracySummary(mean, min(max(mean, float(a.min())), float(a.max())), float(a.std()), float(a.min()), float(a.max()), seg, len(a))


def trim_to_coverage(ground_truth, reconstructed, margin: float = 0.0, tol: float = 1e-4) -> np.ndarray:
    """Ground-truth points whose foot on the reconstruction is not clamped to
    one of its ends (or that lie within ``tol`` of it), i.e. the part of the
    ground truth the reconstruction covers.
    """
    gt = _curve(ground_truth)
    rec = _curve(reconstructed)
    dist, seg, t = kernels.polyline_distance(gt, rec)
    clamped = ((seg == 0) & (t <= 0.0)) | ((seg == len(rec) - 2) & (t >= 1.0))
    inside = ~clamped | (dist <= tol)
    idx = np.flatnonzero(inside)
    if len(idx) == 0:
        return gt[:0]
    out = gt[idx[0]: idx[-1] + 1]
    if margin > 0 and len(out) > 2:
        cum = np.concatenate([[0.0], np.cumsum(np.linalg.norm(np.diff(out, axis=0), axis=1))])
        out = out[(cum >= margin) & (cum <= cum[-1] - margin)]
    return out


def align_to(reconstructed: NormalSectionProfile, ground_truth: NormalSectionProfile, config=None):
    """Register the reconstruction onto the ground truth; returns the moved profile and transform."""
    from .registration import RegistrationConfig, align_pair

    cfg = config or RegistrationConfig()
    transform, _ = align_pair(reconstructed, ground_truth, cfg)
    return NormalSectionProfile(transform.apply(reconstructed.points), axis_used=ground_truth.axis_used), transform
