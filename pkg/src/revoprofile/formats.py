"""File formats.

Every document is JSON with a ``format`` tag and ``units = "mm"``. Floats are
written with Python's shortest round-trip representation, so reading a file
back gives bit-identical arrays. Point arrays can also be exchanged as CSV
(``x,y,z`` for general profiles, ``axial,radial`` for normal profiles).

Writes are atomic: a temporary file in the target directory is renamed over
the destination.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .errors import InputError
from .geometry import Axis, GeneralSectionProfile, NormalSectionProfile

GENERAL = "revoprofile/general-profile"
NORMAL = "revoprofile/normal-profile"
AXES = "revoprofile/axes"
REGISTRATION = "revoprofile/registration"
MANIFEST = "revoprofile/manifest"
SCENE = "revoprofile/scene"
REPORT = "revoprofile/run-report"
SUMMARY = "revoprofile/summary"
VERSION = 1


def dumps(doc) -> str:
    return json.dumps(doc, indent=1, allow_nan=True) + "\n"


def sha256(data) -> str:
    if isinstance(data, str):
        data = data.encode()
    return hashlib.sha256(data).hexdigest()


def file_digest(path) -> str:
    return sha256(Path(path).read_bytes())


def write_atomic(path, text: str) -> str:
    """Write ``text`` to ``path`` via a rename; returns its sha256."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return sha256(text)


def load_json(path, expected: str | None = None) -> dict:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise InputError(f"{path}: cannot read ({exc.strerror})") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise InputError(f"{path}: top level must be an object")
    if expected is not None and doc.get("format") != expected:
        raise InputError(f"{path}: expected format {expected!r}, found {doc.get('format')!r}")
    return doc


def _points(doc, path, key, width):
    try:
        pts = np.array(doc[key], dtype=float)
    except KeyError:
        raise InputError(f"{path}: missing {key!r}") from None
    except (TypeError, ValueError) as exc:
        raise InputError(f"{path}: {key!r} is not a numeric array ({exc})") from None
    if pts.ndim != 2 or pts.shape[1] != width:
        raise InputError(f"{path}: {key!r} must be a list of {width}-element rows")
    return pts


# general section profiles

def general_profile_doc(profile: GeneralSectionProfile, frame: str = "sensor", viewpoint=None) -> dict:
    return {
        "format": GENERAL, "version": VERSION, "units": "mm", "id": profile.id, "frame": frame,
        "viewpoint": viewpoint, "points": profile.points.tolist(),
    }


def read_general_profile(path) -> GeneralSectionProfile:
    path = Path(path)
    if path.suffix.lower() == ".csv":
        pts = _read_csv(path, ("x", "y", "z"))
        pid = 0
    else:
        doc = load_json(path, GENERAL)
        pts = _points(doc, path, "points", 3)
        pid = doc.get("id", 0)
    try:
        return GeneralSectionProfile(pid, pts)
    except (TypeError, ValueError) as exc:
        raise InputError(f"{path}: {exc}") from None


# normal section profiles

def normal_profile_doc(profile: NormalSectionProfile) -> dict:
    return {
        "format": NORMAL, "version": VERSION, "units": "mm", "source_id": profile.source_id,
        "axis": None if profile.axis_used is None else profile.axis_used.as_dict(),
        "points": profile.points.tolist(),
    }


def read_normal_profile(path) -> NormalSectionProfile:
    path = Path(path)
    if path.suffix.lower() == ".csv":
        pts, source, axis = _read_csv(path, ("axial", "radial")), None, None
    else:
        doc = load_json(path, NORMAL)
        pts = _points(doc, path, "points", 2)
        source = doc.get("source_id")
        try:
            axis = None if doc.get("axis") is None else Axis.from_dict(doc["axis"])
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"{path}: bad axis ({exc})") from None
    try:
        return NormalSectionProfile(pts, source, axis)
    except (TypeError, ValueError) as exc:
        raise InputError(f"{path}: {exc}") from None


# CSV

def csv_text(points, columns) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in np.asarray(points, dtype=float):
        w.writerow([repr(float(v)) for v in row])
    return buf.getvalue()


def _read_csv(path, columns) -> np.ndarray:
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise InputError(f"{path}: cannot read ({exc.strerror})") from exc
    if not rows or [c.strip() for c in rows[0]] != list(columns):
        raise InputError(f"{path}:1: header must be {','.join(columns)}")
    out = []
    for line, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != len(columns):
            raise InputError(f"{path}:{line}: expected {len(columns)} values, found {len(row)}")
        try:
            out.append([float(v) for v in row])
        except ValueError as exc:
            raise InputError(f"{path}:{line}: {exc}") from None
    return np.array(out, dtype=float).reshape(-1, len(columns))


def read_error_curve(path):
    from .evaluation import ErrorCurve

    pts = _read_csv(path, ("x_mm", "eps_mm"))
    return ErrorCurve(pts[:, 0], pts[:, 1])


def error_curve_csv(curve) -> str:
    return csv_text(curve.samples, ("x_mm", "eps_mm"))
