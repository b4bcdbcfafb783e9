"""Command-line driver: ``synth | reconstruct | register | eval | pipeline``.

Global flags (``--config``, ``--seed``, ``--out``, ``--log-level``) may be
given before or after the command. Without ``--config`` the file named by
``REVOPROFILE_CONFIG`` is used when set. Pipeline failures exit with the code
of their exception class; usage and input errors exit with 2.
"""
from __future__ import annotations

import argparse
import contextlib
import dataclasses
import logging
import os
import sys
import time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import formats
from .errors import InputError, NotConverged, ReconstructionError
from .evaluation import accuracy, align_to, pointwise_error, segment_summary, summarize, trim_to_coverage
from .features import FeatureConfig, initial_correspondences
from .geometry import Axis, LaserPlane
from .reconstruction import ReconstructionConfig, refine
from .registration import RegistrationConfig, register_partials
from .synthetic import ScanConfig, SensorPose, SurfaceOfRevolution, ground_truth_normal_profile, scan

log = logging.getLogger("revoprofile")

CONFIG_ENV = "REVOPROFILE_CONFIG"
BUNDLED_SCENES = ("wheel_3view.scene",)

__all__ = [
    "EvalConfig", "RunConfig", "RunReport", "Scene", "read_scene", "scene_doc",
    "cmd_synth", "cmd_reconstruct", "cmd_register", "cmd_eval", "cmd_pipeline", "main",
]


# configuration

@dataclass(frozen=True)
class EvalConfig:
    n_segments: int = 4
    form: str = "rms"
    trim_margin: float = 0.0

    def __post_init__(self):
        if self.n_segments < 1:
            raise ValueError("n_segments must be at least 1")
        if self.form not in ("rms", "printed"):
            raise ValueError("form must be 'rms' or 'printed'")
        if self.trim_margin < 0:
            raise ValueError("trim_margin must be non-negative")


_SCAN_OVERRIDES = tuple(f.name for f in dataclasses.fields(ScanConfig) if f.name != "seed")
_SECTIONS = {
    "features": FeatureConfig,
    "reconstruction": ReconstructionConfig,
    "registration": RegistrationConfig,
    "evaluation": EvalConfig,
}


def _section(cls, values, name):
    if not isinstance(values, dict):
        raise InputError(f"config section {name!r} must be an object")
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(values) - known)
    if unknown:
        raise InputError(f"config section {name!r}: unknown keys {unknown}")
    try:
        return cls(**values)
    except (TypeError, ValueError) as exc:
        raise InputError(f"config section {name!r}: {exc}") from None


@dataclass(frozen=True)
class RunConfig:
    """Every tunable of the pipeline. ``scan`` overrides fields of the scene's
    scan settings; the seed drives all randomness."""

    seed: int = 0
    scan: dict = field(default_factory=dict)
    features: FeatureConfig = FeatureConfig()
    reconstruction: ReconstructionConfig = ReconstructionConfig()
    registration: RegistrationConfig = RegistrationConfig()
    evaluation: EvalConfig = EvalConfig()

    def __post_init__(self):
        if isinstance(self.seed, bool) or not isinstance(self.seed, (int, np.integer)) or not 0 <= int(self.seed) < 2 ** 64:
            raise InputError("seed must be an integer in [0, 2**64)")
        object.__setattr__(self, "seed", int(self.seed))
        unknown = sorted(set(self.scan) - set(_SCAN_OVERRIDES))
        if unknown:
            raise InputError(f"config section 'scan': unknown keys {unknown}")
        try:
            ScanConfig(**self.scan)
        except (TypeError, ValueError) as exc:
            raise InputError(f"config section 'scan': {exc}") from None
        object.__setattr__(self, "scan", dict(sorted(self.scan.items())))

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        if not isinstance(d, dict):
            raise InputError("config must be an object")
        unknown = sorted(set(d) - {"seed", "scan", *_SECTIONS})
        if unknown:
            raise InputError(f"config: unknown keys {unknown}")
        kw = {name: _section(sec, d[name], name) for name, sec in _SECTIONS.items() if name in d}
        if "scan" in d:
            if not isinstance(d["scan"], dict):
                raise InputError("config section 'scan' must be an object")
            kw["scan"] = dict(d["scan"])
        if "seed" in d:
            kw["seed"] = d["seed"]
        return cls(**kw)

    def as_dict(self) -> dict:
        out = {"seed": self.seed, "scan": dict(self.scan)}
        for name in _SECTIONS:
            sec = dataclasses.asdict(getattr(self, name))
            out[name] = {k: list(v) if isinstance(v, tuple) else v for k, v in sec.items()}
        return out

    def replace(self, **kw) -> "RunConfig":
        return dataclasses.replace(self, **kw)

    def scan_config(self, base: ScanConfig, seed: int) -> ScanConfig:
        return dataclasses.replace(base, **self.scan, seed=seed)


def load_config(path: Optional[str]) -> RunConfig:
    if path is None:
        path = os.environ.get(CONFIG_ENV) or None
    if path is None:
        return RunConfig()
    return RunConfig.from_dict(formats.load_json(path))


def derive_seed(seed: int, *keys: int) -> int:
    """Independent 64-bit seed for a (repetition, viewpoint, ...) stream."""
    return int(np.random.SeedSequence([seed, *keys]).generate_state(1, np.uint64)[0])


# run report

@dataclass
class RunReport:
    command: str
    config: dict
    inputs: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)
    viewpoints: list = field(default_factory=list)
    registration: Optional[dict] = None
    evaluation: Optional[dict] = None
    timings: Optional[dict] = None
    exit_code: int = 0
    error: Optional[str] = None

    def as_dict(self) -> dict:
        return {"format": formats.REPORT, "version": formats.VERSION, **dataclasses.asdict(self)}

    @classmethod
    def from_dict(cls, d: dict) -> "RunReport":
        d = {k: v for k, v in d.items() if k not in ("format", "version")}
        return cls(**d)

    def dumps(self) -> str:
        return formats.dumps(self.as_dict())


def viewpoint_summary(result, viewpoint=None) -> dict:
    last = result.history[-1]
    return {
        "viewpoint": viewpoint,
        "converged": result.converged,
        "iterations": result.iterations,
        "final_e": last.correspondence_rms,
        "n_correspondences": last.n_correspondences,
        "partial_flagged": result.partial_flagged,
        "axis": result.final_axis.as_dict(),
        "history": [rec.log_line() for rec in result.history],
    }


class _Clock:
    """Per-stage wall-clock totals; ``times`` stays None when disabled so
    reports are reproducible byte for byte."""

    def __init__(self, enabled: bool):
        self.times = {} if enabled else None

    @contextlib.contextmanager
    def stage(self, name):
        t0 = time.perf_counter()
        try:
            yield
        finally:
            if self.times is not None:
                self.times[name] = self.times.get(name, 0.0) + time.perf_counter() - t0


# scenes

@dataclass(eq=False)
class Scene:
    name: str
    surface: SurfaceOfRevolution
    scan: ScanConfig
    poses: list
    planes: list  # per viewpoint: None or list of LaserPlane in the sensor frame
    frame: str = "sensor"


def scene_doc(name, surface: SurfaceOfRevolution, scan_cfg: ScanConfig, poses, planes=None, frame="sensor") -> dict:
    planes = planes or [None] * len(poses)
    scan_fields = {k: getattr(scan_cfg, k) for k in _SCAN_OVERRIDES}
    return {
        "format": formats.SCENE, "version": formats.VERSION, "units": "mm", "name": name,
        "surface": {
            "axis": surface.axis.as_dict(),
            "axial": surface.axial.tolist(),
            "radius": surface.radii.tolist(),
            "end_slopes": list(surface.end_slopes),
            "grid_anchor": surface.grid_anchor,
        },
        "scan": scan_fields,
        "frame": frame,
        "viewpoints": [
            {"rotation": list(p.rotation), "translation": list(p.translation),
             "planes": None if pl is None else [[q.a0, q.a1, q.a2, q.a3] for q in pl]}
            for p, pl in zip(poses, planes)
        ],
    }


def _keys(obj, allowed, where, required=()):
    if not isinstance(obj, dict):
        raise InputError(f"{where} must be an object")
    unknown = sorted(set(obj) - set(allowed))
    if unknown:
        raise InputError(f"{where}: unknown keys {unknown}")
    missing = [k for k in required if k not in obj]
    if missing:
        raise InputError(f"{where}: missing keys {missing}")


def resolve_scene(arg) -> Path:
    path = Path(arg)
    if path.exists():
        return path
    name = path.name if path.name.endswith(".scene") else path.name + ".scene"
    if name in BUNDLED_SCENES:
        return Path(str(resources.files("revoprofile") / "data" / name))
    raise InputError(f"{arg}: no such scene file")


def read_scene(path) -> Scene:
    path = resolve_scene(path)
    doc = formats.load_json(path, formats.SCENE)
    _keys(doc, ("format", "version", "units", "name", "surface", "scan", "frame", "viewpoints"), str(path),
          ("surface", "viewpoints"))
    if doc.get("units", "mm") != "mm":
        raise InputError(f"{path}: units must be mm")
    try:
        s = doc["surface"]
        _keys(s, ("axis", "axial", "radius", "end_slopes", "grid_anchor"), f"{path}: surface", ("axial", "radius"))
        axis = Axis.from_dict(s["axis"]) if s.get("axis") is not None else Axis([0.0, 0.0, 1.0])
        slopes = None if s.get("end_slopes") is None else tuple(s["end_slopes"])
        surface = SurfaceOfRevolution(axis, s["axial"], s["radius"], slopes, float(s.get("grid_anchor", 0.0)))
        sc = doc.get("scan", {})
        _keys(sc, _SCAN_OVERRIDES, f"{path}: scan")
        scan_cfg = ScanConfig(**sc)
        frame = doc.get("frame", "sensor")
        if frame not in ("sensor", "world"):
            raise ValueError("frame must be 'sensor' or 'world'")
        poses, planes = [], []
        if not isinstance(doc["viewpoints"], list) or not doc["viewpoints"]:
            raise ValueError("viewpoints must be a non-empty list")
        for k, v in enumerate(doc["viewpoints"]):
            _keys(v, ("rotation", "translation", "planes"), f"{path}: viewpoint {k}", ("rotation", "translation"))
            poses.append(SensorPose(tuple(v["rotation"]), tuple(v["translation"])))
            pl = v.get("planes")
            planes.append(None if pl is None else [LaserPlane(*row) for row in pl])
    except InputError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"{path}: {exc}") from None
    return Scene(str(doc.get("name", path.stem)), surface, scan_cfg, poses, planes, frame)


# commands

def _scan_scene(scene: Scene, cfg: RunConfig, repetition: int):
    """All viewpoints of one repetition, in memory."""
    views = []
    for v, (pose, planes) in enumerate(zip(scene.poses, scene.planes)):
        scan_cfg = cfg.scan_config(scene.scan, derive_seed(cfg.seed, repetition, v))
        profiles, truth = scan(scene.surface, pose, scan_cfg, scene.frame, planes)
        views.append((profiles, truth))
    return views


def _synth_files(scene, views, cfg, repetition, csv=False) -> dict:
    """File name -> text for one repetition of a scene."""
    files = {}
    manifest_views = []
    for v, (profiles, truth) in enumerate(views):
        names = []
        for p in profiles:
            name = f"view{v}_plane{p.id}.profile.json"
            files[name] = formats.dumps(formats.general_profile_doc(p, scene.frame, v))
            names.append(name)
            if csv:
                files[name.replace(".json", ".csv")] = formats.csv_text(p.points, ("x", "y", "z"))
        manifest_views.append({"index": v, "profiles": names})
    gt = ground_truth_normal_profile(scene.surface, None, cfg.scan_config(scene.scan, 0).sample_step)
    files["ground_truth.normal.json"] = formats.dumps(formats.normal_profile_doc(gt))
    files["ground_truth_axes.json"] = formats.dumps({
        "format": formats.AXES, "version": formats.VERSION, "units": "mm", "frame": scene.frame,
        "axes": [truth.axis.as_dict() for _, truth in views],
    })
    manifest = {
        "format": formats.MANIFEST, "version": formats.VERSION, "scene": scene.name, "seed": cfg.seed,
        "repetition": repetition, "frame": scene.frame, "viewpoints": manifest_views,
        "ground_truth_profile": "ground_truth.normal.json", "ground_truth_axes": "ground_truth_axes.json",
        "files": {name: formats.sha256(text) for name, text in sorted(files.items())},
    }
    files["manifest.json"] = formats.dumps(manifest)
    return files


def _write_all(out: Path, files: dict) -> dict:
    return {name: formats.write_atomic(out / name, text) for name, text in files.items()}


def cmd_synth(scene_file, out, cfg: RunConfig = RunConfig(), repetition: int = 0, csv: bool = False, timings=False) -> RunReport:
    """Scan every viewpoint of a scene; writes nothing unless all succeed."""
    clock = _Clock(timings)
    path = resolve_scene(scene_file)
    report = RunReport("synth", cfg.as_dict(), inputs={path.name: formats.file_digest(path)})
    scene = read_scene(path)
    with clock.stage("synth"):
        views = _scan_scene(scene, cfg, repetition)
        files = _synth_files(scene, views, cfg, repetition, csv)
    report.outputs = _write_all(Path(out), files)
    report.timings = clock.times
    return report


def _reconstruct(profiles, cfg: RunConfig):
    S0 = initial_correspondences(profiles, cfg.features)
    result = refine(profiles, S0, cfg.reconstruction)
    if result.partial_profile is None:
        raise NotConverged(f"refine did not converge within {cfg.reconstruction.max_iterations} iterations")
    return result


def cmd_reconstruct(profile_files: Sequence, out, cfg: RunConfig = RunConfig(), name: str = "partial",
                    csv: bool = False, timings=False) -> RunReport:
    if len(profile_files) < 2:
        raise InputError("reconstruct needs at least two profile files of one viewpoint")
    clock = _Clock(timings)
    report = RunReport("reconstruct", cfg.as_dict(), inputs={str(f): formats.file_digest(f) for f in profile_files})
    profiles = [formats.read_general_profile(f) for f in profile_files]
    if len({p.id for p in profiles}) != len(profiles):
        profiles = [type(p)(k, p.points) for k, p in enumerate(profiles)]
    with clock.stage("reconstruct"):
        result = _reconstruct(profiles, cfg)
    report.viewpoints.append(viewpoint_summary(result))
    files = {f"{name}.normal.json": formats.dumps(formats.normal_profile_doc(result.partial_profile))}
    if csv:
        files[f"{name}.normal.csv"] = formats.csv_text(result.partial_profile.points, ("axial", "radial"))
    report.outputs = _write_all(Path(out), files)
    report.timings = clock.times
    if result.partial_flagged:
        report.exit_code = NotConverged.exit_code
        report.error = "refine stopped at max_iterations; partial profile written but flagged"
    formats.write_atomic(Path(out) / f"{name}.report.json", report.dumps())
    return report


def _registration_doc(reg) -> dict:
    return {
        "format": formats.REGISTRATION, "version": formats.VERSION, "units": "mm",
        "transforms": [t.as_dict() for t in reg.transforms],
        "residual_rms": reg.residual_rms, "pair_residuals": list(reg.pair_residuals),
    }


def cmd_register(partial_files: Sequence, out, cfg: RunConfig = RunConfig(), csv: bool = False, timings=False) -> RunReport:
    if len(partial_files) < 1:
        raise InputError("register needs at least one partial profile file")
    clock = _Clock(timings)
    report = RunReport("register", cfg.as_dict(), inputs={str(f): formats.file_digest(f) for f in partial_files})
    partials = [formats.read_normal_profile(f) for f in partial_files]
    with clock.stage("register"):
        reg = register_partials(partials, cfg.registration)
    doc = _registration_doc(reg)
    report.registration = {k: doc[k] for k in ("transforms", "residual_rms", "pair_residuals")}
    files = {
        "complete.normal.json": formats.dumps(formats.normal_profile_doc(reg.complete)),
        "registration.json": formats.dumps(doc),
    }
    if csv:
        files["complete.normal.csv"] = formats.csv_text(reg.complete.points, ("axial", "radial"))
    report.outputs = _write_all(Path(out), files)
    report.timings = clock.times
    formats.write_atomic(Path(out) / "register.report.json", report.dumps())
    return report


def _evaluate(rec, gt, cfg: RunConfig, align: bool):
    transform = None
    if align:
        rec, transform = align_to(rec, gt, cfg.registration)
    acc = accuracy(gt, rec, cfg.evaluation.form)
    covered = trim_to_coverage(gt, rec, cfg.evaluation.trim_margin)
    if len(covered) < 2:
        raise InputError("reconstruction does not cover any of the ground truth")
    curve = pointwise_error(covered, rec)
    segments = segment_summary(curve, cfg.evaluation.n_segments)
    return acc, curve, segments, transform


def _summary_doc(accs, segs, per_item) -> dict:
    summary = summarize(accs, segs)
    return {"format": formats.SUMMARY, "version": formats.VERSION, "units": "mm",
            "summary": summary.as_dict(), "items": per_item}


def cmd_eval(reconstructed_files: Sequence, ground_truth_file, out, cfg: RunConfig = RunConfig(),
             align: bool = False, timings=False) -> RunReport:
    if len(reconstructed_files) < 1:
        raise InputError("eval needs at least one reconstructed profile")
    clock = _Clock(timings)
    files_in = [*reconstructed_files, ground_truth_file]
    report = RunReport("eval", cfg.as_dict(), inputs={str(f): formats.file_digest(f) for f in files_in})
    gt = formats.read_normal_profile(ground_truth_file)
    accs, segs, items, files = [], [], [], {}
    with clock.stage("eval"):
        for k, f in enumerate(reconstructed_files):
            rec = formats.read_normal_profile(f)
            acc, curve, segments, transform = _evaluate(rec, gt, cfg, align)
            name = "error_curve.csv" if len(reconstructed_files) == 1 else f"error_curve_{k}.csv"
            files[name] = formats.error_curve_csv(curve)
            accs.append(acc)
            segs.append(segments)
            items.append({"input": str(f), "acc": acc, "max_eps": float(curve.eps.max()),
                          "segment_means": segments.tolist(), "error_curve": name,
                          "alignment": None if transform is None else transform.as_dict()})
    doc = _summary_doc(accs, segs, items)
    files["summary.json"] = formats.dumps(doc)
    report.evaluation = doc["summary"]
    report.outputs = _write_all(Path(out), files)
    report.timings = clock.times
    formats.write_atomic(Path(out) / "eval.report.json", report.dumps())
    return report


def cmd_pipeline(scene_file, out, cfg: RunConfig = RunConfig(), repetitions: int = 1, csv: bool = False,
                 timings=False) -> RunReport:
    """synth, reconstruct every viewpoint, register, align to the ground truth, evaluate."""
    if repetitions < 1:
        raise InputError("repetitions must be at least 1")
    clock = _Clock(timings)
    out = Path(out)
    path = resolve_scene(scene_file)
    report = RunReport("pipeline", cfg.as_dict(), inputs={path.name: formats.file_digest(path)})
    scene = read_scene(path)
    gt = ground_truth_normal_profile(scene.surface, None, cfg.scan_config(scene.scan, 0).sample_step)
    accs, segs, items = [], [], []
    for r in range(repetitions):
        rep_dir = out / f"rep{r:03d}"
        stage = "synth"
        try:
            with clock.stage("synth"):
                views = _scan_scene(scene, cfg, r)
                files = _synth_files(scene, views, cfg, r, csv)
            outputs = _write_all(rep_dir / "scan", files)
            stage = "reconstruct"
            partials = []
            for v, (profiles, _) in enumerate(views):
                with clock.stage("reconstruct"):
                    result = _reconstruct(profiles, cfg)
                summary = viewpoint_summary(result, v)
                summary["repetition"] = r
                report.viewpoints.append(summary)
                if result.partial_flagged:
                    raise NotConverged(f"viewpoint {v} did not converge")
                partials.append(result.partial_profile)
                name = f"view{v}.partial.json"
                outputs[name] = formats.write_atomic(rep_dir / name, formats.dumps(formats.normal_profile_doc(result.partial_profile)))
            stage = "register"
            with clock.stage("register"):
                reg = register_partials(partials, cfg.registration)
            doc = _registration_doc(reg)
            outputs["registration.json"] = formats.write_atomic(rep_dir / "registration.json", formats.dumps(doc))
            outputs["complete.normal.json"] = formats.write_atomic(
                rep_dir / "complete.normal.json", formats.dumps(formats.normal_profile_doc(reg.complete)))
            stage = "eval"
            with clock.stage("eval"):
                acc, curve, segments, transform = _evaluate(reg.complete, gt, cfg, align=True)
            outputs["error_curve.csv"] = formats.write_atomic(rep_dir / "error_curve.csv", formats.error_curve_csv(curve))
        except ReconstructionError as exc:
            report.exit_code = exc.exit_code
            report.error = f"repetition {r}, stage {stage}: {type(exc).__name__}: {exc}"
            report.timings = clock.times
            formats.write_atomic(out / "report.json", report.dumps())
            raise type(exc)(report.error) from exc
        for name, digest in outputs.items():
            sub = "scan/" if name in files else ""
            report.outputs[f"rep{r:03d}/{sub}{name}"] = digest
        accs.append(acc)
        segs.append(segments)
        items.append({"repetition": r, "acc": acc, "max_eps": float(curve.eps.max()),
                      "segment_means": segments.tolist(), "registration_residual": reg.residual_rms,
                      "alignment": transform.as_dict()})
    doc = _summary_doc(accs, segs, items)
    report.outputs["summary.json"] = formats.write_atomic(out / "summary.json", formats.dumps(doc))
    report.evaluation = doc["summary"]
    report.timings = clock.times
    formats.write_atomic(out / "report.json", report.dumps())
    return report


# argument parsing

def _global_flags(p, defaults: bool):
    kw = (lambda v: {"default": v}) if defaults else (lambda v: {"default": argparse.SUPPRESS})
    p.add_argument("--config", metavar="FILE", help=f"run configuration (JSON); default ${CONFIG_ENV}", **kw(None))
    p.add_argument("--seed", type=int, metavar="U64", help="seed for all randomness (overrides the config)", **kw(None))
    p.add_argument("--out", metavar="DIR", help="output directory", **kw("."))
    p.add_argument("--log-level", choices=("DEBUG", "INFO", "WARNING", "ERROR"), type=str.upper, **kw("WARNING"))
    p.add_argument("--timings", action="store_true", help="record wall-clock timings in reports", **kw(False))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="revoprofile", description=__doc__.splitlines()[0])
    _global_flags(parser, True)
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, False)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", parents=[common], help="simulate the scans of a scene")
    p.add_argument("scene", help=f"scene file, or a bundled scene: {', '.join(BUNDLED_SCENES)}")
    p.add_argument("--sigma", type=float, help="noise sigma in mm (overrides scene and config)")
    p.add_argument("--repetition", type=int, default=0, help="repetition index for the seed stream")
    p.add_argument("--csv", action="store_true", help="also write CSV copies of the profiles")

    p = sub.add_parser("reconstruct", parents=[common], help="normal profile of one viewpoint")
    p.add_argument("profiles", nargs="+", help="general profile files (.json or x,y,z .csv)")
    p.add_argument("--name", default="partial", help="output file stem")
    p.add_argument("--csv", action="store_true", help="also write a CSV copy")

    p = sub.add_parser("register", parents=[common], help="register partial normal profiles")
    p.add_argument("partials", nargs="+", help="partial normal profile files (.json or axial,radial .csv)")
    p.add_argument("--csv", action="store_true", help="also write a CSV copy")

    p = sub.add_parser("eval", parents=[common], help="accuracy against a ground-truth profile")
    p.add_argument("reconstructed", nargs="+", help="reconstructed normal profile files")
    p.add_argument("--ground-truth", "-g", required=True, help="ground-truth normal profile file")
    p.add_argument("--align", action="store_true", help="register each reconstruction onto the ground truth first")

    p = sub.add_parser("pipeline", parents=[common], help="synth, reconstruct, register and eval in one go")
    p.add_argument("scene", help=f"scene file, or a bundled scene: {', '.join(BUNDLED_SCENES)}")
    p.add_argument("--sigma", type=float, help="noise sigma in mm (overrides scene and config)")
    p.add_argument("--repetitions", type=int, default=1, help="number of seeded runs")
    p.add_argument("--csv", action="store_true", help="also write CSV copies of the scanned profiles")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level), format="%(levelname)s %(name)s: %(message)s",
                        stream=sys.stderr, force=True)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg = cfg.replace(seed=args.seed)
        if getattr(args, "sigma", None) is not None:
            cfg = cfg.replace(scan={**cfg.scan, "noise_sigma": args.sigma})
        out = Path(args.out)
        if args.command == "synth":
            report = cmd_synth(args.scene, out, cfg, args.repetition, args.csv, args.timings)
        elif args.command == "reconstruct":
            report = cmd_reconstruct(args.profiles, out, cfg, args.name, args.csv, args.timings)
        elif args.command == "register":
            report = cmd_register(args.partials, out, cfg, args.csv, args.timings)
        elif args.command == "eval":
            report = cmd_eval(args.reconstructed, args.ground_truth, out, cfg, args.align, args.timings)
        else:
            report = cmd_pipeline(args.scene, out, cfg, args.repetitions, args.csv, args.timings)
    except ReconstructionError as exc:
        print(f"revoprofile {args.command}: error: {exc}", file=sys.stderr)
        return exc.exit_code
    if report.evaluation is not None:
        s = report.evaluation
        print(f"Acc mean {s['mean']:.6g} mm  std {s['std']:.6g}  min {s['min']:.6g}  max {s['max']:.6g}  (n={s['n']})")
    if report.error:
        print(f"revoprofile {args.command}: error: {report.error}", file=sys.stderr)
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
