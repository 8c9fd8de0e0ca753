"""Run configuration, orchestration of both branches, and JSON/CSV/SVG output."""

from __future__ import annotations

import dataclasses
import datetime as _dt
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional
from xml.sax.saxutils import escape

import numpy as np

from . import __version__
from . import geometry as geo
from .arcs import BRANCHES, ShootingVars, make_arc
from .degree import build_linearization, dirichlet_spectrum
from .field import FieldBounds, FieldError, check_pinching, estimate_bounds, eval_field, parse_expr
from .solver import (
    ContinuationResult,
    SolutionRecord,
    SolverError,
    continue_homotopy,
    solution_record,
)

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_REFUSED = 2
EXIT_NUMERICAL = 3
EXIT_VALIDATOR = 4


class RunError(Exception):
    """A pipeline phase failed; ``exit_code`` follows the CLI convention."""

    def __init__(self, phase: str, message: str, exit_code: int = EXIT_NUMERICAL):
        super().__init__(f"[{phase}] {message}")
        self.phase = phase
        self.exit_code = exit_code


class HypothesisRefused(RunError):
    def __init__(self, message: str):
        super().__init__("hypotheses", message, EXIT_REFUSED)


@dataclass
class RunConfig:
    a: float = 1.0
    k_source: str = "0.5"
    box: tuple[float, float, float, float] = (-10.0, -10.0, 10.0, 10.0)
    declared_bounds: Optional[tuple[float, float]] = None
    n_samples: int = 512
    tol: float = 1e-10
    tol_newton: float = 1e-10
    branches: tuple[str, ...] = BRANCHES
    outputs: dict[str, bool] = field(default_factory=lambda: {"json": True, "csv": True, "svg": False})
    n_grid: int = 21
    index_grid: int = 200
    theta0_guess: Optional[float] = None
    residual_tol: float = 1e-6  # for curves loaded from file (differenced curvature)

    def __post_init__(self):
        self.box = tuple(float(v) for v in self.box)
        if self.declared_bounds is not None:
            self.declared_bounds = tuple(float(v) for v in self.declared_bounds)
        self.branches = tuple(self.branches)
        if not self.a > 0:
            raise ValueError("a must be positive")
        if self.n_samples < 64:
            raise ValueError("n_samples must be at least 64")
        if len(self.box) != 4 or self.box[0] >= self.box[2] or self.box[1] >= self.box[3]:
            raise ValueError("box must be x0,y0,x1,y1 with x0<x1, y0<y1")
        bad = set(self.branches) - set(BRANCHES)
        if bad or not self.branches:
            raise ValueError(f"branches must be a nonempty subset of {BRANCHES}")
        unknown = set(self.outputs) - {"json", "csv", "svg"}
        if unknown:
            raise ValueError(f"unknown output flags {sorted(unknown)}")

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        data = dict(data)
        if "outputs" in data:
            data["outputs"] = {**cls().outputs, **data["outputs"]}
        return cls(**data)

    @classmethod
    def load(cls, path) -> "RunConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass
class RunReport:
    config: RunConfig
    bounds: FieldBounds
    pinch: dict
    records: dict[str, SolutionRecord]
    traces: dict[str, list]
    skipped: dict[str, str]
    spectra: dict[str, list]
    timestamp: str

    @property
    def validators_ok(self) -> bool:
        return all(v["holds"] for r in self.records.values() for v in r.validators.values())

    def to_dict(self) -> dict:
        return {
            "version": __version__,
            "timestamp": self.timestamp,
            "seed": None,  # the pipeline draws no random numbers
            "config": self.config.to_dict(),
            "bounds": dataclasses.asdict(self.bounds),
            "pinching": self.pinch,
            "records": {b: record_to_dict(r, self.spectra.get(b)) for b, r in self.records.items()},
            "homotopy_traces": {
                b: [{"s": s, "theta0": v.theta0, "v": v.v} for s, v in tr] for b, tr in self.traces.items()
            },
            "skipped": self.skipped,
            "validator_summary": {
                b: {name: chk["holds"] for name, chk in r.validators.items()} for b, r in self.records.items()
            },
            "all_validators_pass": self.validators_ok,
        }


def record_to_dict(r: SolutionRecord, spectrum=None) -> dict:
    out = {
        "branch": r.branch,
        "a": r.a,
        "field": r.field_source,
        "s": r.s,
        "vars": {"theta0": r.vars.theta0, "v": r.vars.v},
        "class": {"tag": r.cls.tag, "reasons": list(r.cls.reasons)},
        "index": r.index,
        "shooting_index": r.shooting_index,
        "jacobian": r.jacobian,
        "diagnostics": r.diagnostics,
        "validators": r.validators,
    }
    if spectrum is not None:
        out["spectrum_lowest"] = [{"re": z.real, "im": z.imag} for z in spectrum]
    return out


# -- JSON with 17 significant digits ---------------------------------------


def _plain(obj: Any) -> Any:
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    return obj


def dumps(obj: Any, indent: int = 2) -> str:
    """JSON text with every float written as ``%.17g`` (lossless for doubles)."""

    def enc(o, level):
        pad = " " * (indent * (level + 1))
        end = " " * (indent * level)
        if isinstance(o, bool) or o is None:
            return json.dumps(o)
        if isinstance(o, float):
            return format(o, ".17g") if math.isfinite(o) else "null"
        if isinstance(o, (int, str)):
            return json.dumps(o)
        if isinstance(o, dict):
            if not o:
                return "{}"
            items = [f"{pad}{json.dumps(k)}: {enc(v, level + 1)}" for k, v in o.items()]
            return "{\n" + ",\n".join(items) + "\n" + end + "}"
        if isinstance(o, list):
            if not o:
                return "[]"
            if all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in o):
                return "[" + ", ".join(enc(v, level + 1) for v in o) + "]"
            return "[\n" + ",\n".join(pad + enc(v, level + 1) for v in o) + "\n" + end + "]"
        raise TypeError(f"cannot serialize {type(o).__name__}")

    return enc(_plain(obj), 0) + "\n"


# -- pipeline --------------------------------------------------------------


def _bounds(config: RunConfig, f) -> FieldBounds:
    try:
        return estimate_bounds(f, config.box, config.n_grid, config.declared_bounds)
    except (FieldError, ValueError) as exc:
        raise RunError("bounds", str(exc)) from exc


def run(config: RunConfig, out_dir: Optional[os.PathLike] = None) -> RunReport:
    try:
        f = parse_expr(config.k_source)
    except FieldError as exc:
        raise RunError("parse", str(exc), EXIT_REFUSED) from exc
    bounds = _bounds(config, f)
    pinch = check_pinching(bounds, config.a)
    pinch_d = {**pinch._asdict(), "k_inf": bounds.k_inf, "k_sup": bounds.k_sup, "bounds_conflict": bounds.conflict}
    if not pinch.holds_basic:
        raise HypothesisRefused(
            f"need 0 < inf k <= sup k < 1/a; got inf k = {bounds.k_inf:.9g}, sup k = {bounds.k_sup:.9g}, "
            f"1/a = {1.0 / config.a:.9g}"
        )

    records: dict[str, SolutionRecord] = {}
    traces: dict[str, list] = {}
    skipped: dict[str, str] = {}
    spectra: dict[str, list] = {}
    for branch in config.branches:
        if branch == "large" and not pinch.holds_pinch:
            skipped[branch] = (
                f"pinching fails: sup k/(a sup k + 1) = {pinch.ratio:.9g} >= inf k = {bounds.k_inf:.9g}"
            )
            continue
        try:
            if config.theta0_guess is not None:
                v0 = make_arc(branch, config.a, bounds.k_sup).length
                rec = solution_record(f, bounds, config.a, branch, ShootingVars(config.theta0_guess, v0),
                                      config.n_samples, config.tol, config.tol_newton, config.box,
                                      config.index_grid)
                traces[branch] = [(1.0, rec.vars)]
            else:
                res: ContinuationResult = continue_homotopy(
                    f, bounds, config.a, branch, config.n_samples, config.tol, config.tol_newton,
                    config.box, config.index_grid)
                rec = res.record
                traces[branch] = res.trace
            op = build_linearization(f, rec, config.index_grid)
            spectra[branch] = list(dirichlet_spectrum(op)[:6])
        except (SolverError, geo.GeometryError, FieldError) as exc:
            raise RunError(f"solve:{branch}", str(exc)) from exc
        records[branch] = rec

    report = RunReport(config, bounds, pinch_d, records, traces, skipped, spectra,
                       _dt.datetime.now(_dt.timezone.utc).isoformat())
    if out_dir is not None:
        write_outputs(report, out_dir)
    return report


def write_outputs(report: RunReport, out_dir) -> dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = {}
    flags = report.config.outputs
    for branch, rec in report.records.items():
        if flags.get("csv", True):
            p = out / f"{branch}.csv"
            geo.write_curve_csv(rec.curve, p)
            written[f"{branch}.csv"] = p
        if flags.get("svg", False):
            p = out / f"{branch}.svg"
            emit_svg(rec, p)
            written[f"{branch}.svg"] = p
    if flags.get("json", True):
        p = out / "report.json"
        p.write_text(dumps(report.to_dict()))
        written["report.json"] = p
    return written


# -- SVG -------------------------------------------------------------------


def emit_svg(record: SolutionRecord, path, width: int = 640) -> None:
    pts = record.curve.points
    a = record.a
    xs = np.concatenate([pts[:, 0], [-a, a]])
    ys = np.concatenate([pts[:, 1], [0.0, 0.0]])
    x0, x1, y0, y1 = xs.min(), xs.max(), ys.min(), ys.max()
    span = max(x1 - x0, y1 - y0, 1e-12)
    mx, my = 0.1 * max(x1 - x0, 1e-3 * span), 0.1 * max(y1 - y0, 1e-3 * span)
    vx, vy, vw, vh = x0 - mx, -(y1 + my), (x1 - x0) + 2 * mx, (y1 - y0) + 2 * my
    height = max(1, int(round(width * vh / vw)))
    sw = 0.004 * max(vw, vh)

    def fmt(v):
        return format(float(v), ".6f")

    poly = " ".join(f"{fmt(x)},{fmt(-y)}" for x, y in pts)
    idx = "degenerate" if record.index is None else f"{record.index:+d}"
    label = escape(f"{record.branch} solution, index {idx}, k = {record.field_source}")
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="{fmt(vx)} {fmt(vy)} {fmt(vw)} {fmt(vh)}">',
        f'  <line x1="{fmt(-a)}" y1="0" x2="{fmt(a)}" y2="0" stroke="#888" stroke-width="{fmt(sw)}" '
        f'stroke-dasharray="{fmt(3 * sw)},{fmt(2 * sw)}"/>',
        f'  <polyline points="{poly}" fill="none" stroke="#1f4e9c" stroke-width="{fmt(1.5 * sw)}"/>',
        f'  <circle cx="{fmt(a)}" cy="0" r="{fmt(3 * sw)}" fill="#c0392b"/>',
        f'  <circle cx="{fmt(-a)}" cy="0" r="{fmt(3 * sw)}" fill="#c0392b"/>',
        f'  <text x="{fmt(vx + 0.02 * vw)}" y="{fmt(vy + 0.06 * vh)}" font-size="{fmt(0.04 * vh)}" '
        f'font-family="sans-serif">{label}</text>',
        "</svg>",
    ]
    Path(path).write_text("\n".join(lines) + "\n")


# -- third-party curve validation ------------------------------------------


def validate_file(curve_path, config: RunConfig) -> dict:
    """Run curvature, classification and a-priori estimate checks on a CSV curve.

    Raises :class:`geometry.CurveFileError` for malformed input.
    """
    c = geo.read_curve_csv(curve_path, config.a)
    checks: dict[str, dict] = {}
    k = geo.curvatures(c)
    checks["endpoints"] = {"holds": c.endpoints_ok()}
    checks["curvature_positive"] = {"holds": bool(np.all(k > 0)), "min": float(k.min())}
    if config.k_source:
        f = parse_expr(config.k_source)
        kf = np.array([eval_field(f, x, y, t) for (x, y), t in zip(c.points, c.params)])
        res = float(np.max(np.abs(k - kf)))
        checks["curvature_residual"] = {"holds": res <= config.residual_tol, "value": res}
    try:
        simple = geo.is_simple_closed(c)
    except geo.DegenerateSegmentError:
        simple = False
    checks["simple"] = {"holds": simple}
    tag = geo.classify(c)
    checks["classification"] = {"holds": tag.tag != "neither", "tag": tag.tag, "reasons": list(tag.reasons)}
    if simple:
        try:
            rot = geo.rotation_angle(c)
            gb = geo.gauss_bonnet_residual(c)
            checks["rotation_angle"] = {"holds": abs(rot - 2 * math.pi) <= geo.EPS_ROT, "value": rot}
            checks["gauss_bonnet"] = {"holds": gb <= config.residual_tol, "value": gb}
        except geo.CornerError as exc:
            checks["rotation_angle"] = {"holds": False, "error": str(exc)}
    for name, fn in (("lemma_min_estimate", geo.check_lemma_min_estimate),
                     ("lemma_max_estimate", geo.check_lemma_max_estimate),
                     ("lemma_nonex", geo.check_lemma_nonex)):
        r = fn(c)
        checks[name] = {"applicable": r.applicable, "holds": (not r.applicable) or r.holds, "value": r.value}
    if config.declared_bounds is not None:
        lb = geo.check_length_bound(c, config.declared_bounds[0])
        checks["length_bound"] = {"holds": lb.holds, "length": lb.length, "bound": lb.bound}
    return {"file": str(curve_path), "ok": all(v["holds"] for v in checks.values()), "checks": checks}
