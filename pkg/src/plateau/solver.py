"""Shooting and homotopy continuation for prescribed-curvature curves.

A curve of constant speed v with tangent angle theta solves the
curvature equation iff::

    x' = v cos(theta),  y' = v sin(theta),  theta' = v k(x, y, t)

on [0, 1] with (x, y)(0) = (a, 0). The two unknowns (theta(0), v) are fixed
by the two endpoint conditions (x, y)(1) = (-a, 0).
"""

from __future__ import annotations

import logging
import math
import os
from dataclasses import dataclass, field
from typing import Any, NamedTuple, Optional, Union

import numpy as np
from scipy.integrate import solve_ivp

from . import geometry as geo
from .arcs import ShootingVars, arc_shooting_vars, make_arc
from .field import Box, CurvatureExpr, FieldBounds, check_pinching, eval_field, grad_field
from .geometry import ClassTag, Curve

log = logging.getLogger(__name__)

# Compare variational and finite-difference Jacobians at every converged shot.
CHECK_JACOBIAN = os.environ.get("PLATEAU_CHECK_JACOBIAN", "") not in ("", "0")
JACOBIAN_FD_STEP = 1e-7
JACOBIAN_AGREEMENT = 1e-4

DEFAULT_TOL = 1e-10
DEFAULT_TOL_NEWTON = 1e-10


class SolverError(Exception):
    pass


class IntegrationError(SolverError):
    pass


class BoxExitError(IntegrationError):
    pass


class ShootingError(SolverError):
    pass


class SingularJacobianError(ShootingError):
    pass


class JacobianMismatchError(ShootingError):
    pass


class HypothesisError(SolverError):
    """Field bounds violate positivity, sup k < 1/a, or pinching."""


class ContinuationError(SolverError):
    def __init__(self, message: str, last_s: float):
        super().__init__(f"{message} (last accepted s={last_s:.9g})")
        self.last_s = last_s


class ClassificationChangedError(ContinuationError):
    pass


@dataclass(frozen=True)
class Homotopy:
    """The blended field k_s = (1 - s) k_sup + s k."""

    target: CurvatureExpr
    k_sup: float
    s: float = 1.0

    def value(self, x: float, y: float, t: float) -> float:
        k = eval_field(self.target, x, y, t)
        if self.s == 1.0:
            return k
        return (1.0 - self.s) * self.k_sup + self.s * k

    def grad(self, x: float, y: float, t: float) -> tuple[float, float]:
        if self.s == 0.0 or self.target.is_constant:
            return 0.0, 0.0
        gx, gy = grad_field(self.target, x, y, t)
        return self.s * gx, self.s * gy

    def at(self, s: float) -> "Homotopy":
        return Homotopy(self.target, self.k_sup, s)


FieldLike = Union[CurvatureExpr, Homotopy]


def as_homotopy(f: FieldLike) -> Homotopy:
    if isinstance(f, Homotopy):
        return f
    return Homotopy(f, 0.0, 1.0)


# -- initial value problem -------------------------------------------------


def _rhs(field_: Homotopy, v: float, variational: bool):
    def f(t, z):
        x, y, th = z[0], z[1], z[2]
        c, s = math.cos(th), math.sin(th)
        k = field_.value(x, y, t)
        out = [v * c, v * s, v * k]
        if variational:
            kx, ky = field_.grad(x, y, t)
            # columns: d/dtheta0, d/dv
            for col in (0, 1):
                sx, sy, sth = z[3 + 3 * col : 6 + 3 * col]
                dx = -v * s * sth
                dy = v * c * sth
                dth = v * (kx * sx + ky * sy)
                if col == 1:
                    dx += c
                    dy += s
                    dth += k
                out += [dx, dy, dth]
        return out

    return f


def _box_events(box: Optional[Box]):
    if box is None:
        return None
    x0, y0, x1, y1 = box
    events = []
    for fn in (
        lambda t, z: z[0] - x0,
        lambda t, z: x1 - z[0],
        lambda t, z: z[1] - y0,
        lambda t, z: y1 - z[1],
    ):
        fn.terminal = True
        fn.direction = -1
        events.append(fn)
    return events


def _solve(field_: Homotopy, a: float, vars_: ShootingVars, tol: float, t_eval=None,
           variational: bool = False, box: Optional[Box] = None):
    theta0, v = vars_
    if not v > 0:
        raise IntegrationError(f"speed must be positive, got v={v!r}")
    z0 = [a, 0.0, theta0]
    if variational:
        z0 += [0.0, 0.0, 1.0, 0.0, 0.0, 0.0]
    sol = solve_ivp(
        _rhs(field_, v, variational),
        (0.0, 1.0),
        z0,
        method="RK45",
        rtol=tol,
        atol=tol,
        t_eval=t_eval,
        events=_box_events(box),
    )
    if sol.status == 1:
        raise BoxExitError(f"trajectory left the box {box} at t={sol.t[-1]:.6g}")
    if sol.status != 0:
        raise IntegrationError(sol.message)
    return sol


class Endpoint(NamedTuple):
    miss: np.ndarray  # gamma(1) - (-a, 0)
    jacobian: Optional[np.ndarray]  # d(miss)/d(theta0, v)


def shooting_map(field: FieldLike, a: float, vars_: ShootingVars, tol: float = DEFAULT_TOL,
                 variational: bool = True, box: Optional[Box] = None) -> Endpoint:
    sol = _solve(as_homotopy(field), a, vars_, tol, variational=variational, box=box)
    z = sol.y[:, -1]
    miss = np.array([z[0] + a, z[1]])
    jac = None
    if variational:
        jac = np.array([[z[3], z[6]], [z[4], z[7]]])
    return Endpoint(miss, jac)


def fd_jacobian(field: FieldLike, a: float, vars_: ShootingVars, tol: float = DEFAULT_TOL,
                rel_step: float = JACOBIAN_FD_STEP) -> np.ndarray:
    """Central-difference Jacobian of the shooting map."""
    p = np.array(vars_, dtype=float)
    jac = np.empty((2, 2))
    for j in range(2):
        h = rel_step * max(1.0, abs(p[j]))
        dp = np.zeros(2)
        dp[j] = h
        hi = shooting_map(field, a, ShootingVars(*(p + dp)), tol, variational=False).miss
        lo = shooting_map(field, a, ShootingVars(*(p - dp)), tol, variational=False).miss
        jac[:, j] = (hi - lo) / (2 * h)
    return jac


def integrate_ivp(field: FieldLike, a: float, vars_: ShootingVars, n_out: int = 512,
                  tol: float = DEFAULT_TOL, box: Optional[Box] = None) -> Curve:
    """Integrate from (a, 0) and resample on a uniform grid of ``n_out`` points.

    Accelerations are taken from the right-hand side, so the returned curve
    carries exact second derivatives of the numerical trajectory.
    """
    field_ = as_homotopy(field)
    t = np.linspace(0.0, 1.0, n_out)
    sol = _solve(field_, a, vars_, tol, t_eval=t, box=box)
    x, y, th = sol.y
    v = vars_.v
    c, s = np.cos(th), np.sin(th)
    k = np.array([field_.value(xi, yi, ti) for xi, yi, ti in zip(x, y, t)])
    vel = v * np.column_stack([c, s])
    acc = (v * v * k)[:, None] * np.column_stack([-s, c])
    return Curve(a, t, np.column_stack([x, y]), vel, acc)


def trajectory_state(field: FieldLike, a: float, vars_: ShootingVars, t_eval,
                     tol: float = DEFAULT_TOL) -> np.ndarray:
    """(x, y, theta) rows at ``t_eval``."""
    return _solve(as_homotopy(field), a, vars_, tol, t_eval=np.asarray(t_eval, dtype=float)).y.T


# -- Newton shooting -------------------------------------------------------


class ShootResult(NamedTuple):
    vars: ShootingVars
    iterations: int
    miss_norm: float
    jacobian: np.ndarray


def shoot(field: FieldLike, a: float, guess: ShootingVars, tol_newton: float = DEFAULT_TOL_NEWTON,
          max_iter: int = 30, tol: float = DEFAULT_TOL, box: Optional[Box] = None,
          check_jacobian: Optional[bool] = None) -> ShootResult:
    """Newton iteration on the endpoint miss with a backtracking line search."""
    if check_jacobian is None:
        check_jacobian = CHECK_JACOBIAN
    p = np.array(guess, dtype=float)
    ep = shooting_map(field, a, ShootingVars(*p), tol, box=box)
    norm = float(np.linalg.norm(ep.miss))
    for it in range(max_iter + 1):
        jac = ep.jacobian
        if not np.all(np.isfinite(jac)):
            jac = fd_jacobian(field, a, ShootingVars(*p), tol)
        if norm <= tol_newton:
            if check_jacobian:
                _compare_jacobians(jac, fd_jacobian(field, a, ShootingVars(*p), tol))
            return ShootResult(ShootingVars(float(p[0]), float(p[1])), it, norm, jac)
        if it == max_iter:
            break
        det = np.linalg.det(jac)
        if abs(det) < 1e-12 * np.sum(jac**2):
            raise SingularJacobianError(f"shooting Jacobian singular at {tuple(float(q) for q in p)} (det={det:.3g})")
        step = -np.linalg.solve(jac, ep.miss)
        lam = 1.0
        while True:
            trial = p + lam * step
            if trial[1] > 0:
                try:
                    ep_t = shooting_map(field, a, ShootingVars(*trial), tol, box=box)
                    norm_t = float(np.linalg.norm(ep_t.miss))
                    if norm_t < (1.0 - 1e-4 * lam) * norm or norm_t <= tol_newton:
                        break
                except IntegrationError:
                    pass
            lam *= 0.5
            if lam < 1e-4:
                raise ShootingError(f"line search failed at {tuple(float(q) for q in p)} (|miss|={norm:.3g})")
        p, ep, norm = trial, ep_t, norm_t
    raise ShootingError(f"no convergence in {max_iter} iterations (|miss|={norm:.3g})")


def _compare_jacobians(jac: np.ndarray, jac_fd: np.ndarray) -> None:
    rel = np.linalg.norm(jac - jac_fd) / np.linalg.norm(jac_fd)
    if rel > JACOBIAN_AGREEMENT:
        raise JacobianMismatchError(f"variational and finite-difference Jacobians differ (rel {rel:.3g})")


# -- continuation ----------------------------------------------------------


@dataclass
class SolutionRecord:
    branch: str
    a: float
    field_source: str
    vars: ShootingVars
    curve: Curve
    cls: ClassTag
    jacobian: np.ndarray
    index: Optional[int] = None  # Leray-Schauder local index, None if degenerate
    shooting_index: Optional[int] = None
    s: float = 1.0
    diagnostics: dict[str, Any] = field(default_factory=dict)
    validators: dict[str, Any] = field(default_factory=dict)


@dataclass
class ContinuationResult:
    trace: list[tuple[float, ShootingVars]]
    record: SolutionRecord


def continue_homotopy(field: CurvatureExpr, bounds: FieldBounds, a: float, branch: str,
                      n_samples: int = 512, tol: float = DEFAULT_TOL,
                      tol_newton: float = DEFAULT_TOL_NEWTON, box: Optional[Box] = None,
                      index_grid: int = 200) -> ContinuationResult:
    """Track ``branch`` from the constant field k_sup (s=0) to ``field`` (s=1).

    Step control: initial ds = 0.1, halved when a step fails (no Newton
    convergence, box exit, or a change of classification) and doubled after
    two consecutive successes; ds below 1e-6 aborts.
    """
    pinch = check_pinching(bounds, a)
    if not pinch.holds_basic:
        raise HypothesisError(f"need 0 < inf k and sup k < 1/a (bounds {bounds.k_inf}, {bounds.k_sup}, a={a})")
    if branch == "large" and not pinch.holds_pinch:
        raise HypothesisError(f"pinching fails: sup k/(a sup k + 1) = {pinch.ratio:.9g} >= inf k = {bounds.k_inf}")

    hom = Homotopy(field, bounds.k_sup)
    arc = make_arc(branch, a, bounds.k_sup)
    start = shoot(hom.at(0.0), a, arc_shooting_vars(arc), tol_newton, tol=tol, box=box)
    trace = [(0.0, start.vars)]
    current = start
    s, ds, streak = 0.0, 0.1, 0
    if field.is_constant:
        ds = 1.0

    while s < 1.0:
        s_new = min(1.0, s + ds)
        try:
            res = shoot(hom.at(s_new), a, current.vars, tol_newton, tol=tol, box=box)
            curve = integrate_ivp(hom.at(s_new), a, res.vars, n_samples, tol, box=box)
            tag = geo.classify(curve)
            if tag.tag != branch:
                raise ClassificationChangedError(f"solution left the {branch} class at s={s_new:.9g}: {tag.reasons}", s)
        except (SolverError, geo.GeometryError) as exc:
            ds *= 0.5
            streak = 0
            log.debug("step to s=%.6g rejected: %s", s_new, exc)
            if ds < 1e-6:
                if isinstance(exc, ClassificationChangedError):
                    raise
                raise ContinuationError(f"step size underflow: {exc}", s) from exc
            continue
        s, current = s_new, res
        trace.append((s, res.vars))
        streak += 1
        if streak >= 2:
            ds *= 2.0
            streak = 0

    record = SolutionRecord(branch, a, field.source, current.vars, curve, tag, current.jacobian)
    finish_record(record, field, bounds, tol=tol, tol_newton=tol_newton, box=box,
                  miss_norm=current.miss_norm, newton_iters=current.iterations, index_grid=index_grid)
    return ContinuationResult(trace, record)


def finish_record(record: SolutionRecord, field: CurvatureExpr, bounds: FieldBounds, *,
                  tol: float, tol_newton: float, box: Optional[Box], miss_norm: float,
                  newton_iters: int, index_grid: int = 200) -> SolutionRecord:
    """Fill diagnostics, local indices and a-priori estimate validators."""
    from .degree import DegenerateLinearization, local_index, shooting_index

    c = record.curve
    k_curve = geo.curvatures(c)
    k_field = np.array([eval_field(field, x, y, t) for (x, y), t in zip(c.points, c.params)])
    residual = float(np.max(np.abs(k_curve - k_field)))
    lift = geo.lift_tangent(c)
    rot = geo.rotation_angle(c)
    gb = geo.gauss_bonnet_residual(c)
    length = geo.check_length_bound(c, bounds.k_inf)
    pinch = check_pinching(bounds, record.a)
    try:
        record.index = local_index(field, record, index_grid)
    except DegenerateLinearization:
        record.index = None
    try:
        record.shooting_index = shooting_index(field, record)
    except DegenerateLinearization:
        record.shooting_index = None

    record.diagnostics = {
        "length": length.length,
        "k_gamma_min": float(k_curve.min()),
        "k_gamma_max": float(k_curve.max()),
        "gauss_bonnet_residual": gb,
        "rotation_angle": rot,
        "newton_iters": newton_iters,
        "final_miss_norm": miss_norm,
        "curvature_residual": residual,
        "theta_start": lift.start,
        "theta_end": lift.end,
        "max_turn": lift.max_turn(),
        "graph_crossings": geo.graph_crossings(lift),
    }
    nonex = geo.check_lemma_nonex(c)
    v = {
        "classification": {"holds": record.cls.tag == record.branch, "tag": record.cls.tag},
        "converged": {"holds": miss_norm <= tol_newton},
        "curvature_residual": {"holds": residual <= 1e-8, "value": residual},
        "gauss_bonnet": {"holds": gb <= 1e-6, "value": gb},
        "rotation_angle": {"holds": abs(rot - 2 * math.pi) <= geo.EPS_ROT, "value": rot},
        "length_bound": {"holds": length.holds, "length": length.length, "bound": length.bound},
        "lift_increasing": {"holds": lift.strictly_increasing()},
        "graph_pieces": {"holds": geo.graph_crossings(lift) <= 2},
        "constant_speed": {"holds": c.constant_speed()},
        "sampling_density": {"holds": lift.max_turn() <= geo.MAX_TURN, "value": lift.max_turn()},
    }
    for name, chk in (("lemma_min_estimate", geo.check_lemma_min_estimate(c)),
                      ("lemma_max_estimate", geo.check_lemma_max_estimate(c))):
        v[name] = {"applicable": chk.applicable, "holds": (not chk.applicable) or chk.holds, "value": chk.value}
    # pinching excludes a solution leaving (a,0) straight down
    v["lemma_nonex"] = {
        "applicable": nonex.applicable,
        "holds": (not nonex.applicable) if pinch.holds_pinch else ((not nonex.applicable) or nonex.holds),
        "value": nonex.value,
    }
    if box is not None:
        x0, y0, x1, y1 = box
        pts = c.points
        inside = bool(np.all((pts[:, 0] >= x0) & (pts[:, 0] <= x1) & (pts[:, 1] >= y0) & (pts[:, 1] <= y1)))
        v["box_containment"] = {"holds": inside}
    record.validators = v
    return record


def solution_record(field: CurvatureExpr, bounds: FieldBounds, a: float, branch: str,
                    guess: ShootingVars, n_samples: int = 512, tol: float = DEFAULT_TOL,
                    tol_newton: float = DEFAULT_TOL_NEWTON, box: Optional[Box] = None,
                    index_grid: int = 200) -> SolutionRecord:
    """Solve directly from ``guess`` at s=1 (no continuation)."""
    res = shoot(field, a, guess, tol_newton, tol=tol, box=box)
    curve = integrate_ivp(field, a, res.vars, n_samples, tol, box=box)
    record = SolutionRecord(branch, a, field.source, res.vars, curve, geo.classify(curve), res.jacobian)
    return finish_record(record, field, bounds, tol=tol, tol_newton=tol_newton, box=box,
                         miss_norm=res.miss_norm, newton_iters=res.iterations, index_grid=index_grid)
