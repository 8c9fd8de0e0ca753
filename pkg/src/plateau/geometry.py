"""Sampled planar curves joining (a, 0) to (-a, 0) and checks on them.

The closed curve ``gamma + chord`` is the sampled curve followed by the
straight segment back from its last sample to its first one; for curves
ending on the x-axis this is the chord [-a, a].
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import NamedTuple, Optional

import numpy as np
from scipy.integrate import simpson

EPS_BC = 1e-9  # relative to a
EPS_SPEED = 1e-6
EPS_ANGLE = 1e-8
EPS_LEMMA = 1e-9
EPS_ROT = 1e-6
EPS_CLASS = 1e-7
MAX_TURN = 0.1  # rad per polyline segment, below which sampled simplicity is trusted
GRID_BITS = 40

TWO_PI = 2.0 * math.pi
HALF_PI = 0.5 * math.pi


class GeometryError(Exception):
    pass


class ImmersionError(GeometryError):
    """A sample has zero velocity."""


class LiftError(GeometryError):
    """Adjacent unit tangents are (anti-)parallel opposite: the curve is undersampled."""


class DegenerateSegmentError(GeometryError):
    pass


class CornerError(GeometryError):
    """Corner tangent anti-parallel to the chord; the exterior angle is ambiguous."""


class CurveFileError(GeometryError):
    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass(frozen=True, eq=False)
class Curve:
    """A curve sampled on an increasing parameter grid of [0, 1].

    ``accelerations`` is optional. Solver trajectories store the exact
    right-hand side there; otherwise second derivatives are differenced
    from the velocities.
    """

    a: float
    params: np.ndarray
    points: np.ndarray
    velocities: np.ndarray
    accelerations: Optional[np.ndarray] = None

    def __post_init__(self):
        params = np.asarray(self.params, dtype=float)
        points = np.asarray(self.points, dtype=float)
        vel = np.asarray(self.velocities, dtype=float)
        n = params.shape[0]
        if n < 2 or points.shape != (n, 2) or vel.shape != (n, 2):
            raise ValueError("params, points and velocities must have matching lengths (n >= 2)")
        if np.any(np.diff(params) <= 0):
            raise ValueError("parameter grid must be strictly increasing")
        if np.any(np.hypot(vel[:, 0], vel[:, 1]) == 0):
            raise ImmersionError("zero velocity sample")
        object.__setattr__(self, "params", params)
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "velocities", vel)
        if self.accelerations is not None:
            acc = np.asarray(self.accelerations, dtype=float)
            if acc.shape != (n, 2):
                raise ValueError("accelerations shape mismatch")
            object.__setattr__(self, "accelerations", acc)

    @property
    def n(self) -> int:
        return self.params.shape[0]

    @property
    def speed(self) -> np.ndarray:
        return np.hypot(self.velocities[:, 0], self.velocities[:, 1])

    def endpoints_ok(self, eps: float = EPS_BC) -> bool:
        tol = eps * self.a
        return bool(
            np.all(np.abs(self.points[0] - (self.a, 0.0)) <= tol)
            and np.all(np.abs(self.points[-1] - (-self.a, 0.0)) <= tol)
        )

    def constant_speed(self, eps: float = EPS_SPEED) -> bool:
        sp = self.speed
        return bool(np.ptp(sp) <= eps * sp.mean())

    def length(self) -> float:
        return float(simpson(self.speed, x=self.params))

    def reversed_y(self) -> "Curve":
        """Mirror image in the x-axis (orientation, hence curvature, flips)."""
        flip = np.array([1.0, -1.0])
        acc = None if self.accelerations is None else self.accelerations * flip
        return Curve(self.a, self.params, self.points * flip, self.velocities * flip, acc)


# -- curvature -------------------------------------------------------------


def _diff4(values: np.ndarray, params: np.ndarray) -> np.ndarray:
    """Fourth-order finite-difference derivative on a uniform grid."""
    n = values.shape[0]
    h = np.diff(params)
    if n < 5 or np.ptp(h) > 1e-9 * h.mean():
        return np.gradient(values, params, axis=0, edge_order=2)
    h = h.mean()
    f = values
    d = np.empty_like(f)
    d[2:-2] = (-f[4:] + 8 * f[3:-1] - 8 * f[1:-3] + f[:-4]) / (12 * h)
    d[0] = (-25 * f[0] + 48 * f[1] - 36 * f[2] + 16 * f[3] - 3 * f[4]) / (12 * h)
    d[1] = (-3 * f[0] - 10 * f[1] + 18 * f[2] - 6 * f[3] + f[4]) / (12 * h)
    d[-1] = (25 * f[-1] - 48 * f[-2] + 36 * f[-3] - 16 * f[-4] + 3 * f[-5]) / (12 * h)
    d[-2] = (3 * f[-1] + 10 * f[-2] - 18 * f[-3] + 6 * f[-4] - f[-5]) / (12 * h)
    return d


def accelerations(c: Curve) -> np.ndarray:
    if c.accelerations is not None:
        return c.accelerations
    return _diff4(c.velocities, c.params)


def curvatures(c: Curve) -> np.ndarray:
    """Signed geodesic curvature |v|^-3 <acc, J v> at every sample."""
    v = c.velocities
    acc = accelerations(c)
    # <acc, J v> with J the rotation by +pi/2: J(vx, vy) = (-vy, vx)
    cross = v[:, 0] * acc[:, 1] - v[:, 1] * acc[:, 0]
    return cross / c.speed**3


def geodesic_curvature(c: Curve, i: int) -> float:
    return float(curvatures(c)[i])


# -- tangent lift ----------------------------------------------------------


@dataclass(frozen=True, eq=False)
class TangentLift:
    theta: np.ndarray
    theta0: float

    @property
    def start(self) -> float:
        return float(self.theta[0])

    @property
    def end(self) -> float:
        return float(self.theta[-1])

    @property
    def increments(self) -> np.ndarray:
        return np.diff(self.theta)

    def strictly_increasing(self) -> bool:
        return bool(np.all(self.increments > 0))

    def max_turn(self) -> float:
        return float(np.max(np.abs(self.increments)))


def _wrap(angle):
    """Map into [-pi, pi)."""
    return (np.asarray(angle) + math.pi) % TWO_PI - math.pi


def lift_tangent(c: Curve, theta0_hint: float = HALF_PI) -> TangentLift:
    """Continuous tangent angle with theta(0) in [hint - pi, hint + pi)."""
    v = c.velocities
    raw = np.arctan2(v[:, 1], v[:, 0])
    theta0 = theta0_hint + float(_wrap(raw[0] - theta0_hint))
    steps = _wrap(np.diff(raw))
    if np.any(np.abs(steps) >= math.pi - 1e-12):
        raise LiftError("tangent jumps by pi between adjacent samples")
    theta = theta0 + np.concatenate(([0.0], np.cumsum(steps)))
    return TangentLift(theta, theta0)


def graph_crossings(lift: TangentLift) -> int:
    """Number of parameters where the lift crosses pi/2 or 3pi/2.

    Between crossings the curve is a graph over the x1-axis.
    """
    count = 0
    for level in (HALF_PI, 1.5 * math.pi):
        s = np.sign(lift.theta - level)
        s = s[s != 0]
        count += int(np.count_nonzero(np.diff(s)))
    return count


# -- simplicity of gamma + chord ------------------------------------------


def _grid_vertices(c: Curve) -> list[tuple[int, int]]:
    scale = 2.0**GRID_BITS
    return [(int(round(x * scale)), int(round(y * scale))) for x, y in c.points]


def _closed_segments(c: Curve):
    verts = _grid_vertices(c)
    m = len(verts)
    segs = [(verts[i], verts[(i + 1) % m]) for i in range(m)]
    for i, (p, q) in enumerate(segs):
        if p == q:
            raise DegenerateSegmentError(f"zero-length segment {i} on the 2^-{GRID_BITS} grid")
    return segs


def _orient(p, q, r) -> int:
    d = (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])
    return (d > 0) - (d < 0)


def _on_segment(p, q, r) -> bool:
    """r collinear with pq lies within its bounding box."""
    return min(p[0], q[0]) <= r[0] <= max(p[0], q[0]) and min(p[1], q[1]) <= r[1] <= max(p[1], q[1])


def _segments_meet(s1, s2) -> bool:
    p1, p2 = s1
    q1, q2 = s2
    o1, o2 = _orient(p1, p2, q1), _orient(p1, p2, q2)
    o3, o4 = _orient(q1, q2, p1), _orient(q1, q2, p2)
    if o1 * o2 < 0 and o3 * o4 < 0:
        return True
    return (
        (o1 == 0 and _on_segment(p1, p2, q1))
        or (o2 == 0 and _on_segment(p1, p2, q2))
        or (o3 == 0 and _on_segment(q1, q2, p1))
        or (o4 == 0 and _on_segment(q1, q2, p2))
    )


def _adjacent_overlap(s1, s2) -> bool:
    """Consecutive segments p->q, q->r meet beyond q only if r folds back onto pq."""
    p, q = s1
    r = s2[1]
    if _orient(p, q, r) != 0:
        return False
    return (q[0] - p[0]) * (r[0] - q[0]) + (q[1] - p[1]) * (r[1] - q[1]) < 0


def is_simple_closed(c: Curve) -> bool:
    """Exact simplicity test of the closed polyline ``gamma + chord``.

    Vertices are rounded to a 2^-40 grid and intersected with integer
    orientation predicates; a bounding-box sweep prunes pairs first.
    """
    segs = _closed_segments(c)
    m = len(segs)
    if m < 3:
        return False
    arr = np.array([[p[0], p[1], q[0], q[1]] for p, q in segs], dtype=float)
    lo = np.minimum(arr[:, :2], arr[:, 2:])
    hi = np.maximum(arr[:, :2], arr[:, 2:])
    # float images of the grid integers are within one ulp; pad to stay conservative
    pad = 1.0 + 1e-12 * np.max(np.abs(arr))
    order = np.argsort(lo[:, 0], kind="stable")
    for idx, i in enumerate(order):
        for j in order[idx + 1 :]:
            if lo[j, 0] > hi[i, 0] + pad:
                break
            if lo[j, 1] > hi[i, 1] + pad or lo[i, 1] > hi[j, 1] + pad:
                continue
            if not _pair_ok(segs, int(i), int(j), m):
                return False
    return True


def _pair_ok(segs, i: int, j: int, m: int) -> bool:
    i, j = min(i, j), max(i, j)
    if j == i + 1:
        return not _adjacent_overlap(segs[i], segs[j])
    if i == 0 and j == m - 1:
        return not _adjacent_overlap(segs[j], segs[i])
    return not _segments_meet(segs[i], segs[j])


def is_simple_closed_bruteforce(c: Curve) -> bool:
    """All-pairs reference test in rational arithmetic.

    Independent of :func:`is_simple_closed`: intersections are found by
    solving the 2x2 parametric system with :class:`fractions.Fraction`.
    """
    segs = _closed_segments(c)
    m = len(segs)
    if m < 3:
        return False

    def meet(s1, s2, shared=None):
        (x1, y1), (x2, y2) = s1
        (x3, y3), (x4, y4) = s2
        dx1, dy1, dx2, dy2 = x2 - x1, y2 - y1, x4 - x3, y4 - y3
        den = dx1 * dy2 - dy1 * dx2
        if den != 0:
            u = Fraction((x3 - x1) * dy2 - (y3 - y1) * dx2, den)
            w = Fraction((x3 - x1) * dy1 - (y3 - y1) * dx1, den)
            if not (0 <= u <= 1 and 0 <= w <= 1):
                return False
            if shared is None:
                return True
            pt = (x1 + u * dx1, y1 + u * dy1)
            return pt != shared
        if (x3 - x1) * dy1 - (y3 - y1) * dx1 != 0:
            return False  # parallel, distinct lines
        # collinear: project on the dominant axis of s1
        k = 0 if abs(dx1) >= abs(dy1) else 1
        a0, a1 = sorted((s1[0][k], s1[1][k]))
        b0, b1 = sorted((s2[0][k], s2[1][k]))
        lo, hi = max(a0, b0), min(a1, b1)
        if lo > hi:
            return False
        return shared is None or lo != hi

    for i, j in combinations(range(m), 2):
        shared = None
        if j == i + 1:
            shared = segs[i][1]
        elif i == 0 and j == m - 1:
            shared = segs[0][0]
        if meet(segs[i], segs[j], shared):
            return False
    return True


# -- turning, Gauss-Bonnet -------------------------------------------------


def _signed_angle(u: np.ndarray, w: np.ndarray) -> float:
    cross = u[0] * w[1] - u[1] * w[0]
    dot = u[0] * w[0] + u[1] * w[1]
    ang = math.atan2(cross, dot)
    if abs(ang) >= math.pi - 1e-12:
        raise CornerError("corner tangent anti-parallel to the chord")
    return ang


def corner_angles(c: Curve) -> tuple[float, float]:
    """Exterior angles (alpha1 at t=0, alpha2 at t=1) of ``gamma + chord``."""
    chord = c.points[0] - c.points[-1]
    start = _signed_angle(chord, c.velocities[0])
    end = _signed_angle(c.velocities[-1], chord)
    return start, end


def rotation_angle(c: Curve) -> float:
    """Total turning of the closed curve ``gamma + chord``."""
    lift = lift_tangent(c)
    a1, a2 = corner_angles(c)
    return (lift.end - lift.start) + a1 + a2


def total_curvature(c: Curve) -> float:
    """Composite Simpson quadrature of k ds."""
    return float(simpson(curvatures(c) * c.speed, x=c.params))


def gauss_bonnet_residual(c: Curve) -> float:
    a1, a2 = corner_angles(c)
    return abs(TWO_PI - a1 - a2 - total_curvature(c))


# -- classification --------------------------------------------------------


@dataclass(frozen=True)
class ClassTag:
    tag: str  # "small" | "large" | "neither"
    reasons: tuple[str, ...] = field(default=())


def _inside(theta: float, lo: float, hi: float, eps: float) -> bool:
    return lo + eps < theta < hi - eps


def classify(c: Curve, eps: float = EPS_CLASS) -> ClassTag:
    """Membership in the small / large solution sets (open angle windows)."""
    reasons: list[str] = []
    if not c.endpoints_ok():
        reasons.append("endpoints are not (a,0) and (-a,0)")
    try:
        simple = is_simple_closed(c)
    except DegenerateSegmentError as exc:
        simple = False
        reasons.append(str(exc))
    if not simple:
        reasons.append("gamma + chord is not simple")
    lift = lift_tangent(c, HALF_PI)
    th0, th1 = lift.start, lift.end

    small_fail = []
    if not _inside(th0, HALF_PI, math.pi, eps):
        small_fail.append(f"theta(0)={th0:.9g} not in (pi/2, pi)")
    if not _inside(th1, math.pi, 1.5 * math.pi, eps):
        small_fail.append(f"theta(1)={th1:.9g} not in (pi, 3pi/2)")
    large_fail = []
    if not _inside(th0, -HALF_PI, math.pi, eps):
        large_fail.append(f"theta(0)={th0:.9g} not in (-pi/2, pi)")
    if not _inside(th1, math.pi, 2.5 * math.pi, eps):
        large_fail.append(f"theta(1)={th1:.9g} not in (pi, 5pi/2)")
    if not (_inside(th0, -HALF_PI, HALF_PI, eps) or _inside(th1, 1.5 * math.pi, 2.5 * math.pi, eps)):
        large_fail.append("neither theta(0) in (-pi/2, pi/2) nor theta(1) in (3pi/2, 5pi/2)")

    if not reasons and not small_fail:
        return ClassTag("small")
    if not reasons and not large_fail:
        return ClassTag("large")
    reasons += [f"small: {r}" for r in small_fail] + [f"large: {r}" for r in large_fail]
    return ClassTag("neither", tuple(reasons))


# -- a-priori estimate validators -----------------------------------------


class LemmaCheck(NamedTuple):
    applicable: bool
    holds: bool
    value: float  # min_k, max_k or the nonexistence bound
    reasons: tuple[str, ...] = ()


def _common_hypotheses(c: Curve, theta0_hint: float):
    reasons = []
    k = curvatures(c)
    if not np.all(k > 0):
        reasons.append("curvature not positive everywhere")
    tol = EPS_BC * c.a
    if np.any(np.abs(c.points[0] - (c.a, 0.0)) > tol):
        reasons.append("curve does not start at (a,0)")
    if abs(c.points[-1, 0] + c.a) > tol:
        reasons.append("curve does not end on x = -a")
    lift = lift_tangent(c, theta0_hint)
    if not lift.strictly_increasing():
        reasons.append("tangent lift not strictly increasing")
    return k, lift, reasons


def check_lemma_min_estimate(c: Curve) -> LemmaCheck:
    """min k <= 1/a for convex arcs leaving (a,0) upward-left and arriving at x=-a downward-left."""
    k, lift, reasons = _common_hypotheses(c, HALF_PI)
    if not (HALF_PI - EPS_CLASS <= lift.start < math.pi):
        reasons.append("theta(0) not in [pi/2, pi)")
    if not (math.pi < lift.end <= 1.5 * math.pi + EPS_CLASS):
        reasons.append("theta(end) not in (pi, 3pi/2]")
    k_min = float(k.min())
    return LemmaCheck(not reasons, k_min <= 1.0 / c.a + EPS_LEMMA, k_min, tuple(reasons))


def check_lemma_max_estimate(c: Curve) -> LemmaCheck:
    k, lift, reasons = _common_hypotheses(c, HALF_PI)
    if abs(lift.start - HALF_PI) > EPS_CLASS:
        reasons.append("theta(0) != pi/2")
    b = c.points[-1, 1]
    if b > EPS_BC * c.a:
        if abs(lift.end - 1.5 * math.pi) > EPS_CLASS:
            reasons.append("b > 0 but theta(end) != 3pi/2")
    elif not (math.pi < lift.end <= 1.5 * math.pi + EPS_CLASS):
        reasons.append("b <= 0 but theta(end) not in (pi, 3pi/2]")
    k_max = float(k.max())
    return LemmaCheck(not reasons, k_max >= 1.0 / c.a - EPS_LEMMA, k_max, tuple(reasons))


def check_lemma_nonex(c: Curve) -> LemmaCheck:
    """k_min <= k_max / (a k_max + 1) for curves leaving (a,0) straight down."""
    k, lift, reasons = _common_hypotheses(c, 0.0)
    if abs(c.points[-1, 1]) > EPS_BC * c.a:
        reasons.append("curve does not end at (-a,0)")
    if abs(lift.start + HALF_PI) > EPS_CLASS:
        reasons.append("theta(0) != -pi/2")
    if not (math.pi < lift.end <= 2.5 * math.pi + EPS_CLASS):
        reasons.append("theta(end) not in (pi, 5pi/2]")
    if not reasons:
        try:
            if not is_simple_closed(c):
                reasons.append("gamma + chord is not simple")
        except DegenerateSegmentError as exc:
            reasons.append(str(exc))
    k_min, k_max = float(k.min()), float(k.max())
    bound = k_max / (k_max * c.a + 1.0)
    return LemmaCheck(not reasons, k_min <= bound + EPS_LEMMA, bound, tuple(reasons))


class LengthCheck(NamedTuple):
    holds: bool
    length: float
    bound: float


def check_length_bound(c: Curve, k_inf: float) -> LengthCheck:
    """Arclength against 3 pi / inf k."""
    length = c.length()
    bound = 3.0 * math.pi / k_inf
    return LengthCheck(length <= bound + EPS_LEMMA, length, bound)


# -- CSV -------------------------------------------------------------------

CSV_HEADER = ["t", "x", "y", "vx", "vy"]


def write_curve_csv(c: Curve, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for t, (x, y), (vx, vy) in zip(c.params, c.points, c.velocities):
            w.writerow([format(float(v), ".17g") for v in (t, x, y, vx, vy)])


def read_curve_csv(path, a: Optional[float] = None) -> Curve:
    """Load a ``t,x,y,vx,vy`` file. ``a`` defaults to the first x value."""
    rows = []
    with open(path, newline="") as fh:
        text = fh.read()
    lines = text.splitlines()
    if not lines or [h.strip() for h in lines[0].split(",")] != CSV_HEADER:
        raise CurveFileError("header must be 't,x,y,vx,vy'", 1)
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 5:
            raise CurveFileError(f"expected 5 fields, found {len(parts)}", lineno)
        try:
            rows.append([float(p) for p in parts])
        except ValueError:
            raise CurveFileError("non-numeric field", lineno) from None
    if len(rows) < 2:
        raise CurveFileError("need at least two samples", len(lines))
    arr = np.array(rows)
    if a is None:
        a = float(arr[0, 1])
    return Curve(a, arr[:, 0], arr[:, 1:3], arr[:, 3:5])
