"""Closed-form constant-curvature solutions.

For constant curvature k0 with 0 < k0 a < 1 the simple solutions are the
minor ("small") and major ("large") counterclockwise arcs of the circle of
radius 1/k0 through (a, 0) and (-a, 0)::

    small:  gamma(t) = e^{i(alpha0 + w t)}/k0 - i sin(alpha0)/k0,   w = pi - 2 alpha0
    large:  gamma(t) = e^{i(-alpha0 + w t)}/k0 + i sin(alpha0)/k0,  w = pi + 2 alpha0

with alpha0 = arccos(k0 a).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .geometry import Curve

BRANCHES = ("small", "large")


class ShootingVars(NamedTuple):
    """Initial tangent angle and constant speed (= curve length)."""

    theta0: float
    v: float


@dataclass(frozen=True)
class AnalyticArc:
    branch: str
    a: float
    k0: float
    alpha0: float
    omega: float
    center: tuple[float, float]
    radius: float

    @property
    def phase0(self) -> float:
        """Angle of the start point seen from the center."""
        return self.alpha0 if self.branch == "small" else -self.alpha0

    @property
    def length(self) -> float:
        return self.omega / self.k0


def make_arc(branch: str, a: float, k0: float) -> AnalyticArc:
    if branch not in BRANCHES:
        raise ValueError(f"branch must be 'small' or 'large', not {branch!r}")
    if a <= 0:
        raise ValueError("a must be positive")
    if not 0.0 < k0 * a < 1.0:
        raise ValueError(f"k0*a = {k0 * a!r} outside (0, 1): no simple arc of this curvature joins (a,0) and (-a,0)")
    alpha0 = math.acos(k0 * a)
    r = 1.0 / k0
    if branch == "small":
        omega = math.pi - 2.0 * alpha0
        center = (0.0, -math.sin(alpha0) * r)
    else:
        omega = math.pi + 2.0 * alpha0
        center = (0.0, math.sin(alpha0) * r)
    return AnalyticArc(branch, a, k0, alpha0, omega, center, r)


def arc_state(arc: AnalyticArc, t):
    """Exact position, velocity and acceleration at parameters ``t``."""
    t = np.asarray(t, dtype=float)
    phi = arc.phase0 + arc.omega * t
    e = np.stack([np.cos(phi), np.sin(phi)], axis=-1)
    ie = np.stack([-np.sin(phi), np.cos(phi)], axis=-1)
    pos = arc.radius * e + np.asarray(arc.center)
    vel = arc.radius * arc.omega * ie
    acc = -arc.radius * arc.omega**2 * e
    return pos, vel, acc


def sample_arc(arc: AnalyticArc, n: int) -> Curve:
    if n < 2:
        raise ValueError("n must be at least 2")
    t = np.linspace(0.0, 1.0, n)
    pos, vel, acc = arc_state(arc, t)
    # snap the endpoints onto (+-a, 0); they differ from the formula by roundoff only
    pos[0] = (arc.a, 0.0)
    pos[-1] = (-arc.a, 0.0)
    return Curve(arc.a, t, pos, vel, acc)


def arc_shooting_vars(arc: AnalyticArc) -> ShootingVars:
    theta0 = arc.phase0 + 0.5 * math.pi
    # normalize into [-pi/2, 3pi/2)
    theta0 = (theta0 + 0.5 * math.pi) % (2.0 * math.pi) - 0.5 * math.pi
    return ShootingVars(theta0, arc.length)
