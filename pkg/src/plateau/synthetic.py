"""Convex test curves built from circular arcs.

A chain starts at (a, 0) with tangent angle ``thetas[0]`` and turns through
``thetas[j-1] -> thetas[j]`` on an arc of radius ``radii[j-1]``. Everything
about it is known in closed form, which makes it a brute-force oracle for
the a-priori estimate validators: hypotheses can be read off the angles and
radii directly instead of from samples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import geometry as geo
from .geometry import Curve


@dataclass(frozen=True)
class ArcChain:
    a: float
    thetas: tuple[float, ...]
    radii: tuple[float, ...]

    def __post_init__(self):
        if len(self.thetas) != len(self.radii) + 1:
            raise ValueError("need one radius per arc")
        if any(r <= 0 for r in self.radii) or any(np.diff(self.thetas) <= 0):
            raise ValueError("radii must be positive and angles increasing")

    @property
    def curvatures(self) -> np.ndarray:
        return 1.0 / np.asarray(self.radii)

    @property
    def lengths(self) -> np.ndarray:
        return np.diff(self.thetas) * np.asarray(self.radii)

    @property
    def length(self) -> float:
        return float(self.lengths.sum())

    def endpoint(self) -> tuple[float, float]:
        th, r = np.asarray(self.thetas), np.asarray(self.radii)
        x = self.a + float(np.sum(r * (np.sin(th[1:]) - np.sin(th[:-1]))))
        y = float(np.sum(r * (np.cos(th[:-1]) - np.cos(th[1:]))))
        return x, y

    def sample(self, n: int) -> Curve:
        t = np.linspace(0.0, 1.0, n)
        L = self.length
        s = t * L
        bounds = np.concatenate(([0.0], np.cumsum(self.lengths)))
        piece = np.clip(np.searchsorted(bounds, s, side="right") - 1, 0, len(self.radii) - 1)
        th = np.asarray(self.thetas)
        r = np.asarray(self.radii)
        # start point of every piece
        starts = np.zeros((len(r) + 1, 2))
        starts[0] = (self.a, 0.0)
        starts[1:, 0] = self.a + np.cumsum(r * (np.sin(th[1:]) - np.sin(th[:-1])))
        starts[1:, 1] = np.cumsum(r * (np.cos(th[:-1]) - np.cos(th[1:])))
        theta = th[piece] + (s - bounds[piece]) / r[piece]
        theta[-1] = th[-1]
        x = starts[piece, 0] + r[piece] * (np.sin(theta) - np.sin(th[piece]))
        y = starts[piece, 1] + r[piece] * (np.cos(th[piece]) - np.cos(theta))
        vel = L * np.column_stack([np.cos(theta), np.sin(theta)])
        acc = (L * L / r[piece])[:, None] * np.column_stack([-np.sin(theta), np.cos(theta)])
        return Curve(self.a, t, np.column_stack([x, y]), vel, acc)


def solve_radii(a: float, thetas: Sequence[float], free: Sequence[float],
                end_y: Optional[float] = None) -> Optional[tuple[float, ...]]:
    """Complete ``free`` radii so the chain ends on x = -a (and y = end_y).

    One radius is solved for when ``end_y`` is None, two otherwise. Returns
    None if the solution is not positive.
    """
    th = np.asarray(thetas, dtype=float)
    dsin = np.sin(th[1:]) - np.sin(th[:-1])
    dcos = np.cos(th[:-1]) - np.cos(th[1:])
    m = len(free)
    fr = np.asarray(free, dtype=float)
    rx = -2.0 * a - float(np.dot(dsin[:m], fr))
    if end_y is None:
        if dsin[m] == 0:
            return None
        last = rx / dsin[m]
        solved = [last]
    else:
        ry = end_y - float(np.dot(dcos[:m], fr))
        A = np.array([[dsin[m], dsin[m + 1]], [dcos[m], dcos[m + 1]]])
        if abs(np.linalg.det(A)) < 1e-12:
            return None
        solved = list(np.linalg.solve(A, [rx, ry]))
    if min(solved) <= 0:
        return None
    return tuple(fr) + tuple(float(v) for v in solved)


# -- generators for each estimate's hypotheses -----------------------------


def _angles(rng, start: float, end: float, pieces: int) -> tuple[float, ...]:
    inner = np.sort(rng.uniform(start, end, pieces - 1))
    return (start, *inner, end)


def min_estimate_chain(rng: np.random.Generator, pieces: Optional[int] = None) -> ArcChain:
    """Convex chain with theta(0) in [pi/2, pi), theta(end) in (pi, 3pi/2], ending on x = -a."""
    while True:
        p = pieces or int(rng.integers(1, 4))
        a = float(rng.uniform(0.5, 2.0))
        th0 = float(rng.uniform(0.5 * math.pi, math.pi))
        th1 = float(math.pi + rng.uniform(0.02, 0.5 * math.pi))
        thetas = _angles(rng, th0, th1, p)
        free = rng.uniform(0.2, 3.0, p - 1) * a
        radii = solve_radii(a, thetas, free)
        if radii is not None:
            return ArcChain(a, thetas, radii)


def max_estimate_chain(rng: np.random.Generator, pieces: Optional[int] = None) -> ArcChain:
    """Convex chain leaving (a, 0) straight up, meeting the hypotheses on theta(end)
    for its end height b: theta(end) = 3pi/2 if b > 0, else in (pi, 3pi/2]."""
    while True:
        p = pieces or int(rng.integers(1, 4))
        a = float(rng.uniform(0.5, 2.0))
        th1 = 1.5 * math.pi if rng.random() < 0.5 else float(math.pi + rng.uniform(0.02, 0.5 * math.pi))
        thetas = _angles(rng, 0.5 * math.pi, th1, p)
        free = rng.uniform(0.2, 3.0, p - 1) * a
        radii = solve_radii(a, thetas, free)
        if radii is None:
            continue
        chain = ArcChain(a, thetas, radii)
        b = chain.endpoint()[1]
        if b > 0 and th1 != 1.5 * math.pi:
            continue
        return chain


def nonex_chain(rng: np.random.Generator, pieces: Optional[int] = None,
                n_check: int = 600) -> ArcChain:
    """Chain from (a, 0) heading straight down to (-a, 0) whose closure by
    the chord is simple, with theta(end) in (pi, 5pi/2]."""
    while True:
        p = pieces or int(rng.integers(2, 5))
        a = float(rng.uniform(0.5, 2.0))
        th1 = float(rng.uniform(math.pi + 0.05, 2.5 * math.pi))
        thetas = _angles(rng, -0.5 * math.pi, th1, p)
        free = rng.uniform(0.05, 3.0, p - 2) * a
        radii = solve_radii(a, thetas, free, end_y=0.0)
        if radii is None:
            continue
        chain = ArcChain(a, thetas, radii)
        if geo.is_simple_closed(chain.sample(n_check)):
            return chain


def half_circle(a: float, n: int = 400) -> Curve:
    """Upper half circle of radius a from (a, 0) to (-a, 0)."""
    return ArcChain(a, (0.5 * math.pi, 1.5 * math.pi), (a,)).sample(n)


def two_arc_nonex(a: float, k_max: float, n: int = 800) -> ArcChain:
    """The extremal curve for the nonexistence bound.

    Lower half circle of curvature k_max to the right of (a, 0), then the
    upper half circle of radius a + 1/k_max back to (-a, 0); its minimum
    curvature equals k_max / (a k_max + 1) exactly.
    """
    r1 = 1.0 / k_max
    return ArcChain(a, (-0.5 * math.pi, 0.5 * math.pi, 1.5 * math.pi), (r1, a + r1))
