"""Linearization about a solution and its Leray-Schauder local index.

Perturbing a solution gamma by V in the equation
``-gamma'' + |gamma'| k(gamma, t) J gamma' = 0`` gives the linear operator::

    -V'' + B(t) V' + C(t) V,
    B = k v (J u u^T + J),    C = v (J u) (grad k)^T,

where v = |gamma'| and u = gamma'/v. Its index is the sign of
det(M) / det(M0) for the block finite-difference matrix M with Dirichlet
conditions and M0 the matrix of -V'' alone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.linalg import eigh_tridiagonal, lu_factor

from .solver import FieldLike, SolutionRecord, as_homotopy, shooting_map, trajectory_state

J = np.array([[0.0, -1.0], [1.0, 0.0]])

# Orientation of the shooting determinant relative to the local index. Fixed
# once so that the constant-field small branch at k0 a = 0.5 has index +1
# (there det d(miss)/d(theta0, v) < 0); every other case is a prediction.
SIGMA0 = -1

DEGENERACY = 1e-10


class DegenerateLinearization(Exception):
    """The linearization is numerically singular (solution at a fold)."""


class WindowError(ValueError):
    """omega outside (pi, sqrt(2) pi)."""


@dataclass(frozen=True, eq=False)
class LinearizedOperator:
    grid: np.ndarray  # interior points j h, j = 1..n, h = 1/(n+1)
    B: np.ndarray  # (n, 2, 2)
    C: np.ndarray  # (n, 2, 2)
    theta: np.ndarray  # tangent angle of the solution on the grid
    speed: float

    @property
    def n(self) -> int:
        return self.grid.shape[0]

    @property
    def h(self) -> float:
        return 1.0 / (self.n + 1)

    def apply(self, V: np.ndarray, dV: np.ndarray, ddV: np.ndarray) -> np.ndarray:
        """Pointwise action -V'' + B V' + C V for exact samples on the grid."""
        return -ddV + np.einsum("nij,nj->ni", self.B, dV) + np.einsum("nij,nj->ni", self.C, V)

    def matrix(self) -> np.ndarray:
        n, h = self.n, self.h
        M = np.zeros((2 * n, 2 * n))
        eye = np.eye(2)
        for j in range(n):
            r = slice(2 * j, 2 * j + 2)
            M[r, r] = 2.0 / h**2 * eye + self.C[j]
            if j > 0:
                M[r, 2 * j - 2 : 2 * j] = -eye / h**2 - self.B[j] / (2 * h)
            if j < n - 1:
                M[r, 2 * j + 2 : 2 * j + 4] = -eye / h**2 + self.B[j] / (2 * h)
        return M


def dump_matrix_csv(M: np.ndarray, path) -> None:
    """Write the nonzero entries of M as ``i,j,value`` rows (row-major)."""
    with open(path, "w") as fh:
        fh.write("i,j,value\n")
        for i, j in zip(*np.nonzero(M)):
            fh.write(f"{i},{j},{M[i, j]:.17g}\n")


def minus_laplacian(n: int, blocks: int = 1) -> np.ndarray:
    """Dense 3-point -D^2 on n interior points, acting on ``blocks`` components."""
    h = 1.0 / (n + 1)
    T = (np.diag(np.full(n, 2.0)) - np.diag(np.ones(n - 1), 1) - np.diag(np.ones(n - 1), -1)) / h**2
    return np.kron(T, np.eye(blocks))


def build_linearization(field: FieldLike, record: SolutionRecord, n: int = 200) -> LinearizedOperator:
    if n < 50:
        raise ValueError("need at least 50 grid points")
    f = as_homotopy(field)
    grid = np.arange(1, n + 1) / (n + 1)
    state = trajectory_state(f, record.a, record.vars, grid)
    v = record.vars.v
    B = np.empty((n, 2, 2))
    C = np.empty((n, 2, 2))
    for j, ((x, y, th), t) in enumerate(zip(state, grid)):
        u = np.array([math.cos(th), math.sin(th)])
        Ju = J @ u
        k = f.value(x, y, t)
        gk = np.array(f.grad(x, y, t))
        B[j] = k * v * (np.outer(Ju, u) + J)
        C[j] = v * np.outer(Ju, gk)
    return LinearizedOperator(grid, B, C, state[:, 2].copy(), v)


def dirichlet_spectrum(op: Optional[LinearizedOperator] = None, n: int = 200) -> np.ndarray:
    """Eigenvalues sorted by real part.

    Without ``op`` this is the spectrum of the 3-point -D^2 on ``n``
    interior points (exactly (2/h^2)(1 - cos(m pi h))).
    """
    if op is None:
        if n < 50:
            raise ValueError("need at least 50 grid points")
        h = 1.0 / (n + 1)
        return eigh_tridiagonal(np.full(n, 2.0 / h**2), np.full(n - 1, -1.0 / h**2), eigvals_only=True)
    ev = np.linalg.eigvals(op.matrix())
    return ev[np.lexsort((ev.imag, ev.real))]


def _det_sign(M: np.ndarray) -> int:
    lu, piv = lu_factor(M, check_finite=True)
    d = np.abs(np.diag(lu))
    if d.min() == 0.0 or d.min() < DEGENERACY * math.exp(np.mean(np.log(d))):
        raise DegenerateLinearization(f"pivot {d.min():.3g} below threshold")
    swaps = int(np.count_nonzero(piv != np.arange(len(piv))))
    return int(np.prod(np.sign(np.diag(lu)))) * (-1) ** swaps


def local_index(field: FieldLike, record: SolutionRecord, n: int = 200) -> int:
    op = build_linearization(field, record, n)
    return _det_sign(op.matrix()) * _det_sign(minus_laplacian(n, 2))


def shooting_index(field: FieldLike, record: SolutionRecord) -> int:
    jac = record.jacobian
    if jac is None:
        jac = shooting_map(field, record.a, record.vars).jacobian
    det = float(np.linalg.det(jac))
    if abs(det) < 1e-12 * float(np.sum(jac**2)):
        raise DegenerateLinearization(f"shooting Jacobian singular (det={det:.3g})")
    return SIGMA0 * (1 if det > 0 else -1)


# -- quadratic forms on the large-branch linearization ---------------------


@dataclass(frozen=True)
class SpectralProbe:
    """Test perturbations in the rotating frame e^{i phi}, phi = alpha0 + omega t.

    ``alpha`` and ``beta`` are sine-series coefficients (index m -> sin(m pi t),
    starting at m = 1) of the V1 components; V2 = amplitude sin(pi t) e^{i phi}.
    """

    omega: float
    alpha0: float
    amplitude: float = 1.0
    lambda_h: float = -1.0
    alpha: Sequence[float] = (0.0, 1.0)
    beta: Sequence[float] = ()


def _sine_series(coeffs: Sequence[float], t: np.ndarray):
    f = np.zeros_like(t)
    df = np.zeros_like(t)
    ddf = np.zeros_like(t)
    for m, c in enumerate(coeffs, start=1):
        w = m * math.pi
        f += c * np.sin(w * t)
        df += c * w * np.cos(w * t)
        ddf -= c * w * w * np.sin(w * t)
    return f, df, ddf


def quadrature_nodes(panels: int = 64, order: int = 12):
    """Composite Gauss-Legendre nodes and weights on [0, 1]."""
    x, w = leggauss(order)
    edges = np.linspace(0.0, 1.0, panels + 1)
    mid = 0.5 * (edges[1:] + edges[:-1])
    half = 0.5 * np.diff(edges)
    t = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    wt = (half[:, None] * w[None, :]).ravel()
    return t, wt


def frame_field(omega: float, alpha0: float, a, da, dda, b, db, ddb, t):
    """V = a e^{i phi} + b i e^{i phi} and its first two derivatives in Cartesian form."""
    phi = alpha0 + omega * t
    e = np.stack([np.cos(phi), np.sin(phi)], axis=-1)
    ie = np.stack([-np.sin(phi), np.cos(phi)], axis=-1)
    # d e/dt = omega ie,  d ie/dt = -omega e
    V = a[:, None] * e + b[:, None] * ie
    dV = (da - omega * b)[:, None] * e + (db + omega * a)[:, None] * ie
    ddV = (dda - 2 * omega * db - omega**2 * a)[:, None] * e + (ddb + 2 * omega * da - omega**2 * b)[:, None] * ie
    return V, dV, ddV, e, ie


def frame_operator(omega: float, lambda_h: float, dV, ddV, e, ie) -> np.ndarray:
    """-V'' - (1-lam) omega <i e^{i phi}, V'> e^{i phi} + (1+lam) omega J V'."""
    proj = np.einsum("ni,ni->n", ie, dV)
    JdV = dV @ J.T
    return -ddV - (1 - lambda_h) * omega * proj[:, None] * e + (1 + lambda_h) * omega * JdV


def quadratic_form_checks(probe: SpectralProbe, panels: int = 64, order: int = 12) -> dict:
    """L2 pairings <-D^2 A V_i, V_j> of the operator A_{lambda_h} for V1 and V2.

    Returns Q22, Q11, Q12, the lower bound for Q11 valid when V1 is
    orthogonal to sin(pi t) in its first component, and that orthogonality
    residual.
    """
    om = probe.omega
    if not math.pi < om < math.sqrt(2.0) * math.pi:
        raise WindowError(f"omega={om!r} outside (pi, sqrt(2) pi)")
    t, w = quadrature_nodes(panels, order)

    zero = np.zeros_like(t)
    s1 = np.sin(math.pi * t)
    V2, dV2, ddV2, e, ie = frame_field(
        om, probe.alpha0, probe.amplitude * s1, probe.amplitude * math.pi * np.cos(math.pi * t),
        -probe.amplitude * math.pi**2 * s1, zero, zero, zero, t)
    a, da, dda = _sine_series(probe.alpha, t)
    b, db, ddb = _sine_series(probe.beta, t)
    V1, dV1, ddV1, _, _ = frame_field(om, probe.alpha0, a, da, dda, b, db, ddb, t)

    AV1 = frame_operator(om, probe.lambda_h, dV1, ddV1, e, ie)
    AV2 = frame_operator(om, probe.lambda_h, dV2, ddV2, e, ie)

    def pair(F, G):
        return float(np.sum(w * np.einsum("ni,ni->n", F, G)))

    return {
        "Q22": pair(AV2, V2),
        "Q11": pair(AV1, V1),
        "Q12": pair(AV1, V2),
        "Q11_lower": float(np.sum(w * ((4 * math.pi**2 - 2 * om**2) * a**2 + om**2 * b**2))),
        "u1_residual": float(np.sum(w * a * s1)),
    }


def window_threshold() -> float:
    """k0 a above which omega_b = pi + 2 arccos(k0 a) < sqrt(2) pi."""
    return math.cos((math.sqrt(2.0) - 1.0) * math.pi / 2.0)
