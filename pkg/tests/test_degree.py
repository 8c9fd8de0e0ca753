import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from plateau.arcs import make_arc
from plateau.degree import (
    SIGMA0,
    DegenerateLinearization,
    SpectralProbe,
    WindowError,
    _det_sign,
    build_linearization,
    dirichlet_spectrum,
    dump_matrix_csv,
    frame_field,
    local_index,
    minus_laplacian,
    quadratic_form_checks,
    shooting_index,
    window_threshold,
)
from plateau.field import constant_field

PI2 = math.pi**2


def fd_eigenvalue(m, n):
    h = 1.0 / (n + 1)
    return 2.0 / h**2 * (1.0 - math.cos(m * math.pi * h))


class TestSpectrum:
    def test_closed_form(self):
        ev = dirichlet_spectrum(n=100)
        assert ev[0] == pytest.approx(fd_eigenvalue(1, 100), rel=1e-12)
        assert ev[0] == pytest.approx(PI2, rel=1e-3)
        assert ev[1] == pytest.approx(4 * PI2, rel=5e-3)
        assert np.all(np.diff(ev) > 0)

    def test_dense_agrees(self):
        ev = np.sort(np.linalg.eigvalsh(minus_laplacian(60)))
        assert ev == pytest.approx(dirichlet_spectrum(n=60), rel=1e-10)

    def test_second_order(self):
        e1 = dirichlet_spectrum(n=100)[0] - PI2
        e2 = dirichlet_spectrum(n=201)[0] - PI2
        assert e1 / e2 == pytest.approx(4.0, rel=0.1)

    def test_small_grid_rejected(self):
        with pytest.raises(ValueError):
            dirichlet_spectrum(n=49)

    @pytest.mark.parametrize("ka", [0.1, 0.5, 0.9, 0.999])
    def test_shifted_first_component(self, ka):
        om = make_arc("small", 1.0, ka).omega
        assert om < math.pi
        assert dirichlet_spectrum(n=200)[0] - om**2 > 0


def _frame_samples(op, a_fn, b_fn):
    t = op.grid
    a, da, dda = a_fn(t)
    b, db, ddb = b_fn(t)
    # phi is the polar angle seen from the arc center
    om = op.speed * 0.5
    phi = op.theta - 0.5 * math.pi
    V, dV, ddV, e, ie = frame_field(om, float(phi[0] - om * t[0]), a, da, dda, b, db, ddb, t)
    return V, dV, ddV, e, ie, om


def _sin(t):
    return np.sin(math.pi * t), math.pi * np.cos(math.pi * t), -PI2 * np.sin(math.pi * t)


def _zero(t):
    z = np.zeros_like(t)
    return z, z, z


@pytest.fixture(scope="module")
def op(constant_records):
    return build_linearization(constant_field(0.5), constant_records[0.5, "small"], 200)


class TestLinearization:
    def test_constant_field_has_no_zeroth_order(self, op):
        assert np.all(op.C == 0.0)

    def test_first_component(self, op):
        V, dV, ddV, e, ie, om = _frame_samples(op, _sin, _zero)
        assert om == pytest.approx(math.pi / 3, abs=1e-10)
        out = op.apply(V, dV, ddV)
        first = np.einsum("ni,ni->n", out, e)
        second = np.einsum("ni,ni->n", out, ie)
        s = np.sin(math.pi * op.grid)
        assert np.max(np.abs(first - (PI2 - om**2) * s)) < 1e-7
        assert np.max(np.abs(second + om * math.pi * np.cos(math.pi * op.grid))) < 1e-7

    def test_second_component(self, op):
        V, dV, ddV, e, ie, om = _frame_samples(op, _zero, _sin)
        out = op.apply(V, dV, ddV)
        assert np.max(np.abs(np.einsum("ni,ni->n", out, e))) < 1e-7
        assert np.max(np.abs(np.einsum("ni,ni->n", out, ie) - PI2 * np.sin(math.pi * op.grid))) < 1e-7

    def test_zero(self, op):
        z = np.zeros((op.n, 2))
        assert np.all(op.apply(z, z, z) == 0.0)

    def test_matrix_consistent(self, constant_records):
        # finite-difference matrix against the exact action, O(h^2)
        errs = []
        for n in (100, 201):
            op = build_linearization(constant_field(0.5), constant_records[0.5, "large"], n)
            V, dV, ddV, _, _, _ = _frame_samples(op, _sin, _sin)
            exact = op.apply(V, dV, ddV)
            approx = (op.matrix() @ V.ravel()).reshape(-1, 2)
            errs.append(np.max(np.abs(approx - exact)))
        assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.15)

    def test_small_grid_rejected(self, constant_records):
        with pytest.raises(ValueError):
            build_linearization(constant_field(0.5), constant_records[0.5, "small"], 40)

    def test_dump(self, tmp_path, op):
        p = tmp_path / "m.csv"
        M = op.matrix()[:6, :6]
        dump_matrix_csv(M, p)
        lines = p.read_text().splitlines()
        assert lines[0] == "i,j,value"
        assert len(lines) - 1 == np.count_nonzero(M)
        i, j, val = lines[1].split(",")
        assert float(val) == M[int(i), int(j)]


class TestIndex:
    def test_calibration_point(self, constant_records):
        rec = constant_records[0.5, "small"]
        assert np.linalg.det(rec.jacobian) < 0 and SIGMA0 == -1
        assert local_index(constant_field(0.5), rec) == 1
        assert shooting_index(constant_field(0.5), rec) == 1

    @pytest.mark.parametrize("k0", [0.3, 0.5, 0.7, 0.9])
    def test_indices(self, constant_records, k0):
        for branch, want in (("small", 1), ("large", -1)):
            rec = constant_records[k0, branch]
            for n in (100, 200, 400):
                assert local_index(constant_field(k0), rec, n) == want
            rec_jac = rec.jacobian
            rec.jacobian = None  # recompute from the shooting map
            try:
                assert shooting_index(constant_field(k0), rec) == want
            finally:
                rec.jacobian = rec_jac

    def test_degenerate(self):
        M = np.eye(4)
        M[3, 3] = 1e-14
        with pytest.raises(DegenerateLinearization):
            _det_sign(M)

    def test_det_sign(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            M = rng.normal(size=(6, 6))
            assert _det_sign(M) == int(np.sign(np.linalg.det(M)))


class TestQuadraticForms:
    def probe(self, ka=0.9, **kw):
        arc = make_arc("large", 1.0, ka)
        return SpectralProbe(arc.omega, arc.alpha0, **kw)

    @pytest.mark.parametrize("lam", [0.5, 1.0, 2.0])
    def test_q22(self, lam):
        q = quadratic_form_checks(self.probe(amplitude=lam))
        om = make_arc("large", 1.0, 0.9).omega
        assert q["Q22"] == pytest.approx(0.5 * lam**2 * (PI2 - om**2), abs=1e-6)
        # 30-digit evaluation of (pi^2 - omega_b^2)/2 at k0 a = 0.9
        assert q["Q22"] / lam**2 == pytest.approx(-3.2407354069405, abs=1e-6)
        assert q["Q22"] < 0

    def test_q11_q12(self):
        q = quadratic_form_checks(self.probe())
        assert abs(q["u1_residual"]) < 1e-13
        assert q["Q11"] > 0
        assert abs(q["Q12"]) < 1e-10
        assert q["Q11"] >= q["Q11_lower"] - 1e-10 > 0

    @settings(max_examples=20, deadline=None)
    @given(
        st.floats(0.8, 0.99),
        st.lists(st.floats(-1, 1), min_size=1, max_size=5),
        st.lists(st.floats(-1, 1), min_size=0, max_size=5),
    )
    def test_q11_positive_on_u1(self, ka, alpha, beta):
        # alpha orthogonal to sin(pi t): no m=1 coefficient
        alpha = [0.0, *alpha]
        if max(map(abs, alpha + beta)) < 1e-3:
            return
        q = quadratic_form_checks(self.probe(ka, alpha=tuple(alpha), beta=tuple(beta)))
        assert q["Q11"] > 0
        assert q["Q11"] >= q["Q11_lower"] - 1e-9
        assert abs(q["Q12"]) < 1e-10

    def test_window(self):
        thr = window_threshold()
        assert thr == pytest.approx(0.7956, abs=1e-4)
        for ka in np.linspace(thr - 0.01, thr + 0.01, 21):
            om = make_arc("large", 1.0, ka).omega
            if abs(ka - thr) < 1e-12:
                continue
            assert (om < math.sqrt(2) * math.pi) == (ka > thr)
        with pytest.raises(WindowError):
            quadratic_form_checks(self.probe(thr - 0.01))
        quadratic_form_checks(self.probe(thr + 0.01))
        with pytest.raises(WindowError):
            quadratic_form_checks(SpectralProbe(make_arc("small", 1.0, 0.9).omega, 0.45))
