import math

import pytest

import plateau.solver
from plateau.arcs import make_arc, sample_arc
from plateau.field import FieldBounds, constant_field
from plateau.solver import continue_homotopy

# test builds cross-check variational Jacobians against finite differences
plateau.solver.CHECK_JACOBIAN = True

_ACCEPTANCE_LINES = []


@pytest.fixture
def criterion():
    """Record one pass/fail line per acceptance check, then assert it."""

    def record(name, ok, detail=""):
        line = f"{'PASS' if ok else 'FAIL'}  {name}" + (f"  ({detail})" if detail else "")
        _ACCEPTANCE_LINES.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def small_arc():
    return make_arc("small", 1.0, 0.5)


@pytest.fixture(scope="session")
def large_arc():
    return make_arc("large", 1.0, 0.5)


@pytest.fixture(scope="session")
def small_curve(small_arc):
    return sample_arc(small_arc, 512)


@pytest.fixture(scope="session")
def large_curve(large_arc):
    return sample_arc(large_arc, 512)


@pytest.fixture(scope="session")
def constant_records():
    """Continued solutions for constant k0 in {0.3, 0.5, 0.7, 0.9}, a = 1."""
    out = {}
    for k0 in (0.3, 0.5, 0.7, 0.9):
        f = constant_field(k0)
        b = FieldBounds(k0, k0, (-10.0, -10.0, 10.0, 10.0))
        for branch in ("small", "large"):
            out[k0, branch] = continue_homotopy(f, b, 1.0, branch).record
    return out


def angle_close(a, b, tol=1e-12):
    return abs(math.remainder(a - b, 2 * math.pi)) <= tol
