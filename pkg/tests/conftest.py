import numpy as np
import pytest
from scipy.stats import ortho_group

from hyperfine.operators import OperatorTuple


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def commuting_tuple(rng, n, m, eigs=None, spread=1.0):
    """Diagonalizable commuting tuple with known real joint eigenvalues.

    The eigenbasis is an orthogonal matrix times a diagonal with entries
    in [1, 2], so the basis condition number stays below 2.
    """
    if eigs is None:
        eigs = rng.uniform(-spread, spread, (m, n + 1))
    P = ortho_group.rvs(m, random_state=rng) @ np.diag(rng.uniform(1.0, 2.0, m)) if m > 1 else np.eye(1)
    return OperatorTuple.from_joint_eigenvalues(eigs, P), np.asarray(eigs)


def spheres_of(eigs):
    return sorted((float(t[0]), float(np.linalg.norm(t[1:]))) for t in eigs)


_ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance():
    """Record and print one pass/fail line per acceptance criterion."""

    def record(number, title, passed, detail):
        line = f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {title} -- {detail}"
        _ACCEPTANCE_LINES.append(line)
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
