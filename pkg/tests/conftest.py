import numpy as np
import pytest

from gecko.experiments import SolveSettings, solve_pulse


def random_hermitian(rng, N):
    A = rng.normal(size=(N, N)) + 1j * rng.normal(size=(N, N))
    return (A + A.conj().T) / 2


def central_diff(f, x, h):
    """Central finite differences of ``f`` (scalar or array valued) at ``x``."""
    cols = []
    for j in range(x.size):
        e = np.zeros_like(x)
        e[j] = h
        cols.append((np.asarray(f(x + e)) - np.asarray(f(x - e))) / (2 * h))
    return np.stack(cols, axis=-1)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def cz_l4():
    """Converged L=4 CZ solution on tfim1 with h2 = 0."""
    return solve_pulse(SolveSettings(L=4), seed=1)


@pytest.fixture(scope="session")
def cz_l20():
    return solve_pulse(SolveSettings(L=20), seed=0)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
