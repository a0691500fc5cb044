import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import HealthCheck, settings

from onoff_ising.core import BINARY, SPIN, IsingProblem

settings.register_profile(
    "default", deadline=None, max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


def random_problem(n, seed, density=0.5, integer=True, bias=False, diagonal=False, domain=SPIN):
    rng = np.random.default_rng(seed)
    mask = np.triu(rng.random((n, n)) < density, 1)
    if integer:
        w = rng.integers(-3, 4, (n, n)).astype(float)
    else:
        w = rng.normal(size=(n, n))
    q = np.where(mask, w, 0.0)
    q = q + q.T
    if diagonal:
        q[np.diag_indices(n)] = rng.integers(-2, 3, n) if integer else rng.normal(size=n)
    b = None
    if bias:
        b = rng.integers(-2, 3, n).astype(float) if integer else rng.normal(size=n)
    return IsingProblem(sp.csr_matrix(q), b, domain)


def random_state(problem, rng):
    if problem.domain == BINARY:
        return rng.integers(0, 2, problem.dim).astype(np.int8)
    return rng.choice(np.array([-1, 1], dtype=np.int8), problem.dim)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
