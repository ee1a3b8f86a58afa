import numpy as np
import pytest

from stiefel_flows.algebra import basis

# criterion number -> (passed, detail); printed at the end of the session
ACCEPTANCE = {}


def record_criterion(number, title, passed, detail):
    ACCEPTANCE[number] = (title, bool(passed), detail)
    print(f"criterion {number} [{title}]: {'PASS' if passed else 'FAIL'} - {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        title, ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"{k}. {'PASS' if ok else 'FAIL'}  {title}: {detail}")


@pytest.fixture
def rng():
    return np.random.default_rng(20261015)


def E(n, i):
    return basis(n, i)


def random_skew(rng, n, scale=1.0):
    g = rng.standard_normal((n, n)) * scale
    return g - g.T


def random_unit(rng, n):
    v = rng.standard_normal(n)
    return v / np.linalg.norm(v)
