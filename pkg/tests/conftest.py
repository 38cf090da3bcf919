import numpy as np
import pytest

from gensns.constraints import GeneralizedBounds
from gensns.sns import TaskSpec


def random_instance(rng, n=None, m=None, n_cart=None, speed=(0.5, 4.0)):
    """Random SNS instance: identity rows plus ``n_cart`` dense Cartesian-like rows."""
    n = int(rng.integers(3, 7)) if n is None else n
    m = int(rng.integers(1, 3)) if m is None else m
    c = int(rng.integers(0, 3)) if n_cart is None else n_cart
    J = rng.normal(size=(m, n))
    A = np.vstack([np.eye(n), rng.normal(size=(c, n))])
    rows = n + c
    b_min = -rng.uniform(0.2, 1.5, rows)
    b_max = rng.uniform(0.2, 1.5, rows)
    xdot = rng.normal(size=m) * rng.uniform(*speed)
    return TaskSpec(xdot, J), A, GeneralizedBounds(b_min, b_max)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in RESULTS:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
