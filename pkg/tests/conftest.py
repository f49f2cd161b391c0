import numpy as np
import pytest

from dgap import builtin
from dgap.gap import VIProblem
from dgap.geometry import ConvexSet

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture
def affine():
    return builtin("affine_pd")


@pytest.fixture
def li_ng():
    return builtin("li_ng")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def cosine_free_problem():
    """F = (cos x1, x2) on R^2: the origin is stationary for f_ab but F(0) != 0."""

    def f(X):
        X = np.asarray(X, dtype=float)
        return np.stack([np.cos(X[..., 0]), X[..., 1]], axis=-1)

    def jac(x):
        return np.array([[-np.sin(x[0]), 0.0], [0.0, 1.0]])

    return VIProblem(name="cos_free", dim=2, set=ConvexSet.free(2), f_eval=f, jacobian=jac,
                     b_jacobian=lambda x: [jac(x)], lipschitz_L=1.0)


def constant_free_problem(c=(1.0, 0.0)):
    c = np.asarray(c, dtype=float)
    Z = np.zeros((c.size, c.size))
    return VIProblem(name="const_free", dim=c.size, set=ConvexSet.free(c.size),
                     f_eval=lambda X: np.broadcast_to(c, np.shape(X)).copy(),
                     jacobian=lambda x: Z, b_jacobian=lambda x: [Z], lipschitz_L=0.0)
