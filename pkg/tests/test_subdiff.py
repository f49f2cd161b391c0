import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import constant_free_problem, cosine_free_problem
from dgap import builtin
from dgap.errors import CapabilityError, InputError
from dgap.gap import GapParams, d_gap, fab_value, regularized_gap
from dgap.subdiff import (
    central_fd_gradient,
    clarke_generators,
    fd_directional,
    grad_fab,
    grad_fc,
    min_norm_in_hull,
    mu_estimate,
    solution_characterization,
    subderivative_fab,
)


def frank_wolfe(P, iters=2000):
    """Independent upper bound on the min norm: Frank-Wolfe with exact line search."""
    x = P[0].copy()
    for _ in range(iters):
        s = P[np.argmin(P @ x)]
        d = s - x
        dd = d @ d
        if dd == 0:
            break
        g = min(max(-(x @ d) / dd, 0.0), 1.0)
        x = x + g * d
    return np.linalg.norm(x)


@settings(max_examples=80, deadline=None)
@given(m=st.integers(1, 7), dim=st.integers(1, 4), seed=st.integers(0, 2**31))
def test_min_norm_optimality(m, dim, seed):
    P = np.random.default_rng(seed).normal(size=(m, dim)) * 3
    dist, lam = min_norm_in_hull(P)
    assert np.all(lam >= 0) and lam.sum() == pytest.approx(1.0)
    p = lam @ P
    assert np.linalg.norm(p) == pytest.approx(dist, abs=1e-12)
    # optimality: <p, g_i> >= ||p||^2 for every generator
    assert np.all(P @ p >= p @ p - 1e-9 * (1 + np.abs(P).max() ** 2))
    assert dist <= frank_wolfe(P) + 1e-9


def test_min_norm_segment():
    dist, lam = min_norm_in_hull([[1.0, 1.0], [1.0, -1.0]])
    assert dist == pytest.approx(1.0) and np.allclose(lam, [0.5, 0.5])
    dist, _ = min_norm_in_hull([[2.0, 0.0], [3.0, 0.0]])
    assert dist == pytest.approx(2.0)
    with pytest.raises(InputError):
        min_norm_in_hull(np.zeros((0, 2)))


def test_grad_affine_closed_form(affine, rng):
    # grad f_ab = (b-a)/(ab) A^T (Ax + q)
    A, q = affine.meta["A"], affine.meta["q"]
    params = GapParams(1, 2)
    for x in rng.normal(size=(50, 2)) * 2:
        assert np.allclose(grad_fab(affine, params, x), 0.5 * A.T @ (A @ x + q), atol=1e-12)


@pytest.mark.parametrize("name", ["affine_pd", "li_ng", "identity_free"])
def test_grad_vs_finite_differences(name, rng):
    p = builtin(name)
    params = p.default_params
    f = lambda y: fab_value(p, params, y)
    done = 0
    while done < 200:
        x = rng.uniform(-2, 2, size=2)
        if p.jac(x) is None:
            continue
        g = grad_fab(p, params, x)
        assert np.linalg.norm(g - central_fd_gradient(f, x, 1e-6)) <= 1e-5 * (1 + np.linalg.norm(g))
        done += 1


def test_grad_fc_vs_finite_differences(li_ng, rng):
    for x in rng.uniform(-2, 2, size=(50, 2)):
        for c in (0.5, 2.0):
            g = grad_fc(li_ng, c, x)
            fd = central_fd_gradient(lambda y: regularized_gap(li_ng, c, y)[0], x)
            assert np.linalg.norm(g - fd) <= 1e-5 * (1 + np.linalg.norm(g))


def test_grad_needs_jacobian(li_ng):
    with pytest.raises(CapabilityError):
        grad_fab(li_ng, GapParams(0.5, 1), [0.0, 1.0])
    with pytest.raises(CapabilityError):
        subderivative_fab(li_ng, GapParams(0.5, 1), [1.0, 0.0], [1.0, 0.0])


def test_kink_generators(li_ng):
    params = GapParams(0.5, 1.0)
    x = np.array([1.0, 0.0])
    sg = clarke_generators(li_ng, params, x)
    assert len(sg.generators) == 2
    assert sg.hull_dist_zero <= min(np.linalg.norm(g) for g in sg.generators) + 1e-15
    # each generator is a one-sided limit of gradients
    for s in (1e-9, -1e-9):
        g = grad_fab(li_ng, params, x + [0.0, s])
        assert min(np.linalg.norm(g - z) for z in sg.generators) < 1e-6


def test_subderivative_vs_fd(rng):
    for name in ("affine_pd", "li_ng"):
        p = builtin(name)
        params = p.default_params
        for _ in range(30):
            x = rng.uniform(-2, 2, size=2)
            w = rng.normal(size=2)
            exact = subderivative_fab(p, params, x, w)
            assert fd_directional(p, params, x, w, t_min=1e-9, t_max=1e-6) == pytest.approx(exact, abs=1e-5)


def test_solution_characterization_cases():
    co = builtin("constant_orthant")
    sc = solution_characterization(co, GapParams(1, 2), [-1.0, -1.0])
    assert not sc.zero_in_subdiff and sc.projections_equal and not sc.is_solution
    assert sc.hull_dist_zero == pytest.approx(math.sqrt(2), abs=1e-12)

    for name, x in [("affine_pd", [1, 1]), ("li_ng", [0, 0]), ("constant_orthant", [0, 0]), ("identity_free", [0, 0])]:
        p = builtin(name)
        sc = solution_characterization(p, p.default_params, np.array(x, float))
        assert (sc.zero_in_subdiff, sc.projections_equal, sc.is_solution) == (True, True, True)

    sc = solution_characterization(cosine_free_problem(), GapParams(1, 2), [0.0, 0.0])
    assert (sc.zero_in_subdiff, sc.projections_equal, sc.is_solution) == (True, False, False)


def test_cosine_stationary_point_has_positive_gap():
    p = cosine_free_problem()
    # u = F/a, pi_b - pi_a = (b-a)/(ab) F: f_ab(0) = (b-a)/(2ab) ||F(0)||^2 = 1/4
    assert d_gap(p, GapParams(1, 2), [0.0, 0.0]).fab == pytest.approx(0.25)


def test_mu_estimate_li_ng(li_ng, rng):
    est = mu_estimate(li_ng, GapParams(0.5, 1.0), rng.uniform(-2, 2, size=(20000, 2)))
    assert 1 - 1e-12 <= est.mu_inf <= 1 + 1e-12
    assert est.n_used + est.n_skipped == 20000


def test_mu_estimate_affine(affine, rng):
    # w is a multiple of F, so the ratio is a Rayleigh quotient of diag(2, 3)
    est = mu_estimate(affine, GapParams(1, 2), rng.normal(size=(500, 2)))
    assert 2.0 - 1e-12 <= est.mu_inf <= 3.0


def test_mu_estimate_inconclusive(li_ng):
    est = mu_estimate(li_ng, GapParams(0.5, 1.0), np.array([[0.0, 1.0], [2.0, 2.0]]))
    assert est.inconclusive and math.isnan(est.mu_inf)


def test_constant_map_generators_vanish():
    p = constant_free_problem()
    assert clarke_generators(p, GapParams(1, 2), [3.0, -1.0]).hull_dist_zero == pytest.approx(0.0, abs=1e-15)
