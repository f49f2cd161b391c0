import numpy as np
import pytest

from dgap import builtin
from dgap.errors import ConfigError, InputError, LineSearchFailed
from dgap.gap import GapParams, d_gap
from dgap.solver import (
    CSV_HEADER,
    LINE_SEARCH_FAILED,
    MAX_ITERS,
    SOLVED,
    SolverConfig,
    armijo_search,
    check_config,
    choose_direction,
    diagnostics,
    solve,
    validate_config,
)


@pytest.fixture
def cfg():
    return SolverConfig(GapParams(1, 2), rho=0.5, alpha=0.75, beta=0.1, tau=0.5)


def test_reference_config_admissible(affine, cfg):
    # beta < 1/5, 0.5 < alpha < 1, tau < 2
    assert check_config(cfg, affine).ok
    assert validate_config(cfg, affine) is cfg


def test_beta_violation_message(affine, cfg):
    bad = SolverConfig(cfg.params, rho=0.5, alpha=0.75, beta=0.25, tau=0.5)
    with pytest.raises(ConfigError) as exc:
        validate_config(bad, affine)
    assert "(b-a)/(b+L)" in str(exc.value)


@pytest.mark.parametrize("kw,needle", [
    ({"alpha": 0.4}, "(b+L)*beta"),
    ({"alpha": 1.0}, "alpha < b-a"),
    ({"tau": 2.0}, "mu_star"),
    ({"tau": 0.0}, "tau > 0"),
])
def test_other_violations(affine, cfg, kw, needle):
    from dataclasses import replace

    chk = check_config(replace(cfg, **kw), affine)
    assert any(needle in v for v in chk.violations)


def test_tau_unverified_without_mu():
    p = builtin("constant_orthant")
    chk = check_config(SolverConfig.default_for(p), p)
    assert chk.ok and chk.unverified


@pytest.mark.parametrize("name", ["affine_pd", "li_ng", "identity_free"])
def test_default_config_admissible(name):
    p = builtin(name)
    assert check_config(SolverConfig.default_for(p), p).ok


def test_bad_solver_fields():
    for kw in ({"rho": 1.0}, {"m_max": 0}, {"max_iters": 0}, {"stop_fab": 0.0}):
        with pytest.raises(InputError):
            SolverConfig(GapParams(1, 2), **kw)


def test_direction_rule(affine):
    ev = d_gap(affine, GapParams(1, 2), [0.0, 0.0])
    # ||u|| = sqrt(13), ||w|| = sqrt(3.25)
    d, kind = choose_direction(ev, 0.1)
    assert kind == "W" and np.allclose(d, [1.0, 1.5])
    d, kind = choose_direction(ev, 0.5)  # tie: 0.5 sqrt(13) == sqrt(3.25)
    assert kind == "U" and np.allclose(d, [2.0, 3.0])
    d, kind = choose_direction(ev, 0.9)
    assert kind == "U"


def test_first_step_accepted(affine):
    # f(1, 1.5) = 0.5625 and f(0) - 0.5 * ||(1, 1.5)||^2 = 1.625
    m, t, f1 = armijo_search(affine, GapParams(1, 2), [0.0, 0.0], [1.0, 1.5], sigma=0.5, rho=0.5)
    assert (m, t) == (0, 1.0)
    assert f1 == pytest.approx(0.5625)


def test_line_search_failure(affine):
    with pytest.raises(LineSearchFailed):
        armijo_search(affine, GapParams(1, 2), [0.0, 0.0], [-1.0, -1.5], sigma=0.5, rho=0.5, m_max=10)


def test_affine_convergence_and_diagnostics(affine, cfg):
    traj = solve(affine, cfg, [0.0, 0.0])
    assert traj.status == SOLVED
    assert traj.fab_final <= 1e-12
    assert np.linalg.norm(traj.x_final - [1, 1]) <= 1e-5
    rep = diagnostics(traj, cfg, affine.lipschitz_L)
    assert rep.M1 == 0.25 and rep.M2 == 15.0
    assert rep.all_pass
    assert rep.eta == pytest.approx(1 - 2 * 0.01 * 0.25 * rep.t_star)


def test_fab_monotone(li_ng):
    cfg = SolverConfig.default_for(li_ng)
    traj = solve(li_ng, cfg, [1.5, -1.2])
    f = [r.fab for r in traj.records] + [traj.fab_final]
    assert all(f1 < f0 for f0, f1 in zip(f, f[1:]))
    assert traj.status == SOLVED
    assert np.linalg.norm(traj.x_final) < 1e-5


def test_start_at_solution(affine, cfg):
    traj = solve(affine, cfg, [1.0, 1.0])
    assert traj.status == SOLVED and traj.records == []
    assert traj.to_csv() == CSV_HEADER + "\n"


def test_max_iters(affine, cfg):
    from dataclasses import replace

    traj = solve(affine, replace(cfg, max_iters=3), [0.0, 0.0])
    assert traj.status == MAX_ITERS and len(traj.records) == 3


def test_line_search_status(affine):
    cfg = SolverConfig(GapParams(1, 2), alpha=0.75, beta=0.1, tau=100.0, m_max=5)
    with pytest.raises(ConfigError):
        solve(affine, cfg, [0.0, 0.0])
    traj = solve(affine, cfg, [0.0, 0.0], check=False)
    assert traj.status == LINE_SEARCH_FAILED and traj.records == []


def test_csv_round_trip(affine, cfg):
    traj = solve(affine, cfg, [0.0, 0.0])
    lines = traj.to_csv().splitlines()
    assert lines[0] == CSV_HEADER
    assert len(lines) == len(traj.records) + 1
    first = lines[1].split(",")
    r = traj.records[0]
    assert float(first[1]) == r.fab and first[4] == r.direction_kind and float(first[8]) == r.subgrad_dist


def test_stepsize_floor_reproducible(affine, cfg):
    def run():
        rng = np.random.default_rng(5)
        return [solve(affine, cfg, rng.uniform(-2, 2, 2)).t_min_observed for _ in range(20)]

    ts = run()
    assert np.nanmin(ts) > 0
    assert np.array_equal(ts, run(), equal_nan=True)


def test_diagnostics_need_two_steps(affine, cfg):
    with pytest.raises(InputError):
        diagnostics(solve(affine, cfg, [1.0, 1.0]), cfg, 3.0)


def test_bad_x0(affine, cfg):
    with pytest.raises(InputError):
        solve(affine, cfg, [0.0])
