"""Derivative-free descent on the D-gap function with Armijo backtracking.

Each step uses only projections: with ``u = pi_a(x) - x`` and
``w = pi_a(x) - pi_b(x)`` the direction is ``w`` when ``beta ||u|| < ||w||``
and ``u`` otherwise. The step ``rho**m`` takes the smallest ``m`` with

    f_ab(x + rho**m d) - f_ab(x) <= -sigma rho**m ||d||^2,

``sigma = tau`` for ``w`` and ``sigma = b - a - alpha`` for ``u``.
Admissible parameters satisfy

    0 < beta < (b - a)/(b + L),  (b + L) beta < alpha < b - a,  0 < tau < mu*.
"""

from __future__ import annotations

import io
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Optional

import numpy as np

from dgap.errors import ConfigError, InputError, LineSearchFailed
from dgap.gap import DGapEval, GapParams, VIProblem, d_gap, fab_value
from dgap.subdiff import clarke_generators

SOLVED = "Solved"
MAX_ITERS = "MaxIters"
LINE_SEARCH_FAILED = "LineSearchFailed"

CSV_HEADER = "iter,fab,norm_u,norm_w,dir,m,t,decrease,subgrad_dist"


@dataclass(frozen=True)
class SolverConfig:
    params: GapParams
    rho: float = 0.5
    alpha: float = 0.0
    beta: float = 0.0
    tau: float = 0.0
    m_max: int = 60
    stop_fab: float = 1e-12
    max_iters: int = 1000

    def __post_init__(self):
        if not 0 < self.rho < 1:
            raise InputError(f"rho: must lie in (0, 1), got {self.rho!r}")
        if not (isinstance(self.m_max, (int, np.integer)) and self.m_max >= 1):
            raise InputError("m_max: must be a positive integer")
        if not (isinstance(self.max_iters, (int, np.integer)) and self.max_iters >= 1):
            raise InputError("max_iters: must be a positive integer")
        if not self.stop_fab > 0:
            raise InputError("stop_fab: must be positive")

    @classmethod
    def default_for(cls, problem: VIProblem, params: Optional[GapParams] = None, **overrides) -> "SolverConfig":
        """Small ``beta``, ``alpha`` mid-way in its admissible interval, ``tau = mu*/2``.

        Without ``mu*`` the default ``tau`` is ``(b - a)/4``, which cannot be
        checked against the restricted monotonicity modulus.
        """
        params = params or problem.default_params
        if params is None:
            raise InputError("params: the problem has no default (a, b); pass them explicitly")
        a, b, L = params.a, params.b, problem.lipschitz_L
        beta = 0.5 * (b - a) / (b + L)
        alpha = 0.5 * ((b + L) * beta + (b - a))
        tau = 0.5 * problem.mu_star if problem.mu_star else 0.25 * (b - a)
        cfg = cls(params=params, alpha=alpha, beta=beta, tau=tau)
        return replace(cfg, **overrides) if overrides else cfg


@dataclass(frozen=True)
class ConfigCheck:
    violations: list
    unverified: list

    @property
    def ok(self) -> bool:
        return not self.violations


def check_config(cfg: SolverConfig, problem: VIProblem) -> ConfigCheck:
    a, b, L = cfg.params.a, cfg.params.b, problem.lipschitz_L
    bad, unverified = [], []
    beta_max = (b - a) / (b + L)
    if not 0 < cfg.beta < beta_max:
        bad.append(f"beta < (b-a)/(b+L) = {beta_max!r} and beta > 0 required, got beta = {cfg.beta!r}")
    if not cfg.alpha > (b + L) * cfg.beta:
        bad.append(f"alpha > (b+L)*beta = {(b + L) * cfg.beta!r} required, got alpha = {cfg.alpha!r}")
    if not cfg.alpha < b - a:
        bad.append(f"alpha < b-a = {b - a!r} required, got alpha = {cfg.alpha!r}")
    if not cfg.tau > 0:
        bad.append(f"tau > 0 required, got tau = {cfg.tau!r}")
    elif problem.mu_star is None:
        unverified.append("tau < mu_star (problem declares no mu_star)")
    elif not cfg.tau < problem.mu_star:
        bad.append(f"tau < mu_star = {problem.mu_star!r} required, got tau = {cfg.tau!r}")
    return ConfigCheck(bad, unverified)


def validate_config(cfg: SolverConfig, problem: VIProblem) -> SolverConfig:
    """Return ``cfg`` if it is admissible for ``problem``; raise ConfigError otherwise."""
    chk = check_config(cfg, problem)
    if chk.violations:
        raise ConfigError(chk.violations)
    return cfg


def choose_direction(ev: DGapEval, beta: float) -> tuple[np.ndarray, str]:
    """Step direction and its kind ("W" or "U"); ties go to "U"."""
    nu, nw = ev.norm_u, ev.norm_w
    if beta * nu < nw:
        return ev.w.copy(), "W"
    return -ev.u, "U"


def armijo_search(problem: VIProblem, params: GapParams, x, d, sigma: float, rho: float, m_max: int = 60, f0: Optional[float] = None) -> tuple[int, float, float]:
    """Smallest ``m`` in ``0..m_max`` giving sufficient decrease along ``d``.

    Returns ``(m, t, fab_new)``; raises LineSearchFailed when none works.
    """
    x = np.asarray(x, dtype=float)
    d = np.asarray(d, dtype=float)
    dd = float(d @ d)
    if dd == 0:
        raise InputError("d: search direction is zero")
    if f0 is None:
        f0 = fab_value(problem, params, x)
    t = 1.0
    for m in range(m_max + 1):
        f1 = fab_value(problem, params, x + t * d)
        if f1 - f0 <= -sigma * t * dd:
            return m, t, f1
        t *= rho
    raise LineSearchFailed(f"no sufficient decrease for m <= {m_max}", m_max=m_max)


@dataclass(frozen=True)
class IterationRecord:
    n: int
    x: np.ndarray
    fab: float
    norm_u: float
    norm_w: float
    direction_kind: str
    m: int
    t: float
    decrease: float
    subgrad_dist: float
    step_norm: float


@dataclass
class Trajectory:
    records: list = field(default_factory=list)
    status: str = MAX_ITERS
    x_final: Optional[np.ndarray] = None
    fab_final: float = math.nan

    @property
    def t_min_observed(self) -> float:
        return min((r.t for r in self.records), default=math.nan)

    @property
    def iterates(self) -> np.ndarray:
        xs = [r.x for r in self.records] + [self.x_final]
        return np.array(xs)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(CSV_HEADER + "\n")
        for r in self.records:
            fields = [r.n, r.fab, r.norm_u, r.norm_w, r.direction_kind, r.m, r.t, r.decrease, r.subgrad_dist]
            buf.write(",".join(_fmt(v) for v in fields) + "\n")
        return buf.getvalue()


def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def solve(problem: VIProblem, cfg: SolverConfig, x0, check: bool = True) -> Trajectory:
    """Run the descent method from ``x0``.

    With ``check=True`` the parameters are validated first. Line-search
    failure does not raise: the partial trajectory is returned with status
    ``LineSearchFailed``.
    """
    if check:
        validate_config(cfg, problem)
    params = cfg.params
    a, b = params.a, params.b
    x = np.array(x0, dtype=float)
    if x.shape != (problem.dim,):
        raise InputError(f"x0: expected a vector of length {problem.dim}, got shape {x.shape}")
    traj = Trajectory()
    ev = d_gap(problem, params, x)
    for n in range(cfg.max_iters + 1):
        if ev.fab <= cfg.stop_fab:
            traj.status = SOLVED
            break
        if n == cfg.max_iters:
            traj.status = MAX_ITERS
            break
        d, kind = choose_direction(ev, cfg.beta)
        if not np.any(d):
            # both residuals vanish although fab > stop_fab: round-off at a solution
            traj.status = SOLVED
            break
        sigma = cfg.tau if kind == "W" else b - a - cfg.alpha
        sg = clarke_generators(problem, params, x)
        try:
            m, t, f1 = armijo_search(problem, params, x, d, sigma, cfg.rho, cfg.m_max, f0=ev.fab)
        except LineSearchFailed:
            traj.status = LINE_SEARCH_FAILED
            break
        step = t * d
        traj.records.append(
            IterationRecord(
                n=n,
                x=x.copy(),
                fab=ev.fab,
                norm_u=ev.norm_u,
                norm_w=ev.norm_w,
                direction_kind=kind,
                m=m,
                t=t,
                decrease=f1 - ev.fab,
                subgrad_dist=sg.hull_dist_zero,
                step_norm=float(np.linalg.norm(step)),
            )
        )
        x = x + step
        ev = d_gap(problem, params, x)
    traj.x_final = x
    traj.fab_final = ev.fab
    return traj


@dataclass
class DiagnosticsReport:
    M1: float
    M2: float
    t_star: float
    eta: float
    sufficient_decrease: list
    relative_error: list
    q_ratios: list
    max_ratio: float
    all_pass: bool

    def to_dict(self) -> dict:
        return asdict(self)


def diagnostics(traj: Trajectory, cfg: SolverConfig, L: float, rtol: float = 1e-12) -> DiagnosticsReport:
    """Audit a trajectory against the sufficient-decrease, relative-error and rate bounds.

    ``t_star`` is the smallest step length observed in the run.
    """
    if len(traj.records) < 2:
        raise InputError("diagnostics need a trajectory with at least two iterations")
    a, b = cfg.params.a, cfg.params.b
    M1 = min(b - a - cfg.alpha, cfg.tau)
    M2 = L + b + (b - a) / cfg.beta
    t_star = traj.t_min_observed
    eta = 1.0 - 2.0 * cfg.beta**2 * M1 * t_star / (b - a)
    suff, rel, ratios = [], [], []
    for r in traj.records:
        slack = rtol * r.fab
        suff.append(bool(r.decrease <= -M1 * r.step_norm**2 + slack))
        rel.append(bool(r.subgrad_dist <= (M2 / t_star) * r.step_norm * (1 + rtol)))
        ratios.append((r.fab + r.decrease) / r.fab)
    max_ratio = max(ratios)
    all_pass = all(suff) and all(rel) and max_ratio <= eta
    return DiagnosticsReport(M1, M2, t_star, eta, suff, rel, ratios, max_ratio, all_pass)
