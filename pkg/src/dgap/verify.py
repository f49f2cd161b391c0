"""Sampling certificates for the KL inequality, error bounds and restricted monotonicity.

A certificate here means "no counterexample at these seeded samples, and the
smallest observed ratio clears the theoretical constant". Subgradient
distances come from the Clarke hull (see ``dgap.subdiff``), which can only
under-report ``d(0, subdifferential)``, so a pass is never optimistic.

Constants, with ``mu = mu*`` and ``L`` the problem's Lipschitz bound::

    kappa = sqrt((b - a)/2) * mu / (mu + b + L)

The KL check measures the slope of ``sqrt(f_ab)``, i.e.
``d(0, subdiff f_ab)(x) / (2 sqrt(f_ab(x)))``, against ``kappa``; this is the
same inequality as ``d(0, subdiff f_ab) >= mu sqrt(2(b - a))/(mu + b + L) sqrt(f_ab)``.
The error-bound check compares ``sqrt(f_ab(x)) / d(x, S)`` with ``kappa``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from dgap.errors import CapabilityError, InputError
from dgap.gap import GapParams, VIProblem, d_gap_batch, is_solution
from dgap.problems import distance_to_solutions
from dgap.subdiff import clarke_generators, mu_estimate

FAB_FLOOR = 1e-14
WPRIME_FLOOR = 1e-8
DEFAULT_TOL = 1e-9

KL = "KL"
ERROR_BOUND = "ErrorBound"
MU_CERTIFICATE = "MuCertificate"


@dataclass
class VerificationReport:
    kind: str
    n_samples: int
    n_active: int
    min_ratio: float
    theoretical_bound: Optional[float]
    passed: bool
    seed: int
    region: dict
    argmin: Optional[np.ndarray] = field(default=None, repr=False, compare=False)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "n_samples": self.n_samples,
            "n_active": self.n_active,
            "min_ratio": _finite_or_none(self.min_ratio),
            "theoretical_bound": _finite_or_none(self.theoretical_bound),
            "pass": self.passed,
            "seed": self.seed,
            "region": self.region,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


def _finite_or_none(v):
    if v is None or not math.isfinite(v):
        return None
    return float(v)


def ball_region(center, radius: float) -> dict:
    return {"shape": "ball", "center": [float(c) for c in center], "radius": float(radius)}


def box_region(lo, hi) -> dict:
    return {"shape": "box", "lo": [float(v) for v in lo], "hi": [float(v) for v in hi]}


def sample_region(region: dict, n_samples: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform samples from a ball or box region description."""
    if n_samples < 1:
        raise InputError("n_samples: must be positive")
    shape = region.get("shape")
    if shape == "ball":
        c = np.asarray(region["center"], dtype=float)
        r = float(region["radius"])
        if not r > 0:
            raise InputError("region.radius: must be positive")
        g = rng.standard_normal((n_samples, c.size))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        rad = r * rng.random(n_samples) ** (1.0 / c.size)
        return c + g * rad[:, None]
    if shape == "box":
        lo = np.asarray(region["lo"], dtype=float)
        hi = np.asarray(region["hi"], dtype=float)
        if lo.shape != hi.shape or np.any(lo > hi) or not np.all(np.isfinite(lo) & np.isfinite(hi)):
            raise InputError("region: box needs finite lo <= hi of equal length")
        return lo + (hi - lo) * rng.random((n_samples, lo.size))
    raise InputError(f"region.shape: expected 'ball' or 'box', got {shape!r}")


def _region_dim(region):
    return len(region["center"]) if region.get("shape") == "ball" else len(region["lo"])


def kappa(params: GapParams, mu: float, L: float) -> float:
    a, b = params.a, params.b
    return math.sqrt((b - a) / 2.0) * mu / (mu + b + L)


def kl_constant(params: GapParams, mu: float, L: float) -> float:
    """``mu sqrt(2(b - a)) / (mu + b + L)``, the KL modulus of ``f_ab`` itself."""
    a, b = params.a, params.b
    return mu * math.sqrt(2.0 * (b - a)) / (mu + b + L)


def kl_check(
    problem: VIProblem,
    params: GapParams,
    xbar,
    radius: float,
    nu: Optional[float] = None,
    n_samples: int = 10_000,
    seed: int = 0,
    tol: float = DEFAULT_TOL,
    solution_tol: float = 1e-8,
) -> VerificationReport:
    """KL inequality with exponent 1/2 around the solution ``xbar``.

    Samples the ball of ``radius`` around ``xbar`` and keeps points with
    ``0 < f_ab < nu``. When ``nu`` is None the level is set just above the
    largest sampled ``f_ab`` so that every sample with positive gap counts.
    """
    xbar = np.asarray(xbar, dtype=float)
    if not radius > 0:
        raise InputError("radius: must be positive")
    if nu is not None and not nu > 0:
        raise InputError("nu: must be positive")
    if not is_solution(problem, xbar, solution_tol):
        raise InputError("xbar: not a solution (natural residual above tolerance)")
    rng = np.random.default_rng(seed)
    region = ball_region(xbar, radius)
    X = sample_region(region, n_samples, rng)
    fab = d_gap_batch(problem, params, X)["fab"]
    if nu is None:
        nu = float(np.nextafter(fab.max(), np.inf)) if fab.size else 1.0
    region["nu"] = float(nu)
    active = np.flatnonzero((fab > FAB_FLOOR) & (fab < nu))
    min_ratio, argmin = math.inf, None
    for i in active:
        d = clarke_generators(problem, params, X[i]).hull_dist_zero
        r = d / (2.0 * math.sqrt(fab[i]))
        if r < min_ratio:
            min_ratio, argmin = r, X[i]
    bound = None
    if problem.mu_star is not None:
        bound = kappa(params, problem.mu_star, problem.lipschitz_L)
        passed = active.size > 0 and min_ratio >= bound - tol
    else:
        passed = active.size > 0 and min_ratio > tol
    if problem.lipschitz_region is not None:
        region["lipschitz_region"] = problem.lipschitz_region
    return VerificationReport(KL, n_samples, int(active.size), min_ratio, bound, bool(passed), seed, region, argmin)


def error_bound_check(
    problem: VIProblem,
    params: GapParams,
    region: dict,
    n_samples: int = 10_000,
    seed: int = 0,
    epsilon: Optional[float] = None,
    tol: float = DEFAULT_TOL,
) -> VerificationReport:
    """``kappa * d(x, S) <= sqrt(f_ab(x))`` on sampled ``x`` with ``0 < f_ab <= epsilon``."""
    if problem.solutions is None:
        raise CapabilityError(f"problem {problem.name!r} has no solution oracle; error bounds need d(x, S)")
    if problem.mu_star is None:
        raise CapabilityError(f"problem {problem.name!r} declares no mu_star")
    if _region_dim(region) != problem.dim:
        raise InputError("region: dimension does not match the problem")
    rng = np.random.default_rng(seed)
    X = sample_region(region, n_samples, rng)
    fab = d_gap_batch(problem, params, X)["fab"]
    if epsilon is None:
        epsilon = float(fab.max())
    if not epsilon > 0:
        raise InputError("epsilon: must be positive")
    region = dict(region, epsilon=float(epsilon))
    active = np.flatnonzero((fab > FAB_FLOOR) & (fab <= epsilon))
    min_ratio, argmin = math.inf, None
    for i in active:
        dist = distance_to_solutions(problem, X[i])
        if dist == 0:
            continue
        r = math.sqrt(fab[i]) / dist
        if r < min_ratio:
            min_ratio, argmin = r, X[i]
    bound = kappa(params, problem.mu_star, problem.lipschitz_L)
    passed = active.size > 0 and min_ratio >= bound - tol
    if problem.lipschitz_region is not None:
        region["lipschitz_region"] = problem.lipschitz_region
    return VerificationReport(ERROR_BOUND, n_samples, int(active.size), min_ratio, bound, bool(passed), seed, region, argmin)


def mu_check(
    problem: VIProblem,
    params: GapParams,
    region: dict,
    n_samples: int = 100_000,
    seed: int = 0,
    tol: float = DEFAULT_TOL,
) -> VerificationReport:
    """Restricted monotonicity ratio over sampled differentiable points."""
    if _region_dim(region) != problem.dim:
        raise InputError("region: dimension does not match the problem")
    rng = np.random.default_rng(seed)
    X = sample_region(region, n_samples, rng)
    est = mu_estimate(problem, params, X)
    bound = problem.mu_star
    if est.inconclusive:
        passed = False
    elif bound is not None:
        passed = est.mu_inf >= bound - tol
    else:
        passed = est.mu_inf > tol
    return VerificationReport(MU_CERTIFICATE, n_samples, est.n_used, est.mu_inf, bound, bool(passed), seed, dict(region))


@dataclass(frozen=True)
class EquivalenceReport:
    """Empirical moduli of ``d >= mu sqrt(f)``, ``d >= mu ||x - pi_a||`` and ``d >= mu ||pi_b - pi_a||``."""

    mod_sqrt_fab: float
    mod_residual: float
    mod_projection_gap: float
    n_samples: int
    n_active: int
    chain_ok: bool

    @property
    def jointly_positive(self) -> bool:
        return min(self.mod_sqrt_fab, self.mod_residual, self.mod_projection_gap) > 0


def equivalence_sweep(
    problem: VIProblem,
    params: GapParams,
    region: dict,
    n_samples: int = 2_000,
    seed: int = 0,
    points=None,
) -> EquivalenceReport:
    """Infima of the three subgradient-distance ratios over a bounded region.

    Also audits ``sqrt(f_ab) <= sqrt((b - a)/2) ||x - pi_a||`` at every active
    sample. ``points`` overrides sampling.
    """
    a, b = params.a, params.b
    if points is None:
        X = sample_region(region, n_samples, np.random.default_rng(seed))
    else:
        X = np.atleast_2d(np.asarray(points, dtype=float))
    terms = d_gap_batch(problem, params, X)
    fab = terms["fab"]
    nu = np.linalg.norm(terms["u"], axis=1)
    nw = np.linalg.norm(terms["w"], axis=1)
    m_sqrt = m_res = m_gap = math.inf
    chain_ok = True
    active = np.flatnonzero(fab > FAB_FLOOR)
    c = math.sqrt((b - a) / 2.0)
    for i in active:
        d = clarke_generators(problem, params, X[i]).hull_dist_zero
        s = math.sqrt(fab[i])
        if s > c * nu[i] * (1 + 1e-9) + 1e-12:
            chain_ok = False
        m_sqrt = min(m_sqrt, d / s)
        if nu[i] > 0:
            m_res = min(m_res, d / nu[i])
        if nw[i] > WPRIME_FLOOR:
            m_gap = min(m_gap, d / nw[i])
    return EquivalenceReport(m_sqrt, m_res, m_gap, X.shape[0], int(active.size), chain_ok)
