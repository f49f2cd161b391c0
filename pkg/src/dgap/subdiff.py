"""Subgradients and subderivatives of the D-gap function.

With ``u = x - pi_a(x)`` and ``w' = pi_b(x) - pi_a(x)`` every limiting
Jacobian ``Z`` of ``F`` at ``x`` gives the Clarke generator

    (Z^T - b I) w' + (b - a) u,

and the Clarke subdifferential of ``f_ab`` is the convex hull of these
vectors. ``d(0, .)`` is measured against that hull. Because the limiting
subdifferential sits inside the Clarke one, the reported distance never
exceeds the true ``d(0, limiting subdifferential)``; at points where ``F``
is differentiable the two coincide.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from dgap.errors import CapabilityError, InputError
from dgap.gap import GapParams, VIProblem, d_gap, d_gap_batch, fab_value, regularized_gap

WPRIME_FLOOR = 1e-8


@dataclass(frozen=True)
class SubgradientSet:
    generators: list
    hull_dist_zero: float
    weights: np.ndarray


def min_norm_in_hull(generators, tol: float = 1e-12) -> tuple[float, np.ndarray]:
    """Minimum-norm point of the convex hull of ``generators``.

    Returns ``(dist, weights)`` where ``weights`` lie on the simplex and
    ``sum(weights[i] * generators[i])`` attains ``dist``. Up to three
    generators are handled by enumerating every face; larger sets go through
    Wolfe's method.
    """
    P = np.atleast_2d(np.asarray(generators, dtype=float))
    if P.shape[0] == 0:
        raise InputError("generators: need at least one vector")
    m = P.shape[0]
    if m == 1:
        return float(np.linalg.norm(P[0])), np.ones(1)
    if m <= 3:
        return _min_norm_faces(P)
    return _min_norm_wolfe(P, tol)


def _affine_min_norm(Q: np.ndarray) -> Optional[np.ndarray]:
    """Weights (summing to one) of the min-norm point of the affine hull of rows of Q."""
    k = Q.shape[0]
    G = Q @ Q.T
    K = np.zeros((k + 1, k + 1))
    K[:k, :k] = G
    K[:k, k] = 1.0
    K[k, :k] = 1.0
    rhs = np.zeros(k + 1)
    rhs[k] = 1.0
    sol, *_ = np.linalg.lstsq(K, rhs, rcond=None)
    lam = sol[:k]
    s = lam.sum()
    if not np.isfinite(s) or abs(s) < 1e-12:
        return None
    return lam / s


def _min_norm_faces(P: np.ndarray) -> tuple[float, np.ndarray]:
    m = P.shape[0]
    best = (np.inf, None)
    for k in range(1, m + 1):
        for idx in itertools.combinations(range(m), k):
            lam = _affine_min_norm(P[list(idx)])
            if lam is None or np.any(lam < -1e-14):
                continue
            lam = np.clip(lam, 0.0, None)
            lam /= lam.sum()
            d = float(np.linalg.norm(lam @ P[list(idx)]))
            if d < best[0] - 1e-15:
                full = np.zeros(m)
                full[list(idx)] = lam
                best = (d, full)
    return best[0], best[1]


def _min_norm_wolfe(P: np.ndarray, tol: float, max_iter: int = 1000) -> tuple[float, np.ndarray]:
    m = P.shape[0]
    scale = max(float(np.max(np.einsum("ij,ij->i", P, P))), 1e-300)
    j0 = int(np.argmin(np.einsum("ij,ij->i", P, P)))
    S = [j0]
    lam = np.array([1.0])
    x = P[j0].copy()
    for _ in range(max_iter):
        j = int(np.argmin(P @ x))
        if x @ x - P[j] @ x <= tol * scale or j in S:
            break
        S.append(j)
        lam = np.append(lam, 0.0)
        while True:
            alpha = _affine_min_norm(P[S])
            if alpha is None:
                break
            if np.all(alpha > 1e-14):
                lam = alpha
                break
            # move toward alpha until a weight hits zero, then drop it
            neg = alpha <= 1e-14
            denom = lam[neg] - alpha[neg]
            with np.errstate(divide="ignore", invalid="ignore"):
                ratios = np.where(denom > 0, lam[neg] / denom, np.inf)
            theta = float(min(1.0, np.min(ratios)))
            lam = lam + theta * (alpha - lam)
            keep = lam > 1e-14
            S = [s for s, k in zip(S, keep) if k]
            lam = lam[keep]
            lam /= lam.sum()
        x = lam @ P[S]
    full = np.zeros(m)
    full[S] = lam
    return float(np.linalg.norm(x)), full


def grad_fab(problem: VIProblem, params: GapParams, x) -> np.ndarray:
    J = problem.jac(x)
    if J is None:
        raise CapabilityError("F is not differentiable at x; use clarke_generators instead")
    ev = d_gap(problem, params, x)
    a, b = params.a, params.b
    wp = -ev.w
    return J.T @ wp - b * wp + (b - a) * ev.u


def grad_fc(problem: VIProblem, c: float, x) -> np.ndarray:
    """Gradient of the regularized gap function at a differentiable point."""
    J = problem.jac(x)
    if J is None:
        raise CapabilityError("F is not differentiable at x")
    x = np.asarray(x, dtype=float)
    _, p = regularized_gap(problem, c, x)
    r = x - p
    return J.T @ r - c * r + problem.F(x)


def clarke_generators(problem: VIProblem, params: GapParams, x, tol: float = 1e-12) -> SubgradientSet:
    ev = d_gap(problem, params, x)
    a, b = params.a, params.b
    wp = -ev.w
    J = problem.jac(ev.x)
    mats = [J] if J is not None else problem.b_jac(ev.x)
    if not mats:
        raise InputError("b_jacobian returned no matrices; the limiting Jacobian set must be nonempty")
    gens = [Z.T @ wp - b * wp + (b - a) * ev.u for Z in mats]
    dist, weights = min_norm_in_hull(gens, tol)
    return SubgradientSet(gens, dist, weights)


def subderivative_fab(problem: VIProblem, params: GapParams, x, w_dir) -> float:
    J = problem.jac(x)
    if J is None:
        raise CapabilityError("F is not differentiable at x; use fd_directional instead")
    ev = d_gap(problem, params, x)
    a, b = params.a, params.b
    w_dir = np.asarray(w_dir, dtype=float)
    return float((b - a) * (ev.u @ w_dir) + (J @ w_dir - b * w_dir) @ (-ev.w))


def fd_directional(problem: VIProblem, params: GapParams, x, w_dir, t_min: float = 1e-8, t_max: float = 1e-2, n_grid: int = 32) -> float:
    """Smallest difference quotient over a geometric step grid.

    This over-estimates the lower directional limit by an amount that
    shrinks with ``t_min`` for smooth functions.
    """
    if not 0 < t_min < t_max:
        raise InputError("need 0 < t_min < t_max")
    if n_grid < 8:
        raise InputError("n_grid: must be at least 8")
    x = np.asarray(x, dtype=float)
    w_dir = np.asarray(w_dir, dtype=float)
    if not np.any(w_dir):
        return 0.0
    f0 = fab_value(problem, params, x)
    ts = np.geomspace(t_min, t_max, n_grid)
    return float(min((fab_value(problem, params, x + t * w_dir) - f0) / t for t in ts))


def central_fd_gradient(fun: Callable[[np.ndarray], float], x, h: float = 1e-6) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    g = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (fun(x + e) - fun(x - e)) / (2 * h)
    return g


@dataclass(frozen=True)
class SolutionCharacterization:
    zero_in_subdiff: bool
    projections_equal: bool
    is_solution: bool
    hull_dist_zero: float
    projection_gap: float


def solution_characterization(problem: VIProblem, params: GapParams, x, tol: float = 1e-10) -> SolutionCharacterization:
    if not tol > 0:
        raise InputError("tol: must be positive")
    sg = clarke_generators(problem, params, x)
    gap = float(np.linalg.norm(d_gap(problem, params, x).w))
    zero_in = sg.hull_dist_zero <= tol
    equal = gap <= tol
    return SolutionCharacterization(zero_in, equal, zero_in and equal, sg.hull_dist_zero, gap)


@dataclass(frozen=True)
class MuEstimate:
    mu_inf: float
    n_used: int
    n_skipped: int

    @property
    def inconclusive(self) -> bool:
        return self.n_used == 0


def mu_estimate(problem: VIProblem, params: GapParams, sample_points) -> MuEstimate:
    """Smallest sampled ratio ``<J w, w> / ||w||^2`` with ``w = pi_a - pi_b``.

    Points where ``F`` has no Jacobian or where ``||w|| <= 1e-8`` are skipped.
    """
    X = np.atleast_2d(np.asarray(sample_points, dtype=float))
    if X.shape[0] == 0:
        raise InputError("sample_points: need at least one point")
    W = d_gap_batch(problem, params, X)["w"]
    norms = np.linalg.norm(W, axis=1)
    mu = np.inf
    used = 0
    for x, w, nw in zip(X, W, norms):
        if nw <= WPRIME_FLOOR:
            continue
        J = problem.jac(x)
        if J is None:
            continue
        r = float(w @ (J @ w)) / (nw * nw)
        used += 1
        if r < mu:
            mu = r
    return MuEstimate(float(mu) if used else float("nan"), used, X.shape[0] - used)
