"""Regularized gap and D-gap evaluation for variational inequalities.

The problem is to find ``x`` in ``K`` with ``<F(x), y - x> >= 0`` for every
``y`` in ``K``. For ``c > 0`` let ``pi_c(x) = P_K(x - F(x)/c)``; then

    f_c(x)  = <F(x), x - pi_c(x)> - c/2 ||x - pi_c(x)||^2
    f_ab(x) = f_a(x) - f_b(x),   0 < a < b.

``f_ab`` is evaluated from a single projection pair through

    f_ab(x) = <F(x), pi_b - pi_a> - a/2 ||x - pi_a||^2 + b/2 ||x - pi_b||^2,

which avoids subtracting two nearly equal maxima close to a solution.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from dgap.errors import InputError
from dgap.geometry import ConvexSet, project, tangent_cone_contains

ATOL = 1e-10
RTOL = 1e-9


@dataclass(frozen=True)
class GapParams:
    a: float
    b: float

    def __post_init__(self):
        a, b = float(self.a), float(self.b)
        if not (np.isfinite(a) and np.isfinite(b)):
            raise InputError("params: a and b must be finite")
        if not 0 < a < b:
            raise InputError(f"params: require 0 < a < b, got a={a!r}, b={b!r}")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)


@dataclass(frozen=True, eq=False)
class VIProblem:
    """A variational inequality ``(F, K)`` with derivative oracles.

    ``f_eval`` must broadcast over leading axes: given ``(..., n)`` it returns
    ``(..., n)``. ``jacobian`` takes a single point and returns the ``n x n``
    Jacobian, or ``None`` where ``F`` is not differentiable. ``b_jacobian``
    returns the finite list of limiting Jacobians at a point (it contains
    ``jacobian(x)`` whenever that is defined).

    ``lipschitz_L`` bounds the Lipschitz modulus of ``F``; if it only holds
    on part of the space, ``lipschitz_region`` says where.
    """

    name: str
    dim: int
    set: ConvexSet
    f_eval: Callable[[np.ndarray], np.ndarray]
    b_jacobian: Callable[[np.ndarray], list]
    lipschitz_L: float
    jacobian: Optional[Callable[[np.ndarray], Optional[np.ndarray]]] = None
    mu_star: Optional[float] = None
    solutions: Optional[object] = None
    lipschitz_region: Optional[dict] = None
    default_params: Optional[GapParams] = None
    source: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.set.dim != self.dim:
            raise InputError(f"set.dim {self.set.dim} does not match problem dim {self.dim}")
        if self.lipschitz_L is None or self.lipschitz_L < 0 or not np.isfinite(self.lipschitz_L):
            raise InputError(f"lipschitz_L: must be a finite nonnegative real, got {self.lipschitz_L!r}")
        if self.mu_star is not None and not self.mu_star > 0:
            raise InputError(f"mu_star: must be positive when given, got {self.mu_star!r}")

    def F(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.ndim == 0 or x.shape[-1] != self.dim:
            raise InputError(f"x: expected trailing dimension {self.dim}, got shape {x.shape}")
        return np.asarray(self.f_eval(x), dtype=float)

    def jac(self, x) -> Optional[np.ndarray]:
        if self.jacobian is None:
            return None
        J = self.jacobian(np.asarray(x, dtype=float))
        return None if J is None else np.asarray(J, dtype=float)

    def b_jac(self, x) -> list:
        return [np.asarray(Z, dtype=float) for Z in self.b_jacobian(np.asarray(x, dtype=float))]


@dataclass(frozen=True)
class DGapEval:
    x: np.ndarray
    F: np.ndarray
    fab: float
    pi_a: np.ndarray
    pi_b: np.ndarray
    u: np.ndarray  # x - pi_a
    w: np.ndarray  # pi_a - pi_b
    f_a_val: float
    f_b_val: float

    @property
    def norm_u(self) -> float:
        return float(np.linalg.norm(self.u))

    @property
    def norm_w(self) -> float:
        return float(np.linalg.norm(self.w))


def _point(problem: VIProblem, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (problem.dim,):
        raise InputError(f"x: expected a vector of length {problem.dim}, got shape {x.shape}")
    return x


def _check_c(c):
    if not c > 0:
        raise InputError(f"c: must be positive, got {c!r}")


def pi(problem: VIProblem, c: float, x) -> np.ndarray:
    """``P_K(x - F(x)/c)``; ``x`` may be a batch of shape ``(m, n)``."""
    _check_c(c)
    x = np.asarray(x, dtype=float)
    return project(problem.set, x - problem.F(x) / c)


def regularized_gap(problem: VIProblem, c: float, x) -> tuple[float, np.ndarray]:
    x = _point(problem, x)
    _check_c(c)
    Fx = problem.F(x)
    p = project(problem.set, x - Fx / c)
    r = x - p
    return float(Fx @ r - 0.5 * c * (r @ r)), p


def d_gap(problem: VIProblem, params: GapParams, x) -> DGapEval:
    x = _point(problem, x)
    a, b = params.a, params.b
    Fx = problem.F(x)
    pa = project(problem.set, x - Fx / a)
    pb = project(problem.set, x - Fx / b)
    u = x - pa
    v = x - pb
    uu, vv = float(u @ u), float(v @ v)
    fa = float(Fx @ u) - 0.5 * a * uu
    fb = float(Fx @ v) - 0.5 * b * vv
    fab = float(Fx @ (pb - pa)) - 0.5 * a * uu + 0.5 * b * vv
    return DGapEval(x=x, F=Fx, fab=max(fab, 0.0), pi_a=pa, pi_b=pb, u=u, w=pa - pb, f_a_val=fa, f_b_val=fb)


def fab_value(problem: VIProblem, params: GapParams, x) -> float:
    return d_gap(problem, params, x).fab


def d_gap_batch(problem: VIProblem, params: GapParams, X) -> dict:
    """Vectorized D-gap terms for points stacked in the rows of ``X``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    a, b = params.a, params.b
    FX = problem.F(X)
    pa = project(problem.set, X - FX / a)
    pb = project(problem.set, X - FX / b)
    u = X - pa
    v = X - pb
    uu = np.einsum("ij,ij->i", u, u)
    vv = np.einsum("ij,ij->i", v, v)
    fab = np.einsum("ij,ij->i", FX, pb - pa) - 0.5 * a * uu + 0.5 * b * vv
    return {"F": FX, "fab": np.maximum(fab, 0.0), "pi_a": pa, "pi_b": pb, "u": u, "w": pa - pb}


def is_solution(problem: VIProblem, x, tol: float = 1e-10) -> bool:
    """Natural-residual test ``||x - pi_1(x)|| <= tol``."""
    if not tol > 0:
        raise InputError("tol: must be positive")
    x = _point(problem, x)
    return bool(np.linalg.norm(x - pi(problem, 1.0, x)) <= tol)


def _le(lhs, rhs, scale, atol=ATOL, rtol=RTOL) -> bool:
    return bool(lhs <= rhs + atol + rtol * scale)


@dataclass(frozen=True)
class BasicPropertyReport:
    sandwich: bool
    residual_ratios: bool
    inner_product_d: bool
    cone_membership_e: Optional[bool]  # None: skipped (non-polyhedral K)
    lower: float
    fab: float
    upper: float

    @property
    def all_pass(self) -> bool:
        return self.sandwich and self.residual_ratios and self.inner_product_d and self.cone_membership_e is not False

    def failed(self) -> list[str]:
        names = ("sandwich", "residual_ratios", "inner_product_d", "cone_membership_e")
        return [n for n in names if getattr(self, n) is False]


def basic_property_report(problem: VIProblem, params: GapParams, x, atol: float = ATOL, rtol: float = RTOL) -> BasicPropertyReport:
    """Check the sandwich, residual-ratio, inner-product and cone clauses at ``x``."""
    ev = d_gap(problem, params, x)
    a, b = params.a, params.b
    nu = ev.norm_u
    nw = ev.norm_w
    nv = float(np.linalg.norm(ev.x - ev.pi_b))
    lower = 0.5 * (b - a) * nv**2 + 0.5 * a * nw**2
    upper = 0.5 * (b - a) * nu**2 - 0.5 * b * nw**2
    scale = 0.5 * (b - a) * nu**2 + 0.5 * b * nw**2 + abs(ev.fab)
    sandwich = _le(lower, ev.fab, scale, atol, rtol) and _le(ev.fab, upper, scale, atol, rtol)

    ratios = (
        _le(nw, (b - a) / a * nu, nu, atol, rtol)
        and _le(nv, nu, nu, atol, rtol)
        and _le(nu, b / a * nv, nu, atol, rtol)
    )

    v = ev.x - ev.pi_b
    ip = float((a * ev.u - b * v) @ ev.w)
    inner = _le(0.0, ip, (a * nu + b * nv) * nw, atol, rtol)

    cone = None
    if problem.set.is_polyhedral:
        ctol = atol + rtol * (1.0 + nw)
        cone = (
            tangent_cone_contains(problem.set, ev.pi_b, ev.w, ctol)
            and tangent_cone_contains(problem.set, ev.pi_a, -ev.w, ctol)
            and _le(float(ev.F @ ev.w), 0.0, float(np.linalg.norm(ev.F)) * nw, atol, rtol)
        )
    return BasicPropertyReport(sandwich, ratios, inner, cone, lower, ev.fab, upper)


def _grid_axis(lo_cut, hi_cut, h, faces) -> np.ndarray:
    """Lattice points ``k h`` in ``[lo_cut, hi_cut]`` plus any face coordinate inside it."""
    k = np.arange(math.ceil(lo_cut / h), math.floor(hi_cut / h) + 1)
    extra = [f for f in faces if np.isfinite(f) and lo_cut <= f <= hi_cut]
    return np.unique(np.concatenate([k * h, extra]))


def brute_force_gap(problem: VIProblem, c: float, x, grid_radius: float = 1.0, grid_n: int = 101) -> float:
    """Grid maximization of ``<F(x), x - y> - c/2 ||y - x||^2`` over feasible ``y``.

    Test oracle only. The grid covers a box of half-width ``grid_radius``
    around ``pi_c(x)`` with spacing ``h = 2 grid_radius / grid_n``. Nodes
    come from the fixed lattice ``h Z^n`` rather than from ``pi_c(x)``, so
    the maximizer is generally not a node; the facet coordinates of a box or
    orthant are added on each axis so that maximizers on a face are still
    approached to ``O(h^2)``. Infeasible nodes are dropped.
    """
    if grid_n < 3:
        raise InputError("grid_n: must be at least 3")
    if not grid_radius > 0:
        raise InputError("grid_radius: must be positive")
    x = _point(problem, x)
    _check_c(c)
    Fx = problem.F(x)
    center = project(problem.set, x - Fx / c)
    h = 2.0 * grid_radius / grid_n
    s = problem.set
    axes = []
    for i in range(problem.dim):
        faces = []
        if s.kind == "nonneg_orthant":
            faces = [0.0]
        elif s.kind == "box":
            faces = [s.lo[i], s.hi[i]]
        axes.append(_grid_axis(center[i] - grid_radius, center[i] + grid_radius, h, faces))
    Y = np.array(list(itertools.product(*axes)))
    if s.kind == "nonneg_orthant":
        Y = Y[np.all(Y >= 0, axis=1)]
    elif s.kind == "box":
        Y = Y[np.all((Y >= s.lo) & (Y <= s.hi), axis=1)]
    elif s.kind == "ball":
        Y = Y[np.linalg.norm(Y - s.center, axis=1) <= s.radius]
    if len(Y) == 0:
        return -np.inf
    D = Y - x
    vals = -(D @ Fx) - 0.5 * c * np.einsum("ij,ij->i", D, D)
    return float(vals.max())
