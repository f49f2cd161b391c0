"""Benchmark problems and the ``dgap-vi/1`` JSON problem format.

A problem file looks like::

    {
      "schema": "dgap-vi/1",
      "name": "diag",
      "dim": 2,
      "set": {"kind": "free", "dim": 2},
      "map": {"type": "affine", "A": [[2, 0], [0, 3]], "q": [-2, -3]},
      "lipschitz_L": 3.0,
      "mu_star": 2.0,
      "solutions": {"points": [[1, 1]]},
      "params": {"a": 1.0, "b": 2.0}
    }

``map.type`` is one of ``affine``, ``builtin`` (``{"id": ...}``) or
``piecewise_affine``. Piecewise maps list ``pieces`` of
``{"region": [...], "A": ..., "q": ...}`` where each region entry is
``"+"`` (coordinate >= 0), ``"-"`` (<= 0) or ``"*"`` (unconstrained).
Solutions are either a point list or ``{"affine_set": {"basis", "offset"}}``.
Box bounds may be given as the strings ``"inf"`` and ``"-inf"``.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from dgap.errors import CapabilityError, InputError
from dgap.gap import GapParams, VIProblem
from dgap.geometry import ConvexSet

SCHEMA = "dgap-vi/1"
BUILTIN_IDS = ("affine_pd", "li_ng", "constant_orthant", "identity_free")
CONTINUITY_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class SolutionSet:
    """Known solutions: a finite point list or an affine set ``offset + span(basis)``."""

    points: Optional[np.ndarray] = None
    basis: Optional[np.ndarray] = None
    offset: Optional[np.ndarray] = None

    def distance(self, x) -> float:
        x = np.asarray(x, dtype=float)
        if self.points is not None:
            return float(np.min(np.linalg.norm(self.points - x, axis=1)))
        d = x - self.offset
        if self.basis.size == 0:
            return float(np.linalg.norm(d))
        coef, *_ = np.linalg.lstsq(self.basis.T, d, rcond=None)
        return float(np.linalg.norm(d - self.basis.T @ coef))

    def representative(self) -> np.ndarray:
        return self.points[0].copy() if self.points is not None else self.offset.copy()

    def to_dict(self) -> dict:
        if self.points is not None:
            return {"points": self.points.tolist()}
        return {"affine_set": {"basis": self.basis.tolist(), "offset": self.offset.tolist()}}


def distance_to_solutions(problem: VIProblem, x) -> float:
    if problem.solutions is None:
        raise CapabilityError(f"problem {problem.name!r} declares no solution set")
    return problem.solutions.distance(x)


# builtins


def _affine_problem(name, A, q, K, **kw):
    A = np.array(A, dtype=float)
    q = np.array(q, dtype=float)
    A.flags.writeable = False
    q.flags.writeable = False
    return VIProblem(
        name=name,
        dim=A.shape[0],
        set=K,
        f_eval=lambda X: X @ A.T + q,
        jacobian=lambda x: A,
        b_jacobian=lambda x: [A],
        meta={"A": A, "q": q},
        **kw,
    )


def _affine_pd():
    return _affine_problem(
        "affine_pd",
        [[2.0, 0.0], [0.0, 3.0]],
        [-2.0, -3.0],
        ConvexSet.free(2),
        lipschitz_L=3.0,
        mu_star=2.0,
        solutions=SolutionSet(points=np.array([[1.0, 1.0]])),
        default_params=GapParams(1.0, 2.0),
        source="builtin:affine_pd",
    )


def li_ng_F(X):
    X = np.asarray(X, dtype=float)
    x1, x2 = X[..., 0], X[..., 1]
    p1, p2 = np.maximum(x1, 0.0), np.maximum(x2, 0.0)
    return np.stack([x1 + p1 * p2, x2 + 1.5 * p1], axis=-1)


def _li_ng_piece(s1, s2, x):
    # Jacobian of the smooth piece on the closed cell with sign pattern (s1, s2)
    if s1 < 0:
        return np.eye(2)
    if s2 > 0:
        return np.array([[1.0 + max(x[1], 0.0), max(x[0], 0.0)], [1.5, 1.0]])
    return np.array([[1.0, 0.0], [1.5, 1.0]])


def li_ng_jacobian(x):
    x = np.asarray(x, dtype=float)
    if x[0] * x[1] == 0:
        return None
    return _li_ng_piece(np.sign(x[0]), np.sign(x[1]), x)


def li_ng_b_jacobian(x):
    x = np.asarray(x, dtype=float)
    signs = [(1.0, -1.0) if v == 0 else (float(np.sign(v)),) for v in x]
    mats = []
    for s1, s2 in itertools.product(*signs):
        Z = _li_ng_piece(s1, s2, x)
        if not any(np.array_equal(Z, M) for M in mats):
            mats.append(Z)
    return mats


def li_ng_lipschitz(radius: float) -> float:
    """Lipschitz bound for the Li-Ng map on the ball ``||x|| <= radius``.

    On the positive quadrant ``||J||_F^2 = (1 + x2)^2 + x1^2 + 3.25
    <= (1 + radius)^2 + 3.25``; the other pieces have norm at most 2, which
    is below that bound. The ball is convex, so the supremum of Jacobian
    norms over it is a Lipschitz constant there.
    """
    return math.sqrt((1.0 + radius) ** 2 + 3.25)


def _li_ng(region_radius: float = 2.0):
    return VIProblem(
        name="li_ng",
        dim=2,
        set=ConvexSet.nonneg_orthant(2),
        f_eval=li_ng_F,
        jacobian=li_ng_jacobian,
        b_jacobian=li_ng_b_jacobian,
        lipschitz_L=li_ng_lipschitz(region_radius),
        mu_star=1.0,
        solutions=SolutionSet(points=np.zeros((1, 2))),
        lipschitz_region={"shape": "ball", "center": [0.0, 0.0], "radius": float(region_radius)},
        default_params=GapParams(0.5, 1.0),
        source="builtin:li_ng",
    )


def _constant_orthant():
    c = np.array([1.0, 1.0])
    Z = np.zeros((2, 2))
    return VIProblem(
        name="constant_orthant",
        dim=2,
        set=ConvexSet.nonneg_orthant(2),
        f_eval=lambda X: np.broadcast_to(c, np.shape(X)).copy(),
        jacobian=lambda x: Z,
        b_jacobian=lambda x: [Z],
        lipschitz_L=0.0,
        solutions=SolutionSet(points=np.zeros((1, 2))),
        default_params=GapParams(1.0, 2.0),
        source="builtin:constant_orthant",
    )


def _identity_free(dim: int = 2):
    eye = np.eye(dim)
    return VIProblem(
        name="identity_free",
        dim=dim,
        set=ConvexSet.free(dim),
        f_eval=lambda X: np.array(X, dtype=float),
        jacobian=lambda x: eye,
        b_jacobian=lambda x: [eye],
        lipschitz_L=1.0,
        mu_star=1.0,
        solutions=SolutionSet(points=np.zeros((1, dim))),
        default_params=GapParams(1.0, 2.0),
        source="builtin:identity_free",
    )


_BUILTINS = {
    "affine_pd": _affine_pd,
    "li_ng": _li_ng,
    "constant_orthant": _constant_orthant,
    "identity_free": _identity_free,
}


def builtin(id: str, **options) -> VIProblem:
    """Construct a benchmark problem.

    ``li_ng`` accepts ``region_radius`` (default 2) for the ball on which its
    Lipschitz bound is certified; ``identity_free`` accepts ``dim``.
    """
    try:
        factory = _BUILTINS[id]
    except KeyError:
        raise InputError(f"unknown builtin problem {id!r}; expected one of {BUILTIN_IDS}") from None
    return factory(**options)


# JSON ingestion


def _matrix(v, path, shape=None):
    try:
        M = np.array(v, dtype=float)
    except (TypeError, ValueError):
        raise InputError(f"{path}: not a numeric matrix") from None
    if M.ndim != 2 or (shape is not None and M.shape != shape):
        raise InputError(f"{path}: expected shape {shape}, got {M.shape}")
    if not np.all(np.isfinite(M)):
        raise InputError(f"{path}: entries must be finite")
    return M


def _vector(v, path, n=None):
    try:
        q = np.array(v, dtype=float)
    except (TypeError, ValueError):
        raise InputError(f"{path}: not a numeric vector") from None
    if q.ndim != 1 or (n is not None and q.shape[0] != n):
        raise InputError(f"{path}: expected length {n}, got shape {q.shape}")
    if not np.all(np.isfinite(q)):
        raise InputError(f"{path}: entries must be finite")
    return q


def _region_mask(region, X):
    m = np.ones(X.shape[:-1], dtype=bool)
    for i, s in enumerate(region):
        if s == "+":
            m &= X[..., i] >= 0
        elif s == "-":
            m &= X[..., i] <= 0
    return m


def _check_piece_continuity(pieces, n, path):
    """Adjacent affine pieces must coincide on their common face.

    The common face of two closed sign cells fixes every coordinate with
    conflicting signs to zero and is full-dimensional in the remaining ones,
    so agreement there is equivalent to equal offsets and equal columns on
    the remaining coordinates.
    """
    for (i, (ri, Ai, qi)), (j, (rj, Aj, qj)) in itertools.combinations(enumerate(pieces), 2):
        free = [k for k in range(n) if not ({ri[k], rj[k]} == {"+", "-"})]
        if not free and not np.allclose(qi, qj, rtol=0, atol=CONTINUITY_TOL):
            raise InputError(f"{path}: pieces {i} and {j} disagree at the origin")
        scale = 1.0 + max(np.abs(Ai).max(), np.abs(Aj).max(), np.abs(qi).max(), np.abs(qj).max())
        if np.max(np.abs(qi - qj)) > CONTINUITY_TOL * scale or (
            free and np.max(np.abs(Ai[:, free] - Aj[:, free])) > CONTINUITY_TOL * scale
        ):
            raise InputError(f"{path}: pieces {i} and {j} are discontinuous on their common face")


def _check_piece_coverage(pieces, n, path):
    if n > 16:
        return
    for signs in itertools.product("+-", repeat=n):
        if not any(all(r[k] in (signs[k], "*") for k in range(n)) for r, _, _ in pieces):
            raise InputError(f"{path}: no piece covers the sign cell {''.join(signs)}")


def _piecewise_problem(name, n, K, raw_pieces, path, **kw):
    if not isinstance(raw_pieces, list) or not raw_pieces:
        raise InputError(f"{path}.pieces: expected a nonempty list")
    pieces = []
    for k, p in enumerate(raw_pieces):
        pp = f"{path}.pieces[{k}]"
        if not isinstance(p, dict):
            raise InputError(f"{pp}: expected an object")
        region = p.get("region")
        if isinstance(region, str):
            region = list(region)
        if not isinstance(region, list) or len(region) != n or any(s not in ("+", "-", "*") for s in region):
            raise InputError(f"{pp}.region: expected {n} entries from '+', '-', '*'")
        try:
            A = _matrix(p["A"], f"{pp}.A", (n, n))
            q = _vector(p["q"], f"{pp}.q", n)
        except KeyError as exc:
            raise InputError(f"{pp}: missing field {exc.args[0]!r}") from None
        pieces.append((tuple(region), A, q))
    _check_piece_continuity(pieces, n, path)
    _check_piece_coverage(pieces, n, path)

    def f_eval(X):
        X = np.asarray(X, dtype=float)
        out = np.full(X.shape, np.nan)
        todo = np.ones(X.shape[:-1], dtype=bool)
        for region, A, q in pieces:
            m = todo & _region_mask(region, X)
            out[m] = X[m] @ A.T + q
            todo &= ~m
        if np.any(todo):
            raise InputError("x: point lies outside every piece")
        return out

    def containing(x):
        mats = []
        for region, A, _ in pieces:
            if _region_mask(region, x) and not any(np.array_equal(A, M) for M in mats):
                mats.append(A)
        return mats

    def jacobian(x):
        mats = containing(x)
        return mats[0] if len(mats) == 1 else None

    return VIProblem(name=name, dim=n, set=K, f_eval=f_eval, jacobian=jacobian, b_jacobian=containing, **kw)


def _solutions_from(d, n, path):
    if d is None:
        return None
    if not isinstance(d, dict):
        raise InputError(f"{path}: expected an object")
    if "points" in d:
        P = np.atleast_2d(np.array(d["points"], dtype=float))
        if P.ndim != 2 or P.shape[1] != n or P.shape[0] == 0:
            raise InputError(f"{path}.points: expected a nonempty list of length-{n} vectors")
        return SolutionSet(points=P)
    if "affine_set" in d:
        aff = d["affine_set"]
        try:
            offset = _vector(aff["offset"], f"{path}.affine_set.offset", n)
            basis = np.array(aff.get("basis", []), dtype=float).reshape(-1, n)
        except KeyError as exc:
            raise InputError(f"{path}.affine_set: missing field {exc.args[0]!r}") from None
        except ValueError:
            raise InputError(f"{path}.affine_set.basis: expected length-{n} vectors") from None
        return SolutionSet(basis=basis, offset=offset)
    raise InputError(f"{path}: expected 'points' or 'affine_set'")


def problem_from_dict(d: dict, source: str = "") -> VIProblem:
    if not isinstance(d, dict):
        raise InputError("problem: expected a JSON object")
    if d.get("schema") != SCHEMA:
        raise InputError(f"schema: expected {SCHEMA!r}, got {d.get('schema')!r}")
    mp = d.get("map")
    if not isinstance(mp, dict) or "type" not in mp:
        raise InputError("map: expected an object with a 'type' field")
    name = d.get("name", "unnamed")
    if not isinstance(name, str):
        raise InputError("name: expected a string")

    params = None
    if "params" in d:
        pb = d["params"]
        if not isinstance(pb, dict) or "a" not in pb or "b" not in pb:
            raise InputError("params: expected an object with 'a' and 'b'")
        try:
            params = GapParams(pb["a"], pb["b"])
        except (InputError, TypeError, ValueError) as exc:
            raise InputError(f"params: {exc}".replace("params: params: ", "params: ")) from None

    if mp["type"] == "builtin":
        base = builtin(mp.get("id"))
        n = d.get("dim", base.dim)
        if n != base.dim:
            raise InputError(f"dim: {n} does not match builtin dimension {base.dim}")
        K = ConvexSet.from_dict(d["set"]) if "set" in d else base.set
        if K.dim != n:
            raise InputError(f"set.dim: {K.dim} does not match dim {n}")
        sols = _solutions_from(d.get("solutions"), n, "solutions") if "solutions" in d else base.solutions
        return VIProblem(
            name=name,
            dim=n,
            set=K,
            f_eval=base.f_eval,
            jacobian=base.jacobian,
            b_jacobian=base.b_jacobian,
            lipschitz_L=float(d.get("lipschitz_L", base.lipschitz_L)),
            mu_star=d.get("mu_star", base.mu_star),
            solutions=sols,
            lipschitz_region=d.get("lipschitz_region", base.lipschitz_region),
            default_params=params or base.default_params,
            source=source,
        )

    n = d.get("dim")
    if not isinstance(n, int) or n < 1:
        raise InputError("dim: expected a positive integer")
    if "set" not in d:
        raise InputError("set: missing")
    K = ConvexSet.from_dict(d["set"])
    if K.dim != n:
        raise InputError(f"set.dim: {K.dim} does not match dim {n}")
    if "lipschitz_L" not in d:
        raise InputError("lipschitz_L: missing")
    try:
        L = float(d["lipschitz_L"])
    except (TypeError, ValueError):
        raise InputError("lipschitz_L: expected a number") from None
    mu = d.get("mu_star")
    if mu is not None and not isinstance(mu, (int, float)):
        raise InputError("mu_star: expected a number")
    kw = dict(
        lipschitz_L=L,
        mu_star=None if mu is None else float(mu),
        solutions=_solutions_from(d.get("solutions"), n, "solutions"),
        lipschitz_region=d.get("lipschitz_region"),
        default_params=params,
        source=source,
    )
    if mp["type"] == "affine":
        try:
            A = _matrix(mp["A"], "map.A", (n, n))
            q = _vector(mp["q"], "map.q", n)
        except KeyError as exc:
            raise InputError(f"map: missing field {exc.args[0]!r}") from None
        return _affine_problem(name, A, q, K, **kw)
    if mp["type"] == "piecewise_affine":
        return _piecewise_problem(name, n, K, mp.get("pieces"), "map", **kw)
    raise InputError(f"map.type: unknown type {mp['type']!r}; expected affine, builtin or piecewise_affine")


def load_problem(path) -> VIProblem:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise InputError(f"cannot read problem file {str(path)!r}: {exc.strerror}") from None
    try:
        d = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc.msg} at line {exc.lineno})") from None
    digest = hashlib.sha256(raw).hexdigest()
    return problem_from_dict(d, source=f"file:{path.name}#sha256:{digest}")


def resolve_problem(ref: str) -> VIProblem:
    """``builtin:<id>`` or a path to a ``dgap-vi/1`` JSON file."""
    if ref.startswith("builtin:"):
        return builtin(ref[len("builtin:"):])
    return load_problem(ref)


def problem_hash(problem: VIProblem) -> str:
    if "#sha256:" in problem.source:
        return problem.source.split("#sha256:")[1]
    return hashlib.sha256(problem.source.encode()).hexdigest()
