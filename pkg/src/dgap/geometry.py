"""Closed-form Euclidean projections and tangent-cone tests.

Only sets whose projection has an exact formula are supported: the whole
space, the nonnegative orthant, boxes with possibly infinite bounds, and
Euclidean balls. All projections broadcast over leading axes, so a batch of
points of shape ``(m, n)`` is projected row by row.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from dgap.errors import CapabilityError, InputError

DEFAULT_TOL = 1e-10

KINDS = ("free", "nonneg_orthant", "box", "ball")
POLYHEDRAL_KINDS = ("free", "nonneg_orthant", "box")


def _as_vector(v, dim, name):
    arr = np.asarray(v, dtype=float)
    if arr.ndim != 1 or arr.shape[0] != dim:
        raise InputError(f"{name}: expected a vector of length {dim}, got shape {arr.shape}")
    return arr


@dataclass(frozen=True, eq=False)
class ConvexSet:
    """A nonempty closed convex set with a closed-form projection.

    Use the constructors :meth:`free`, :meth:`nonneg_orthant`, :meth:`box`
    and :meth:`ball` rather than calling the initializer directly.
    """

    kind: str
    dim: int
    lo: Optional[np.ndarray] = field(default=None, repr=False)
    hi: Optional[np.ndarray] = field(default=None, repr=False)
    center: Optional[np.ndarray] = field(default=None, repr=False)
    radius: Optional[float] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InputError(f"set.kind: unknown kind {self.kind!r}; expected one of {KINDS}")
        if not isinstance(self.dim, (int, np.integer)) or self.dim < 1:
            raise InputError(f"set.dim: must be a positive integer, got {self.dim!r}")
        if self.kind == "box":
            lo = _as_vector(self.lo, self.dim, "set.lo")
            hi = _as_vector(self.hi, self.dim, "set.hi")
            if np.any(np.isnan(lo)) or np.any(np.isnan(hi)):
                raise InputError("set: box bounds must not be NaN")
            if np.any(lo == np.inf) or np.any(hi == -np.inf):
                raise InputError("set: box needs lo < +inf and hi > -inf")
            if np.any(lo > hi):
                bad = int(np.argmax(lo > hi))
                raise InputError(f"set: box requires lo <= hi, violated at coordinate {bad}")
            lo.flags.writeable = False
            hi.flags.writeable = False
            object.__setattr__(self, "lo", lo)
            object.__setattr__(self, "hi", hi)
        elif self.kind == "ball":
            c = _as_vector(self.center, self.dim, "set.center")
            c.flags.writeable = False
            object.__setattr__(self, "center", c)
            if self.radius is None or not np.isfinite(self.radius) or self.radius <= 0:
                raise InputError(f"set.radius: must be a positive finite real, got {self.radius!r}")
            object.__setattr__(self, "radius", float(self.radius))

    @classmethod
    def free(cls, dim: int) -> "ConvexSet":
        return cls("free", int(dim))

    @classmethod
    def nonneg_orthant(cls, dim: int) -> "ConvexSet":
        return cls("nonneg_orthant", int(dim))

    @classmethod
    def box(cls, lo, hi) -> "ConvexSet":
        lo = np.asarray(lo, dtype=float)
        return cls("box", int(lo.shape[0]) if lo.ndim == 1 else -1, lo=lo, hi=hi)

    @classmethod
    def ball(cls, center, radius: float) -> "ConvexSet":
        center = np.asarray(center, dtype=float)
        return cls("ball", int(center.shape[0]) if center.ndim == 1 else -1, center=center, radius=radius)

    @property
    def is_polyhedral(self) -> bool:
        return self.kind in POLYHEDRAL_KINDS

    def project(self, y) -> np.ndarray:
        return project(self, y)

    def contains(self, x, tol: float = DEFAULT_TOL) -> bool:
        return contains(self, x, tol)

    def to_dict(self) -> dict:
        if self.kind == "box":
            return {
                "kind": "box",
                "dim": self.dim,
                "lo": [_float_or_str(v) for v in self.lo],
                "hi": [_float_or_str(v) for v in self.hi],
            }
        if self.kind == "ball":
            return {"kind": "ball", "dim": self.dim, "center": self.center.tolist(), "radius": self.radius}
        return {"kind": self.kind, "dim": self.dim}

    @classmethod
    def from_dict(cls, d: dict, path: str = "set") -> "ConvexSet":
        if not isinstance(d, dict):
            raise InputError(f"{path}: expected an object")
        kind = d.get("kind")
        dim = d.get("dim")
        try:
            if kind in ("free", "nonneg_orthant"):
                return cls(kind, dim)
            if kind == "box":
                lo = np.array([_parse_bound(v, f"{path}.lo") for v in d["lo"]])
                hi = np.array([_parse_bound(v, f"{path}.hi") for v in d["hi"]])
                s = cls.box(lo, hi)
                if dim is not None and dim != s.dim:
                    raise InputError(f"{path}.dim: {dim} does not match bound length {s.dim}")
                return s
            if kind == "ball":
                s = cls.ball(d["center"], d["radius"])
                if dim is not None and dim != s.dim:
                    raise InputError(f"{path}.dim: {dim} does not match center length {s.dim}")
                return s
        except KeyError as exc:
            raise InputError(f"{path}: missing field {exc.args[0]!r}") from None
        raise InputError(f"{path}.kind: unknown kind {kind!r}; expected one of {KINDS}")


def _float_or_str(v: float):
    if np.isposinf(v):
        return "inf"
    if np.isneginf(v):
        return "-inf"
    return float(v)


def _parse_bound(v, path):
    if isinstance(v, str):
        if v in ("inf", "+inf", "Infinity"):
            return np.inf
        if v in ("-inf", "-Infinity"):
            return -np.inf
        raise InputError(f"{path}: cannot parse bound {v!r}")
    if v is None:
        raise InputError(f"{path}: null bound")
    return float(v)


def _check_dim(s: ConvexSet, y: np.ndarray, name="y"):
    if y.ndim == 0 or y.shape[-1] != s.dim:
        raise InputError(f"{name}: expected trailing dimension {s.dim}, got shape {y.shape}")


def project(s: ConvexSet, y) -> np.ndarray:
    """Euclidean projection of ``y`` onto ``s``."""
    y = np.asarray(y, dtype=float)
    _check_dim(s, y)
    if s.kind == "free":
        return y.copy()
    if s.kind == "nonneg_orthant":
        return np.maximum(y, 0.0)
    if s.kind == "box":
        return np.clip(y, s.lo, s.hi)
    # ball: radial scaling of the offset from the center
    off = y - s.center
    nrm = np.linalg.norm(off, axis=-1, keepdims=True)
    scale = np.where(nrm > s.radius, s.radius / np.where(nrm > 0, nrm, 1.0), 1.0)
    return s.center + off * scale


def contains(s: ConvexSet, x, tol: float = DEFAULT_TOL) -> bool:
    x = np.asarray(x, dtype=float)
    _check_dim(s, x, "x")
    if s.kind == "free":
        return bool(np.all(np.isfinite(x)))
    if s.kind == "nonneg_orthant":
        return bool(np.all(x >= -tol))
    if s.kind == "box":
        return bool(np.all(x >= s.lo - tol) and np.all(x <= s.hi + tol))
    return bool(np.all(np.linalg.norm(x - s.center, axis=-1) <= s.radius + tol))


def tangent_cone_contains(s: ConvexSet, x, w, tol: float = DEFAULT_TOL) -> bool:
    """Whether direction ``w`` lies in the tangent cone of ``s`` at ``x``.

    A coordinate counts as active when ``x`` is within ``tol`` of the bound;
    there the direction may not point outward by more than ``tol``.
    """
    if not s.is_polyhedral:
        raise CapabilityError(f"tangent cone test is only available for {POLYHEDRAL_KINDS}, not {s.kind!r}")
    x = _as_vector(x, s.dim, "x")
    w = _as_vector(w, s.dim, "w")
    if not contains(s, x, tol):
        raise InputError("x: point is not in the set (beyond tolerance)")
    if s.kind == "free":
        return True
    if s.kind == "nonneg_orthant":
        lo, hi = np.zeros(s.dim), np.full(s.dim, np.inf)
    else:
        lo, hi = s.lo, s.hi
    at_lo = np.abs(x - lo) <= tol
    at_hi = np.abs(x - hi) <= tol
    return bool(np.all(w[at_lo] >= -tol) and np.all(w[at_hi] <= tol))
