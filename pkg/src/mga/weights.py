"""Edge weight functions w(t): unit cost of an edge carrying flow t."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

__all__ = [
    "WeightFunction",
    "WeightError",
    "ConditionFlags",
    "constant",
    "affine",
    "power",
    "rounded_affine",
    "check_conditions",
]

_GRID_TOL = 1e-12


class WeightError(ValueError):
    pass


@dataclass(frozen=True)
class WeightFunction:
    """One of four parametric families.

    ============== ===========================
    constant       w(t) = d
    affine         w(t) = d + h t
    power          w(t) = d + h t**alpha
    rounded_affine w(t) = ceil((a t + b) / c)
    ============== ===========================

    A ``power`` weight with ``alpha == 1`` is stored as ``affine``.
    """

    kind: str
    d: float = 0.0
    h: float = 0.0
    alpha: float = 1.0
    a: float = 0.0
    b: float = 0.0
    c: float = 1.0

    def __post_init__(self):
        k = self.kind
        for name in ("d", "h", "alpha", "a", "b", "c"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise WeightError(f"{name} must be finite")
            object.__setattr__(self, name, v)
        if k == "constant":
            if self.d <= 0:
                raise WeightError("constant weight needs d > 0")
        elif k == "affine":
            if self.d <= 0 or self.h < 0:
                raise WeightError("affine weight needs d > 0 and h >= 0")
        elif k == "power":
            if self.d <= 0 or self.h <= 0:
                raise WeightError("power weight needs d > 0 and h > 0")
            if not 0 < self.alpha <= 1:
                raise WeightError("power weight needs 0 < alpha <= 1")
            if self.alpha == 1.0:
                object.__setattr__(self, "kind", "affine")
        elif k == "rounded_affine":
            if self.a <= 0 or self.b <= 0 or self.c <= 0:
                raise WeightError("rounded_affine weight needs a, b, c > 0")
        else:
            raise WeightError(f"unknown weight kind {k!r}")

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t < 0):
            raise WeightError("weight is only defined for t >= 0")
        k = self.kind
        if k == "constant":
            r = np.full_like(t, self.d)
        elif k == "affine":
            r = self.d + self.h * t
        elif k == "power":
            r = self.d + self.h * t**self.alpha
        else:
            r = np.ceil((self.a * t + self.b) / self.c)
        return float(r) if r.ndim == 0 else r

    eval = __call__

    @property
    def is_analytic(self) -> bool:
        return self.kind != "rounded_affine"

    def to_dict(self) -> dict:
        k = self.kind
        if k == "constant":
            return {"kind": k, "d": self.d}
        if k == "affine":
            return {"kind": k, "d": self.d, "h": self.h}
        if k == "power":
            return {"kind": k, "d": self.d, "h": self.h, "alpha": self.alpha}
        return {"kind": k, "a": self.a, "b": self.b, "c": self.c}


def constant(d: float) -> WeightFunction:
    return WeightFunction("constant", d=d)


def affine(d: float, h: float) -> WeightFunction:
    return WeightFunction("affine", d=d, h=h)


def power(d: float, h: float, alpha: float) -> WeightFunction:
    return WeightFunction("power", d=d, h=h, alpha=alpha)


def rounded_affine(a: float, b: float, c: float) -> WeightFunction:
    return WeightFunction("rounded_affine", a=a, b=b, c=c)


@dataclass(frozen=True)
class ConditionFlags:
    positive: bool
    nondecreasing: bool
    subadditive: bool
    concave: bool

    @property
    def gilbert(self) -> bool:
        """Positive, nondecreasing and subadditive: enough for a Gilbert network."""
        return self.positive and self.nondecreasing and self.subadditive

    @property
    def all(self) -> bool:
        return self.gilbert and self.concave

    def as_tuple(self) -> tuple[bool, bool, bool, bool]:
        return (self.positive, self.nondecreasing, self.subadditive, self.concave)


def _grid_conditions(w: WeightFunction, grid: list[float]) -> ConditionFlags:
    vals = {t: w(t) for t in grid}
    positive = all(v >= 0 if t == 0 else v > 0 for t, v in vals.items())
    nondecreasing = all(
        vals[t2] >= vals[t1] - _GRID_TOL for t1, t2 in itertools.combinations(grid, 2)
    )
    members = set(grid)
    pos = [t for t in grid if t > 0]
    subadditive = all(
        vals[t1 + t2] <= vals[t1] + vals[t2] + _GRID_TOL
        for t1, t2 in itertools.combinations_with_replacement(pos, 2)
        if t1 + t2 in members
    )
    concave = all(
        2 * vals[mid] >= vals[lo] + vals[hi] - _GRID_TOL
        for lo, hi in itertools.combinations(grid, 2)
        if (mid := (lo + hi) / 2) in members
    )
    return ConditionFlags(positive, nondecreasing, subadditive, concave)


def check_conditions(
    w: WeightFunction, grid: Iterable[float], analytic: bool = True
) -> ConditionFlags:
    """Check positivity, monotonicity, subadditivity and concavity.

    The constant, affine and power families satisfy all four by construction
    and are answered analytically unless ``analytic`` is False; anything
    else is tested exhaustively on ``grid``, which must contain 0.
    """
    grid = sorted({float(t) for t in grid})
    if not grid:
        raise WeightError("empty grid")
    if grid[0] < 0:
        raise WeightError("grid points must be nonnegative")
    if analytic and w.is_analytic:
        return ConditionFlags(True, True, True, True)
    if grid[0] != 0:
        raise WeightError("grid must include 0")
    return _grid_conditions(w, grid)
