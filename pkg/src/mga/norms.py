"""Smooth Minkowski norms on R^d: evaluation, dual norms and dual vectors.

Only the Euclidean norm and l_p norms with 1 < p < inf are supported.  Both
are smooth and strictly convex, so every nonzero vector has exactly one dual
vector (the gradient of the norm).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "NormSpace",
    "NormError",
    "euclidean",
    "p_norm",
    "norm",
    "dual_norm",
    "dual_vector",
]

DUAL_VECTOR_FLOOR = 1e-12


class NormError(ValueError):
    """Invalid norm construction or an operation outside its domain."""


def _lp(x: np.ndarray, p: float) -> np.ndarray:
    # scale by the max component so powers neither overflow nor underflow
    a = np.abs(x)
    m = a.max(axis=-1, keepdims=True)
    safe = np.where(m > 0, m, 1.0)
    u = a / safe
    r = np.sqrt(np.sum(u * u, axis=-1)) if p == 2.0 else np.sum(u**p, axis=-1) ** (1.0 / p)
    return r * m[..., 0]


@dataclass(frozen=True)
class NormSpace:
    """A smooth norm on R^dim.

    ``kind`` is ``"euclidean"`` or ``"p"``; for ``"p"`` the exponent ``p``
    must lie strictly between 1 and infinity.
    """

    kind: str = "euclidean"
    dim: int = 2
    p: float = 2.0

    def __post_init__(self):
        if self.kind not in ("euclidean", "p"):
            raise NormError(f"unknown norm kind {self.kind!r}")
        if int(self.dim) != self.dim or self.dim < 2:
            raise NormError(f"dim must be an integer >= 2, got {self.dim}")
        object.__setattr__(self, "dim", int(self.dim))
        if self.kind == "euclidean":
            object.__setattr__(self, "p", 2.0)
        else:
            p = float(self.p)
            if not (math.isfinite(p) and p > 1.0):
                raise NormError(
                    f"p-norm exponent must lie in (1, inf), got {self.p}; "
                    "l_1 and l_inf are not smooth"
                )
            object.__setattr__(self, "p", p)

    @property
    def q(self) -> float:
        """Dual exponent, 1/p + 1/q = 1."""
        return self.p / (self.p - 1.0)

    @property
    def is_euclidean(self) -> bool:
        return self.kind == "euclidean" or self.p == 2.0

    def _check(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape[-1:] != (self.dim,):
            raise NormError(f"expected vectors of dimension {self.dim}, got shape {x.shape}")
        return x

    def norm(self, x) -> float | np.ndarray:
        """Norm of ``x``; ``x`` may be a stack of row vectors."""
        r = _lp(self._check(x), self.p)
        return float(r) if r.ndim == 0 else r

    def dual_norm(self, z) -> float | np.ndarray:
        """sup of <z, x> over the unit ball, i.e. the l_q norm."""
        r = _lp(self._check(z), self.q)
        return float(r) if r.ndim == 0 else r

    def dual_vector(self, x, floor: float = DUAL_VECTOR_FLOOR) -> np.ndarray:
        """Gradient of the norm at ``x``.

        Rows whose norm is at or below ``floor`` raise :class:`NormError`.
        """
        x = self._check(x)
        r = np.asarray(self.norm(x))
        if np.any(r <= floor):
            raise NormError("dual vector undefined at (or numerically near) the origin")
        r = r[..., None]
        if self.is_euclidean:
            return x / r
        u = x / r
        return np.sign(u) * np.abs(u) ** (self.p - 1.0)

    # Smoothed norm used by the optimizer.  For eps > 0 this is the l_p norm
    # of (sqrt(x_i^2 + eps^2))_i, which is convex, C^2 and within
    # dim^(1/p) * eps of the true norm.
    def smoothed(self, x: np.ndarray, eps: float, derivatives: bool = True):
        """Value, gradient and Hessian of the smoothed norm for each row of ``x``.

        Returns arrays of shapes ``(m,)``, ``(m, d)`` and ``(m, d, d)``; the
        last two are None when ``derivatives`` is False.
        """
        x = np.asarray(x, dtype=float)
        p = self.p
        a = np.sqrt(x * x + eps * eps)
        m = a.max(axis=-1, keepdims=True)
        u = a / m
        s = np.sum(u**p, axis=-1, keepdims=True)
        F = m * s ** (1.0 / p)
        if not derivatives:
            return F[..., 0], None, None
        # grad_i = (a_i / F)^(p-1) * x_i / a_i
        ratio = a / F
        g = ratio ** (p - 1.0) * x / a
        diag = ratio ** (p - 2.0) * ((p - 1.0) * x * x + eps * eps) / (a * a * F)
        H = diag[..., :, None] * np.eye(x.shape[-1]) - (p - 1.0) / F[..., None] * (
            g[..., :, None] * g[..., None, :]
        )
        return F[..., 0], g, H


def euclidean(dim: int = 2) -> NormSpace:
    return NormSpace("euclidean", dim)


def p_norm(p: float, dim: int = 2) -> NormSpace:
    return NormSpace("p", dim, p)


def norm(x, space: NormSpace) -> float:
    return space.norm(x)


def dual_norm(z, space: NormSpace) -> float:
    return space.dual_norm(z)


def dual_vector(x, space: NormSpace, floor: float = DUAL_VECTOR_FLOOR) -> np.ndarray:
    return space.dual_vector(x, floor)
