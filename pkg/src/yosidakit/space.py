"""Power gauges, l^p norms and duality mappings on finite-dimensional l^p.

The primal space is (R^n, ||.||_p) and its dual is (R^n, ||.||_q) with
1/p + 1/q = 1.  For the power gauge phi(r) = r^(p-1) the duality mapping
is single valued and acts componentwise::

    (J_phi x)_i = |x_i|^(p-2) x_i

Its inverse is the duality mapping of the dual space for the gauge
r^(q-1), i.e. the same formula with q in place of p.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal, Union

import numpy as np

__all__ = [
    "DomainError",
    "Gauge",
    "PVector",
    "gauge_eval",
    "gauge_inverse",
    "pnorm",
    "signed_power",
    "duality_map",
    "duality_map_inverse",
    "normalized_duality_map",
    "pairing",
]

Side = Literal["primal", "dual"]


class DomainError(ValueError):
    """Raised when an argument lies outside the domain of a map."""


@dataclass(frozen=True)
class Gauge:
    """Power gauge phi(r) = r^(p-1) on l^p."""

    p: float
    q: float = field(init=False)
    gamma: float = field(init=False)

    def __post_init__(self):
        p = float(self.p)
        if not np.isfinite(p) or p <= 1.0:
            raise DomainError(f"gauge exponent must satisfy 1 < p < inf, got {p!r}")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", p / (p - 1.0))
        object.__setattr__(self, "gamma", p - 1.0)

    def __call__(self, r):
        return gauge_eval(self, r)

    def inverse(self, r):
        return gauge_inverse(self, r)


@dataclass(frozen=True)
class PVector:
    """A coordinate array tagged with its side (primal or dual) and the primal exponent."""

    coords: np.ndarray
    side: Side = "primal"
    p: float = 2.0

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.coords, dtype=float)).copy()
        if c.ndim != 1 or c.size == 0:
            raise DomainError("PVector needs a non-empty 1-d coordinate array")
        if not np.all(np.isfinite(c)):
            raise DomainError("PVector coordinates must be finite")
        if self.side not in ("primal", "dual"):
            raise DomainError(f"unknown side {self.side!r}")
        c.setflags(write=False)
        object.__setattr__(self, "coords", c)
        object.__setattr__(self, "p", Gauge(self.p).p)

    @property
    def exponent(self) -> float:
        """Exponent of the norm this vector is measured in."""
        if self.side == "primal":
            return self.p
        return self.p / (self.p - 1.0)

    def norm(self) -> float:
        return _lp(self.coords, self.exponent)

    def __len__(self):
        return self.coords.size


ArrayOrVector = Union[np.ndarray, PVector, float, list]


def _check_nonneg(r):
    r = np.asarray(r, dtype=float)
    if np.any(r < 0) or np.any(np.isnan(r)):
        raise DomainError("gauge argument must be nonnegative")
    return r


def _scalar_out(r):
    return float(r) if np.ndim(r) == 0 else r


def gauge_eval(g: Gauge, r):
    """phi(r) = r^(p-1); raises DomainError for negative r."""
    r = _check_nonneg(r)
    return _scalar_out(np.power(r, g.p - 1.0))


def gauge_inverse(g: Gauge, r):
    """phi^{-1}(r) = r^(q-1)."""
    r = _check_nonneg(r)
    return _scalar_out(np.power(r, g.q - 1.0))


def _lp(x: np.ndarray, p: float) -> float:
    ax = np.abs(x)
    m = ax.max(initial=0.0)
    if m == 0.0:
        return 0.0
    # scale first so large or tiny entries do not overflow
    return float(m * np.sum((ax / m) ** p) ** (1.0 / p))


def pnorm(x: ArrayOrVector, p: float | None = None) -> float:
    """l^p norm of ``x``.

    A PVector carries its own exponent (q on the dual side); for a bare
    array ``p`` must be given.
    """
    if isinstance(x, PVector):
        return x.norm()
    if p is None:
        raise TypeError("pnorm of a bare array needs the exponent p")
    return _lp(np.atleast_1d(np.asarray(x, dtype=float)), float(p))


def signed_power(x, e: float) -> np.ndarray:
    """Componentwise |x|^(e-1) x, i.e. the gradient of sum |x_i|^e / e."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    nz = x != 0
    out[nz] = np.sign(x[nz]) * np.abs(x[nz]) ** e
    return out


def _unwrap(x, side: Side, g: Gauge):
    if isinstance(x, PVector):
        if x.side != side:
            raise DomainError(f"expected a {side}-side vector, got {x.side}")
        return x.coords, True
    return np.atleast_1d(np.asarray(x, dtype=float)), False


def duality_map(x: ArrayOrVector, g: Gauge):
    """J_phi x with (J_phi x)_i = |x_i|^(p-2) x_i; J_phi(0) = 0."""
    c, wrapped = _unwrap(x, "primal", g)
    y = signed_power(c, g.p - 1.0)
    return PVector(y, "dual", g.p) if wrapped else y


def duality_map_inverse(y: ArrayOrVector, g: Gauge):
    """J_phi^{-1} y with components |y_i|^(q-2) y_i."""
    c, wrapped = _unwrap(y, "dual", g)
    x = signed_power(c, g.q - 1.0)
    return PVector(x, "primal", g.p) if wrapped else x


def normalized_duality_map(x: ArrayOrVector, p: float) -> np.ndarray:
    """Duality map for the gauge phi(r) = r on l^p: ||x||_p^(2-p) |x|^(p-2) x."""
    c = np.atleast_1d(np.asarray(x.coords if isinstance(x, PVector) else x, dtype=float))
    nrm = _lp(c, p)
    if nrm == 0.0:
        return np.zeros_like(c)
    # normalize before powering to stay in range
    return nrm * signed_power(c / nrm, p - 1.0)


def pairing(y, x) -> float:
    """Duality pairing <y, x> = sum y_i x_i."""
    y = y.coords if isinstance(y, PVector) else y
    x = x.coords if isinstance(x, PVector) else x
    return float(np.dot(np.asarray(y, dtype=float).ravel(), np.asarray(x, dtype=float).ravel()))
