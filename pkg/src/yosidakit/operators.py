"""Maximal monotone operators on R^n with graph queries.

Operators are intensional: each class knows its graph in closed form and
answers membership, domain and nearest-element queries.  The resolvent
engine in :mod:`yosidakit.yosida` dispatches on three capability flags:

``separable``
    the graph is a product of scalar monotone graphs, each described by
    interval bounds ``bounds(y) -> (lo, hi)`` (``-inf``/``+inf`` encode the
    empty set left/right of the domain) plus a list of kink points.
``single_valued`` / ``value`` / ``jacobian``
    smooth single-valued maps, solved by Newton.
``energy``
    gradients of convex energies; the resolvent is then a strictly convex
    minimization.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import brentq

from .space import DomainError, Gauge, duality_map, signed_power, _lp

__all__ = [
    "MonotoneOp",
    "SeparableOp",
    "PowerGraph",
    "L1Subdifferential",
    "BoxNormalCone",
    "BallNormalCone",
    "LinearPSD",
    "Subdifferential",
    "DiscretePLaplacian",
    "SmoothMap",
    "Sum",
    "Scaled",
    "zero_operator",
    "half_line_power_graph",
    "catalog",
    "CheckReport",
    "check_monotone",
    "check_homogeneous",
]

GRAPH_TOL = 1e-9


def _arr(x) -> np.ndarray:
    if hasattr(x, "coords"):
        x = x.coords
    return np.atleast_1d(np.asarray(x, dtype=float))


class MonotoneOp:
    """Base class.  Subclasses set the capability flags and override queries."""

    name = "operator"
    separable = False
    single_valued = False
    has_energy = False
    n: int = 1
    gamma: float | None = None

    # -- domain ---------------------------------------------------------
    def in_domain(self, x) -> bool:
        return True

    def domain_distance(self, x) -> float:
        """Euclidean distance from ``x`` to the closure of D(A)."""
        return 0.0

    # -- graph ----------------------------------------------------------
    def select(self, x, target) -> np.ndarray:
        """Element of A(x) closest (Euclidean) to ``target``."""
        raise NotImplementedError

    def min_section(self, x) -> np.ndarray:
        """Least-norm element A^0 x of A(x)."""
        x = _arr(x)
        if not self.in_domain(x):
            raise DomainError(f"x is not in the domain of {self.name}")
        return self.select(x, np.zeros_like(x))

    def graph_distance(self, x, y) -> float:
        """Sup-norm distance from ``y`` to A(x); inf when x is outside D(A)."""
        x, y = _arr(x), _arr(y)
        if not self.in_domain(x):
            return float("inf")
        return float(np.max(np.abs(y - self.select(x, y)), initial=0.0))

    def contains(self, x, y, tol: float = GRAPH_TOL) -> bool:
        y = _arr(y)
        return self.graph_distance(x, y) <= tol * (1.0 + np.max(np.abs(y), initial=0.0))

    # -- sampling -------------------------------------------------------
    def sample_domain(self, rng: np.random.Generator, k: int, radius: float = 2.0) -> np.ndarray:
        return rng.uniform(-radius, radius, size=(k, self.n))

    def sample_graph(self, rng: np.random.Generator, k: int, radius: float = 2.0):
        """``k`` pairs (x, y) with y in A(x)."""
        xs = self.sample_domain(rng, k, radius)
        out = []
        for x in xs:
            target = rng.normal(scale=2.0, size=self.n)
            out.append((x, self.select(x, target)))
        return out

    def value(self, x) -> np.ndarray:
        if not self.single_valued:
            raise TypeError(f"{self.name} is multivalued; use select or min_section")
        return self.select(x, np.zeros(self.n))

    def __add__(self, other):
        return Sum([self, other])

    def __rmul__(self, c):
        return Scaled(float(c), self)

    def __repr__(self):
        return f"<{type(self).__name__} {self.name} n={self.n}>"


class SeparableOp(MonotoneOp):
    """Product of scalar monotone graphs given by interval bounds."""

    separable = True

    def bounds(self, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    def breakpoints(self) -> np.ndarray:
        """Array of shape (k, n) of kink locations; nan entries are ignored."""
        return np.empty((0, self.n))

    def slope(self, y: np.ndarray) -> np.ndarray:
        """Derivative of the single-valued branch; used only to steer Newton."""
        h = 1e-7 * (1.0 + np.abs(y))
        lo_p, _ = self.bounds(y + h)
        lo_m, _ = self.bounds(y - h)
        s = (lo_p - lo_m) / (2 * h)
        return np.where(np.isfinite(s), np.maximum(s, 0.0), 0.0)

    def in_domain(self, x) -> bool:
        lo, hi = self.bounds(_arr(x))
        return bool(np.all(lo <= hi) and not np.any((lo == hi) & np.isinf(lo)))

    def select(self, x, target) -> np.ndarray:
        x = _arr(x)
        lo, hi = self.bounds(x)
        if np.any((lo == hi) & np.isinf(lo)):
            raise DomainError(f"x is not in the domain of {self.name}")
        return np.clip(_arr(target), lo, hi)

    def jacobian(self, x) -> np.ndarray:
        return np.diag(self.slope(_arr(x)))


class PowerGraph(SeparableOp):
    """Componentwise x -> |x|^(gamma-1) x, positively homogeneous of degree gamma."""

    single_valued = True
    has_energy = True

    def __init__(self, gamma: float, n: int = 1):
        if gamma <= 0:
            raise ValueError("power graph needs gamma > 0")
        self.gamma = float(gamma)
        self.n = int(n)
        self.name = f"power(gamma={self.gamma:g})"

    def value(self, x):
        return signed_power(_arr(x), self.gamma)

    def bounds(self, y):
        v = signed_power(y, self.gamma)
        return v, v

    def breakpoints(self):
        return np.zeros((1, self.n))

    def slope(self, y):
        ay = np.abs(y)
        with np.errstate(divide="ignore"):
            s = self.gamma * ay ** (self.gamma - 1.0)
        return np.where(np.isfinite(s), s, 1e300)

    def select(self, x, target):
        return self.value(x)

    def energy(self, x):
        return float(np.sum(np.abs(_arr(x)) ** (self.gamma + 1.0)) / (self.gamma + 1.0))

    def resolvent_closed_form(self, x, lam, gauge: Gauge):
        if not np.isclose(gauge.p, self.gamma + 1.0, rtol=0, atol=1e-14):
            return None
        # |x - y| = lam^(q-1) |y| with y on the same side as x
        y = x / (1.0 + lam ** (gauge.q - 1.0))
        return y, self.value(y)


class _HalfLinePower(SeparableOp):
    """x^gamma on (0, inf), the half line (-inf, 0] at 0, empty for x < 0."""

    def __init__(self, gamma: float, n: int = 1):
        self.gamma = float(gamma)
        self.n = int(n)
        self.name = f"half_line_power(gamma={self.gamma:g})"

    def bounds(self, y):
        v = np.where(y > 0, np.abs(y) ** self.gamma, 0.0)
        lo = np.where(y > 0, v, -np.inf)
        hi = np.where(y >= 0, v, -np.inf)
        return lo, hi

    def breakpoints(self):
        return np.zeros((1, self.n))

    def domain_distance(self, x):
        return float(np.linalg.norm(np.minimum(_arr(x), 0.0)))

    def sample_domain(self, rng, k, radius=2.0):
        xs = rng.uniform(0.0, radius, size=(k, self.n))
        xs[rng.random(size=xs.shape) < 0.2] = 0.0
        return xs


def half_line_power_graph(gamma: float = 2.0, n: int = 1) -> SeparableOp:
    """Homogeneous graph with A(0) = (-inf, 0] strictly larger than {0}."""
    return _HalfLinePower(gamma, n)


class L1Subdifferential(SeparableOp):
    """Subdifferential of ||x||_1 (sign, with [-1, 1] at zero)."""

    has_energy = True

    def __init__(self, n: int = 1, weight: float = 1.0):
        self.n = int(n)
        self.weight = float(weight)
        self.name = "subdiff_l1" if weight == 1.0 else f"subdiff_l1(w={weight:g})"

    def energy(self, x):
        return self.weight * float(np.sum(np.abs(_arr(x))))

    def bounds(self, y):
        w = self.weight
        s = np.sign(y) * w
        return np.where(y == 0, -w, s), np.where(y == 0, w, s)

    def breakpoints(self):
        return np.zeros((1, self.n))

    def slope(self, y):
        return np.zeros_like(y)

    def sample_domain(self, rng, k, radius=2.0):
        xs = rng.uniform(-radius, radius, size=(k, self.n))
        xs[rng.random(size=xs.shape) < 0.25] = 0.0
        return xs

    def resolvent_closed_form(self, x, lam, gauge: Gauge):
        # generalized soft threshold: |x - y|^(p-1) = lam*w where y != 0
        thr = (lam * self.weight) ** (gauge.q - 1.0)
        big = np.abs(x) > thr
        y = np.where(big, x - np.sign(x) * thr, 0.0)
        a = np.where(big, np.sign(x) * self.weight, signed_power(x, gauge.p - 1.0) / lam)
        return y, np.clip(a, -self.weight, self.weight)


class BoxNormalCone(SeparableOp):
    """Normal cone of the box [lo, hi] (subdifferential of its indicator)."""

    def __init__(self, lo, hi, n: int | None = None):
        lo, hi = np.atleast_1d(np.asarray(lo, float)), np.atleast_1d(np.asarray(hi, float))
        n = int(n or max(lo.size, hi.size))
        self.lo = np.broadcast_to(lo, (n,)).copy()
        self.hi = np.broadcast_to(hi, (n,)).copy()
        if np.any(self.lo > self.hi):
            raise ValueError("empty box")
        self.n = n
        cone = np.all((self.lo == 0) | np.isneginf(self.lo)) and np.all((self.hi == 0) | np.isposinf(self.hi))
        # the normal cone of a cone is homogeneous of every degree; report degree 1
        self.gamma = 1.0 if cone else None
        self.name = "normal_cone_box"

    def bounds(self, y):
        lo = np.where(y < self.lo, -np.inf, np.where(y == self.lo, -np.inf, 0.0))
        hi = np.where(y < self.lo, -np.inf, np.where(y == self.hi, np.inf, 0.0))
        lo = np.where(y > self.hi, np.inf, np.where((y == self.hi) & (y > self.lo), 0.0, lo))
        hi = np.where(y > self.hi, np.inf, hi)
        return lo, hi

    def breakpoints(self):
        return np.vstack([self.lo, self.hi])

    def slope(self, y):
        return np.zeros_like(y)

    def domain_distance(self, x):
        x = _arr(x)
        return float(np.linalg.norm(x - np.clip(x, self.lo, self.hi)))

    def sample_domain(self, rng, k, radius=2.0):
        lo = np.maximum(self.lo, -radius)
        hi = np.minimum(self.hi, radius)
        xs = rng.uniform(lo, hi, size=(k, self.n))
        r = rng.random(size=xs.shape)
        xs = np.where(r < 0.15, lo, np.where(r > 0.85, hi, xs))
        return xs

    def resolvent_closed_form(self, x, lam, gauge: Gauge):
        y = np.clip(x, self.lo, self.hi)
        return y, signed_power(x - y, gauge.p - 1.0) / lam


class BallNormalCone(MonotoneOp):
    """Normal cone of the closed l^b ball of given radius centred at 0."""

    def __init__(self, radius: float, n: int, b: float = 2.0):
        self.radius = float(radius)
        self.n = int(n)
        self.b = float(b)
        self.name = f"normal_cone_ball(l{self.b:g}, r={self.radius:g})"

    def _on_sphere(self, x, nrm):
        return abs(nrm - self.radius) <= 1e-12 * self.radius

    def in_domain(self, x):
        return _lp(_arr(x), self.b) <= self.radius * (1 + 1e-12)

    def domain_distance(self, x):
        x = _arr(x)
        nrm = _lp(x, self.b)
        if nrm <= self.radius:
            return 0.0
        return float(np.linalg.norm(x - x * self.radius / nrm))

    def select(self, x, target):
        x, target = _arr(x), _arr(target)
        nrm = _lp(x, self.b)
        if nrm > self.radius * (1 + 1e-12):
            raise DomainError(f"x is not in the domain of {self.name}")
        if not self._on_sphere(x, nrm):
            return np.zeros_like(x)
        g = signed_power(x, self.b - 1.0)
        mu = max(0.0, float(np.dot(target, g) / np.dot(g, g)))
        return mu * g

    def sample_domain(self, rng, k, radius=2.0):
        xs = rng.normal(size=(k, self.n))
        out = []
        for x in xs:
            nrm = _lp(x, self.b)
            if rng.random() < 0.4:
                out.append(x * self.radius / nrm)
            else:
                out.append(x * self.radius * rng.random() / nrm)
        return np.array(out)

    def resolvent_closed_form(self, x, lam, gauge: Gauge):
        nrm = _lp(x, self.b)
        if nrm <= self.radius * (1 + 1e-15):
            return x.copy(), np.zeros_like(x)
        if np.isclose(gauge.p, self.b, rtol=0, atol=1e-14):
            # minimizer of ||y - x||_p over the l^p ball is the radial scaling
            y = x * (self.radius / nrm)
        else:
            y = self._project_general(x, gauge)
        a = signed_power(x - y, gauge.p - 1.0) / lam
        return y, self.select(y, a)

    def _project_general(self, x, gauge: Gauge):
        from .yosida import scalar_bisection  # avoid import cycle

        def y_of(mu):
            # per coordinate: Phi_p(y - x) + mu Phi_b(y) = 0
            def bnd(y):
                v = mu * signed_power(y, self.b - 1.0)
                return v, v
            return scalar_bisection(bnd, x, 1.0, gauge.p, np.zeros((1, self.n)))

        # |y(mu)|_b decreases in the multiplier mu; find where it hits the radius
        hi = 1.0
        while _lp(y_of(hi), self.b) > self.radius:
            hi *= 4.0
        hi = brentq(lambda mu: _lp(y_of(mu), self.b) - self.radius, 0.0, hi, xtol=1e-200 * hi,
                    rtol=1e-15, maxiter=500)
        y = y_of(hi)
        return y * (self.radius / _lp(y, self.b))


class LinearPSD(MonotoneOp):
    """x -> M x.  Monotone iff M + M^T is positive semidefinite."""

    single_valued = True

    def __init__(self, M):
        M = np.atleast_2d(np.asarray(M, dtype=float))
        if M.shape[0] != M.shape[1]:
            raise ValueError("LinearPSD needs a square matrix")
        self.M = M
        self.n = M.shape[0]
        self.gamma = 1.0
        self.symmetric = bool(np.allclose(M, M.T, atol=1e-14))
        self.has_energy = self.symmetric
        self.is_zero = not np.any(M)
        self.name = "zero" if self.is_zero else "linear"

    @property
    def is_psd(self) -> bool:
        return bool(np.linalg.eigvalsh(0.5 * (self.M + self.M.T)).min() >= -1e-12)

    def value(self, x):
        return self.M @ _arr(x)

    def select(self, x, target):
        return self.value(x)

    def jacobian(self, x):
        return self.M

    def energy(self, x):
        x = _arr(x)
        return 0.5 * float(x @ self.M @ x)

    def resolvent_closed_form(self, x, lam, gauge: Gauge):
        if self.is_zero:
            return x.copy(), np.zeros_like(x)
        if gauge.p != 2.0:
            return None
        y = np.linalg.solve(np.eye(self.n) + lam * self.M, x)
        return y, self.M @ y


def zero_operator(n: int = 1) -> LinearPSD:
    return LinearPSD(np.zeros((n, n)))


class Subdifferential(MonotoneOp):
    """Gradient of a differentiable convex energy.

    ``prox`` may supply a closed-form resolvent rule
    ``prox(x, lam, gauge) -> (x_lam, a_lam)``; otherwise the engine
    minimizes ``||y - x||_p^p / p + lam * energy(y)`` by Newton.
    """

    single_valued = True
    has_energy = True

    def __init__(self, energy: Callable, grad: Callable, n: int, hess: Callable | None = None,
                 prox: Callable | None = None, gamma: float | None = None, name: str = "subdiff"):
        self._energy, self._grad, self._hess, self._prox = energy, grad, hess, prox
        self.n = int(n)
        self.gamma = gamma
        self.name = name

    def energy(self, x):
        return float(self._energy(_arr(x)))

    def value(self, x):
        return np.asarray(self._grad(_arr(x)), dtype=float)

    def select(self, x, target):
        return self.value(x)

    def jacobian(self, x):
        x = _arr(x)
        if self._hess is not None:
            return np.atleast_2d(np.asarray(self._hess(x), dtype=float))
        return fd_jacobian(self.value, x)

    def resolvent_closed_form(self, x, lam, gauge):
        if self._prox is None:
            return None
        return self._prox(x, lam, gauge)


class DiscretePLaplacian(MonotoneOp):
    """Finite-difference -Delta_p with homogeneous Dirichlet data.

    1-D stencil on N interior nodes of spacing h::

        (A u)_i = (1/h) [Phi((u_i - u_{i-1})/h) - Phi((u_{i+1} - u_i)/h)]

    with Phi(s) = |s|^(p-2) s and u_0 = u_{N+1} = 0.  In 2-D the four edge
    differences of each node are summed.  A is the gradient of
    ``(1/p) * sum_edges |du/h|^p`` and is positively homogeneous of
    degree p - 1.
    """

    single_valued = True
    has_energy = True

    def __init__(self, shape, h: float, p: float):
        shape = (int(shape),) if np.ndim(shape) == 0 else tuple(int(s) for s in shape)
        if len(shape) not in (1, 2) or min(shape) < 1:
            raise ValueError("grid shape must be (N,) or (Nx, Ny) with positive sizes")
        if p <= 1:
            raise ValueError("p-Laplacian needs p > 1")
        self.shape = shape
        self.h = float(h)
        self.p = float(p)
        self.n = int(np.prod(shape))
        self.gamma = self.p - 1.0
        self.name = f"plaplacian(p={self.p:g}, grid={'x'.join(map(str, shape))})"
        self._D = self._difference_matrix()

    def _difference_matrix(self) -> np.ndarray:
        # rows are edges (including the ones touching the boundary), entries +-1/h
        def d1(N):
            D = np.zeros((N + 1, N))
            for e in range(N + 1):
                if e < N:
                    D[e, e] += 1.0
                if e > 0:
                    D[e, e - 1] -= 1.0
            return D

        if len(self.shape) == 1:
            return d1(self.shape[0]) / self.h
        nx, ny = self.shape
        Dx = np.kron(d1(nx), np.eye(ny))
        Dy = np.kron(np.eye(nx), d1(ny))
        return np.vstack([Dx, Dy]) / self.h

    def edge_differences(self, u) -> np.ndarray:
        return self._D @ _arr(u)

    def energy(self, u):
        return float(np.sum(np.abs(self.edge_differences(u)) ** self.p) / self.p)

    def value(self, u):
        return self._D.T @ signed_power(self.edge_differences(u), self.p - 1.0)

    def select(self, x, target):
        return self.value(x)

    def jacobian(self, u, mu: float = 0.0):
        d = self.edge_differences(u)
        with np.errstate(divide="ignore"):
            w = (self.p - 1.0) * (d * d + mu) ** ((self.p - 2.0) / 2.0)
        return self._D.T @ (w[:, None] * self._D)


class SmoothMap(MonotoneOp):
    """A differentiable single-valued map given by callables (monotonicity not assumed)."""

    single_valued = True

    def __init__(self, fn: Callable, n: int, jac: Callable | None = None, name: str = "map"):
        self._fn, self._jac = fn, jac
        self.n = int(n)
        self.name = name

    def value(self, x):
        return np.atleast_1d(np.asarray(self._fn(_arr(x)), dtype=float))

    def select(self, x, target):
        return self.value(x)

    def jacobian(self, x):
        if self._jac is not None:
            return np.atleast_2d(np.asarray(self._jac(_arr(x)), dtype=float))
        return fd_jacobian(self.value, _arr(x))


class Sum(MonotoneOp):
    """Pointwise sum of operators on a common space.

    Separable summands combine exactly (Minkowski sums of intervals).
    Otherwise at most one summand may be multivalued.
    """

    def __init__(self, ops: Sequence[MonotoneOp]):
        flat = []
        for op in ops:
            flat.extend(op.ops if isinstance(op, Sum) else [op])
        if not flat:
            raise ValueError("empty sum")
        ns = {op.n for op in flat}
        if len(ns) != 1:
            raise ValueError(f"summands act on different dimensions {sorted(ns)}")
        self.ops = flat
        self.n = ns.pop()
        self.separable = all(op.separable for op in flat)
        self.single_valued = all(op.single_valued for op in flat)
        self.has_energy = all(op.has_energy for op in flat)
        multi = [op for op in flat if not op.single_valued]
        if not self.separable and len(multi) > 1:
            raise ValueError("Sum supports at most one multivalued non-separable summand")
        self.multi = multi[0] if multi else None
        gammas = {op.gamma for op in flat}
        self.gamma = gammas.pop() if len(gammas) == 1 else None
        self.name = " + ".join(op.name for op in flat)

    def in_domain(self, x):
        return all(op.in_domain(x) for op in self.ops)

    def domain_distance(self, x):
        return max(op.domain_distance(x) for op in self.ops)

    def bounds(self, y):
        lo = np.zeros_like(y)
        hi = np.zeros_like(y)
        for op in self.ops:
            a, b = op.bounds(y)
            lo, hi = lo + a, hi + b
        return np.nan_to_num(lo, nan=-np.inf), np.nan_to_num(hi, nan=np.inf)

    def breakpoints(self):
        return np.vstack([op.breakpoints() for op in self.ops])

    def slope(self, y):
        return sum(op.slope(y) for op in self.ops)

    def select(self, x, target):
        x, target = _arr(x), _arr(target)
        if self.separable:
            return SeparableOp.select(self, x, target)
        single = sum((op.value(x) for op in self.ops if op.single_valued), np.zeros(self.n))
        if self.multi is None:
            return single
        return single + self.multi.select(x, target - single)

    def value(self, x):
        return sum(op.value(x) for op in self.ops)

    def jacobian(self, x):
        return sum(_as_matrix(op.jacobian(x), self.n) for op in self.ops)

    def energy(self, x):
        return sum(op.energy(x) for op in self.ops)

    def sample_domain(self, rng, k, radius=2.0):
        # the most constrained summand drives the domain
        for op in self.ops:
            if not op.single_valued:
                return op.sample_domain(rng, k, radius)
        return self.ops[0].sample_domain(rng, k, radius)


class Scaled(MonotoneOp):
    """c * A for c >= 0."""

    def __init__(self, c: float, op: MonotoneOp):
        if c < 0:
            raise ValueError("scaling factor must be nonnegative")
        self.c = float(c)
        self.op = op
        self.n = op.n
        self.gamma = op.gamma
        self.separable = op.separable
        self.single_valued = op.single_valued
        self.has_energy = op.has_energy
        self.name = f"{self.c:g}*({op.name})"

    def in_domain(self, x):
        return self.op.in_domain(x)

    def domain_distance(self, x):
        return self.op.domain_distance(x)

    def bounds(self, y):
        lo, hi = self.op.bounds(y)
        if self.c == 0:
            outside = (lo == hi) & np.isinf(lo)
            return np.where(outside, lo, 0.0), np.where(outside, hi, 0.0)
        return self.c * lo, self.c * hi

    def breakpoints(self):
        return self.op.breakpoints()

    def slope(self, y):
        return self.c * self.op.slope(y)

    def select(self, x, target):
        if self.c == 0:
            if not self.op.in_domain(x):
                raise DomainError(f"x is not in the domain of {self.name}")
            return np.zeros(self.n)
        return self.c * self.op.select(x, _arr(target) / self.c)

    def value(self, x):
        return self.c * self.op.value(x)

    def jacobian(self, x):
        return self.c * _as_matrix(self.op.jacobian(x), self.n)

    def energy(self, x):
        return self.c * self.op.energy(x)

    def sample_domain(self, rng, k, radius=2.0):
        return self.op.sample_domain(rng, k, radius)

    def resolvent_closed_form(self, x, lam, gauge):
        rule = getattr(self.op, "resolvent_closed_form", None)
        if rule is None or self.c == 0:
            return None
        out = rule(x, self.c * lam, gauge)
        if out is None:
            return None
        y, a = out
        return y, self.c * a


def _as_matrix(J, n):
    J = np.asarray(J, dtype=float)
    return np.diag(J) if J.ndim == 1 else J


def fd_jacobian(fn: Callable, x: np.ndarray, step: float = 1e-7) -> np.ndarray:
    """Central-difference Jacobian of a vector map."""
    x = np.asarray(x, dtype=float)
    f0 = np.atleast_1d(fn(x))
    J = np.empty((f0.size, x.size))
    for j in range(x.size):
        h = step * (1.0 + abs(x[j]))
        e = np.zeros_like(x)
        e[j] = h
        J[:, j] = (np.atleast_1d(fn(x + e)) - np.atleast_1d(fn(x - e))) / (2 * h)
    return J


def catalog(n: int = 1, seed: int = 0) -> dict[str, MonotoneOp]:
    """The standard test operators in dimension ``n``."""
    rng = np.random.default_rng(seed)
    B = rng.normal(size=(n, n))
    skew = rng.normal(size=(n, n))
    M = B @ B.T / n + 0.5 * (skew - skew.T)
    ops: dict[str, MonotoneOp] = {
        "zero": zero_operator(n),
        "identity": LinearPSD(np.eye(n)),
        "linear": LinearPSD(M),
        "cube": PowerGraph(3.0, n),
        "square": PowerGraph(2.0, n),
        "sqrt": PowerGraph(0.5, n),
        "abs": L1Subdifferential(n),
        "box": BoxNormalCone(-1.0, 1.0, n),
        "half_line": half_line_power_graph(2.0, n),
        "sum": Sum([PowerGraph(3.0, n), BoxNormalCone(-1.5, 1.5, n)]),
        "scaled": Scaled(2.5, L1Subdifferential(n)),
    }
    if n >= 2:
        ops["ball"] = BallNormalCone(1.0, n, 2.0)
        # unit spacing keeps the sample well conditioned; meshes live in pde.py
        ops["plap"] = DiscretePLaplacian(n, 1.0, 3.0)
        ops["linear_plus_box"] = Sum([LinearPSD(M), BoxNormalCone(-1.0, 1.0, n)])
    return ops


# ---------------------------------------------------------------------------
# structural checks


@dataclass
class CheckReport:
    name: str
    passed: bool
    checked: int
    max_violation: float = 0.0
    witnesses: list = field(default_factory=list)

    def __bool__(self):
        return self.passed


def check_monotone(A: MonotoneOp, sample_count: int = 500, seed: int = 0,
                   radius: float = 2.0) -> CheckReport:
    """Sample graph pairs and list those with <u - v, x - y> < 0."""
    if sample_count < 1:
        raise ValueError("sample_count must be positive")
    rng = np.random.default_rng(seed)
    pts = A.sample_graph(rng, 2 * sample_count, radius)
    witnesses = []
    worst = 0.0
    for (x, u), (y, v) in zip(pts[::2], pts[1::2]):
        du, dx = u - v, x - y
        val = float(np.dot(du, dx))
        scale = 1.0 + float(np.abs(du) @ np.abs(dx))
        if val < -1e-12 * scale:
            witnesses.append({"x": x, "u": u, "y": y, "v": v, "pairing": val})
            worst = max(worst, -val)
    return CheckReport(f"monotone[{A.name}]", not witnesses, sample_count, worst, witnesses)


HOMOGENEITY_SCALES = (0.0, 0.5, 1.0, 2.0, 7.3)


def check_homogeneous(A: MonotoneOp, gamma: float, samples: int = 100, seed: int = 0,
                      radius: float = 2.0, scales=HOMOGENEITY_SCALES) -> CheckReport:
    """Check (s x, s^gamma y) in Gr(A) for sampled graph points.

    At s = 0 only 0 in A(0) is required: a homogeneous graph may have
    A(0) strictly larger than {0}.
    """
    if gamma <= 0:
        raise ValueError("homogeneity degree must be positive")
    rng = np.random.default_rng(seed)
    witnesses = []
    worst = 0.0
    for x, y in A.sample_graph(rng, samples, radius):
        for s in scales:
            if s == 0:
                ok = A.contains(np.zeros_like(x), np.zeros_like(y), tol=1e-10)
                dist = 0.0 if ok else A.graph_distance(np.zeros_like(x), np.zeros_like(y))
            else:
                ys = s ** gamma * y
                dist = A.graph_distance(s * x, ys)
                ok = dist <= 1e-10 * (1.0 + np.max(np.abs(ys)))
            if not ok:
                worst = max(worst, dist)
                witnesses.append({"x": x, "y": y, "s": s, "distance": dist})
    return CheckReport(f"homogeneous[{A.name}, gamma={gamma:g}]", not witnesses, samples, worst, witnesses)
