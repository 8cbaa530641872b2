"""Resolvents J_lambda and Yosida approximants A_lambda for the power gauge.

For lambda > 0 and x in R^n the resolvent point x_lambda solves::

    0 in J_phi(x_lambda - x) + lambda * A(x_lambda)

and A_lambda x = J_phi(x - x_lambda) / lambda.  Every solve returns the
graph point (x_lambda, a_lambda) with a_lambda in A(x_lambda), and the
residual measures the violation of the splitting

    x = x_lambda + lambda^(q-1) J_phi^{-1}(a_lambda)

(see :func:`splitting_residual`).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .operators import MonotoneOp, Sum, _arr, _as_matrix
from .space import Gauge, signed_power

__all__ = [
    "DEFAULT_TOL",
    "MAX_ITER",
    "LAMBDA_RANGE",
    "NonConvergenceError",
    "YosidaResult",
    "resolvent",
    "yosida_apply",
    "splitting_residual",
    "scalar_bisection",
]

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-10
MAX_ITER = 200
LAMBDA_RANGE = (1e-6, 1e2)


class NonConvergenceError(RuntimeError):
    def __init__(self, msg, residual=float("nan"), iterations=0):
        super().__init__(f"{msg} (last residual {residual:.3e} after {iterations} iterations)")
        self.residual = residual
        self.iterations = iterations


@dataclass
class YosidaResult:
    x_lambda: np.ndarray
    a_lambda: np.ndarray
    residual: float
    iterations: int
    lam: float
    method: str = ""


def splitting_residual(x, x_lam, a_lam, lam: float, gauge: Gauge) -> float:
    """Relative violation of the splitting at a graph point (x_lam, a_lam).

    Primal form ``|x - x_lam - lam^(q-1) J^{-1}(a_lam)| / (1 + |x|)`` and
    dual form ``|lam a_lam - J(x - x_lam)| / max(|J(x - x_lam)|, lam |a_lam|)``
    in the sup norm; the smaller is returned.  J^{-1} is not Lipschitz at 0
    when p > 2 and J is not when p < 2, so each form alone loses digits on
    one side of p = 2.  The dual form is relative to its own terms so that
    tiny x do not pass trivially.
    """
    x, x_lam, a_lam = _arr(x), _arr(x_lam), _arr(a_lam)
    r1 = x - x_lam - lam ** (gauge.q - 1.0) * signed_power(a_lam, gauge.q - 1.0)
    primal = float(np.max(np.abs(r1)) / (1.0 + np.max(np.abs(x))))
    r2 = lam * a_lam - signed_power(x - x_lam, gauge.p - 1.0)
    scale = max(float(np.max(np.abs(r2 - lam * a_lam))), lam * float(np.max(np.abs(a_lam))), 1e-300)
    dual = float(np.max(np.abs(r2)) / scale)
    return min(primal, dual)


def _dj(s, p, mu):
    """Smoothed derivative of s -> |s|^(p-2) s."""
    with np.errstate(divide="ignore"):
        return (p - 1.0) * (s * s + mu) ** ((p - 2.0) / 2.0)


# ---------------------------------------------------------------------------
# scalar (separable) path


def scalar_bisection(bounds, x, lam, p, breakpoints, slope=None, max_iter: int = 400,
                     return_iterations: bool = False):
    """Solve 0 in Phi_p(y - x) + lam * G(y) componentwise.

    ``bounds(y)`` gives the interval [lo, hi] of the scalar monotone graph
    G at each coordinate.  The root is bracketed and then refined by
    Newton steps kept inside the bracket (bisection otherwise).  Kink
    points are tested exactly at the end so roots sitting on a corner of
    the graph are returned exactly.
    """
    x = np.asarray(x, dtype=float)
    pm1 = p - 1.0

    def status(y):
        with np.errstate(over="ignore"):
            lo, hi = bounds(y)
            base = signed_power(y - x, pm1)
            g_lo = base + lam * lo
            g_hi = base + lam * hi
        st = np.where(g_hi < 0, -1, np.where(g_lo > 0, 1, 0))
        return st, g_lo, g_hi

    st0, _, _ = status(x)
    left = x.copy()
    right = x.copy()
    width = 1.0 + np.abs(x)
    go_left = st0 > 0
    go_right = st0 < 0
    for _ in range(2100):
        if not (go_left.any() or go_right.any()):
            break
        left = np.where(go_left, x - width, left)
        right = np.where(go_right, x + width, right)
        sl, _, _ = status(left)
        sr, _, _ = status(right)
        go_left = go_left & (sl >= 0)
        go_right = go_right & (sr <= 0)
        width = np.where(go_left | go_right, 2 * width, width)
    # now left <= root <= right, with x on the far side of the bracket
    right = np.where(st0 > 0, x, right)
    left = np.where(st0 < 0, x, left)
    done = st0 == 0
    y = np.where(done, x, 0.5 * (left + right))
    # roots sitting on a kink are taken exactly
    bp = np.asarray(breakpoints, dtype=float).reshape(-1, x.size)
    for row in bp:
        inside = np.isfinite(row) & (row >= left) & (row <= right) & ~done
        if inside.any():
            st, _, _ = status(np.where(inside, row, y))
            hit = inside & (st == 0)
            y = np.where(hit, row, y)
            done = done | hit
    it = 0
    dx = dx_old = np.full_like(x, np.inf)
    for it in range(1, max_iter + 1):
        st, g_lo, g_hi = status(y)
        done = done | (st == 0)
        left = np.where(st < 0, y, left)
        right = np.where(st > 0, y, right)
        if slope is not None:
            g = np.where(st > 0, g_lo, g_hi)
            dg = pm1 * np.abs(y - x) ** (pm1 - 1.0) if pm1 >= 1 else _dj(y - x, p, 1e-300)
            dg = dg + lam * slope(y)
            with np.errstate(divide="ignore", invalid="ignore"):
                y_new = y - g / dg
            # rtsafe rule: Newton only if it stays inside and shrinks fast enough
            ok = np.isfinite(y_new) & (y_new >= left) & (y_new <= right)
            ok &= np.abs(y_new - y) <= 0.5 * dx_old
            y_new = np.where(ok, y_new, 0.5 * (left + right))
            dx_old = np.where(done, dx_old, dx)
            dx = np.abs(y_new - y)
        else:
            y_new = 0.5 * (left + right)
        y_new = np.where(done, y, y_new)
        tiny = np.abs(right - left) <= 4 * np.finfo(float).eps * np.maximum(np.abs(left), np.abs(right))
        stalled = (np.abs(y_new - y) <= 4 * np.finfo(float).eps * np.abs(y)) | tiny
        y = y_new
        if np.all(done | stalled):
            break
    if return_iterations:
        return y, it
    return y


def _resolvent_separable(A, x, lam, gauge):
    slope = A.slope if A.single_valued else None
    y, it = scalar_bisection(A.bounds, x, lam, gauge.p, A.breakpoints(), slope=slope,
                             return_iterations=True)
    lo, hi = A.bounds(y)
    a = np.clip(signed_power(x - y, gauge.p - 1.0) / lam, lo, hi)
    return y, a, it


# ---------------------------------------------------------------------------
# Newton paths


def _solve_dir(H, F):
    try:
        return np.linalg.solve(H, -F)
    except np.linalg.LinAlgError:
        return np.linalg.lstsq(H, -F, rcond=None)[0]


class _Polish:
    """Keep iterating past ``tol`` towards tol * 1e-4 and return the best iterate.

    The sup-norm residual can hide a component that is still far from
    converged next to a large one; a couple of extra Newton steps cost
    little and settle it.
    """

    def __init__(self, tol, stall=2):
        self.tol = tol
        self.stall = stall
        self.best = None
        self.best_res = np.inf
        self.bad = 0

    def done(self, res, y, a, it) -> bool:
        if res < self.best_res:
            improved = res < 0.5 * self.best_res
            self.best_res = res
            if res <= self.tol:
                self.best = (y.copy(), a.copy(), it)
            self.bad = 0 if improved else self.bad + 1
        else:
            self.bad += 1
        if self.best is None:
            return False
        return self.best_res <= self.tol * 1e-4 or self.bad >= self.stall


def _resolvent_newton(A, x, lam, gauge, tol, max_iter):
    """Damped Newton for single-valued A.

    For p >= 2 the equation is F(y) = J_phi(y - x) + lam A(y); gradients
    of convex energies line-search on the strictly convex objective
    ||y - x||_p^p / p + lam E(y), other maps on 0.5 ||F||^2.  For p < 2
    J_phi has an infinite slope at 0, so the equivalent primal equation
    F(y) = y - x + lam^(q-1) J_phi^{-1}(A y) is used instead, whose
    nonlinearity |.|^(q-2) . is C^1 there.  The stopping test is always
    the unsmoothed splitting residual.
    """
    p, q = gauge.p, gauge.q
    mu = 1e-12 * (1.0 + float(np.dot(x, x)))
    primal = p < 2.0
    use_energy = A.has_energy and not primal
    k = lam ** (q - 1.0)

    def F(y):
        if primal:
            return y - x + k * signed_power(A.value(y), q - 1.0)
        return signed_power(y - x, p - 1.0) + lam * A.value(y)

    def jac(y):
        DA = _as_matrix(A.jacobian(y), A.n)
        if primal:
            w = (q - 1.0) * np.abs(A.value(y)) ** (q - 2.0)
            return np.eye(A.n) + k * w[:, None] * DA
        return np.diag(_dj(y - x, p, mu)) + lam * DA

    def merit(y, Fy):
        if use_energy:
            return float(np.sum(np.abs(y - x) ** p) / p + lam * A.energy(y))
        return 0.5 * float(Fy @ Fy)

    y = x.copy()
    res = splitting_residual(x, y, A.value(y), lam, gauge)
    # first-order start; for small lam it is already close to the root
    y1 = x - k * signed_power(A.value(x), q - 1.0)
    res1 = splitting_residual(x, y1, A.value(y1), lam, gauge)
    if res1 < res:
        y, res = y1, res1
    Fy = F(y)
    m = merit(y, Fy)
    polish = _Polish(tol)
    for it in range(1, max_iter + 1):
        if polish.done(res, y, A.value(y), it - 1):
            return polish.best
        d = _solve_dir(jac(y), Fy)
        slope = float(Fy @ d) if use_energy else -float(Fy @ Fy)
        if use_energy and slope >= 0:
            d = -Fy
            slope = -float(Fy @ Fy)
        step = 1.0
        for _ in range(60):
            y_new = y + step * d
            F_new = F(y_new)
            m_new = merit(y_new, F_new)
            # near the solution energy differences drown in rounding; then a
            # decrease of |F| is accepted instead
            if (m_new <= m + 1e-4 * step * slope or step < 1e-14
                    or float(F_new @ F_new) <= (1 - 1e-4 * step) * float(Fy @ Fy)):
                break
            step *= 0.5
        if np.array_equal(y_new, y):
            break
        y, Fy, m = y_new, F_new, m_new
        res = splitting_residual(x, y, A.value(y), lam, gauge)
    polish.done(res, y, A.value(y), max_iter)
    if polish.best is not None:
        return polish.best
    raise NonConvergenceError(f"resolvent of {A.name} did not converge", res, max_iter)


def _resolvent_semismooth(A: Sum, x, lam, gauge, tol, max_iter):
    """Semismooth Newton for smooth + separable multivalued sums.

    With G(y) = J_phi(y - x) + lam S(y) for the smooth part S, the
    inclusion is equivalent to y = P(y - c G(y)) where P is the Euclidean
    resolvent of c lam M for the multivalued part M.
    """
    p = gauge.p
    M = A.multi
    smooth = [op for op in A.ops if op is not M]
    # for p < 2 a large smoothing would flatten the steep slope of J_phi
    mu = (1e-12 if p >= 2.0 else 1e-30) * (1.0 + float(np.dot(x, x)))

    def S(y):
        return sum((op.value(y) for op in smooth), np.zeros_like(y))

    def DS(y):
        return sum((_as_matrix(op.jacobian(y), A.n) for op in smooth), np.zeros((A.n, A.n)))

    def G(y):
        return signed_power(y - x, p - 1.0) + lam * S(y)

    def prox(z, c):
        w = scalar_bisection(M.bounds, z, c * lam, 2.0, M.breakpoints())
        return w

    def residual_map(y, c):
        z = y - c * G(y)
        w = prox(z, c)
        return y - w, z, w

    def graph_point(w):
        return S(w) + M.select(w, -G(w) / lam)

    if p < 2.0:
        # J_phi is steep at y = x; start from the p = 2 solution
        y = _resolvent_semismooth(A, x, lam, Gauge(2.0), 1e-8, max_iter)[0]
    else:
        y = prox(x, 1.0)
    res = float("inf")
    polish = _Polish(tol)
    for it in range(1, max_iter + 1):
        DG = np.diag(_dj(y - x, p, mu)) + lam * DS(y)
        # the step follows the current slope; components pinned at y = x
        # have an unbounded slope when p < 2 and would stall the others
        diag = np.abs(np.diag(DG))
        finite = np.abs(y - x) > 1e-8 * (1.0 + np.abs(x))
        scale = diag[finite] if p < 2.0 and np.any(finite) else diag
        c = 1.0 / max(float(np.max(scale)), 1e-12)
        R, z, w = residual_map(y, c)
        # w = P(z) always lies in D(M); test the splitting there
        a = graph_point(w)
        res = splitting_residual(x, w, a, lam, gauge)
        if polish.done(res, w, a, it - 1):
            return polish.best
        lo, hi = M.bounds(w)
        inner = (z - w) / (c * lam)
        flat = (inner > lo) & (inner < hi) & (lo < hi)
        D = np.where(flat, 0.0, 1.0 / (1.0 + c * lam * M.slope(w)))
        Jac = np.eye(A.n) - D[:, None] * (np.eye(A.n) - c * DG)
        d = _solve_dir(Jac, R)
        m = 0.5 * float(R @ R)
        step = 1.0
        for _ in range(60):
            y_new = y + step * d
            R_new, _, _ = residual_map(y_new, c)
            if 0.5 * float(R_new @ R_new) <= (1 - 2e-4 * step) * m or step < 1e-14:
                break
            step *= 0.5
        y = w if np.array_equal(y_new, y) else y_new
    if polish.best is not None:
        return polish.best
    raise NonConvergenceError(f"resolvent of {A.name} did not converge", res, max_iter)


# ---------------------------------------------------------------------------
# public API


def resolvent(A: MonotoneOp, g: Gauge, lam: float, x, tol: float = DEFAULT_TOL,
              max_iter: int = MAX_ITER) -> YosidaResult:
    """Solve 0 in J_phi(x_lam - x) + lam A(x_lam).

    Parameters
    ----------
    A : MonotoneOp
        Maximal monotone operator with a solvable resolvent rule.
    g : Gauge
        Power gauge r^(p-1).
    lam : float
        Positive parameter.
    x : array_like
        Point of R^n (any point, not only of D(A)).
    tol : float
        Bound on the relative splitting residual.

    Returns
    -------
    YosidaResult
        ``a_lambda`` is an element of A(x_lambda) equal to
        J_phi(x - x_lambda) / lam up to the residual.

    Raises
    ------
    NonConvergenceError
        If the iteration cap is reached before ``tol``.
    """
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam!r}")
    if not tol > 0:
        raise ValueError("tolerance must be positive")
    x = _arr(x)
    if x.size != A.n:
        raise ValueError(f"x has dimension {x.size}, operator acts on R^{A.n}")
    lam = float(lam)
    it = 0
    closed = getattr(A, "resolvent_closed_form", None)
    out = closed(x, lam, g) if closed is not None else None
    if out is not None:
        y, a = out
        method = "closed-form"
    elif A.separable:
        y, a, it = _resolvent_separable(A, x, lam, g)
        method = "scalar"
    elif A.single_valued:
        y, a, it = _resolvent_newton(A, x, lam, g, tol, max_iter)
        method = "energy-newton" if A.has_energy else "newton"
    elif isinstance(A, Sum) and A.multi is not None and A.multi.separable:
        y, a, it = _resolvent_semismooth(A, x, lam, g, tol, max_iter)
        method = "semismooth-newton"
    else:
        raise NotImplementedError(f"no resolvent rule for {A.name}")
    res = splitting_residual(x, y, a, lam, g)
    if not res <= tol:
        raise NonConvergenceError(f"resolvent of {A.name} ({method})", res, it)
    return YosidaResult(y, a, res, it, lam, method)


def yosida_apply(A: MonotoneOp, g: Gauge, lam: float, x, tol: float = DEFAULT_TOL,
                 max_iter: int = MAX_ITER) -> YosidaResult:
    """A_lam x = J_phi(x - J_lam x) / lam, returned inside a YosidaResult."""
    return resolvent(A, g, lam, x, tol, max_iter)
