"""Regularized inclusions and annulus search by continuation.

For an inclusion ``0 in A x + C x + T x`` with A maximal monotone and
gamma-homogeneous, C continuous and T interval valued, the solver works
with the single-valued regularization

    F_{t,eps}(x) = A_t x + C x + q_eps x

where A_t is the Yosida approximant for the gauge exponent p = gamma + 1
and q_eps a continuous selection of T.  Roots in the annulus between two
balls G2 inside G1 are found by multistart Newton with deflation at the
first (t, eps) stage and followed down the schedule.
"""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .degree import Ball, ExcisionReport, excision_report, sphere_points
from .operators import MonotoneOp, SmoothMap, _as_matrix, check_homogeneous, fd_jacobian
from .space import Gauge, _lp, normalized_duality_map, signed_power
from .yosida import DEFAULT_TOL, NonConvergenceError, resolvent

__all__ = [
    "MalformedMultifunctionError",
    "SearchFailure",
    "IntervalMultifunction",
    "Selection",
    "InclusionProblem",
    "RegularizedSolution",
    "StageRecord",
    "Candidate",
    "ContinuationTrace",
    "BoundaryReport",
    "default_schedule",
    "multistart_seeds",
    "make_selection",
    "regularized_map",
    "solve_regularized",
    "check_outer_sphere",
    "check_inner_sphere",
    "annulus_search",
]

log = logging.getLogger(__name__)

STAGE_TOL = 1e-10
BOUNDARY_BAND = 1e-3
SEPARATION = 1e-4
GRAPH_TOL = 1e-6


class MalformedMultifunctionError(ValueError):
    """Lower bound above upper bound somewhere."""


class SearchFailure(RuntimeError):
    def __init__(self, msg, trace=None):
        super().__init__(msg)
        self.trace = trace


# ---------------------------------------------------------------------------
# multifunction and selection


@dataclass
class IntervalMultifunction:
    """T(x) = prod_i [lower(x)_i, upper(x)_i] with pointwise bounds.

    ``lower`` and ``upper`` act elementwise on arrays: coordinate i of
    the result may depend only on x_i (a pointwise reaction term).
    """

    lower: Callable
    upper: Callable
    name: str = "interval"

    @classmethod
    def singleton(cls, g: Callable, name: str = "singleton") -> "IntervalMultifunction":
        return cls(g, g, name)

    @property
    def is_singleton(self) -> bool:
        return self.lower is self.upper

    def bounds(self, x):
        x = np.asarray(x, dtype=float)
        lo = np.asarray(self.lower(x), dtype=float) * np.ones_like(x)
        hi = np.asarray(self.upper(x), dtype=float) * np.ones_like(x)
        if np.any(lo > hi):
            i = int(np.argmax(lo - hi))
            raise MalformedMultifunctionError(
                f"{self.name}: lower bound {lo[i]:.6g} exceeds upper bound {hi[i]:.6g} at coordinate {i}")
        return lo, hi

    def midpoint(self, x):
        lo, hi = self.bounds(x)
        return 0.5 * (lo + hi)


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(64)


def _bump(z):
    # C^inf bump on (-1, 1) and its derivative
    inside = np.abs(z) < 1
    zz = np.where(inside, z, 0.0)
    e = np.where(inside, np.exp(-1.0 / (1.0 - zz * zz)), 0.0)
    de = np.where(inside, e * (-2.0 * zz) / (1.0 - zz * zz) ** 2, 0.0)
    return e, de


_RHO, _DRHO = _bump(_GL_NODES)
_NORM = float(_GL_WEIGHTS @ _RHO)


@dataclass
class Selection:
    """Continuous selection q_eps of a pointwise interval multifunction.

    q_eps(x)_i = integral of rho_eps(z) m(x_i - z) dz where m is the
    midpoint of T and rho_eps a smooth bump supported on (-eps, eps).
    Each q_eps(x)_i is an average of midpoints of T over [x_i - eps,
    x_i + eps], hence lies in the hull of those values of T.
    """

    T: IntervalMultifunction | None
    eps: float

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.T is None:
            return np.zeros_like(x)
        if self.T.is_singleton:
            return np.asarray(self.T.lower(x), dtype=float) * np.ones_like(x)
        z = self.eps * _GL_NODES
        w = _GL_WEIGHTS * _RHO / _NORM
        vals = np.array([self.T.midpoint(x - zk) for zk in z])
        return w @ vals

    def jacobian(self, x):
        x = np.asarray(x, dtype=float)
        if self.T is None:
            return np.zeros((x.size, x.size))
        if self.T.is_singleton:
            return fd_jacobian(self, x)
        # d/dx of int rho(z) m(x - z) dz = int rho'(z) m(x - z) dz
        z = self.eps * _GL_NODES
        w = _GL_WEIGHTS * _DRHO / (_NORM * self.eps)
        vals = np.array([self.T.midpoint(x - zk) for zk in z])
        return np.diag(w @ vals)


def make_selection(T: IntervalMultifunction | None, epsilon: float) -> Selection:
    """Mollified-midpoint selection of T with bump width ``epsilon``."""
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    if T is not None:
        T.bounds(np.zeros(1))
    return Selection(T, float(epsilon))


# ---------------------------------------------------------------------------
# problem


def _as_smooth(C, n):
    if C is None:
        return SmoothMap(lambda x: np.zeros_like(x), n, lambda x: np.zeros((n, n)), "0")
    if isinstance(C, MonotoneOp):
        return C
    return SmoothMap(C, n, name=getattr(C, "__name__", "C"))


@dataclass
class InclusionProblem:
    """0 in A x + C x + T x with annulus radii in the l^p norm, p = gamma + 1."""

    A: MonotoneOp
    C: object = None
    T: IntervalMultifunction | None = None
    G1_radius: float = 2.0
    G2_radius: float = 0.5
    v0_star: np.ndarray | None = None
    name: str = "problem"

    def __post_init__(self):
        if self.A.gamma is None:
            raise ValueError(f"{self.A.name} has no declared homogeneity degree")
        if not 0 < self.G2_radius < self.G1_radius:
            raise ValueError("radii must satisfy 0 < G2_radius < G1_radius")
        self.C = _as_smooth(self.C, self.A.n)
        if self.v0_star is not None:
            self.v0_star = np.atleast_1d(np.asarray(self.v0_star, dtype=float))

    @property
    def n(self) -> int:
        return self.A.n

    @property
    def gamma(self) -> float:
        return float(self.A.gamma)

    @property
    def gauge(self) -> Gauge:
        return Gauge(self.gamma + 1.0)

    @property
    def p(self) -> float:
        return self.gamma + 1.0

    def validate(self, samples: int = 50, seed: int = 0):
        """Sampled check of the standing assumptions on A."""
        rep = check_homogeneous(self.A, self.gamma, samples=samples, seed=seed)
        if not rep:
            raise ValueError(f"{self.A.name} fails the homogeneity check (degree {self.gamma:g})")
        a0 = self.A.select(np.zeros(self.n), np.ones(self.n))
        if np.any(a0 != 0):
            raise ValueError(f"{self.A.name} must satisfy A(0) = {{0}}")
        return rep

    def ball(self, radius: float) -> Ball:
        return Ball.around_origin(self.n, radius, self.p)


def default_schedule(stages: int = 31) -> np.ndarray:
    """t_k = 10^(-1 - k/2), k = 0, ..., stages - 1."""
    return 10.0 ** (-1.0 - np.arange(stages) / 2.0)


def _smooth_A(A) -> bool:
    return bool(A.single_valued and hasattr(A, "jacobian"))


def regularized_map(P: InclusionProblem, t: float, eps: float):
    """(F, jac) for F(x) = A_t x + C x + q_eps x.

    For smooth A the Jacobian of A_t is DA(y) (dx/dy)^{-1} with y = J_t x
    and x = y + t^(q-1) J_phi^{-1}(A y); otherwise it is a finite difference.
    """
    g = P.gauge
    q = make_selection(P.T, eps)
    n = P.n

    def F(x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return resolvent(P.A, g, t, x).a_lambda + P.C.value(x) + q(x)

    def jac(x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if not _smooth_A(P.A):
            return fd_jacobian(F, x, step=1e-6)
        r = resolvent(P.A, g, t, x)
        DA = _as_matrix(P.A.jacobian(r.x_lambda), n)
        a = r.a_lambda
        w = (g.q - 1.0) * (a * a + 1e-24) ** ((g.q - 2.0) / 2.0)
        dx = np.eye(n) + t ** (g.q - 1.0) * w[:, None] * DA
        return np.linalg.solve(dx.T, DA.T).T + _as_matrix(P.C.jacobian(x), n) + q.jacobian(x)

    return F, jac


@dataclass
class RegularizedSolution:
    x: np.ndarray
    residual: float
    iterations: int
    a_t: np.ndarray


def _deflation(x, roots, scale=1.0):
    """M(x) = prod (1 + scale^2/|x - r|^2) and its gradient."""
    M = 1.0
    grad = np.zeros_like(x)
    s2 = scale * scale
    for r in roots:
        d = x - r
        d2 = float(d @ d)
        if d2 == 0.0:
            return np.inf, grad
        fac = 1.0 + s2 / d2
        M *= fac
        grad += (-2.0 * s2 * d / (d2 * d2)) / fac
    return M, M * grad


def solve_regularized(P: InclusionProblem, t: float, epsilon: float, x0, tol: float = STAGE_TOL,
                      max_iter: int = 100, deflate=(), deflation_scale: float = 1.0) -> RegularizedSolution:
    """Newton for A_t x + C x + q_eps x = 0 from ``x0``.

    When A is smooth and single valued the unknown is y = J_t x: then
    x = y + t^(q-1) J_phi^{-1}(A y) and A_t x = A y, so no inner
    resolvent solves are needed.  For p > 2 the pair (y, J_phi^{-1}(A y))
    is the unknown, which keeps the system differentiable.  Otherwise Newton runs on x with a
    finite-difference Jacobian.  Roots in ``deflate`` are repelled by the
    factor prod (1 + s^2/|x - r|^2) with s = ``deflation_scale``.
    """
    if not (t > 0 and epsilon > 0):
        raise ValueError("t and epsilon must be positive")
    g = P.gauge
    n = P.n
    q = make_selection(P.T, epsilon)
    roots = [np.asarray(r, dtype=float) for r in deflate]
    x0 = np.atleast_1d(np.asarray(x0, dtype=float))
    k = t ** (g.q - 1.0)

    if _smooth_A(P.A) and g.p > 2.0:
        # J_phi^{-1} is not differentiable where A y vanishes when p > 2;
        # carry b = J_phi^{-1}(A y) as an unknown and impose J_phi(b) = A y
        A = P.A

        def system(z):
            y, b = z[:n], z[n:]
            x = y + k * b
            a = signed_power(b, g.p - 1.0)
            Ay = A.value(y)
            return x, a, np.concatenate([a - Ay, Ay + P.C.value(x) + q(x)])

        def system_jac(z, x, a):
            y, b = z[:n], z[n:]
            DA = _as_matrix(A.jacobian(y), n)
            DG = _as_matrix(P.C.jacobian(x), n) + q.jacobian(x)
            dphi = np.diag((g.p - 1.0) * np.abs(b) ** (g.p - 2.0))
            J = np.block([[-DA, dphi], [DA + DG, k * DG]])
            return J, np.hstack([np.eye(n), k * np.eye(n)])

        y0 = resolvent(A, g, t, x0).x_lambda
        z = np.concatenate([y0, signed_power(A.value(y0), g.q - 1.0)])
    elif _smooth_A(P.A):
        A = P.A

        def system(y):
            a = A.value(y)
            x = y + k * signed_power(a, g.q - 1.0)
            return x, a, a + P.C.value(x) + q(x)

        def system_jac(y, x, a):
            DA = _as_matrix(A.jacobian(y), n)
            w = (g.q - 1.0) * np.abs(a) ** (g.q - 2.0)
            dx = np.eye(n) + k * w[:, None] * DA
            DCq = _as_matrix(P.C.jacobian(x), n) + q.jacobian(x)
            return DA + DCq @ dx, dx

        # start from y = J_t x0
        z = resolvent(A, g, t, x0).x_lambda
    else:
        def system(z):
            r = resolvent(P.A, g, t, z)
            return z, r.a_lambda, r.a_lambda + P.C.value(z) + q(z)

        def system_jac(z, x, a):
            return fd_jacobian(lambda v: system(v)[2], z, step=1e-7 * (1.0 + np.max(np.abs(z)))), np.eye(n)

        z = x0.copy()

    x, a, Fz = system(z)
    it = 0
    for it in range(1, max_iter + 1):
        res = float(np.max(np.abs(Fz)))
        if res <= tol:
            return RegularizedSolution(x, res, it - 1, a)
        J, dx = system_jac(z, x, a)
        M, gradM = _deflation(x, roots, deflation_scale)
        if not np.isfinite(M):
            break
        # Newton for G = M F: (M J + F (dx^T grad M)^T) d = -M F
        JG = M * J + np.outer(Fz, dx.T @ gradM)
        try:
            d = np.linalg.solve(JG, -M * Fz)
        except np.linalg.LinAlgError:
            d = np.linalg.lstsq(JG, -M * Fz, rcond=None)[0]
        m0 = M * float(np.linalg.norm(Fz))
        step = 1.0
        accepted = False
        for _ in range(40):
            zn = z + step * d
            try:
                xn, an, Fn = system(zn)
            except (NonConvergenceError, FloatingPointError):
                step *= 0.5
                continue
            Mn, _ = _deflation(xn, roots, deflation_scale)
            if np.all(np.isfinite(Fn)) and Mn * float(np.linalg.norm(Fn)) <= (1 - 1e-4 * step) * m0:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            break
        z, x, a, Fz = zn, xn, an, Fn
        if np.max(np.abs(x)) > 1e8:
            break
    res = float(np.max(np.abs(Fz)))
    if res <= tol:
        return RegularizedSolution(x, res, it, a)
    raise NonConvergenceError(f"regularized solve for {P.name} at t={t:.3g}", res, it)


# ---------------------------------------------------------------------------
# boundary diagnostics


@dataclass
class BoundaryReport:
    condition: str
    violations: list = field(default_factory=list)
    checked: int = 0
    skipped: str = ""

    @property
    def clean(self) -> bool:
        return not self.violations and not self.skipped


def _boundary_points(P, radius, samples):
    if P.n == 1:
        return np.array([[-radius], [radius]])
    return sphere_points(P.n, radius, P.p, samples)


def _ray_diagnostic(F, pts, direction, grid, margin, condition, sign=1.0):
    """Near-solutions of F(x) = sign * s * direction(x) with s on ``grid``.

    The optimal s >= 0 for each x is tried in addition to the grid, when
    it falls inside the grid's range.
    """
    rep = BoundaryReport(condition, checked=len(pts) * len(grid))
    lo, hi = float(np.min(grid)), float(np.max(grid))
    for x in pts:
        f = F(x)
        v = sign * direction(x)
        vv = float(v @ v)
        cand = list(grid)
        if vv > 0:
            s_opt = float(f @ v) / vv
            if lo <= s_opt <= hi:
                cand.append(s_opt)
        for s in cand:
            dist = float(np.max(np.abs(f - s * v)))
            if dist < margin:
                rep.violations.append({"x": x, "s": float(s), "distance": dist})
    rep.violations.sort(key=lambda w: (w["distance"], tuple(w["x"])))
    return rep


def check_outer_sphere(P: InclusionProblem, t: float, epsilon: float, tau_grid=None,
                       boundary_samples: int = 64, margin: float = 1e-2) -> BoundaryReport:
    """Sampled search for A_t x + C x + q_eps x = tau v0* with x on the outer sphere."""
    if P.v0_star is None:
        return BoundaryReport("outer", skipped="v0_star absent; diagnostic skipped")
    F, _ = regularized_map(P, t, epsilon)
    grid = np.linspace(0.0, 10.0, 101) if tau_grid is None else np.asarray(tau_grid, dtype=float)
    pts = _boundary_points(P, P.G1_radius, boundary_samples)
    return _ray_diagnostic(F, pts, lambda x: P.v0_star, grid, margin, "outer")


def check_inner_sphere(P: InclusionProblem, t: float, epsilon: float, lambda_grid=None,
                       boundary_samples: int = 64, margin: float = 1e-2) -> BoundaryReport:
    """Sampled search for A_t x + C x + q_eps x + lam J x = 0 with x on the inner sphere."""
    F, _ = regularized_map(P, t, epsilon)
    grid = np.linspace(0.0, 10.0, 101) if lambda_grid is None else np.asarray(lambda_grid, dtype=float)
    pts = _boundary_points(P, P.G2_radius, boundary_samples)
    return _ray_diagnostic(F, pts, lambda x: normalized_duality_map(x, P.p), grid, margin, "inner", sign=-1.0)


# ---------------------------------------------------------------------------
# annulus search


@dataclass
class StageRecord:
    stage: int
    t: float
    eps: float
    seed: int
    x: np.ndarray
    residual: float
    iterations: int


@dataclass
class Candidate:
    x: np.ndarray
    norm: float
    classification: str
    seed: int
    residual: float
    limit_residual: float
    graph_distance: float
    gaps: list
    pairing_trend: list
    homogeneity_residual: float


@dataclass
class ContinuationTrace:
    problem: str
    p: float
    t_schedule: np.ndarray
    eps_schedule: np.ndarray
    degrees: ExcisionReport | None = None
    final_degrees: ExcisionReport | None = None
    outcome: str = ""
    records: list = field(default_factory=list)
    candidates: list = field(default_factory=list)
    failed_seeds: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    @property
    def n(self) -> int:
        return len(self.records[0].x) if self.records else 0

    def csv_text(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\r\n")
        n = self.n
        w.writerow(["stage", "t", "eps", "seed"] + [f"x{i}" for i in range(n)] + ["residual", "iters"])
        for r in sorted(self.records, key=lambda r: (r.seed, r.stage)):
            w.writerow([r.stage, f"{r.t:.17g}", f"{r.eps:.17g}", r.seed]
                       + [f"{v:.17g}" for v in r.x] + [f"{r.residual:.17g}", r.iterations])
        return buf.getvalue()

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            fh.write(self.csv_text())

    def summary(self) -> str:
        lines = [f"problem: {self.problem}", f"gauge exponent p: {self.p:g}",
                 f"stages: {len(self.t_schedule)} (t from {self.t_schedule[0]:.3g} to {self.t_schedule[-1]:.3g})"]
        if self.degrees is not None:
            lines.append(f"degree on G1: {self.degrees.d1.label} ({self.degrees.d1.method}, "
                         f"margin {self.degrees.d1.boundary_margin:.3g})")
            lines.append(f"degree on G2: {self.degrees.d2.label} ({self.degrees.d2.method}, "
                         f"margin {self.degrees.d2.boundary_margin:.3g})")
        if self.final_degrees is not None:
            lines.append(f"final-stage degrees: {self.final_degrees.d1.label}, {self.final_degrees.d2.label}")
        lines.append(f"outcome: {self.outcome}")
        lines.append(f"candidates: {len(self.candidates)}")
        for c in self.candidates:
            coords = ", ".join(f"{v:.12g}" for v in c.x)
            lines.append(f"  [{coords}] norm={c.norm:.12g} {c.classification} "
                         f"residual={c.residual:.3e} graph_distance={c.graph_distance:.3e}")
        if self.failed_seeds:
            # includes seeds that deflation pushed away from known roots
            lines.append(f"seeds without a new root: {len(self.failed_seeds)}")
        lines.extend(self.notes)
        return "\n".join(lines) + "\n"


def multistart_seeds(P: InclusionProblem, count: int | None = None) -> np.ndarray:
    """8 n deterministic starting points in the middle of the annulus."""
    n = P.n
    count = count or 8 * n
    r_mid = 0.5 * (P.G1_radius + P.G2_radius)
    if n == 1:
        half = max(1, count // 2)
        radii = np.linspace(P.G2_radius, P.G1_radius, half + 2)[1:-1]
        radii = radii[np.argsort(np.abs(radii - r_mid), kind="stable")]
        return np.array([[s * r] for r in radii for s in (1.0, -1.0)])
    return sphere_points(n, r_mid, P.p, count)


def _in_annulus(P, x, rel=1e-9):
    r = _lp(x, P.p)
    return P.G2_radius * (1 - rel) <= r <= P.G1_radius * (1 + rel)


def _polish_limit(P, x, tol):
    """Newton on A x + C x + m(x) = 0 (m the midpoint of T), for smooth A."""
    if not _smooth_A(P.A):
        return None
    mid = (lambda v: P.T.midpoint(v)) if P.T is not None else (lambda v: np.zeros_like(v))

    def F(v):
        return P.A.value(v) + P.C.value(v) + mid(v)

    def J(v):
        return _as_matrix(P.A.jacobian(v), P.n) + _as_matrix(P.C.jacobian(v), P.n) + fd_jacobian(mid, v)

    z = x.copy()
    fz = F(z)
    for _ in range(50):
        if np.max(np.abs(fz)) <= tol * 1e-2:
            break
        try:
            d = np.linalg.solve(J(z), -fz)
        except np.linalg.LinAlgError:
            return None
        step = 1.0
        while step > 1e-8:
            zn = z + step * d
            fn = F(zn)
            if np.linalg.norm(fn) < np.linalg.norm(fz):
                break
            step *= 0.5
        else:
            break
        z, fz = zn, fn
    if np.linalg.norm(z - x) > 1e-3 * (1.0 + np.linalg.norm(x)):
        return None
    return z, float(np.max(np.abs(fz)))


def _advance(P, x, t0, e0, t1, e1, tol, depth=0, max_depth=10):
    """Solve at (t1, e1) from the root x at (t0, e0), halving the step in log t on failure."""
    try:
        return solve_regularized(P, t1, e1, x, tol)
    except NonConvergenceError:
        if depth >= max_depth:
            raise
    tm, em = np.sqrt(t0 * t1), np.sqrt(e0 * e1)
    mid = _advance(P, x, t0, e0, tm, em, tol, depth + 1, max_depth)
    return _advance(P, mid.x, tm, em, t1, e1, tol, depth + 1, max_depth)


def annulus_search(P: InclusionProblem, t_schedule=None, eps_schedule=None, seeds=None,
                   tol: float = STAGE_TOL, lipschitz: float | None = None) -> ContinuationTrace:
    """Locate limits of roots of A_t + C + q_eps in the closed annulus G1 \\ G2.

    Degrees of the first-stage map on G1 and G2 are computed first.
    Unequal degrees guarantee a root in the annulus (an empty result is
    then a :class:`SearchFailure`); equal degrees make the search
    heuristic, and the outcome says so.  Roots found at the first stage by
    multistart Newton with deflation are followed down the schedule and
    polished at t = 0 when A is smooth.
    """
    ts = default_schedule() if t_schedule is None else np.asarray(t_schedule, dtype=float)
    es = ts.copy() if eps_schedule is None else np.asarray(eps_schedule, dtype=float)
    if len(ts) != len(es) or len(ts) < 2:
        raise ValueError("t and eps schedules must have equal length >= 2")
    if np.any(np.diff(ts) >= 0) or np.any(np.diff(es) >= 0):
        raise ValueError("schedules must be strictly decreasing")
    if ts[-1] > 1e-4:
        raise ValueError("final t must be at most 1e-4")
    g = P.gauge
    trace = ContinuationTrace(P.name, g.p, ts, es)

    F0, J0 = regularized_map(P, ts[0], es[0])
    trace.degrees = excision_report(F0, P.ball(P.G1_radius), P.ball(P.G2_radius), J0, lipschitz)
    if trace.degrees.guaranteed:
        trace.outcome = "solution in G1\\G2 guaranteed"
    elif trace.degrees.degrees_differ:
        trace.outcome = "degrees differ (uncertified)"
    elif trace.degrees.conclusion == "excision inconclusive":
        trace.outcome = "excision inconclusive; candidates are not degree-certified"
    else:
        trace.outcome = "degrees uncertified; candidates are not degree-certified"

    starts = multistart_seeds(P) if seeds is None else np.atleast_2d(np.asarray(seeds, dtype=float))
    zero = np.zeros(P.n)
    # distances in deflation are measured in units of the mid-annulus radius
    r_mid = 0.5 * (P.G1_radius + P.G2_radius)
    found_all = []
    if np.max(np.abs(F0(zero))) <= tol:
        found_all.append(zero)
    first = []
    for s_idx, x0 in enumerate(starts):
        try:
            sol = solve_regularized(P, ts[0], es[0], x0, tol, max_iter=40, deflate=found_all,
                                   deflation_scale=r_mid)
        except NonConvergenceError:
            trace.failed_seeds.append(s_idx)
            continue
        if any(np.linalg.norm(sol.x - r) < SEPARATION for r in found_all):
            continue
        found_all.append(sol.x)
        if _in_annulus(P, sol.x):
            first.append((s_idx, sol))
    log.info("%s: %d roots at first stage, %d in the annulus", P.name, len(found_all), len(first))

    limits = []
    for s_idx, sol in first:
        path = [sol]
        trace.records.append(StageRecord(0, ts[0], es[0], s_idx, sol.x, sol.residual, sol.iterations))
        ok = True
        for k in range(1, len(ts)):
            try:
                nxt = _advance(P, path[-1].x, ts[k - 1], es[k - 1], ts[k], es[k], tol)
            except NonConvergenceError as exc:
                trace.notes.append(f"seed {s_idx}: continuation stopped at stage {k} ({exc})")
                ok = False
                break
            path.append(nxt)
            trace.records.append(StageRecord(k, ts[k], es[k], s_idx, nxt.x, nxt.residual, nxt.iterations))
        if ok:
            limits.append((s_idx, path))

    final_x = []
    for s_idx, path in limits:
        last = path[-1]
        polished = _polish_limit(P, last.x, tol)
        if polished is not None:
            x_lim, lim_res = polished
        else:
            x_lim = resolvent(P.A, g, ts[-1], last.x).x_lambda
            lim_res = float("nan")
        if any(np.linalg.norm(x_lim - c) < SEPARATION for c, *_ in final_x):
            continue
        final_x.append((x_lim, s_idx, path, lim_res))

    q_last = make_selection(P.T, es[-1])
    for x_lim, s_idx, path, lim_res in sorted(final_x, key=lambda c: tuple(c[0])):
        norm = _lp(x_lim, P.p)
        if abs(norm - P.G2_radius) <= BOUNDARY_BAND * P.G2_radius:
            cls = "boundary-suspect"
        elif norm <= P.G1_radius * (1 + 1e-9) and norm >= P.G2_radius:
            cls = "interior"
        else:
            cls = "outside"
        y0 = -P.C.value(x_lim) - q_last(x_lim)
        gd = P.A.graph_distance(x_lim, y0) / (1.0 + float(np.max(np.abs(y0))))
        xs = [r.x for r in path]
        gaps = [float(np.max(np.abs(xs[i + 1] - xs[i]))) for i in range(len(xs) - 1)]
        pairing = [float(r.a_t @ (r.x - x_lim)) for r in path]
        a1 = resolvent(P.A, g, ts[-1], 2.0 * path[-1].x).a_lambda
        a0 = resolvent(P.A, g, ts[-1], path[-1].x).a_lambda
        hom = float(np.max(np.abs(a1 - 2.0 ** P.gamma * a0)) / (1.0 + np.max(np.abs(a1))))
        trace.candidates.append(Candidate(x_lim, norm, cls, s_idx, path[-1].residual, lim_res, gd,
                                          gaps, pairing, hom))

    # degrees are recomputed at the last stage only when the first-stage ones are certified
    if trace.degrees.d1.certified and trace.degrees.d2.certified:
        F_last, J_last = regularized_map(P, ts[-1], es[-1])
        try:
            trace.final_degrees = excision_report(F_last, P.ball(P.G1_radius), P.ball(P.G2_radius),
                                                  J_last, lipschitz)
        except (ValueError, NonConvergenceError) as exc:
            trace.notes.append(f"final-stage degrees unavailable: {exc}")

    if trace.degrees.guaranteed and not any(c.classification != "outside" for c in trace.candidates):
        raise SearchFailure(f"{P.name}: degrees differ but no annulus root was found", trace)
    return trace
