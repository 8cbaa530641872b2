"""Brouwer degree of continuous maps on balls of R^n.

Dimension 1 uses endpoint signs and dimension 2 the winding number of f
along the boundary; both are certified once |f| stays above
``BOUNDARY_MARGIN`` on the boundary.  For n >= 3 the sign of
<f(x), x - c> on the boundary sphere decides the degree when it is
constant; this is certified only when a Lipschitz constant is supplied.
Otherwise the degree is a heuristic sum of sign det Df over zeros found
by multistart Newton, always labelled uncertified.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.special import ndtri
from scipy.stats import qmc

from .space import _lp

__all__ = [
    "BOUNDARY_MARGIN",
    "BoundaryDegeneracyError",
    "DegenerateZeroError",
    "DegreeReport",
    "Ball",
    "ExcisionReport",
    "degree_1d",
    "winding_2d",
    "boundary_pairing_degree",
    "cube_sphere",
    "degree_regular_nd",
    "degree_on_ball",
    "excision_report",
    "sphere_polyline",
    "sphere_points",
    "newton_zero",
]

BOUNDARY_MARGIN = 1e-6


class BoundaryDegeneracyError(ValueError):
    """f vanishes on the boundary, so the degree is undefined."""


class DegenerateZeroError(ValueError):
    """A zero with singular Jacobian was found; the sum over zeros is undefined."""


@dataclass
class DegreeReport:
    value: int | None
    certified: bool
    method: str
    boundary_margin: float
    refinement: int = 0
    zeros: list = field(default_factory=list)

    @property
    def label(self) -> str:
        if self.value is None:
            return "uncertified"
        return str(self.value) if self.certified else f"{self.value} (uncertified)"


@dataclass(frozen=True)
class Ball:
    """Closed l^p ball {x : |x - center|_p <= radius}."""

    center: tuple
    radius: float
    p: float = 2.0

    @classmethod
    def around_origin(cls, n: int, radius: float, p: float = 2.0) -> "Ball":
        return cls(tuple([0.0] * n), float(radius), float(p))

    @property
    def n(self) -> int:
        return len(self.center)

    def contains(self, x, rel: float = 0.0) -> bool:
        return _lp(np.asarray(x) - np.asarray(self.center), self.p) <= self.radius * (1 + rel)


def _vec(f, x):
    return np.atleast_1d(np.asarray(f(x), dtype=float))


def degree_1d(f: Callable, a: float, b: float) -> DegreeReport:
    """Degree of scalar f on (a, b): (sign f(b) - sign f(a)) / 2."""
    if not a < b:
        raise ValueError("need a < b")
    fa = float(_vec(f, np.array([a]))[0])
    fb = float(_vec(f, np.array([b]))[0])
    if fa == 0.0 or fb == 0.0:
        raise BoundaryDegeneracyError(f"f vanishes at an endpoint of [{a}, {b}]")
    margin = min(abs(fa), abs(fb))
    value = int((np.sign(fb) - np.sign(fa)) // 2)
    return DegreeReport(value, margin >= BOUNDARY_MARGIN, "endpoint-sign", margin)


def sphere_points(n: int, radius: float, p: float, k: int, center=None) -> np.ndarray:
    """``k`` deterministic points on the l^p sphere (Halton directions)."""
    c = np.zeros(n) if center is None else np.asarray(center, dtype=float)
    if n == 1:
        return c + radius * np.array([[-1.0], [1.0]])
    u = qmc.Halton(d=n, scramble=False).random(k + 1)[1:]
    d = ndtri(np.clip(u, 1e-12, 1 - 1e-12))
    norms = np.array([_lp(row, p) for row in d])
    return c + radius * d / norms[:, None]


def sphere_polyline(radius: float, p: float = 2.0, k: int = 64, center=(0.0, 0.0)) -> np.ndarray:
    """Closed polyline with ``k`` vertices on the planar l^p circle (last vertex = first)."""
    th = np.linspace(0.0, 2 * np.pi, k + 1)
    d = np.column_stack([np.cos(th), np.sin(th)])
    norms = np.array([_lp(row, p) for row in d])
    pts = np.asarray(center, dtype=float) + radius * d / norms[:, None]
    pts[-1] = pts[0]
    return pts


def _angle(u, v):
    return math.atan2(u[0] * v[1] - u[1] * v[0], u[0] * v[0] + u[1] * v[1])


def winding_2d(f: Callable, boundary, max_refine: int = 30,
               project: Callable | None = None) -> DegreeReport:
    """Winding number of f along a closed planar polyline.

    Each segment is bisected until the angle increment of f over it is
    below pi/2.  ``project`` maps inserted midpoints back onto the curve
    (e.g. onto an l^p circle); otherwise midpoints stay on the polyline.
    """
    pts = np.asarray(boundary, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 3:
        raise ValueError("boundary must be an array of at least 3 planar points")
    if not np.allclose(pts[0], pts[-1]):
        pts = np.vstack([pts, pts[:1]])
    values = [_vec(f, x) for x in pts]
    margin = min(float(np.linalg.norm(v)) for v in values)
    total = 0.0
    depth_used = 0
    certified = True

    def seg(x0, f0, x1, f1, depth):
        nonlocal margin, depth_used, certified
        if min(np.linalg.norm(f0), np.linalg.norm(f1)) == 0.0:
            raise BoundaryDegeneracyError("f vanishes on the boundary")
        inc = _angle(f0, f1)
        if abs(inc) < np.pi / 2:
            return inc
        if depth >= max_refine:
            certified = False
            return inc
        xm = 0.5 * (x0 + x1)
        if project is not None:
            xm = project(xm)
        fm = _vec(f, xm)
        margin = min(margin, float(np.linalg.norm(fm)))
        depth_used = max(depth_used, depth + 1)
        return seg(x0, f0, xm, fm, depth + 1) + seg(xm, fm, x1, f1, depth + 1)

    for i in range(len(pts) - 1):
        total += seg(pts[i], values[i], pts[i + 1], values[i + 1], 0)
    w = total / (2 * np.pi)
    value = int(round(w))
    certified = certified and abs(w - value) <= 1e-6 and margin >= BOUNDARY_MARGIN
    return DegreeReport(value if certified else None, certified, "winding", margin, depth_used)


def cube_sphere(n: int, k: int) -> tuple[np.ndarray, float]:
    """Grid on the surface of [-1, 1]^n pushed radially onto the unit sphere.

    Returns the points and a covering radius: every point of the sphere is
    within that distance of a grid point (the radial map from the cube
    surface onto the sphere is 1-Lipschitz).
    """
    delta = 2.0 / k
    ticks = np.linspace(-1 + delta / 2, 1 - delta / 2, k)
    face = np.array(np.meshgrid(*([ticks] * (n - 1)), indexing="ij")).reshape(n - 1, -1).T
    pts = []
    for axis in range(n):
        for sign in (-1.0, 1.0):
            block = np.insert(face, axis, sign, axis=1)
            pts.append(block)
    pts = np.vstack(pts)
    pts /= np.linalg.norm(pts, axis=1)[:, None]
    return pts, delta * math.sqrt(n - 1) / 2


def boundary_pairing_degree(f: Callable, ball: Ball, samples: int | None = None,
                            lipschitz: float | None = None, max_points: int = 200_000) -> DegreeReport:
    """Degree from the sign of <f(x), x - c> on the boundary sphere.

    If the pairing is positive everywhere, f is homotopic to the identity
    on the sphere (degree 1); negative everywhere gives the antipodal map,
    degree (-1)^n.  Mixed signs give no value.

    Without ``lipschitz`` the sphere is only sampled and the result is
    uncertified.  With a Lipschitz constant L of f on a Euclidean ball the
    pairing is checked on cube-sphere grids of covering radius h: a sample
    y with |<f(y), y - c>| > (L R + |f(y)|) h fixes the sign on the whole
    h-cap around y, so the value is certified.
    """
    n = ball.n
    c = np.asarray(ball.center, dtype=float)
    R = ball.radius
    if lipschitz is not None and ball.p == 2.0:
        k = 2
        while True:
            dirs, h = cube_sphere(n, k)
            rep = _pairing_on(f, c + R * dirs, c)
            value, margin, pair, fnorm = rep
            if value is not None:
                slack = (lipschitz * R + fnorm) * (R * h)
                if np.all(np.abs(pair) > slack) and margin > lipschitz * R * h + BOUNDARY_MARGIN:
                    return DegreeReport(value, True, "boundary-pairing", margin, k)
            else:
                return DegreeReport(None, False, "boundary-pairing", margin, k)
            if len(dirs) * (2 ** (n - 1)) > max_points:
                return DegreeReport(value, False, "boundary-pairing", margin, k)
            k *= 2
    k = samples or 64 * n
    value, margin, _, _ = _pairing_on(f, sphere_points(n, R, ball.p, k, c), c)
    return DegreeReport(value, False, "boundary-pairing", margin, 0)


def _pairing_on(f, pts, c):
    n = pts.shape[1]
    pair = np.empty(len(pts))
    fnorm = np.empty(len(pts))
    for i, x in enumerate(pts):
        v = _vec(f, x)
        fnorm[i] = float(np.linalg.norm(v))
        pair[i] = float(v @ (x - c))
    if np.all(pair > 0):
        value = 1
    elif np.all(pair < 0):
        value = (-1) ** n
    else:
        value = None
    return value, float(fnorm.min()), pair, fnorm


def newton_zero(f: Callable, jac: Callable, x0, tol: float = 1e-12, max_iter: int = 100,
                merit_scale: Callable | None = None):
    """Damped Newton on f from ``x0``; returns (x, |f(x)|_inf, iterations).

    ``merit_scale`` multiplies the residual norm in the line search (used
    for deflation).
    """
    x = np.asarray(x0, dtype=float).copy()
    fx = _vec(f, x)
    scale = merit_scale or (lambda z: 1.0)
    m = scale(x) * float(np.linalg.norm(fx))
    for it in range(1, max_iter + 1):
        if np.max(np.abs(fx)) <= tol:
            return x, float(np.max(np.abs(fx))), it - 1
        J = np.atleast_2d(jac(x))
        try:
            d = np.linalg.solve(J, -fx)
        except np.linalg.LinAlgError:
            d = np.linalg.lstsq(J, -fx, rcond=None)[0]
        step = 1.0
        while True:
            xn = x + step * d
            fn = _vec(f, xn)
            mn = scale(xn) * float(np.linalg.norm(fn))
            if mn <= (1 - 1e-4 * step) * m or step < 1e-10:
                break
            step *= 0.5
        if step < 1e-10 and mn >= m:
            break
        x, fx, m = xn, fn, mn
    return x, float(np.max(np.abs(fx))), max_iter


def degree_regular_nd(f: Callable, jac: Callable, seeds, in_region: Callable,
                      dedup: float = 1e-6, tol: float = 1e-11) -> DegreeReport:
    """Sum of sign det Df over zeros found from ``seeds`` inside the region.

    Always uncertified: nothing guarantees every zero was found.
    """
    zeros = []
    for s in seeds:
        x, r, _ = newton_zero(f, jac, s, tol=tol)
        if r > tol * 10 or not in_region(x):
            continue
        if any(np.linalg.norm(x - z) <= dedup for z, _ in zeros):
            continue
        J = np.atleast_2d(jac(x))
        sv = np.linalg.svd(J, compute_uv=False)
        if sv[-1] <= 1e-10 * max(1.0, sv[0]):
            raise DegenerateZeroError(f"singular Jacobian at zero {x}")
        zeros.append((x, int(np.sign(np.linalg.det(J)))))
    zeros.sort(key=lambda z: tuple(z[0]))
    value = sum(s for _, s in zeros)
    return DegreeReport(value, False, "regular-sum", float("nan"), 0, [z for z, _ in zeros])


def degree_on_ball(f: Callable, ball: Ball, jac: Callable | None = None, seeds=None,
                   polyline_points: int = 64, lipschitz: float | None = None) -> DegreeReport:
    """Degree of f on the open ball, choosing the method by dimension.

    For n >= 3 a Lipschitz constant of f enables the certified pairing
    test; otherwise the result is uncertified.
    """
    n = ball.n
    c = np.asarray(ball.center, dtype=float)
    if n == 1:
        return degree_1d(f, c[0] - ball.radius, c[0] + ball.radius)
    if n == 2:
        def project(x):
            return c + ball.radius * (x - c) / _lp(x - c, ball.p)
        poly = sphere_polyline(ball.radius, ball.p, polyline_points, c)
        return winding_2d(f, poly, project=project)
    rep = boundary_pairing_degree(f, ball, lipschitz=lipschitz)
    if rep.value is not None or jac is None:
        return rep
    if seeds is None:
        seeds = [c + (ball.radius * 0.5) * (s - c) / ball.radius
                 for s in sphere_points(n, ball.radius, ball.p, 8 * n, c)] + [c]
    reg = degree_regular_nd(f, jac, seeds, lambda x: ball.contains(x))
    reg.boundary_margin = rep.boundary_margin
    return reg


@dataclass
class ExcisionReport:
    d1: DegreeReport
    d2: DegreeReport
    conclusion: str

    @property
    def guaranteed(self) -> bool:
        return self.conclusion == "solution in G1\\G2 guaranteed"

    @property
    def degrees_differ(self) -> bool:
        return None not in (self.d1.value, self.d2.value) and self.d1.value != self.d2.value


def excision_report(f: Callable, G1: Ball, G2: Ball, jac: Callable | None = None,
                    lipschitz: float | None = None) -> ExcisionReport:
    """Compare d(f, G1, 0) and d(f, G2, 0) for nested balls G2 inside G1.

    Different degrees force a zero of f in G1 \\ G2 when both degrees are
    certified; with an uncertified degree the difference is only a hint.
    """
    if G2.radius >= G1.radius:
        raise ValueError("G2 must be strictly inside G1")
    d1 = degree_on_ball(f, G1, jac, lipschitz=lipschitz)
    d2 = degree_on_ball(f, G2, jac, lipschitz=lipschitz)
    if d1.value is None or d2.value is None:
        conclusion = "uncertified"
    elif d1.value == d2.value:
        conclusion = "excision inconclusive"
    elif d1.certified and d2.certified:
        conclusion = "solution in G1\\G2 guaranteed"
    else:
        conclusion = "degrees differ (uncertified)"
    return ExcisionReport(d1, d2, conclusion)
