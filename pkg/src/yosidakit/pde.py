"""Discretized p-Laplacian problems: elliptic annulus search and implicit Euler."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .homotopy import ContinuationTrace, InclusionProblem, IntervalMultifunction, annulus_search
from .operators import DiscretePLaplacian, SmoothMap, Sum, check_homogeneous, check_monotone
from .space import Gauge, _lp, signed_power
from .yosida import NonConvergenceError, resolvent

__all__ = [
    "SpecError",
    "StepFailure",
    "EllipticProblem",
    "ParabolicProblem",
    "build_elliptic",
    "solve_elliptic_annulus",
    "weak_residual",
    "scaled_norm",
    "build_parabolic",
    "step_parabolic",
    "trajectory_csv",
]

STEP_TOL = 1e-9


class SpecError(ValueError):
    """Problem specification violates one or more structural conditions."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("invalid problem spec: " + "; ".join(self.violations))


class StepFailure(RuntimeError):
    def __init__(self, step, cause):
        super().__init__(f"implicit Euler step {step} did not converge: {cause}")
        self.step = step


def _shape(nodes, dim):
    if isinstance(nodes, str):
        nodes = [int(v) for v in nodes.replace("x", ",").split(",") if v.strip()]
    nodes = [int(nodes)] if np.ndim(nodes) == 0 else [int(v) for v in nodes]
    if dim == 2 and len(nodes) == 1:
        nodes = nodes * 2
    return tuple(nodes)


@dataclass
class EllipticProblem:
    """-Delta_p u + c Phi_r(u) + g in [-beta |u|, beta |u|] on a uniform grid, u = 0 on the boundary.

    Phi_r(u) = |u|^(r-2) u.  Radii are measured in the nodal l^p norm
    unless ``norm = "seminorm"``, in which case they bound the discrete
    W^{1,p} seminorm and are converted to nodal radii through the
    Poincare-type constants of the grid (reported, not certified).
    """

    shape: tuple
    h: float
    p: float
    c: float = 0.0
    c_power: float = 2.0
    forcing: float = 0.0
    beta: float = 0.0
    delta1: float = 1.0
    delta2: float = 0.01
    v0_star: float | None = None
    norm: str = "nodal"
    A: DiscretePLaplacian = field(init=False)

    def __post_init__(self):
        self.A = DiscretePLaplacian(self.shape, self.h, self.p)

    @property
    def n(self) -> int:
        return self.A.n

    def nodes(self) -> np.ndarray:
        """Node coordinates, one row per unknown."""
        axes = [self.h * np.arange(1, m + 1) for m in self.shape]
        grids = np.meshgrid(*axes, indexing="ij")
        return np.column_stack([g.ravel() for g in grids])

    def C(self, u):
        return self.c * signed_power(u, self.c_power - 1.0) + self.forcing

    def C_jacobian(self, u):
        e = self.c_power - 1.0
        with np.errstate(divide="ignore"):
            d = self.c * e * np.abs(u) ** (e - 1.0) if e != 1.0 else self.c * np.ones_like(u)
        return np.diag(np.where(np.isfinite(d), d, 0.0))

    def reaction(self) -> IntervalMultifunction | None:
        if self.beta == 0.0:
            return None
        b = self.beta
        return IntervalMultifunction(lambda u: -b * np.abs(u), lambda u: b * np.abs(u), "reaction")


def _get(spec, key, default, cast=float):
    v = spec.get(key, default)
    if v is None or (isinstance(v, str) and v.strip().lower() in ("", "none")):
        return default
    return cast(v)


def build_elliptic(spec: Mapping) -> tuple[EllipticProblem, InclusionProblem]:
    """Build the discrete problem and the inclusion handed to the annulus search.

    Recognised keys: ``dim`` (1 or 2), ``nodes`` (interior nodes per
    axis), ``h`` (default 1/(nodes+1)), ``p``, ``c``, ``c_power``,
    ``forcing``, ``beta``, ``delta1``, ``delta2``, ``v0_star``, ``norm``.
    """
    bad = []
    dim = _get(spec, "dim", 1, int)
    if dim not in (1, 2):
        bad.append(f"dim must be 1 or 2, got {dim}")
        dim = 1
    try:
        shape = _shape(spec.get("nodes", 1), dim)
    except (TypeError, ValueError):
        bad.append(f"nodes not understood: {spec.get('nodes')!r}")
        shape = (1,) * dim
    if len(shape) != dim or min(shape) < 1:
        bad.append(f"nodes {shape} do not describe a {dim}-D grid")
        shape = (1,) * dim
    h = _get(spec, "h", 1.0 / (max(shape) + 1))
    p = _get(spec, "p", 2.0)
    c = _get(spec, "c", 0.0)
    c_power = _get(spec, "c_power", 2.0)
    forcing = _get(spec, "forcing", 0.0)
    beta = _get(spec, "beta", 0.0)
    d1 = _get(spec, "delta1", 1.0)
    d2 = _get(spec, "delta2", 0.01)
    v0 = _get(spec, "v0_star", None)
    norm = str(spec.get("norm", "nodal")).strip().lower()
    if not p > 1:
        bad.append(f"p-Laplacian exponent must exceed 1 (p={p:g})")
    if not h > 0:
        bad.append(f"grid spacing must be positive (h={h:g})")
    if not 0 < d2 < d1:
        bad.append(f"radii must satisfy 0 < delta2 < delta1 (got {d2:g}, {d1:g})")
    if not c_power > 1:
        bad.append(f"lower-order term exponent must exceed 1 (c_power={c_power:g})")
    elif p > 1 and c_power > p:
        bad.append(f"lower-order growth |u|^{c_power - 1:g} exceeds the principal degree p-1={p - 1:g}")
    if beta < 0:
        bad.append(f"reaction half-width must be nonnegative (beta={beta:g})")
    if not np.isfinite(forcing):
        bad.append("forcing must be finite")
    if norm not in ("nodal", "seminorm"):
        bad.append(f"norm must be 'nodal' or 'seminorm', got {norm!r}")
    if bad:
        raise SpecError(bad)

    prob = EllipticProblem(shape, h, p, c, c_power, forcing, beta, d1, d2, v0, norm)
    rep = check_monotone(prob.A, sample_count=20, seed=0)
    if not rep:
        raise SpecError([f"discrete principal part is not monotone ({rep.max_violation:.3g})"])
    rep = check_homogeneous(prob.A, p - 1.0, samples=20, seed=0)
    if not rep:
        raise SpecError([f"discrete principal part is not homogeneous of degree {p - 1:g}"])

    r1, r2 = d1, d2
    if norm == "seminorm":
        # |D u|_p >= lam_min |u|_p and <= lam_max |u|_p with grid constants of D
        s = np.linalg.svd(prob.A._D, compute_uv=False)
        r1, r2 = d1 / s.min(), d2 / s.max()
        if not r2 < r1:
            raise SpecError(["seminorm radii do not give ordered nodal radii on this grid"])
    Cop = SmoothMap(prob.C, prob.n, prob.C_jacobian, "lower-order")
    v0_vec = None if v0 is None else np.full(prob.n, float(v0))
    name = f"elliptic p={p:g} grid={'x'.join(map(str, shape))}"
    P = InclusionProblem(prob.A, Cop, prob.reaction(), r1, r2, v0_vec, name)
    return prob, P


def weak_residual(prob: EllipticProblem, u) -> float:
    """max_i |(A u + C u + m(u))_i| with m the midpoint of the reaction interval."""
    u = np.asarray(u, dtype=float)
    T = prob.reaction()
    mid = T.midpoint(u) if T is not None else 0.0
    return float(np.max(np.abs(prob.A.value(u) + prob.C(u) + mid)))


def scaled_norm(prob: EllipticProblem, u) -> float:
    """h^(d/p) |u|_p, the discrete L^p norm; comparable across meshes."""
    return prob.h ** (len(prob.shape) / prob.p) * _lp(np.asarray(u, dtype=float), prob.p)


def solve_elliptic_annulus(prob: EllipticProblem, P: InclusionProblem, **kwargs) -> ContinuationTrace:
    """Annulus search on the discrete problem; candidates carry their weak-form residual."""
    trace = annulus_search(P, **kwargs)
    for cand in trace.candidates:
        cand.weak_residual = weak_residual(prob, cand.x)
        trace.notes.append(f"weak-form residual of candidate seed {cand.seed}: {cand.weak_residual:.3e}")
    return trace


# ---------------------------------------------------------------------------
# parabolic


@dataclass
class ParabolicProblem:
    """u_t - Delta_p u + C u = f(t) on a grid, u(0) = 0, implicit Euler with step dt.

    Each step solves (v - u^k)/dt + A v + C v = f^{k+1}.  With C having
    slope bounded below by -kappa the step map is strongly monotone when
    dt * kappa < 1; ``dt_max`` records that bound.
    """

    spatial: EllipticProblem
    horizon: float
    dt: float
    forcing: float = 0.0
    dt_max: float = np.inf
    principal: bool = True

    @property
    def steps(self) -> int:
        return int(round(self.horizon / self.dt))

    def operator(self):
        sp = self.spatial
        C = SmoothMap(sp.C, sp.n, sp.C_jacobian, "lower-order")
        if not self.principal:
            return C
        return Sum([sp.A, C])

    def forcing_at(self, t: float) -> np.ndarray:
        return np.full(self.spatial.n, self.forcing)


def build_parabolic(spec: Mapping) -> ParabolicProblem:
    """Spatial keys as in :func:`build_elliptic` plus ``horizon``, ``dt``,
    ``source`` (constant forcing f) and ``principal`` (0 drops -Delta_p)."""
    spatial_spec = dict(spec)
    spatial_spec.setdefault("delta1", 1.0)
    spatial_spec.setdefault("delta2", 0.5)
    spatial_spec["forcing"] = 0.0
    sp, _ = build_elliptic(spatial_spec)
    bad = []
    horizon = _get(spec, "horizon", 1.0)
    dt = _get(spec, "dt", 0.1)
    source = _get(spec, "source", 0.0)
    principal = bool(_get(spec, "principal", 1, int))
    if not dt > 0:
        bad.append(f"time step must be positive (dt={dt:g})")
    if not horizon > 0:
        bad.append(f"horizon must be positive (horizon={horizon:g})")
    if not np.isfinite(source):
        bad.append("source must be finite")
    kappa = 0.0
    if sp.c < 0:
        if sp.c_power != 2.0:
            bad.append("a decreasing lower-order term must be linear (c_power = 2) for a monotone step")
        kappa = -sp.c
    dt_max = 1.0 / kappa if kappa > 0 else np.inf
    if dt > 0 and dt >= dt_max:
        bad.append(f"time step {dt:g} violates the monotone-step restriction dt < {dt_max:g}")
    if bad:
        raise SpecError(bad)
    return ParabolicProblem(sp, horizon, dt, source, dt_max, principal)


def step_parabolic(prob: ParabolicProblem, steps: int | None = None, tol: float = STEP_TOL) -> np.ndarray:
    """Implicit Euler trajectory, shape (steps + 1, n), starting from u = 0.

    The step v = (I + dt (A + C))^{-1}(u^k + dt f^{k+1}) is the p = 2
    resolvent of A + C with parameter dt.
    """
    steps = prob.steps if steps is None else int(steps)
    op = prob.operator()
    g = Gauge(2.0)
    u = np.zeros(prob.spatial.n)
    out = [u]
    for k in range(steps):
        rhs = u + prob.dt * prob.forcing_at((k + 1) * prob.dt)
        try:
            u = resolvent(op, g, prob.dt, rhs, tol=tol).x_lambda
        except NonConvergenceError as exc:
            raise StepFailure(k + 1, exc) from exc
        out.append(u)
    return np.array(out)


def trajectory_csv(prob: ParabolicProblem, traj: np.ndarray) -> str:
    """Long-format CSV: step, time, node coordinates, value."""
    nodes = prob.spatial.nodes()
    coord_names = ["x", "y"][: nodes.shape[1]]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(["step", "time", *coord_names, "value"])
    for k, row in enumerate(traj):
        t = k * prob.dt
        for xy, v in zip(nodes, row):
            w.writerow([k, f"{t:.17g}", *(f"{c:.17g}" for c in xy), f"{v:.17g}"])
    return buf.getvalue()
