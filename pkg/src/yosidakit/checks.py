"""Executable property suites for resolvents and Yosida approximants.

Every verifier returns a :class:`VerifierReport`; failures are recorded as
entries with witnesses rather than raised.  Limits are tested as a
threshold on the last value plus a monotone trend over the last five
points of the schedule.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .operators import MonotoneOp, _arr
from .space import Gauge, _lp
from .yosida import LAMBDA_RANGE, resolvent

__all__ = [
    "Check",
    "VerifierReport",
    "DEFAULT_SCHEDULE",
    "trend_ok",
    "verify_resolvent_properties",
    "verify_uniform_bound",
    "quasibound_probe",
    "verify_joint_continuity",
    "verify_homogeneity_transmission",
    "sample_pball",
]

DEFAULT_SCHEDULE = tuple(np.logspace(0, -6, 13))
TREND_WINDOW = 5


@dataclass
class Check:
    name: str
    passed: bool
    value: float = 0.0
    witnesses: list = field(default_factory=list)


@dataclass
class VerifierReport:
    title: str
    checks: list[Check] = field(default_factory=list)
    max_violation: float = 0.0
    stats: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def __bool__(self):
        return self.passed

    def add(self, check: Check, violation: float = 0.0):
        self.checks.append(check)
        self.max_violation = max(self.max_violation, float(violation))

    def lines(self) -> list[str]:
        out = [f"{self.title}: {'PASS' if self.passed else 'FAIL'} (max violation {self.max_violation:.3e})"]
        for c in self.checks:
            out.append(f"  [{'ok' if c.passed else 'FAIL'}] {c.name}: {c.value:.6g}")
        return out


def trend_ok(values, increasing: bool = False, window: int = TREND_WINDOW, slack: float = 1e-9) -> bool:
    """Monotone trend over the last ``window`` values.

    Wiggles below ``slack * (1 + |v|)`` are solver noise and are ignored.
    """
    v = np.asarray(values, dtype=float)[-window:]
    d = np.diff(v)
    scale = slack * (1.0 + np.abs(v[:-1]))
    return bool(np.all(d >= -scale) if increasing else np.all(d <= scale))


def sample_pball(rng: np.random.Generator, k: int, n: int, radius: float, p: float,
                 sphere_fraction: float = 0.5) -> np.ndarray:
    """Points of the closed l^p ball; a fraction lies on the sphere."""
    d = rng.normal(size=(k, n))
    norms = np.array([_lp(row, p) for row in d])
    r = radius * rng.random(k) ** (1.0 / n)
    r[rng.random(k) < sphere_fraction] = radius
    return d * (r / norms)[:, None]


def verify_resolvent_properties(A: MonotoneOp, g: Gauge, x_samples, lambda_schedule=DEFAULT_SCHEDULE,
                                final_gap: float = 1e-4, blowup: float = 1e6) -> VerifierReport:
    """Check the basic properties of A_lambda along a decreasing schedule.

    Covers monotonicity and finiteness of A_lambda on the samples, the
    bound |A_lambda x| <= |A^0 x| on D(A), J_lambda x -> x on the domain
    closure, A_lambda x -> A^0 x on D(A), and |A_lambda x| -> inf off
    the closure.
    """
    xs = [_arr(x) for x in x_samples]
    lams = np.asarray(lambda_schedule, dtype=float)
    if len(lams) < 2 or np.any(np.diff(lams) >= 0):
        raise ValueError("lambda schedule must be strictly decreasing")
    rep = VerifierReport(f"properties[{A.name}, p={g.p:g}]")
    results = [[resolvent(A, g, lam, x) for lam in lams] for x in xs]

    worst = 0.0
    wit = []
    for k, lam in enumerate(lams):
        for i in range(len(xs)):
            for j in range(i + 1, len(xs)):
                da = results[i][k].a_lambda - results[j][k].a_lambda
                dx = xs[i] - xs[j]
                val = float(da @ dx)
                if val < -1e-12 * (1.0 + np.abs(da) @ np.abs(dx)):
                    worst = max(worst, -val)
                    wit.append((lam, i, j, val))
    finite = all(np.all(np.isfinite(r.a_lambda)) for row in results for r in row)
    rep.add(Check("monotone and finite", not wit and finite, worst, wit[:5]), worst)

    inside = [A.in_domain(x) for x in xs]
    closure = [A.domain_distance(x) <= 1e-12 for x in xs]
    qexp = g.q

    worst = 0.0
    wit = []
    for x, ok, row in zip(xs, inside, results):
        if not ok:
            continue
        bound = _lp(A.min_section(x), qexp)
        for r in row:
            excess = _lp(r.a_lambda, qexp) - bound
            if excess > 1e-9 * (1.0 + bound):
                wit.append((r.lam, x, excess))
            worst = max(worst, excess)
    rep.add(Check("|A_lam x| <= |A^0 x|", not wit, max(worst, 0.0), wit[:5]), max(worst, 0.0))

    # convergence on the domain closure and on the domain
    for label, mask, gap_of in (
        ("J_lam x -> x", closure, lambda x, r: _lp(r.x_lambda - x, g.p)),
        ("A_lam x -> A^0 x", inside, lambda x, r: _lp(r.a_lambda - A.min_section(x), qexp)),
    ):
        wit = []
        last = 0.0
        for x, ok, row in zip(xs, mask, results):
            if not ok:
                continue
            gaps = [gap_of(x, r) for r in row]
            last = max(last, gaps[-1])
            if not (gaps[-1] < final_gap and trend_ok(gaps)):
                wit.append((x, gaps[-TREND_WINDOW:]))
        rep.add(Check(label, not wit, last, wit[:5]), last if wit else 0.0)

    wit = []
    smallest = np.inf
    for x, ok, row in zip(xs, closure, results):
        if ok:
            continue
        norms = [_lp(r.a_lambda, qexp) for r in row]
        smallest = min(smallest, norms[-1])
        if not (norms[-1] >= blowup and trend_ok(norms, increasing=True)):
            wit.append((x, norms[-TREND_WINDOW:]))
    if np.isfinite(smallest):
        rep.add(Check("blow-up off the domain", not wit, smallest, wit[:5]))
    rep.stats["samples"] = len(xs)
    rep.stats["outside_closure"] = int(sum(not c for c in closure))
    return rep


def _log_uniform(rng, lo, hi, k, end_fraction=0.5):
    # |A_lambda x| decreases in lambda, so the sup sits at lo; weight it
    lams = np.exp(rng.uniform(np.log(lo), np.log(hi), k))
    lams[rng.random(k) < end_fraction] = lo
    return lams


def verify_uniform_bound(A: MonotoneOp, g: Gauge, ball_radius: float, lambda_lo: float,
                         lambda_hi: float, samples: int = 200, seed: int = 0,
                         growth: float = 0.05) -> VerifierReport:
    """Empirical sup of |A_lambda x| over the ball and lambda in [lo, hi].

    The sup is taken over ``samples`` draws and again over twice as many;
    it passes when finite and the doubled sample raises it by < ``growth``.
    """
    if not 0 < lambda_lo < lambda_hi:
        raise ValueError("need 0 < lambda_lo < lambda_hi")
    rng = np.random.default_rng(seed)
    xs = sample_pball(rng, 2 * samples, A.n, ball_radius, g.p)
    lams = _log_uniform(rng, lambda_lo, lambda_hi, 2 * samples)
    norms = np.array([_lp(resolvent(A, g, lam, x).a_lambda, g.q) for lam, x in zip(lams, xs)])
    k1, k2 = float(norms[:samples].max()), float(norms.max())
    ok = np.isfinite(k2) and k2 <= (1 + growth) * k1 + 1e-300
    rep = VerifierReport(f"uniform_bound[{A.name}, p={g.p:g}]")
    rep.add(Check("K finite and stable under doubling", bool(ok), k2))
    rep.stats.update(K_emp=k2, K_half=k1)
    return rep


def quasibound_probe(A: MonotoneOp, g: Gauge, S: float, S1: float, samples: int = 100,
                     seed: int = 0, growth: float = 0.05,
                     lambda_range=LAMBDA_RANGE) -> VerifierReport:
    """Empirical bound on |A_lambda x| over |x| <= S with <A_lambda x, x> <= S1.

    Each sampled (lambda, x) is pushed outward along its ray to the
    largest admissible scale.  Since A_lambda is monotone with
    A_lambda(0) = 0, s -> <A_lambda(s x), s x> is nondecreasing, so the
    admissible scales form an interval found by bisection.
    """
    if S <= 0 or S1 <= 0:
        raise ValueError("S and S1 must be positive")
    rng = np.random.default_rng(seed)
    xs = sample_pball(rng, 2 * samples, A.n, S, g.p, sphere_fraction=1.0)
    lams = _log_uniform(rng, lambda_range[0], lambda_range[1], 2 * samples, end_fraction=0.0)

    def pair(lam, x):
        a = resolvent(A, g, lam, x).a_lambda
        return float(a @ x), a

    norms = np.zeros(2 * samples)
    for i, (lam, x) in enumerate(zip(lams, xs)):
        val, a = pair(lam, x)
        if val > S1:
            lo, hi = 0.0, 1.0
            for _ in range(20):
                mid = 0.5 * (lo + hi)
                v, am = pair(lam, mid * x)
                if v <= S1:
                    lo, a = mid, am
                else:
                    hi = mid
            if lo == 0.0:
                a = resolvent(A, g, lam, 0.0 * x).a_lambda
        norms[i] = _lp(a, g.q)
    k1, k2 = float(norms[:samples].max()), float(norms.max())
    ok = np.isfinite(k2) and k2 <= (1 + growth) * k1 + 1e-300
    rep = VerifierReport(f"quasibound[{A.name}, p={g.p:g}]")
    rep.add(Check("K finite and stable under doubling", bool(ok), k2))
    rep.stats.update(K_emp=k2, K_half=k1)
    return rep


def verify_joint_continuity(A: MonotoneOp, g: Gauge, path, target, final_gap: float = 1e-6) -> VerifierReport:
    """Gaps |A_{lam_k} x_k - A_{lam_0} x_0| along ``path`` of (lam_k, x_k)."""
    lam0, x0 = target
    if not lam0 > 0:
        raise ValueError("limit lambda must be positive")
    a0 = resolvent(A, g, lam0, x0).a_lambda
    gaps = [_lp(resolvent(A, g, lam, x).a_lambda - a0, g.q) for lam, x in path]
    rep = VerifierReport(f"joint_continuity[{A.name}, p={g.p:g}]")
    ok = gaps[-1] < final_gap and trend_ok(gaps)
    rep.add(Check("gap -> 0", bool(ok), gaps[-1], [] if ok else gaps[-TREND_WINDOW:]),
            0.0 if ok else gaps[-1])
    rep.stats["gaps"] = gaps
    return rep


def _rel(u, v):
    return float(np.max(np.abs(u - v)) / (1.0 + max(np.max(np.abs(u)), np.max(np.abs(v)))))


def verify_homogeneity_transmission(A: MonotoneOp, gamma: float | None, g: Gauge, t: float,
                                    s: float, x) -> float:
    """Largest relative residual of the scaling law A_t(s x) = s^gamma A_{t s^(gamma+1-p)}(x).

    When p = gamma + 1 also checks A_t(s x) = s^gamma A_t(x) and
    J_t(s x) = s J_t(x); at s = 0 checks A_t(0) = 0.
    """
    if gamma is None:
        gamma = A.gamma
    if gamma is None:
        raise ValueError(f"{A.name} has no declared homogeneity degree")
    if not t > 0 or s < 0:
        raise ValueError("need t > 0 and s >= 0")
    x = _arr(x)
    if s == 0:
        return float(np.max(np.abs(resolvent(A, g, t, np.zeros_like(x)).a_lambda)))
    lhs = resolvent(A, g, t, s * x)
    shifted = resolvent(A, g, t * s ** (gamma + 1.0 - g.p), x)
    res = _rel(lhs.a_lambda, s ** gamma * shifted.a_lambda)
    if abs(g.p - (gamma + 1.0)) <= 1e-14:
        base = resolvent(A, g, t, x)
        res = max(res, _rel(lhs.a_lambda, s ** gamma * base.a_lambda),
                  _rel(lhs.x_lambda, s * base.x_lambda))
    return res
