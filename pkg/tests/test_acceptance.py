"""One check per acceptance criterion; prints a PASS/FAIL line for each.

Run under pytest, or directly with ``python3 tests/test_acceptance.py``.
"""

import contextlib
import filecmp
import io
import tempfile
import time
from pathlib import Path

import numpy as np
from scipy.optimize import brentq

from yosidakit.checks import verify_homogeneity_transmission, verify_resolvent_properties
from yosidakit.cli import run
from yosidakit.degree import Ball, degree_on_ball, excision_report
from yosidakit.homotopy import InclusionProblem, annulus_search
from yosidakit.operators import (
    BallNormalCone, BoxNormalCone, DiscretePLaplacian, L1Subdifferential, LinearPSD, PowerGraph,
    catalog, half_line_power_graph,
)
from yosidakit.pde import build_elliptic, build_parabolic, solve_elliptic_annulus, step_parabolic
from yosidakit.space import Gauge, signed_power
from yosidakit.yosida import resolvent

LINES = []


def record(n, ok, detail):
    line = f"criterion {n}: {'PASS' if ok else 'FAIL'} {detail}"
    LINES.append(line)
    print(line)
    assert ok, line


def test_criterion_1_closed_form_battery():
    start = time.perf_counter()
    lams = (1e-4, 1e-2, 1.0, 10.0)
    worst = 0.0
    cases = 0

    def compare(A, p, lam, x, y_ref, a_ref):
        nonlocal worst, cases
        r = resolvent(A, Gauge(p), lam, x)
        worst = max(worst, float(np.max(np.abs(r.x_lambda - y_ref))), float(np.max(np.abs(r.a_lambda - a_ref))))
        cases += 1

    for lam in lams:
        for x in (-3.0, -0.5, 0.0, 1e-3, 0.8, 2.5):
            xa = np.array([x])
            y = np.sign(xa) * np.maximum(np.abs(xa) - lam, 0.0)
            compare(L1Subdifferential(1), 2.0, lam, xa, y, (xa - y) / lam)
            for a in (0.5, 3.0):
                compare(LinearPSD(a * np.eye(1)), 2.0, lam, xa, xa / (1 + a * lam), a * xa / (1 + a * lam))
            y = xa / (1 + lam ** (1 / 3))
            compare(PowerGraph(3.0, 1), 4.0, lam, xa, y, y ** 3)
            y = np.clip(xa, -1, 1)
            compare(BoxNormalCone(-1, 1, 1), 2.0, lam, xa, y, (xa - y) / lam)
        for x in ([3.0, 4.0], [0.3, -0.2], [-1.0, 1.0]):
            xa = np.array(x)
            y = xa / max(1.0, np.linalg.norm(xa))
            compare(BallNormalCone(1.0, 2), 2.0, lam, xa, y, (xa - y) / lam)
            y = np.clip(xa, -1, 1)
            compare(BoxNormalCone(-1, 1, 2), 3.0, lam, xa, y, signed_power(xa - y, 2.0) / lam)
    elapsed = time.perf_counter() - start
    record(1, worst <= 1e-9 and elapsed < 1.0,
           f"closed-form battery: {cases} cases, max abs error {worst:.2e} (limit 1e-9), {elapsed:.2f} s (limit 1 s)")


def test_criterion_2_splitting_identity():
    rng = np.random.default_rng(42)
    cats = {n: catalog(n, 0) for n in (1, 2, 3)}
    draws, failures, worst = 10_000, 0, 0.0
    for _ in range(draws):
        n = int(rng.integers(1, 4))
        ops = cats[n]
        A = ops[sorted(ops)[rng.integers(len(ops))]]
        g = Gauge(float(rng.choice([1.5, 2.0, 3.0, 4.0])))
        lam = 10 ** rng.uniform(-4, 2)
        x = rng.normal(size=n) * 10 ** rng.uniform(-1, 1)
        r = resolvent(A, g, lam, x)
        err = np.max(np.abs(x - r.x_lambda - lam ** (g.q - 1) * signed_power(r.a_lambda, g.q - 1)))
        rel = float(err / (1 + np.max(np.abs(x))))
        worst = max(worst, rel)
        failures += rel > 1e-9
    record(2, failures == 0,
           f"splitting identity: {failures} failures in {draws} draws, worst {worst:.2e} relative (limit 1e-9)")


def test_criterion_3_yosida_properties():
    rng = np.random.default_rng(42)
    failed, runs, blowups = [], 0, []
    for n in (1, 3):
        for name, A in catalog(n, 0).items():
            xs = list(A.sample_domain(rng, 5, radius=1.0))
            for v in (3.0, -3.0):
                far = np.full(n, v)
                if A.domain_distance(far) >= 1.0:
                    xs.append(far)
                    break
            for p in (2.0, 1.5):
                rep = verify_resolvent_properties(A, Gauge(p), xs)
                runs += 1
                if not rep.passed:
                    failed.append(f"{name} n={n} p={p:g}")
                for c in rep.checks:
                    if c.name.startswith("blow-up"):
                        blowups.append(c.value)
    cone_ok = bool(blowups) and min(blowups) >= 1e6
    record(3, not failed and cone_ok,
           f"resolvent properties on {runs} operator/gauge pairs, failures {failed or 'none'}, "
           f"smallest blow-up norm at lam=1e-6 {min(blowups):.3g} (limit 1e6)")


def _homogeneous_ops(gamma, n):
    ops = [PowerGraph(gamma, n), half_line_power_graph(gamma, n)]
    if gamma == 1.0:
        ops.append(LinearPSD(np.diag(np.arange(1.0, n + 1))))
    if n >= 2:
        ops.append(DiscretePLaplacian(n, 1.0, gamma + 1.0))
    return ops


def test_criterion_4_homogeneity_transmission():
    rng = np.random.default_rng(42)
    draws, worst_match, worst_mismatch = 1000, 0.0, 0.0
    for _ in range(draws):
        gamma = float(rng.choice([0.5, 1.0, 2.0, 3.0]))
        n = int(rng.integers(1, 4))
        ops = _homogeneous_ops(gamma, n)
        A = ops[rng.integers(len(ops))]
        s, t = rng.uniform(0.1, 10.0), 10 ** rng.uniform(-3, 0)
        x = A.sample_domain(rng, 1, radius=2.0)[0]
        other = [p for p in (1.5, 2.0, 3.0, 4.0) if p != gamma + 1.0]
        p_bad = float(rng.choice(other))
        worst_match = max(worst_match, verify_homogeneity_transmission(A, gamma, Gauge(gamma + 1.0), t, s, x))
        worst_mismatch = max(worst_mismatch, verify_homogeneity_transmission(A, gamma, Gauge(p_bad), t, s, x))
    record(4, max(worst_match, worst_mismatch) <= 1e-8,
           f"homogeneity over {draws} draws: matched gauge {worst_match:.2e}, "
           f"mismatched gauge {worst_mismatch:.2e} (limit 1e-8)")


def test_criterion_5_degrees():
    parts, ok = [], True

    def timed(label, expect, fn):
        nonlocal ok
        start = time.perf_counter()
        reps = fn()
        elapsed = time.perf_counter() - start
        values = tuple(r.value for r in reps)
        good = values == expect and all(r.certified for r in reps) and elapsed < 1.0
        ok &= good
        margins = "/".join(f"{r.boundary_margin:.3g}" for r in reps)
        parts.append(f"{label}={values if len(values) > 1 else values[0]} margin {margins} {elapsed:.2f}s")

    for n in (1, 2, 3):
        timed(f"identity R^{n}", (1,), lambda: [degree_on_ball(lambda x: x, Ball.around_origin(n, 1.0), lipschitz=1.0)])
    sq = lambda x: np.array([x[0] ** 2 - x[1] ** 2, 2 * x[0] * x[1]])
    timed("square", (2,), lambda: [degree_on_ball(sq, Ball.around_origin(2, 1.0))])
    f = lambda x: np.abs(x) * x - x

    def bench():
        rep = excision_report(f, Ball.around_origin(1, 2.0), Ball.around_origin(1, 0.5))
        return [rep.d1, rep.d2]

    timed("scalar", (1, -1), bench)
    record(5, ok, "degrees: " + "; ".join(parts))


def test_criterion_6_scalar_annulus():
    P = InclusionProblem(PowerGraph(2.0, 1), lambda x: -x, None, 2.0, 0.5, np.array([1.0]), "scalar")
    tr = annulus_search(P)
    xs = sorted(float(c.x[0]) for c in tr.candidates)
    pos = len(xs) == 2 and abs(xs[0] + 1) <= 1e-8 and abs(xs[1] - 1) <= 1e-8
    res = max((max(c.residual, c.limit_residual) for c in tr.candidates), default=np.inf)
    gaps = max((max(c.gaps[-3:]) for c in tr.candidates), default=np.inf)
    record(6, pos and res <= 1e-8 and gaps <= 1e-6,
           f"scalar annulus candidates {[f'{v:.12g}' for v in xs]}, max residual {res:.2e} (limit 1e-8), "
           f"last-three-stage gap {gaps:.2e} (limit 1e-6)")


def test_criterion_7_elliptic():
    prob, P = build_elliptic(dict(nodes=1, h=0.5, p=3, c=-1, delta1=1.0, delta2=0.01))
    tr = solve_elliptic_annulus(prob, P)
    norms = [c.norm for c in tr.candidates]
    single_ok = bool(norms) and all(abs(v - 0.0625) <= 1e-6 for v in norms)

    start = time.perf_counter()
    prob, P = build_elliptic(dict(nodes=16, p=3, c=-1, delta1=0.2, delta2=0.02))
    tr = solve_elliptic_annulus(prob, P, t_schedule=1e-4 * 10.0 ** (-np.arange(25) / 2))
    elapsed = time.perf_counter() - start
    nonzero = [c for c in tr.candidates if c.norm > 0]
    weak = max((c.weak_residual for c in nonzero), default=np.inf)
    record(7, single_ok and bool(nonzero) and weak <= 1e-8 and elapsed < 10.0,
           f"single node norms {[f'{v:.9g}' for v in norms]} (target 0.0625 +- 1e-6); "
           f"16 nodes: {len(nonzero)} nonzero candidates, weak residual {weak:.2e} (limit 1e-8), "
           f"{elapsed:.1f} s (limit 10 s)")


def test_criterion_8_parabolic():
    prob = build_parabolic(dict(nodes=1, p=2, c=1, dt=0.1, horizon=10, source=1, principal=0))
    traj = step_parabolic(prob, steps=100)
    u, lin = 0.0, 0.0
    for k in range(1, 101):
        u = (u + 0.1) / 1.1
        lin = max(lin, abs(traj[k, 0] - u))
    prob = build_parabolic(dict(nodes=1, h=0.5, p=3, dt=1, horizon=20, source=1))
    first = step_parabolic(prob, steps=1)[1, 0]
    root = brentq(lambda v: 16 * v * v + v - 1, 0.0, 1.0, xtol=1e-15)
    record(8, lin <= 1e-12 and abs(first - root) <= 1e-9,
           f"linear recurrence max error {lin:.2e} over 100 steps (limit 1e-12); "
           f"p=3 first step error {abs(first - root):.2e} (limit 1e-9)")


def test_criterion_9_determinism():
    with tempfile.TemporaryDirectory() as tmp:
        dirs = [Path(tmp) / "a", Path(tmp) / "b"]
        with contextlib.redirect_stdout(io.StringIO()):
            codes = [run(["--seed", "42", "--output-dir", str(d), "suite"]) for d in dirs]
        names = sorted(p.name for p in dirs[0].glob("*.csv"))
        same = [filecmp.cmp(dirs[0] / nm, dirs[1] / nm, shallow=False) for nm in names
                if (dirs[1] / nm).exists()]
        ok = codes == [0, 0] and names and len(same) == len(names) and all(same)
        record(9, bool(ok), f"suite run twice with seed 42: {sum(same)}/{len(names)} CSV files byte-identical")


if __name__ == "__main__":
    import sys
    failed = 0
    for name, fn in sorted(globals().items()):
        if name.startswith("test_criterion_"):
            try:
                fn()
            except AssertionError:
                failed += 1
    sys.exit(1 if failed else 0)
