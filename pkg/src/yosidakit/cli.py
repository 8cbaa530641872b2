"""Command-line tools for Yosida approximants and annulus root search.

Exit codes: 0 success, 1 invalid input or failed verification, 2 solver
nonconvergence, 3 degree uncertified where a certificate was required.
"""

from __future__ import annotations

import argparse
import configparser
import logging
import os
import sys
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from . import checks
from .degree import Ball, BoundaryDegeneracyError, DegenerateZeroError, degree_1d, degree_on_ball
from .homotopy import (ContinuationTrace, InclusionProblem, IntervalMultifunction, SearchFailure,
                       annulus_search)
from .operators import DiscretePLaplacian, LinearPSD, PowerGraph, SmoothMap, catalog
from .pde import (SpecError, StepFailure, build_elliptic, build_parabolic, scaled_norm,
                  solve_elliptic_annulus, step_parabolic, trajectory_csv)
from .space import Gauge, normalized_duality_map
from .yosida import NonConvergenceError, resolvent

log = logging.getLogger("yosidakit")

OUTPUT_ENV = "YOSIDAKIT_OUTPUT_DIR"
DEFAULT_SEED = 42
SUITES = ("properties", "uniform-bound", "quasibound", "continuity", "homogeneity")


class ConfigError(ValueError):
    pass


class Uncertified(RuntimeError):
    pass


@dataclass
class RunConfig:
    command: str
    spec: str | None = None
    seed: int = DEFAULT_SEED
    tol: float | None = None
    t0: float | None = None
    stages: int | None = None
    output_dir: Path = field(default_factory=lambda: Path("."))

    def __post_init__(self):
        if self.tol is not None and not 0 < self.tol <= 1e-6:
            raise ConfigError(f"tolerance must lie in (0, 1e-6], got {self.tol:g}")
        if self.t0 is not None and not 0 < self.t0 <= 1:
            raise ConfigError(f"t0 must lie in (0, 1], got {self.t0:g}")
        if self.stages is not None and not 2 <= self.stages <= 60:
            raise ConfigError(f"stages must lie in [2, 60], got {self.stages}")
        if self.seed < 0:
            raise ConfigError("seed must be nonnegative")


# ---------------------------------------------------------------------------
# spec files


def builtin_specs() -> list[str]:
    root = resources.files("yosidakit") / "problems"
    return sorted(p.name[:-4] for p in root.iterdir() if p.name.endswith(".ini"))


def read_spec(path: str) -> configparser.ConfigParser:
    """Parse a spec file; a bare name refers to a built-in problem."""
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    cp.optionxform = str
    p = Path(path)
    if p.is_file():
        cp.read(p)
    else:
        stem = p.stem if p.suffix else p.name
        ref = resources.files("yosidakit") / "problems" / f"{stem}.ini"
        if not ref.is_file():
            raise ConfigError(f"no spec file {path!r} and no built-in problem {stem!r}")
        cp.read_string(ref.read_text())
    if not cp.has_section("problem"):
        raise ConfigError(f"{path}: missing [problem] section")
    return cp


def _section(cp, name) -> dict:
    return dict(cp[name]) if cp.has_section(name) else {}


def _float(d, key, default=None):
    if key not in d:
        if default is None:
            raise ConfigError(f"missing key {key!r}")
        return default
    try:
        return float(d[key])
    except ValueError:
        raise ConfigError(f"{key} = {d[key]!r} is not a number") from None


def _schedule(cp, cfg: RunConfig):
    s = _section(cp, "schedule")
    t0 = cfg.t0 if cfg.t0 is not None else _float(s, "t0", 0.1)
    stages = cfg.stages if cfg.stages is not None else int(_float(s, "stages", 31))
    step = _float(s, "decades_per_stage", 0.5)
    if not (0 < t0 <= 1 and stages >= 2 and step > 0):
        raise ConfigError("schedule needs 0 < t0 <= 1, stages >= 2, decades_per_stage > 0")
    ts = t0 * 10.0 ** (-step * np.arange(stages))
    return ts, ts.copy()


def _operator_A(d) -> object:
    kind = d.get("type", "power")
    n = int(_float(d, "dim", 1))
    if kind == "power":
        return PowerGraph(_float(d, "gamma", 2.0), n)
    if kind == "linear":
        return LinearPSD(_float(d, "coef", 1.0) * np.eye(n))
    if kind == "zero":
        return LinearPSD(np.zeros((n, n)))
    if kind == "plaplacian":
        nodes = int(_float(d, "nodes", 1))
        return DiscretePLaplacian(nodes, _float(d, "h", 1.0 / (nodes + 1)), _float(d, "p", 2.0))
    raise ConfigError(f"unknown A type {kind!r}")


def _operator_C(d, n, p):
    kind = d.get("type", "none")
    coef = _float(d, "coef", 1.0)
    shift = _float(d, "shift", 0.0)
    if kind == "none":
        return None
    if kind == "linear":
        return SmoothMap(lambda x: coef * x + shift, n, lambda x: coef * np.eye(n), f"{coef:g}x+{shift:g}")
    if kind == "duality":
        return SmoothMap(lambda x: coef * normalized_duality_map(x, p) + shift, n, name=f"{coef:g}J")
    raise ConfigError(f"unknown C type {kind!r}")


def _multifunction_T(d):
    kind = d.get("type", "none")
    if kind == "none":
        return None
    if kind == "interval":
        beta = _float(d, "beta", 0.0)
        if beta < 0:
            raise ConfigError("beta must be nonnegative")
        return IntervalMultifunction(lambda x: -beta * np.abs(x), lambda x: beta * np.abs(x), "interval")
    if kind == "box":
        lo, hi = _float(d, "lower"), _float(d, "upper")
        return IntervalMultifunction(lambda x: lo + 0 * x, lambda x: hi + 0 * x, "box")
    raise ConfigError(f"unknown T type {kind!r}")


def build_inclusion(cp) -> InclusionProblem:
    A = _operator_A(_section(cp, "A"))
    ann = _section(cp, "annulus")
    p = A.gamma + 1.0
    C = _operator_C(_section(cp, "C"), A.n, p)
    T = _multifunction_T(_section(cp, "T"))
    v0 = ann.get("v0_star", "none")
    v0 = None if v0.strip().lower() == "none" else np.full(A.n, float(v0))
    try:
        P = InclusionProblem(A, C, T, _float(ann, "G1_radius"), _float(ann, "G2_radius"), v0,
                             cp["problem"].get("name", "problem"))
        P.validate(samples=20)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return P


def _elliptic_dict(cp) -> dict:
    spec = {}
    for sec in ("grid", "equation", "annulus", "time"):
        spec.update(_section(cp, sec))
    return spec


# ---------------------------------------------------------------------------
# named maps for the degree command


def _square(x):
    z = complex(x[0], x[1]) ** 2
    return np.array([z.real, z.imag])


MAPS = {
    "identity": (lambda x: np.asarray(x, dtype=float), 1.0),
    "absxx_minus_x": (lambda x: np.abs(x) * x - x, None),
    "cubic": (lambda x: x ** 3 - x, None),
    "square": (_square, None),
    "constant": (lambda x: np.ones_like(x), 0.0),
}


# ---------------------------------------------------------------------------
# commands


def _out(cfg: RunConfig, name: str) -> Path:
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    return cfg.output_dir / name


def _write(path: Path, text: str) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(text)


def cmd_verify(args, cfg: RunConfig) -> int:
    ops = catalog(args.dim, cfg.seed)
    if args.op not in ops:
        raise ConfigError(f"unknown operator {args.op!r}; choose from {', '.join(sorted(ops))}")
    A = ops[args.op]
    g = Gauge(args.p)
    rng = np.random.default_rng(cfg.seed)
    if args.suite == "properties":
        xs = list(rng.uniform(-1, 1, size=(args.samples, A.n)))
        far = np.full(A.n, 3.0)
        if A.domain_distance(far) > 0:
            # a point off the domain closure exercises the blow-up check
            xs.append(far)
        rep = checks.verify_resolvent_properties(A, g, xs)
    elif args.suite == "uniform-bound":
        rep = checks.verify_uniform_bound(A, g, 2.0, 1e-3, 1.0, samples=args.samples, seed=cfg.seed)
    elif args.suite == "quasibound":
        rep = checks.quasibound_probe(A, g, 2.0, 10.0, samples=args.samples, seed=cfg.seed)
    elif args.suite == "continuity":
        x0 = rng.uniform(-1, 1, size=A.n)
        e = rng.normal(size=A.n)
        path = [(0.5 * (1 + 2.0 ** -k), x0 + 2.0 ** -k * e) for k in range(30)]
        rep = checks.verify_joint_continuity(A, g, path, (0.5, x0))
    else:
        if A.gamma is None:
            raise ConfigError(f"{A.name} is not homogeneous")
        rep = checks.VerifierReport(f"homogeneity[{A.name}, p={g.p:g}]")
        worst = 0.0
        for _ in range(args.samples):
            s, t = rng.uniform(0.1, 10), 10 ** rng.uniform(-3, 0)
            worst = max(worst, checks.verify_homogeneity_transmission(A, A.gamma, g, t, s,
                                                                      rng.uniform(-1, 1, size=A.n)))
        rep.add(checks.Check("scaling-law residual <= 1e-8", worst <= 1e-8, worst), worst)
    text = "\n".join(rep.lines()) + "\n"
    path = _out(cfg, f"verify_{args.suite}_{args.op}_n{A.n}_p{args.p:g}.txt")
    _write(path, text)
    sys.stdout.write(text)
    return 0 if rep.passed else 1


def cmd_resolvent(args, cfg: RunConfig) -> int:
    ops = catalog(len(args.x), cfg.seed)
    if args.op not in ops:
        raise ConfigError(f"unknown operator {args.op!r}; choose from {', '.join(sorted(ops))}")
    r = resolvent(ops[args.op], Gauge(args.p), args.lam, np.array(args.x),
                  tol=cfg.tol or 1e-10)
    fmt = " ".join
    print(f"x_lambda: {fmt(f'{v:.17g}' for v in r.x_lambda)}")
    print(f"a_lambda: {fmt(f'{v:.17g}' for v in r.a_lambda)}")
    print(f"residual: {r.residual:.3e}  method: {r.method}  iterations: {r.iterations}")
    return 0


def cmd_degree(args, cfg: RunConfig) -> int:
    if args.map not in MAPS:
        raise ConfigError(f"unknown map {args.map!r}; choose from {', '.join(sorted(MAPS))}")
    f, lip = MAPS[args.map]
    lip = args.lipschitz if args.lipschitz is not None else lip
    if args.interval is not None:
        a, b = args.interval
        if not a < b:
            raise ConfigError("interval needs a < b")
        rep = degree_1d(f, a, b)
    else:
        if args.ball is None:
            raise ConfigError("give --interval A B or --ball RADIUS")
        if args.map == "square" and args.dim != 2:
            raise ConfigError("the square map is planar; use --dim 2")
        rep = degree_on_ball(f, Ball.around_origin(args.dim, args.ball, args.p), lipschitz=lip)
    print(rep.label if rep.value is not None else "uncertified")
    print(f"method: {rep.method}  certified: {rep.certified}  boundary margin: {rep.boundary_margin:.6g}")
    if args.require_certified and not rep.certified:
        raise Uncertified("degree not certified")
    return 0


def _finish_trace(trace: ContinuationTrace, cfg: RunConfig, stem: str, extra: str = "") -> None:
    trace.write_csv(_out(cfg, f"{stem}_trace.csv"))
    text = trace.summary() + extra
    _write(_out(cfg, f"{stem}_summary.txt"), text)
    sys.stdout.write(text)


def cmd_annulus(args, cfg: RunConfig) -> int:
    cp = read_spec(cfg.spec)
    if cp["problem"].get("kind", "annulus") != "annulus":
        raise ConfigError("spec is not an annulus problem")
    P = build_inclusion(cp)
    ts, es = _schedule(cp, cfg)
    tol = cfg.tol or _float(_section(cp, "solver"), "tol", 1e-10)
    trace = annulus_search(P, ts, es, tol=tol)
    _finish_trace(trace, cfg, P.name)
    if args.require_certified and not trace.degrees.guaranteed:
        raise Uncertified("annulus degrees are not certified")
    return 0


def cmd_elliptic(args, cfg: RunConfig) -> int:
    cp = read_spec(cfg.spec)
    if cp["problem"].get("kind") != "elliptic":
        raise ConfigError("spec is not an elliptic problem")
    prob, P = build_elliptic(_elliptic_dict(cp))
    P.name = cp["problem"].get("name", P.name)
    ts, es = _schedule(cp, cfg)
    tol = cfg.tol or _float(_section(cp, "solver"), "tol", 1e-10)
    trace = solve_elliptic_annulus(prob, P, t_schedule=ts, eps_schedule=es, tol=tol)
    extra = "".join(f"discrete L^p norm of candidate seed {c.seed}: {scaled_norm(prob, c.x):.12g}\n"
                    for c in trace.candidates)
    _finish_trace(trace, cfg, P.name, extra)
    if args.require_certified and not trace.degrees.guaranteed:
        raise Uncertified("annulus degrees are not certified")
    return 0


def cmd_parabolic(args, cfg: RunConfig) -> int:
    cp = read_spec(cfg.spec)
    if cp["problem"].get("kind") != "parabolic":
        raise ConfigError("spec is not a parabolic problem")
    prob = build_parabolic(_elliptic_dict(cp))
    name = cp["problem"].get("name", "parabolic")
    traj = step_parabolic(prob, tol=cfg.tol or 1e-9)
    _write(_out(cfg, f"{name}_trajectory.csv"), trajectory_csv(prob, traj))
    text = (f"problem: {name}\nsteps: {len(traj) - 1}  dt: {prob.dt:g}\n"
            f"final state max |u|: {np.max(np.abs(traj[-1])):.12g}\n")
    _write(_out(cfg, f"{name}_summary.txt"), text)
    sys.stdout.write(text)
    return 0


def cmd_suite(args, cfg: RunConfig) -> int:
    """Run every built-in problem in name order."""
    handlers = {"annulus": cmd_annulus, "elliptic": cmd_elliptic, "parabolic": cmd_parabolic}
    for name in builtin_specs():
        kind = read_spec(name)["problem"].get("kind", "annulus")
        sub = RunConfig(kind, name, cfg.seed, cfg.tol, cfg.t0, cfg.stages, cfg.output_dir)
        handlers[kind](argparse.Namespace(require_certified=False), sub)
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="yosidakit", description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=DEFAULT_SEED)
    ap.add_argument("--tol", type=float, default=None, help="solver tolerance override")
    ap.add_argument("--t0", type=float, default=None, help="first schedule value override")
    ap.add_argument("--stages", type=int, default=None, help="number of schedule stages override")
    ap.add_argument("--output-dir", default=None, help=f"defaults to ${OUTPUT_ENV} or the current directory")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    v = sub.add_parser("verify", help="sampled property suites for the Yosida approximant")
    v.add_argument("--suite", choices=SUITES, required=True)
    v.add_argument("--op", required=True)
    v.add_argument("--dim", type=int, default=1)
    v.add_argument("--p", type=float, default=2.0)
    v.add_argument("--samples", type=int, default=20)

    r = sub.add_parser("resolvent", help="evaluate J_lambda and A_lambda at one point")
    r.add_argument("--op", required=True)
    r.add_argument("--x", type=float, nargs="+", required=True)
    r.add_argument("--lam", type=float, required=True)
    r.add_argument("--p", type=float, default=2.0)

    d = sub.add_parser("degree", help="Brouwer degree of a named map")
    d.add_argument("--map", required=True)
    d.add_argument("--interval", type=float, nargs=2, metavar=("A", "B"))
    d.add_argument("--ball", type=float, metavar="RADIUS")
    d.add_argument("--dim", type=int, default=2)
    d.add_argument("--p", type=float, default=2.0)
    d.add_argument("--lipschitz", type=float, default=None)
    d.add_argument("--require-certified", action="store_true")

    for name, text in (("annulus", "annulus search for an inclusion"),
                       ("elliptic", "discrete p-Laplacian annulus search"),
                       ("parabolic", "implicit Euler for the discrete p-Laplacian")):
        s = sub.add_parser(name, help=text)
        s.add_argument("--spec", required=True, help="spec file or built-in problem name")
        if name != "parabolic":
            s.add_argument("--require-certified", action="store_true")

    sub.add_parser("suite", help="run all built-in problems")
    return ap


COMMANDS = {"verify": cmd_verify, "resolvent": cmd_resolvent, "degree": cmd_degree,
            "annulus": cmd_annulus, "elliptic": cmd_elliptic, "parabolic": cmd_parabolic,
            "suite": cmd_suite}


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    out = args.output_dir or os.environ.get(OUTPUT_ENV) or "."
    try:
        cfg = RunConfig(args.command, getattr(args, "spec", None), args.seed, args.tol, args.t0,
                        args.stages, Path(out))
        return COMMANDS[args.command](args, cfg)
    except (Uncertified, BoundaryDegeneracyError, DegenerateZeroError) as exc:
        print(f"uncertified: {exc}", file=sys.stderr)
        return 3
    except (NonConvergenceError, SearchFailure, StepFailure) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return 2
    except (ConfigError, SpecError, configparser.Error, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
