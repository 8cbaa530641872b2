import numpy as np
import pytest

from yosidakit.homotopy import (
    InclusionProblem, IntervalMultifunction, MalformedMultifunctionError, annulus_search, check_outer_sphere,
    check_inner_sphere, default_schedule, make_selection, multistart_seeds, regularized_map, solve_regularized,
)
from yosidakit.operators import LinearPSD, PowerGraph, fd_jacobian
from yosidakit.space import normalized_duality_map


def scalar_problem(**kw):
    return InclusionProblem(PowerGraph(2.0, 1), lambda x: -x, None, 2.0, 0.5, np.array([1.0]),
                            "scalar", **kw)


@pytest.fixture(scope="module")
def scalar_trace():
    return annulus_search(scalar_problem())


def test_default_schedule():
    ts = default_schedule()
    assert len(ts) == 31
    assert ts[0] == pytest.approx(0.1) and ts[-1] == pytest.approx(1e-16)
    assert np.all(np.diff(ts) < 0)


def test_problem_validation():
    with pytest.raises(ValueError):
        InclusionProblem(PowerGraph(2.0, 1), None, None, 0.5, 2.0)
    P = scalar_problem()
    assert P.p == 3.0 and P.gauge.q == pytest.approx(1.5)
    assert P.validate(samples=10)


def test_regularized_root_at_small_t():
    # |x|x - x at t = 0.01: x = y + 0.1 y with y^2 = 1.1 y, so x = 1.21
    sol = solve_regularized(scalar_problem(), 0.01, 0.01, [1.2])
    assert sol.x[0] == pytest.approx(1.21, abs=1e-9)


def test_regularized_jacobian_matches_difference():
    P = InclusionProblem(PowerGraph(3.0, 2), lambda x: -x, None, 2.0, 0.5)
    F, J = regularized_map(P, 0.05, 0.05)
    x = np.array([0.7, -0.4])
    np.testing.assert_allclose(J(x), fd_jacobian(F, x, 1e-7), rtol=1e-5, atol=1e-6)


def test_multistart_seeds_in_annulus():
    P = scalar_problem()
    seeds = multistart_seeds(P)
    assert len(seeds) == 8
    assert np.all((np.abs(seeds) > 0.5) & (np.abs(seeds) < 2.0))


def test_selection_singleton_and_empty():
    x = np.array([0.3, -2.0])
    np.testing.assert_array_equal(make_selection(None, 0.1)(x), [0.0, 0.0])
    T = IntervalMultifunction.singleton(lambda u: 2 * u)
    np.testing.assert_allclose(make_selection(T, 0.1)(x), 2 * x)


def test_selection_lies_in_local_hull():
    beta = 0.5
    T = IntervalMultifunction(lambda u: -beta * np.abs(u), lambda u: beta * np.abs(u))
    eps = 0.05
    q = make_selection(T, eps)
    for x in np.linspace(-2, 2, 41):
        hull = beta * (abs(x) + eps)
        assert abs(q(np.array([x]))[0]) <= hull + 1e-14
    # box bounds: the selection is the midpoint everywhere
    B = IntervalMultifunction(lambda u: 0 * u - 1.0, lambda u: 0 * u + 3.0)
    np.testing.assert_allclose(make_selection(B, 0.1)(np.array([0.2, 5.0])), [1.0, 1.0])


def test_selection_is_smooth():
    T = IntervalMultifunction(lambda u: np.minimum(u, 0.0), lambda u: np.maximum(u, 0.0) + 1.0)
    q = make_selection(T, 0.1)
    for x in (-0.05, 0.0, 0.03):
        num = (q(np.array([x + 1e-6])) - q(np.array([x - 1e-6]))) / 2e-6
        assert q.jacobian(np.array([x]))[0, 0] == pytest.approx(num[0], rel=1e-5, abs=1e-7)


def test_malformed_multifunction():
    T = IntervalMultifunction(lambda u: 0 * u + 1.0, lambda u: 0 * u)
    with pytest.raises(MalformedMultifunctionError):
        make_selection(T, 0.1)


def test_boundary_diagnostics():
    P = scalar_problem()
    h1 = check_outer_sphere(P, 1e-4, 1e-4)
    assert any(abs(w["x"][0] - 2.0) < 1e-12 for w in h1.violations)
    h2 = check_inner_sphere(P, 1e-4, 1e-4)
    assert any(abs(w["x"][0] + 0.5) < 1e-12 for w in h2.violations)
    clean = InclusionProblem(PowerGraph(2.0, 1), lambda x: x + 1.0, None, 0.5, 0.1, np.array([-1.0]))
    assert check_outer_sphere(clean, 1e-4, 1e-4).clean
    skipped = InclusionProblem(PowerGraph(2.0, 1), lambda x: -x, None, 2.0, 0.5)
    assert check_outer_sphere(skipped, 1e-4, 1e-4).skipped


def test_boundary_diagnostic_witness_is_real():
    P = scalar_problem()
    F, _ = regularized_map(P, 1e-4, 1e-4)
    for w in check_inner_sphere(P, 1e-4, 1e-4).violations:
        gap = F(w["x"]) + w["s"] * normalized_duality_map(w["x"], P.p)
        assert np.max(np.abs(gap)) == pytest.approx(w["distance"], abs=1e-12)


def test_scalar_annulus(scalar_trace):
    tr = scalar_trace
    assert tr.outcome == "solution in G1\\G2 guaranteed"
    assert (tr.degrees.d1.value, tr.degrees.d2.value) == (1, -1)
    xs = sorted(c.x[0] for c in tr.candidates)
    np.testing.assert_allclose(xs, [-1.0, 1.0], atol=1e-8)
    for c in tr.candidates:
        assert c.classification == "interior"
        assert max(c.gaps[-3:]) <= 1e-6
        assert c.graph_distance <= 1e-8


def test_trace_csv(scalar_trace):
    text = scalar_trace.csv_text()
    lines = text.split("\r\n")
    assert lines[0] == "stage,t,eps,seed,x0,residual,iters"
    assert len(lines) - 2 == len(scalar_trace.records)
    assert "outcome: solution in G1\\G2 guaranteed" in scalar_trace.summary()


def test_inconclusive_when_degrees_agree():
    P = InclusionProblem(LinearPSD(np.zeros((1, 1))), lambda x: x, None, 2.0, 0.5)
    tr = annulus_search(P, t_schedule=np.logspace(-1, -5, 9))
    assert tr.outcome.startswith("excision inconclusive")
    assert tr.candidates == []


def test_schedule_validation():
    P = scalar_problem()
    with pytest.raises(ValueError):
        annulus_search(P, t_schedule=[1e-2, 1e-3])
    with pytest.raises(ValueError):
        annulus_search(P, t_schedule=[1e-5, 1e-4])
