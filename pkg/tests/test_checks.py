import numpy as np
import pytest

from yosidakit.checks import (
    quasibound_probe, trend_ok, verify_homogeneity_transmission, verify_joint_continuity,
    verify_resolvent_properties, verify_uniform_bound,
)
from yosidakit.operators import BoxNormalCone, L1Subdifferential, PowerGraph, catalog
from yosidakit.space import Gauge


def test_trend_ok():
    assert trend_ok([5, 4, 3, 2, 1])
    assert not trend_ok([5, 4, 3, 4, 1])
    assert trend_ok([1, 2, 3, 4, 5], increasing=True)
    assert trend_ok([1.0, 1.0 + 1e-12, 1.0], increasing=False)


@pytest.mark.parametrize("name", ["abs", "cube", "box", "sum", "half_line"])
def test_properties_passes_on_catalog(name):
    A = catalog(1)[name]
    xs = [[v] for v in (-0.9, -0.2, 0.0, 0.8, 1.0) if A.domain_distance([v]) == 0]
    # off-domain points sit at distance >= 1 so |A_lam x| passes 1e6 by lam = 1e-6
    xs += [[v] for v in (-3.0, 3.0) if A.domain_distance([v]) >= 1.0]
    rep = verify_resolvent_properties(A, Gauge(2.0), xs)
    assert rep.passed, rep.lines()


def test_properties_detects_blowup():
    rep = verify_resolvent_properties(BoxNormalCone(-1, 1, 1), Gauge(2.0), [[0.0], [3.0]])
    vi = [c for c in rep.checks if c.name.startswith("blow-up")]
    assert vi and vi[0].passed and vi[0].value >= 1e6


def test_properties_rejects_increasing_schedule():
    with pytest.raises(ValueError):
        verify_resolvent_properties(PowerGraph(3.0, 1), Gauge(2.0), [[1.0]], [1e-3, 1e-2])


def test_uniform_bound_and_quasibound():
    A, g = PowerGraph(3.0, 2), Gauge(4.0)
    rep = verify_uniform_bound(A, g, 1.0, 1e-3, 1.0, samples=50)
    assert rep.passed
    # |A_lam x| <= |A^0 x| <= 1 on the unit l^4 ball (q-norm of x^3 is |x|_4^3)
    assert rep.stats["K_emp"] <= 1.0 + 1e-9
    assert quasibound_probe(L1Subdifferential(2), Gauge(2.0), 2.0, 1.0, samples=30).passed


def test_joint_continuity():
    A, g = PowerGraph(3.0, 1), Gauge(2.0)
    path = [(0.5 + 2.0 ** -k, [1.0 + 2.0 ** -k]) for k in range(1, 30)]
    rep = verify_joint_continuity(A, g, path, (0.5, [1.0]))
    assert rep.passed
    with pytest.raises(ValueError):
        verify_joint_continuity(A, g, path, (0.0, [1.0]))


@pytest.mark.parametrize("gamma", [0.5, 1.0, 2.0, 3.0])
def test_homogeneity_transmission(gamma):
    A = PowerGraph(gamma, 2)
    for p in (gamma + 1.0, 2.5):
        res = verify_homogeneity_transmission(A, gamma, Gauge(p), 0.3, 2.7, [0.4, -1.1])
        assert res <= 1e-8


def test_homogeneity_example():
    # cube at p = 4, t = 1: J_1(2) = 1 so A_1(2) = 1
    from yosidakit.yosida import resolvent
    assert resolvent(PowerGraph(3.0, 1), Gauge(4.0), 1.0, [2.0]).a_lambda[0] == pytest.approx(1.0)
    assert verify_homogeneity_transmission(PowerGraph(3.0, 1), 3.0, Gauge(4.0), 1.0, 2.0, [1.0]) <= 1e-12
