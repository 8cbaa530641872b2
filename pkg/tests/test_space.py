import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from yosidakit.space import (
    DomainError, Gauge, PVector, duality_map, duality_map_inverse, gauge_eval, gauge_inverse,
    normalized_duality_map, pairing, pnorm,
)

exponents = st.sampled_from([1.25, 1.5, 2.0, 3.0, 4.0, 6.0])
vectors = st.lists(st.floats(-1e3, 1e3, allow_nan=False), min_size=1, max_size=6).map(np.array)


def test_gauge_values():
    assert gauge_eval(Gauge(3.0), 2.0) == pytest.approx(4.0)
    assert gauge_eval(Gauge(1.5), 4.0) == pytest.approx(2.0)
    assert gauge_inverse(Gauge(4.0), 8.0) == pytest.approx(2.0)
    assert Gauge(3.0).q == pytest.approx(1.5)


def test_gauge_rejects_bad_input():
    with pytest.raises(DomainError):
        Gauge(1.0)
    with pytest.raises(DomainError):
        Gauge(float("inf"))
    with pytest.raises(DomainError):
        gauge_eval(Gauge(2.0), -1.0)


def test_pnorm_examples():
    assert pnorm([1.0, 2.0], 3.0) == pytest.approx(9.0 ** (1 / 3))
    assert pnorm(np.zeros(3), 2.0) == 0.0
    with pytest.raises(TypeError):
        pnorm([1.0, 2.0])


def test_pnorm_does_not_overflow():
    assert pnorm([1e200, 1e200], 4.0) == pytest.approx(1e200 * 2 ** 0.25)


def test_duality_examples():
    np.testing.assert_allclose(duality_map([1.0, 2.0], Gauge(3.0)), [1.0, 4.0])
    np.testing.assert_allclose(duality_map([4.0, 0.0], Gauge(1.5)), [2.0, 0.0])
    np.testing.assert_allclose(duality_map_inverse([8.0, 0.0], Gauge(4.0)), [2.0, 0.0])


def test_pvector_sides():
    g = Gauge(3.0)
    x = PVector([1.0, 2.0], "primal", 3.0)
    y = duality_map(x, g)
    assert y.side == "dual" and y.exponent == pytest.approx(1.5)
    with pytest.raises(DomainError):
        duality_map(y, g)
    with pytest.raises(DomainError):
        PVector([np.nan])
    assert pairing(y, x) == pytest.approx(9.0)


@settings(max_examples=200, deadline=None)
@given(exponents, vectors)
def test_duality_identities(p, x):
    g = Gauge(p)
    y = duality_map(x, g)
    nx = pnorm(x, p)
    # <J x, x> = |x|_p^p and |J x|_q = |x|_p^(p-1)
    assert pairing(y, x) == pytest.approx(nx ** p, rel=1e-9, abs=1e-300)
    assert pnorm(y, g.q) == pytest.approx(nx ** (p - 1), rel=1e-9, abs=1e-300)
    np.testing.assert_allclose(duality_map_inverse(y, g), x, rtol=1e-9, atol=1e-12)


@settings(max_examples=100, deadline=None)
@given(exponents, vectors, st.floats(0.01, 100.0))
def test_duality_homogeneity(p, x, s):
    g = Gauge(p)
    np.testing.assert_allclose(duality_map(s * x, g), s ** (p - 1) * duality_map(x, g),
                               rtol=1e-9, atol=1e-300)


@settings(max_examples=100, deadline=None)
@given(exponents, vectors)
def test_normalized_duality(p, x):
    y = normalized_duality_map(x, p)
    nx = pnorm(x, p)
    assert pairing(y, x) == pytest.approx(nx ** 2, rel=1e-9, abs=1e-300)
    assert pnorm(y, p / (p - 1)) == pytest.approx(nx, rel=1e-9, abs=1e-300)
