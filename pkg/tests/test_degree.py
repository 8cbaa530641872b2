import numpy as np
import pytest

from yosidakit.degree import (
    Ball, BoundaryDegeneracyError, boundary_pairing_degree, degree_1d, degree_on_ball,
    excision_report, sphere_polyline, winding_2d,
)


def _square(x):
    return np.array([x[0] ** 2 - x[1] ** 2, 2 * x[0] * x[1]])


def test_degree_1d():
    assert degree_1d(lambda x: x, -1, 1).value == 1
    assert degree_1d(lambda x: -x, -1, 1).value == -1
    assert degree_1d(lambda x: x * x + 1, -1, 1).value == 0
    with pytest.raises(BoundaryDegeneracyError):
        degree_1d(lambda x: x - 1, -1, 1)


def test_winding_examples():
    poly = sphere_polyline(1.0)
    assert winding_2d(_square, poly).value == 2
    assert winding_2d(lambda x: x, poly).value == 1
    assert winding_2d(lambda x: np.array([1.0, 0.5]), poly).value == 0
    # zeros of the squaring map are at 0 only
    assert winding_2d(_square, sphere_polyline(0.5, center=(2.0, 0.0))).value == 0


@pytest.mark.parametrize("n", [1, 2, 3])
def test_identity_degree_is_one(n):
    rep = degree_on_ball(lambda x: x, Ball.around_origin(n, 1.0), lipschitz=1.0)
    assert rep.value == 1 and rep.certified
    assert rep.boundary_margin > 0


def test_minus_identity_in_3d():
    rep = boundary_pairing_degree(lambda x: -x, Ball.around_origin(3, 1.0), lipschitz=1.0)
    assert rep.value == -1


def test_excision_scalar_benchmark():
    f = lambda x: np.abs(x) * x - x
    rep = excision_report(f, Ball.around_origin(1, 2.0), Ball.around_origin(1, 0.5))
    assert (rep.d1.value, rep.d2.value) == (1, -1)
    assert rep.guaranteed and rep.degrees_differ


def test_excision_needs_nested_balls():
    with pytest.raises(ValueError):
        excision_report(lambda x: x, Ball.around_origin(1, 1.0), Ball.around_origin(1, 2.0))


def test_regular_sum_in_3d():
    f = lambda x: x ** 3 - 0.25 * x
    J = lambda x: np.diag(3 * x ** 2 - 0.25)
    rep = degree_on_ball(f, Ball.around_origin(3, 0.1), jac=J)
    assert rep.value == -1
