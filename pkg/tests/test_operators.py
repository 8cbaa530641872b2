import numpy as np
import pytest

from yosidakit.operators import (
    BallNormalCone, BoxNormalCone, DiscretePLaplacian, L1Subdifferential, LinearPSD, PowerGraph,
    Scaled, Sum, catalog, check_homogeneous, check_monotone, fd_jacobian, half_line_power_graph,
)
from yosidakit.space import DomainError


@pytest.mark.parametrize("n", [1, 2, 3])
def test_catalog_is_monotone(n):
    for name, A in catalog(n).items():
        rep = check_monotone(A, sample_count=100, seed=1)
        assert rep.passed, (name, rep.max_violation, rep.witnesses[:1])


def test_negative_identity_is_caught():
    rep = check_monotone(LinearPSD(-np.eye(2)), sample_count=50)
    assert not rep.passed
    assert rep.max_violation > 0
    assert rep.witnesses and rep.witnesses[0]["pairing"] < 0


def test_wrong_homogeneity_degree_is_caught():
    assert check_homogeneous(LinearPSD(np.eye(2)), 1.0, samples=20)
    assert not check_homogeneous(LinearPSD(np.eye(2)), 2.0, samples=20)


@pytest.mark.parametrize("gamma", [0.5, 1.0, 2.0, 3.0])
def test_power_graphs_are_homogeneous(gamma):
    assert check_homogeneous(PowerGraph(gamma, 2), gamma, samples=30)
    assert check_homogeneous(half_line_power_graph(gamma, 2), gamma, samples=30)


def test_plaplacian_homogeneous_and_gradient():
    A = DiscretePLaplacian((3, 2), 0.25, 3.0)
    assert check_homogeneous(A, 2.0, samples=20)
    u = np.random.default_rng(0).normal(size=A.n)
    np.testing.assert_allclose(A.value(u), fd_jacobian(lambda v: np.array([A.energy(v)]), u)[0],
                               rtol=1e-5, atol=1e-6)
    np.testing.assert_allclose(A.jacobian(u), fd_jacobian(A.value, u), rtol=1e-5, atol=1e-5)


def test_plaplacian_single_node_stencil():
    # one interior node at h = 1/2: A u = 2 * (2 Phi(2u)) = 16 |u| u for p = 3
    A = DiscretePLaplacian(1, 0.5, 3.0)
    assert A.value([0.25])[0] == pytest.approx(16 * 0.25 ** 2)


def test_min_section_examples():
    assert L1Subdifferential(1).min_section([0.0])[0] == 0.0
    assert L1Subdifferential(1).min_section([-2.0])[0] == -1.0
    assert BoxNormalCone(-1, 1, 1).min_section([1.0])[0] == 0.0
    # A(0) = (-inf, 0] for the half-line graph, least-norm element 0
    assert half_line_power_graph(2.0).min_section([0.0])[0] == 0.0
    with pytest.raises(DomainError):
        BoxNormalCone(-1, 1, 1).min_section([2.0])


def test_graph_queries():
    box = BoxNormalCone(-1, 1, 1)
    assert box.contains([1.0], [5.0])
    assert not box.contains([1.0], [-5.0])
    assert box.graph_distance([3.0], [0.0]) == float("inf")
    assert box.domain_distance([3.0]) == pytest.approx(2.0)
    ball = BallNormalCone(1.0, 2)
    assert ball.contains([1.0, 0.0], [3.0, 0.0])
    assert not ball.contains([1.0, 0.0], [0.0, 3.0])
    assert ball.domain_distance([3.0, 4.0]) == pytest.approx(4.0)


def test_sum_and_scaled():
    S = PowerGraph(3.0, 1) + BoxNormalCone(-1.5, 1.5, 1)
    assert isinstance(S, Sum)
    assert S.contains([1.5], [1.5 ** 3 + 2.0])
    T = 2.5 * L1Subdifferential(1)
    assert isinstance(T, Scaled)
    assert T.min_section([3.0])[0] == pytest.approx(2.5)


def test_multivalued_has_no_value():
    with pytest.raises(TypeError):
        L1Subdifferential(1).value([0.0])
