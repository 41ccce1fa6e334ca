import jax.numpy as jnp
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from gaugeflow import DomainError, NumericError, so3, u1
from gaugeflow.gauge import (
    GaugeChart,
    constant_gauge_map,
    constant_potential,
    curvature,
    exp_gauge_map,
    gauge_transform,
    magnetic_field,
    monopole_chart,
    monopole_transition,
    uniform_field_chart,
)

upper = arrays(np.float64, 3, elements=st.floats(-1.0, 1.0)).map(lambda x: x + np.array([0.0, 0.0, 1.5]))


def test_uniform_field():
    chart = uniform_field_chart([0.3, -1.0, 2.0])
    np.testing.assert_allclose(np.asarray(magnetic_field(chart, [0.5, 0.1, -2.0])), [0.3, -1.0, 2.0], atol=1e-15)


@given(upper)
def test_monopole_field(q):
    chart = monopole_chart(0.7)
    b = np.asarray(magnetic_field(chart, q))
    np.testing.assert_allclose(b, 0.7 * q / np.linalg.norm(q) ** 3, atol=1e-12)


@given(upper)
def test_patches_related_by_transition(q):
    north, south = monopole_chart(0.5, "north"), monopole_chart(0.5, "south")
    if abs(q[0]) + abs(q[1]) < 1e-3:
        return
    moved = gauge_transform(north, monopole_transition(0.5))
    np.testing.assert_allclose(np.asarray(moved(q)), np.asarray(south(q)), atol=1e-12)


def test_monopole_string_is_outside_domain():
    chart = monopole_chart(0.5, "north")
    with pytest.raises(DomainError):
        chart.check_domain([0.0, 0.0, -1.0])
    chart.check_domain([0.0, 0.0, 1.0])
    with pytest.raises(DomainError):
        monopole_chart(0.5, "south").check_domain([1e-6, 0.0, 1.0])
    with pytest.raises(DomainError):
        chart.check_domain([0.0, 0.0, 0.0])


def test_abelian_gauge_transform_shifts_by_gradient():
    chart = uniform_field_chart([0.0, 0.0, 1.0])
    chi = lambda q: jnp.array([q[0] * q[1] + jnp.sin(q[2])])  # noqa: E731
    moved = gauge_transform(chart, exp_gauge_map(u1(), chi))
    q = jnp.array([0.3, -0.2, 0.9])
    grad = np.array([q[1], q[0], np.cos(q[2])])
    # a d(a^-1) = -d chi for a = exp(chi)
    np.testing.assert_allclose(np.asarray(moved(q))[:, 0], np.asarray(chart(q))[:, 0] - grad, atol=1e-13)
    np.testing.assert_allclose(np.asarray(curvature(moved, q)), np.asarray(curvature(chart, q)), atol=1e-13)


def non_abelian_chart():
    def potential(q):
        return jnp.array([[q[1], 0.2, q[0] * q[2]], [0.1, q[2] ** 2, -q[0]], [jnp.sin(q[0]), q[1], 0.3]])

    return GaugeChart(so3(), 3, potential, name="test")


def test_curvature_is_covariant(rng):
    chart = non_abelian_chart()
    a = exp_gauge_map(so3(), lambda q: jnp.array([0.3 * q[0], q[1] * q[2], -0.5 + q[2]]))
    moved = gauge_transform(chart, a)
    for q in rng.normal(size=(5, 3)):
        g = np.asarray(a(q))
        f = np.asarray(curvature(chart, q))
        f2 = np.asarray(curvature(moved, q))
        expected = np.asarray(so3().adjoint(g, f.reshape(-1, 3))).reshape(3, 3, 3)
        np.testing.assert_allclose(f2, expected, atol=1e-12)


def test_constant_potential_curvature_is_commutator():
    vals = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 0.0]])
    f = np.asarray(curvature(constant_potential(so3(), vals), np.zeros(3)))
    # F_ji = [A_j, A_i]: F_01 = [e1, e2] = e3
    np.testing.assert_allclose(f[0, 1], [0.0, 0.0, 1.0], atol=0)
    np.testing.assert_allclose(f[1, 0], [0.0, 0.0, -1.0], atol=0)


def test_gauge_map_inverse_round_trip(rng):
    chart = non_abelian_chart()
    a = exp_gauge_map(so3(), lambda q: jnp.array([q[0], 0.2, q[1] * q[2]]))
    back = gauge_transform(gauge_transform(chart, a), a.inverse())
    q = rng.normal(size=3)
    np.testing.assert_allclose(np.asarray(back(q)), np.asarray(chart(q)), atol=1e-12)


def test_constant_gauge_map_needs_orthogonal():
    with pytest.raises(NumericError):
        constant_gauge_map(so3(), 2 * np.eye(3))


def test_shape_errors():
    with pytest.raises(ValueError):
        constant_potential(so3(), np.zeros((3, 2)))
    with pytest.raises(ValueError):
        uniform_field_chart([1.0, 2.0])
    with pytest.raises(ValueError):
        monopole_chart(1.0, "east")
