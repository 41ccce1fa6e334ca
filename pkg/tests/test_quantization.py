import jax.numpy as jnp
import numpy as np
import pytest

from gaugeflow import DomainError, GeometryError, so3, u1
from gaugeflow.dynamics import Model, integrate_model
from gaugeflow.forms import disk, exterior_derivative, icosphere, rectangle
from gaugeflow.gauge import constant_potential, monopole_chart, zero_potential
from gaugeflow.internal import InternalSpace, coadjoint_sphere_chart, point_orbit
from gaugeflow.quantization import (
    LoopWithCap,
    base_sphere_cycle,
    dirac_condition,
    euler_lagrange_residual,
    flux_quantization_check,
    loop_action,
    orbit_cycle,
    sternberg_two_form,
    textbook_lagrangian,
)

WONG_A = [[0.0, 0.0, 0.5], [0.15, 0.0, 0.3], [0.0, 0.15, 0.2]]


def free(q, v, z):
    return 0.5 * v @ v


@pytest.mark.parametrize("q_e, q_m, expected", [(1.0, 0.5, True), (1.0, 0.3, False), (2.0, 0.25, True),
                                                (1.0, 0.0, True), (-1.5, 1.0, True), (0.7, 0.5, False)])
def test_dirac_condition(q_e, q_m, expected):
    assert dirac_condition(q_e, q_m) is expected


@pytest.mark.parametrize("q_m", [0.5, 1.0, 0.3])
def test_monopole_flux(q_m):
    space = point_orbit(u1(), [-1.0])
    rep = flux_quantization_check(sternberg_two_form(space, monopole_chart(q_m)), base_sphere_cycle(space, 1.3, 4))
    assert abs(rep.flux_over_2pi - 2 * q_m) < 1e-6
    assert rep.passed is dirac_condition(1.0, q_m)


def test_flux_through_sphere_missing_monopole():
    space = point_orbit(u1(), [-1.0])
    cyc = base_sphere_cycle(space, 0.5, 3, center=(2.0, 0.0, 0.0))
    rep = flux_quantization_check(sternberg_two_form(space, monopole_chart(0.5)), cyc)
    assert abs(rep.flux_over_2pi) < 1e-8 and rep.nearest_integer == 0


@pytest.mark.parametrize("mu, expected", [(1.0, 2), (0.5, 1), (0.75, None)])
def test_orbit_flux(mu, expected):
    space = coadjoint_sphere_chart(mu)
    rep = flux_quantization_check(sternberg_two_form(space, constant_potential(so3(), WONG_A)),
                                  orbit_cycle(space, mu, q0=[0.1, 0.2, 0.3]))
    assert abs(rep.flux_over_2pi - 2 * mu) < 1e-6
    assert rep.passed is (expected is not None)


def test_sternberg_form_is_closed(rng):
    space = coadjoint_sphere_chart(1.0)
    chart = constant_potential(so3(), WONG_A)
    dd = exterior_derivative(sternberg_two_form(space, chart))
    x = np.concatenate([rng.normal(size=3), [0.3, 0.2]])
    assert float(jnp.max(jnp.abs(dd.components(jnp.asarray(x))))) < 1e-13


def test_open_cycle_rejected():
    space = point_orbit(u1(), [-1.0])
    with pytest.raises(GeometryError):
        flux_quantization_check(sternberg_two_form(space, monopole_chart(0.5)),
                                rectangle((0, 1), (0, 1), 2, 2, lambda u: jnp.array([u[0], u[1], 1.0])))
    assert icosphere(1).closed


def _monopole_caps(q_m, theta0=1.0):
    def on_sphere(theta, phi):
        return jnp.array([jnp.sin(theta) * jnp.cos(phi), jnp.sin(theta) * jnp.sin(phi), jnp.cos(theta)])

    loop = lambda t: on_sphere(theta0, 2 * jnp.pi * t)  # noqa: E731
    north = LoopWithCap(loop, disk(16, 64, lambda u: on_sphere(theta0 * u[0], u[1])))
    south = LoopWithCap(loop, disk(16, 64, lambda u: on_sphere(jnp.pi - (jnp.pi - theta0) * u[0], u[1])))
    return north, south


@pytest.mark.parametrize("q_m", [0.5, 0.3])
def test_loop_action_cap_ambiguity(q_m):
    space = point_orbit(u1(), [-1.0])
    chart = monopole_chart(q_m)
    north, south = _monopole_caps(q_m)
    diff = loop_action(space, chart, free, north) - loop_action(space, chart, free, south)
    # the two caps together make the sphere, so they differ by the total flux
    assert abs(diff - 4 * np.pi * q_m) < 1e-6
    assert (abs(diff / (2 * np.pi) - round(diff / (2 * np.pi))) < 1e-6) is dirac_condition(1.0, q_m)


def test_cap_must_bound_loop():
    loop = lambda t: jnp.array([jnp.cos(2 * jnp.pi * t), jnp.sin(2 * jnp.pi * t), 0.0])  # noqa: E731
    cap = disk(4, 16, lambda u: jnp.array([0.5 * u[0] * jnp.cos(u[1]), 0.5 * u[0] * jnp.sin(u[1]), 0.0]))
    with pytest.raises(GeometryError):
        LoopWithCap(loop, cap).check()


def test_euler_lagrange_along_wong_trajectory():
    space = coadjoint_sphere_chart(1.0)
    chart = constant_potential(so3(), WONG_A)
    m = Model(space, chart, free)
    tr = integrate_model(m, [0.0, 0.0, 0.0, 0.6, 0.8, 0.0, 0.0, 0.0], (0.0, 2.0), 1e-3)
    assert euler_lagrange_residual(space, chart, free, tr) < 1e-6


def test_euler_lagrange_detects_wrong_trajectory():
    space = coadjoint_sphere_chart(1.0)
    chart = constant_potential(so3(), WONG_A)
    m = Model(space, zero_potential(so3(), 3), free)
    tr = integrate_model(m, [0.0, 0.0, 0.0, 0.6, 0.8, 0.0, 0.0, 0.0], (0.0, 1.0), 1e-3)
    assert euler_lagrange_residual(space, chart, free, tr) > 1e-3


def test_textbook_lagrangian_needs_darboux_chart():
    curved = InternalSpace(so3(), 2, omega=lambda z: jnp.array([[0.0, 1.0 + z[0] ** 2], [-1.0 - z[0] ** 2, 0.0]]),
                           moment=lambda z: jnp.array([z[0], z[1], 0.0]))
    with pytest.raises(DomainError):
        textbook_lagrangian(curved, constant_potential(so3(), WONG_A), free)


def test_textbook_lagrangian_abelian_is_lorentz_term():
    space = point_orbit(u1(), [-2.0])
    chart = monopole_chart(0.5)
    lag = textbook_lagrangian(space, chart, free)
    q, v = jnp.array([0.3, 0.4, 1.0]), jnp.array([1.0, -0.5, 0.2])
    expected = 0.5 * v @ v + 2.0 * v @ chart(q)[:, 0]
    assert abs(float(lag(q, v, jnp.zeros(0), jnp.zeros(0))) - float(expected)) < 1e-15
