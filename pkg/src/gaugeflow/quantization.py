"""Textbook Lagrangian, loop action, and numeric charge-quantization checks."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import jax
import jax.numpy as jnp
import numpy as np

from gaugeflow.errors import DomainError, GeometryError
from gaugeflow.forms import DifferentialForm, TriangulatedSurface, exterior_derivative, icosphere, surface_integral
from gaugeflow.gauge import GaugeChart
from gaugeflow.internal import InternalSpace

FLUX_RULE = "dunavant5"
DIRAC_TOL = 1e-9


def sternberg_two_form(space: InternalSpace, chart: GaugeChart):
    """Omega_Theta = Omega - d<A, Phi> on the (q, z) chart."""
    n, m2 = chart.base_dim, space.dim
    G = space.algebra.pairing_metric

    def potential_pairing(x):
        return jnp.concatenate([chart.potential(x[:n]) @ G @ space.moment(x[n:]), jnp.zeros(m2)])

    exact = exterior_derivative(DifferentialForm(1, n + m2, potential_pairing))

    def comp(x):
        c = -exact.components(x)
        if m2:
            c = c.at[n:, n:].add(space.omega(x[n:]))
        return c

    return DifferentialForm(2, n + m2, comp, "Omega_Theta")


def _check_darboux(space: InternalSpace, z=None):
    m2 = space.dim
    if m2 == 0:
        return
    if not space.constant_omega:
        raise DomainError(f"{space.name}: internal chart is not constant-coefficient Darboux")
    z = jnp.zeros(m2) if z is None else z
    m = m2 // 2
    expected = np.block([[np.zeros((m, m)), np.eye(m)], [-np.eye(m), np.zeros((m, m))]])
    if np.max(np.abs(np.asarray(space.omega(z)) - expected)) > 0:
        raise DomainError(f"{space.name}: internal chart is not in Darboux form dx ^ dy")


def textbook_lagrangian(space: InternalSpace, chart: GaugeChart, L):
    """Lagrangian L - <v . A, Phi> + x . ydot with z = (x, y) Darboux.

    Returns a function of (q, v, z, zdot).
    """
    _check_darboux(space)
    m = space.dim // 2
    G = space.algebra.pairing_metric

    def lag(q, v, z, zdot):
        coupling = (v @ chart.potential(q)) @ G @ space.moment(z)
        return L(q, v, z) - coupling + z[:m] @ zdot[m:]

    return lag


def _time_derivative(values, dt):
    """Fourth-order central differences on interior samples (drops two at each end)."""
    v = np.asarray(values)
    return (v[:-4] - 8 * v[1:-3] + 8 * v[3:-1] - v[4:]) / (12 * dt)


def euler_lagrange_residual(space: InternalSpace, chart: GaugeChart, L, trajectory):
    """Max residual of the textbook Lagrangian's Euler-Lagrange equations along a trajectory.

    Velocities of z and the time derivatives of the momenta come from finite
    differences of the samples, so the check is independent of the engine
    that produced them. Needs uniformly spaced times.
    """
    times = trajectory.times
    dt = times[1] - times[0]
    if np.max(np.abs(np.diff(times) - dt)) > 1e-9 * max(1.0, abs(times[-1])):
        raise ValueError("euler_lagrange_residual needs uniformly spaced samples")
    n = chart.base_dim
    lag = textbook_lagrangian(space, chart, L)
    states = np.asarray(trajectory.states)
    q, v, z = states[:, :n], states[:, n:2 * n], states[:, 2 * n:]
    zdot = np.zeros_like(z)
    if z.shape[1]:
        zdot[2:-2] = _time_derivative(z, dt)
    grads = jax.jit(jax.vmap(jax.grad(lag, argnums=(0, 1, 2, 3))))
    dq, dv, dz, dzd = (np.asarray(g) for g in grads(*(jnp.asarray(a) for a in (q, v, z, zdot))))
    res_q = _time_derivative(dv, dt) - dq[2:-2]
    res = np.max(np.abs(res_q[2:-2]))
    if z.shape[1]:
        # the momenta conjugate to z involve zdot itself; skip samples where it is not defined
        res_z = _time_derivative(dzd, dt) - dz[2:-2]
        res = max(res, float(np.max(np.abs(res_z[2:-2]))))
    return float(res)


@dataclass(frozen=True)
class LoopWithCap:
    """Closed loop t -> (q, z), t in [0, 1], with a disk-parameterized cap.

    ``cap`` is a surface over polar parameters (rho, phi) as built by
    ``forms.disk``; its rho = 1 edge must trace the loop with
    t = phi / (2 pi).
    """

    loop: Callable
    cap: TriangulatedSurface

    def check(self, tol=1e-10):
        verts = np.asarray(self.cap.vertices)
        edge = verts[np.abs(verts[:, 0] - 1.0) < 1e-14]
        if edge.size == 0:
            raise GeometryError("cap has no boundary vertices at rho = 1")
        emb = jax.jit(jax.vmap(self.cap.embedding))(jnp.asarray(edge))
        ts = edge[:, 1] / (2 * np.pi)
        on_loop = jax.jit(jax.vmap(self.loop))(jnp.asarray(ts))
        err = float(np.max(np.abs(np.asarray(emb) - np.asarray(on_loop))))
        if err > tol:
            raise GeometryError(f"cap boundary misses the loop by {err:.3e}")


def loop_action(space: InternalSpace, chart: GaugeChart, L, loopcap: LoopWithCap, n_time=400, rule=FLUX_RULE):
    """Integral of L over the loop plus the Sternberg-form flux through its cap."""
    loopcap.check()
    n = chart.base_dim
    h = 1e-5
    ts = np.arange(n_time) / n_time
    loop = loopcap.loop

    def lag_at(t):
        x = loop(t)
        xdot = (loop(t + h) - loop(t - h)) / (2 * h)
        return L(x[:n], xdot[:n], x[n:])

    # periodic trapezoid rule
    kinetic = float(np.sum(np.asarray(jax.jit(jax.vmap(lag_at))(jnp.asarray(ts))))) / n_time
    # degeneracy is judged in parameter space, so a cap collapsed to a point is fine
    surface = surface_integral(sternberg_two_form(space, chart), loopcap.cap, rule=rule)
    return kinetic + surface


@dataclass
class FluxReport:
    flux_over_2pi: float
    nearest_integer: int
    passed: bool

    def to_dict(self):
        return {"flux_over_2pi": self.flux_over_2pi, "nearest_integer": self.nearest_integer, "pass": self.passed}


def flux_quantization_check(two_form: DifferentialForm, cycle: TriangulatedSurface, tol=1e-3, rule=FLUX_RULE):
    if not cycle.closed:
        raise GeometryError("quantization cycle must be a closed surface")
    value = surface_integral(two_form, cycle, rule=rule) / (2 * math.pi)
    nearest = int(round(value))
    return FluxReport(value, nearest, abs(value - nearest) <= tol)


def dirac_condition(q_e, q_m):
    """True iff 2 q_e q_m is an integer (q_e q_m in Z / 2)."""
    x = 2.0 * q_e * q_m
    return abs(x - round(x)) <= DIRAC_TOL


def base_sphere_cycle(space: InternalSpace, radius=1.0, level=4, center=(0.0, 0.0, 0.0), z0=None):
    """Sphere |q - center| = radius in the base, at fixed internal point z0."""
    c = jnp.asarray(center, dtype=float)
    z0 = jnp.zeros(space.dim) if z0 is None else jnp.asarray(z0, dtype=float)

    def embedding(u):
        return jnp.concatenate([c + radius * u / jnp.linalg.norm(u), z0])

    return icosphere(level, embedding=embedding)


def orbit_cycle(space: InternalSpace, mu, q0=None, level=4):
    """The sphere-chart orbit of radius mu as a cycle in the (q, z) chart at base point q0.

    The unit sphere is mapped by u -> (atan2(u2, u1), mu u3); the chart's
    periodic angle makes the branch cut harmless for the integrand.
    """
    q0 = jnp.zeros(0) if q0 is None else jnp.asarray(q0, dtype=float)

    def embedding(u):
        u = u / jnp.linalg.norm(u)
        return jnp.concatenate([q0, jnp.array([jnp.arctan2(u[1], u[0]), mu * u[2]])])

    return icosphere(level, embedding=embedding)
