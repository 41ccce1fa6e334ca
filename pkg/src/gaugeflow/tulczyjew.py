"""Tulczyjew triples in coordinates, Liouville forms, and the Legendre bridge.

Points of T*M are stored as (base, covector). On the Sternberg side the base is
(q, p, z) and a tangent point is (q, p, z, qdot, pdot, zdot); on the
Lagrangian side the base is (q, qdot, z).
"""

from __future__ import annotations

from dataclasses import dataclass

import jax
import jax.numpy as jnp
import numpy as np

from gaugeflow.errors import NumericError
from gaugeflow.forms import DifferentialForm
from gaugeflow.gauge import GaugeChart
from gaugeflow.internal import InternalSpace

NEWTON_TOL = 1e-12
NEWTON_MAX_ITER = 50
HESSIAN_COND_MAX = 1e12


@dataclass(frozen=True)
class CotangentPoint:
    base: np.ndarray
    covector: np.ndarray

    def as_tuple(self):
        return tuple(np.concatenate([self.base, self.covector]).tolist())


@dataclass(frozen=True)
class TangentLiftPoint:
    q: np.ndarray
    p: np.ndarray
    z: np.ndarray
    qdot: np.ndarray
    pdot: np.ndarray
    zdot: np.ndarray

    @classmethod
    def from_vector(cls, y, n, m2):
        y = np.asarray(y, dtype=float)
        N = 2 * n + m2
        x, xd = y[:N], y[N:]
        return cls(x[:n], x[n:2 * n], x[2 * n:], xd[:n], xd[n:2 * n], xd[2 * n:])

    def vector(self):
        return np.concatenate([self.q, self.p, self.z, self.qdot, self.pdot, self.zdot])


def kappa(pt: CotangentPoint, n=None):
    """(q, a, z; u, w, c) -> (q, -w, z; u, a, c).

    The base's second block of n entries and the covector's second block
    swap with a sign; anything after them (internal coordinates) is carried.
    Without internal coordinates this is (q, a, u, w) -> (q, -w, u, a).
    """
    base = np.asarray(pt.base, dtype=float)
    cov = np.asarray(pt.covector, dtype=float)
    if base.shape != cov.shape:
        raise ValueError("base and covector must have equal length")
    if n is None:
        if base.size % 2:
            raise ValueError("give n when internal coordinates are present")
        n = base.size // 2
    new_base, new_cov = base.copy(), cov.copy()
    new_base[n:2 * n] = -cov[n:2 * n]
    new_cov[n:2 * n] = base[n:2 * n]
    return CotangentPoint(new_base, new_cov)


def kappa_flat(x, n, m2=0):
    """kappa on flat coordinates (base, covector); traceable."""
    N = 2 * n + m2
    base, cov = x[:N], x[N:]
    new_base = jnp.concatenate([base[:n], -cov[n:2 * n], base[2 * n:]])
    new_cov = jnp.concatenate([cov[:n], base[n:2 * n], cov[2 * n:]])
    return jnp.concatenate([new_base, new_cov])


def beta_classical(q, p, qdot, pdot):
    q, p, qdot, pdot = (np.atleast_1d(np.asarray(a, dtype=float)) for a in (q, p, qdot, pdot))
    return CotangentPoint(np.concatenate([q, p]), np.concatenate([pdot, -qdot]))


def alpha_classical(q, p, qdot, pdot):
    q, p, qdot, pdot = (np.atleast_1d(np.asarray(a, dtype=float)) for a in (q, p, qdot, pdot))
    return CotangentPoint(np.concatenate([q, qdot]), np.concatenate([pdot, p]))


def beta_components(space: InternalSpace, chart: GaugeChart, q, z, qdot, pdot, zdot):
    """Covector parts (a_q, a_p, a_z) of the magnetized beta map; traceable."""
    alg = space.algebra
    G = alg.pairing_metric
    phi = space.moment(z)
    dphi = space.moment_gradient(z)  # [a, alpha]
    A = chart.potential(q)  # [i, a]
    dA = chart.derivative(q)  # [j, i, a] = d_j A_i
    curl = dA - jnp.transpose(dA, (1, 0, 2))  # [j, i] = d_j A_i - d_i A_j
    a_q = pdot - jnp.einsum("j,jia,ab,b->i", qdot, curl, G, phi) - A @ G @ (dphi @ zdot)
    a_z = zdot @ space.omega(z) + (qdot @ A) @ G @ dphi
    return a_q, -qdot, a_z


def beta_magnetized(space: InternalSpace, chart: GaugeChart, pt: TangentLiftPoint):
    space.check_domain(pt.z)
    chart.check_domain(pt.q)
    a_q, a_p, a_z = beta_components(
        space, chart, *(jnp.asarray(a, dtype=float) for a in (pt.q, pt.z, pt.qdot, pt.pdot, pt.zdot))
    )
    base = np.concatenate([pt.q, pt.p, pt.z])
    return CotangentPoint(base, np.concatenate([np.asarray(a_q), np.asarray(a_p), np.asarray(a_z)]))


def alpha_magnetized(space: InternalSpace, chart: GaugeChart, pt: TangentLiftPoint):
    return kappa(beta_magnetized(space, chart, pt), n=len(pt.q))


def liouville_forms(space: InternalSpace, chart: GaugeChart):
    """(theta_H, theta_L) on the chart (q, p, z, qdot, pdot, zdot)."""
    n, m2 = chart.base_dim, space.dim
    N = 2 * n + m2

    def split(y):
        return y[:n], y[n:2 * n], y[2 * n:N], y[N:N + n], y[N + n:N + 2 * n], y[N + 2 * n:]

    def theta_h(y):
        q, p, z, qd, pd, zd = split(y)
        a_q, a_p, a_z = beta_components(space, chart, q, z, qd, pd, zd)
        return jnp.concatenate([a_q, a_p, a_z, jnp.zeros(N)])

    def theta_l(y):
        q, p, z, qd, pd, zd = split(y)
        a_q, _, a_z = beta_components(space, chart, q, z, qd, pd, zd)
        return jnp.concatenate([a_q, jnp.zeros(n), a_z, p, jnp.zeros(n + m2)])

    return (
        DifferentialForm(1, 2 * N, theta_h, "theta_H"),
        DifferentialForm(1, 2 * N, theta_l, "theta_L"),
    )


def cotangent_map(space: InternalSpace, chart: GaugeChart, q, z, p, y):
    """(q, z, p, y) -> (q, p_j - y . Y_{A_j}(z))."""
    q, z, p, y = (jnp.asarray(a, dtype=float) for a in (q, z, p, y))
    chart.check_domain(q)
    space.check_domain(z)
    A = chart.potential(q)
    if space.dim == 0:
        return np.asarray(q), np.asarray(p)
    shifts = jnp.stack([y @ space.action_field(A[j], z) for j in range(chart.base_dim)])
    return np.asarray(q), np.asarray(p - shifts)


# --- Legendre transform ----------------------------------------------------


def _newton(grad_fn, hess_fn, target, guess, what):
    x = np.asarray(guess, dtype=float).copy()
    target = np.asarray(target, dtype=float)
    for _ in range(NEWTON_MAX_ITER):
        r = target - np.asarray(grad_fn(x))
        if np.max(np.abs(r), initial=0.0) <= NEWTON_TOL * max(1.0, np.max(np.abs(target), initial=0.0)):
            return x
        hess = np.asarray(hess_fn(x))
        cond = np.linalg.cond(hess)
        if not np.isfinite(cond) or cond > HESSIAN_COND_MAX:
            raise NumericError(f"{what}: Hessian is singular (condition {cond:.3e})")
        x = x + np.linalg.solve(hess, r)
    raise NumericError(f"{what}: Newton iteration did not converge in {NEWTON_MAX_ITER} steps")


def legendre(L, q, p, z, guess=None):
    """H(q, p, z) = p . v - L(q, v, z) at the v solving dL/dv = p.

    Returns (H, v). The Newton guess defaults to v = p.
    """
    q, p, z = (jnp.asarray(a, dtype=float) for a in (q, p, z))
    grad = jax.jit(jax.grad(L, argnums=1))
    hess = jax.jit(jax.hessian(L, argnums=1))
    v = _newton(lambda v: grad(q, v, z), lambda v: hess(q, v, z), p, p if guess is None else guess, "legendre")
    return float(p @ v - L(q, jnp.asarray(v), z)), v


def inverse_legendre(H, q, v, z, guess=None):
    """L(q, v, z) = p . v - H(q, p, z) at the p solving dH/dp = v. Returns (L, p)."""
    q, v, z = (jnp.asarray(a, dtype=float) for a in (q, v, z))
    grad = jax.jit(jax.grad(H, argnums=1))
    hess = jax.jit(jax.hessian(H, argnums=1))
    p = _newton(lambda p: grad(q, p, z), lambda p: hess(q, p, z), v, v if guess is None else guess, "inverse_legendre")
    return float(p @ v - H(q, jnp.asarray(p), z)), p


def legendre_hamiltonian(L, iterations=NEWTON_MAX_ITER):
    """Traceable H(q, p, z) built from L by the Legendre transform.

    Newton runs under ``stop_gradient``; one more Newton step restores the
    first derivatives, which is all Hamilton's equations need.
    """
    grad_v = jax.grad(L, argnums=1)
    hess_v = jax.hessian(L, argnums=1)

    def solve(q, p, z):
        def body(state):
            v, _, k = state
            step = jnp.linalg.solve(hess_v(q, v, z), p - grad_v(q, v, z))
            return v + step, jnp.max(jnp.abs(step)), k + 1

        def cond(state):
            _, err, k = state
            return (err > NEWTON_TOL * jnp.maximum(1.0, jnp.max(jnp.abs(p)))) & (k < iterations)

        v, _, _ = jax.lax.while_loop(cond, body, (p, jnp.asarray(jnp.inf), 0))
        return v

    def H(q, p, z):
        s = jax.lax.stop_gradient(solve(*(jax.lax.stop_gradient(a) for a in (q, p, z))))
        v = s + jnp.linalg.solve(hess_v(q, s, z), p - grad_v(q, s, z))
        return p @ v - L(q, v, z)

    return H
