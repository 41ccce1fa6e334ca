"""Hamiltonian G-spaces in a single chart, with coadjoint-orbit builtins.

The symplectic matrix ``omega(z)[a, b]`` is Omega_ab, so that
Omega(u, w) = u @ omega(z) @ w. Moment maps return dual coordinates paired
with algebra coordinates by ``LieAlgebra.pair``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import jax
import jax.numpy as jnp
import numpy as np

from gaugeflow._util import is_concrete
from gaugeflow.errors import DomainError, NumericError
from gaugeflow.lie import LieAlgebra, so3

# Distance from the poles y = +-mu at which the sphere chart is refused.
SPHERE_POLE_MARGIN = 1e-6


@dataclass(frozen=True, eq=False)
class InternalSpace:
    """Chart on a hamiltonian G-space F.

    ``action_field(xi, z)`` may be omitted; it is then recovered from the
    infinitesimal coadjoint action through the moment map,
    dPhi(z) Y_xi = ad*_xi Phi(z), by least squares. That construction is
    valid whenever Phi is an immersion (coadjoint orbits with Phi the inclusion).
    """

    algebra: LieAlgebra
    dim: int
    omega: Callable
    moment: Callable
    action_field_fn: Callable = None
    domain: Callable = None
    name: str = ""
    constant_omega: bool = False
    transport: Callable = None  # (g, z) -> chart point of g . z

    def check_domain(self, z, time=None):
        if self.domain is None or not is_concrete(z):
            return
        msg = self.domain(np.asarray(z, dtype=float))
        if msg:
            raise DomainError(f"{self.name}: {msg}", time=time)

    def action_field(self, xi, z):
        if self.action_field_fn is not None:
            return self.action_field_fn(jnp.asarray(xi, dtype=float), z)
        if self.dim == 0:
            return jnp.zeros(0)
        jac = jax.jacfwd(self.moment)(z)
        target = self.algebra.ad_star(xi, self.moment(z))
        return jnp.linalg.pinv(jac) @ target

    def omega_inv(self, z):
        """Omega^{ab}, the matrix inverse of Omega_ab."""
        w = self.omega(z)
        if self.dim == 0:
            return w
        if is_concrete(w):
            cond = np.linalg.cond(np.asarray(w))
            if not np.isfinite(cond) or cond > 1e12:
                raise NumericError(f"{self.name}: symplectic matrix is singular (condition {cond:.3e})")
        return jnp.linalg.inv(w)

    def moment_gradient(self, z):
        """dPhi as an array [a, alpha] = d Phi_a / d z^alpha."""
        if self.dim == 0:
            return jnp.zeros((self.algebra.dim, 0))
        return jax.jacfwd(self.moment)(z)

    def casimir(self, z):
        """|Phi(z)| in the pairing metric."""
        phi = self.moment(z)
        return jnp.sqrt(self.algebra.pair(phi, phi))


def point_orbit(algebra: LieAlgebra, value, name="point"):
    """F = {pt} with constant moment map ``value`` (must be Ad*-fixed)."""
    value = jnp.asarray(value, dtype=float)
    if value.shape != (algebra.dim,):
        raise ValueError(f"moment value must have {algebra.dim} components")
    residual = max(
        (float(jnp.max(jnp.abs(algebra.ad_star(algebra.basis(a), value)))) for a in range(algebra.dim)),
        default=0.0,
    )
    if residual > 1e-12:
        raise ValueError("a point orbit needs a moment value fixed by the coadjoint action")
    return InternalSpace(
        algebra,
        0,
        omega=lambda z: jnp.zeros((0, 0)),
        moment=lambda z: value,
        action_field_fn=lambda xi, z: jnp.zeros(0),
        name=name,
        transport=lambda g, z: np.zeros(0),
        constant_omega=True,
    )


def coadjoint_sphere_chart(mu, algebra=None):
    """Coadjoint orbit of radius mu in so(3)* with cylinder chart z = (x, y).

    Phi(x, y) = (r cos x, r sin x, y) with r = sqrt(mu^2 - y^2) and
    Omega = dx ^ dy; x is an angle, so only the poles |y| -> mu are excluded.
    """
    if not mu > 0:
        raise ValueError("orbit radius mu must be positive")
    algebra = algebra or so3()
    if algebra.dim != 3:
        raise ValueError("the sphere chart needs a three-dimensional algebra")
    mu = float(mu)
    omega_const = jnp.array([[0.0, 1.0], [-1.0, 0.0]])

    def moment(z):
        r = jnp.sqrt(mu * mu - z[1] * z[1])
        return jnp.array([r * jnp.cos(z[0]), r * jnp.sin(z[0]), z[1]])

    def domain(z):
        if z.shape != (2,) or not np.all(np.isfinite(z)):
            return f"chart point {z} is not a finite 2-vector"
        if abs(z[1]) > mu - SPHERE_POLE_MARGIN:
            return f"|y| = {abs(z[1]):.17g} is within {SPHERE_POLE_MARGIN} of the chart poles"
        return None

    return InternalSpace(
        algebra,
        2,
        omega=lambda z: omega_const,
        moment=moment,
        domain=domain,
        name=f"sphere(mu={mu:g})",
        constant_omega=True,
        transport=lambda g, z: sphere_chart_point(algebra.coadjoint(g, moment(jnp.asarray(z))), mu),
    )


def sphere_chart_point(phi, mu):
    """Chart coordinates of a point of the radius-mu orbit (inverse of Phi)."""
    phi = np.asarray(phi, dtype=float)
    if abs(np.linalg.norm(phi) - mu) > 1e-9 * max(1.0, mu):
        raise DomainError(f"point {phi} is not on the orbit of radius {mu}")
    return np.array([np.arctan2(phi[1], phi[0]), phi[2]])


def poisson_F(space: InternalSpace, f, g, z):
    """{f, g}_F = Omega^{ab} d_a f d_b g at z."""
    z = jnp.asarray(z, dtype=float)
    space.check_domain(z)
    if space.dim == 0:
        return jnp.asarray(0.0)
    return jax.grad(f)(z) @ space.omega_inv(z) @ jax.grad(g)(z)


@dataclass
class MomentResiduals:
    contraction: float  # max |Y_xi _| Omega - <xi, dPhi>|
    equivariance: float  # max |Omega(Y_xi1, Y_xi2) - <[xi1, xi2], Phi>|


def moment_residuals(space: InternalSpace, z, xi1, xi2):
    """Both moment-map identity residuals at one point, for one pair of algebra elements."""
    alg = space.algebra
    if space.dim == 0:
        # Y = 0, dPhi = 0; the bracket pairing must vanish on a fixed point
        return 0.0 * jnp.abs(alg.pair(xi1, space.moment(z))), jnp.abs(
            alg.pair(alg.bracket(xi1, xi2), space.moment(z))
        )
    w = space.omega(z)
    y1, y2 = space.action_field(xi1, z), space.action_field(xi2, z)
    lhs1 = y1 @ w
    rhs1 = jnp.asarray(xi1) @ alg.pairing_metric @ space.moment_gradient(z)
    lhs2 = y1 @ w @ y2
    rhs2 = alg.pair(alg.bracket(xi1, xi2), space.moment(z))
    return jnp.max(jnp.abs(lhs1 - rhs1)), jnp.abs(lhs2 - rhs2)


def check_moment_identities(space: InternalSpace, samples, xi_samples):
    """Maximum residuals of Y_xi _| Omega = <xi, dPhi> and Omega(Y1, Y2) = <[xi1, xi2], Phi>."""
    samples = np.asarray(samples, dtype=float).reshape(len(samples), space.dim)
    xi_samples = np.asarray(xi_samples, dtype=float).reshape(-1, 2, space.algebra.dim)
    for z in samples:
        space.check_domain(z)
    if len(samples) == 0 or len(xi_samples) == 0:
        return MomentResiduals(0.0, 0.0)
    fn = jax.jit(jax.vmap(jax.vmap(lambda z, x: moment_residuals(space, z, x[0], x[1]), (None, 0)), (0, None)))
    r1, r2 = fn(jnp.asarray(samples), jnp.asarray(xi_samples))
    return MomentResiduals(float(jnp.max(r1)), float(jnp.max(r2)))
