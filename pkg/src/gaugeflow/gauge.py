"""Chart-local gauge potentials, their curvature, and gauge transformations.

A potential on an n-dimensional chart is a function ``q -> A`` with
``A[i]`` the algebra coordinates of A_i(q). Curvature is returned as an
array ``F[j, i]`` of algebra coordinates with

    F_ji = d_j A_i - d_i A_j + [A_j, A_i],

the combination that transforms as F -> a F a^-1 under
A -> a A a^-1 + a da^-1.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import jax
import jax.numpy as jnp
import numpy as np

from gaugeflow._util import is_concrete
from gaugeflow.errors import DomainError, NumericError
from gaugeflow.lie import LieAlgebra, check_orthogonal, u1

# Minimum angle to the Dirac string of a monopole patch.
MONOPOLE_AXIS_MARGIN = 1e-3


@dataclass(frozen=True, eq=False)
class GaugeChart:
    algebra: LieAlgebra
    base_dim: int
    potential: Callable
    domain: Callable = None
    name: str = ""

    def __call__(self, q):
        return self.potential(jnp.asarray(q, dtype=float))

    def check_domain(self, q, time=None):
        if self.domain is None or not is_concrete(q):
            return
        msg = self.domain(np.asarray(q, dtype=float))
        if msg:
            raise DomainError(f"{self.name}: {msg}", time=time)

    def derivative(self, q):
        """dA[j, i] = d_j A_i as algebra coordinates."""
        d = jax.jacfwd(self.potential)(jnp.asarray(q, dtype=float))  # [i, a, j]
        return jnp.transpose(d, (2, 0, 1))


@dataclass(frozen=True, eq=False)
class GaugeMap:
    """A smooth map a: chart -> G, given as orthogonal matrices."""

    algebra: LieAlgebra
    matrix: Callable
    name: str = ""

    def __call__(self, q):
        return self.matrix(jnp.asarray(q, dtype=float))

    def inverse(self):
        return GaugeMap(self.algebra, lambda q: self.matrix(q).T, f"inverse({self.name})")


def curvature(chart: GaugeChart, q):
    """F[j, i] = d_j A_i - d_i A_j + [A_j, A_i]."""
    q = jnp.asarray(q, dtype=float)
    chart.check_domain(q)
    a = chart.potential(q)
    d = chart.derivative(q)
    alg = chart.algebra
    br = alg.bracket(a[:, None, :], a[None, :, :])
    return d - jnp.transpose(d, (1, 0, 2)) + br


def magnetic_field(chart: GaugeChart, q, component=0):
    """(F_23, F_31, F_12) of one algebra component on a three-dimensional chart."""
    if chart.base_dim != 3:
        raise ValueError("magnetic field vector needs a three-dimensional base")
    f = curvature(chart, q)[..., component]
    return jnp.array([f[1, 2], f[2, 0], f[0, 1]])


def gauge_transform(chart: GaugeChart, a: GaugeMap, tol=1e-8):
    """New chart with A'_i = a A_i a^-1 + a d_i(a^-1)."""
    alg = chart.algebra
    if a.algebra is not alg and not np.array_equal(a.algebra.generators, alg.generators):
        raise ValueError("gauge map and chart use different algebras")

    def potential(q):
        g = a.matrix(q)
        check_orthogonal(g)
        dginv = jax.jacfwd(lambda x: a.matrix(x).T)(q)  # [k, l, i]
        mats = alg.matrix(chart.potential(q))
        new = jnp.einsum("kl,ilm,nm->ikn", g, mats, g) + jnp.einsum("kl,lmi->ikm", g, dginv)
        if is_concrete(new):
            try:
                return alg.coords(new, tol=tol)
            except NumericError as exc:
                raise NumericError(f"gauge map leaves the group: {exc}") from None
        return alg.coords(new, tol=None)

    return GaugeChart(alg, chart.base_dim, potential, chart.domain, f"{chart.name}^{a.name}")


def zero_potential(algebra: LieAlgebra, base_dim):
    return GaugeChart(algebra, base_dim, lambda q: jnp.zeros((base_dim, algebra.dim)), name="zero")


def constant_potential(algebra: LieAlgebra, values):
    values = jnp.asarray(values, dtype=float)
    if values.ndim != 2 or values.shape[1] != algebra.dim:
        raise ValueError(f"constant potential needs shape (n, {algebra.dim})")
    return GaugeChart(algebra, values.shape[0], lambda q: values + 0.0 * q[0], name="constant")


def uniform_field_chart(b, algebra=None):
    """Symmetric-gauge potential A = 1/2 B x r of a uniform magnetic field on R^3."""
    algebra = algebra or u1()
    if algebra.dim != 1:
        raise ValueError("uniform field potential needs a one-dimensional algebra")
    b = jnp.asarray(b, dtype=float)
    if b.shape != (3,):
        raise ValueError("uniform field B must be a 3-vector")
    return GaugeChart(algebra, 3, lambda q: 0.5 * jnp.cross(b, q)[:, None], name="uniform")


def monopole_chart(q_m, patch="north", algebra=None):
    """Dirac monopole of strength q_m, B = q_m r / |r|^3, on one Wu-Yang patch.

    north: A = q_m (1 - cos theta) dphi, singular on the negative z axis.
    south: A = -q_m (1 + cos theta) dphi, singular on the positive z axis.
    The patches differ by the gauge map exp(2 q_m phi e).
    """
    algebra = algebra or u1()
    if algebra.dim != 1:
        raise ValueError("monopole potential needs a one-dimensional algebra")
    q_m = float(q_m)
    if patch not in ("north", "south"):
        raise ValueError(f"unknown monopole patch {patch!r}")
    sign = 1.0 if patch == "north" else -1.0

    def potential(q):
        r = jnp.linalg.norm(q)
        rot = jnp.array([-q[1], q[0], 0.0])
        return (sign * q_m * rot / (r * (r + sign * q[2])))[:, None]

    def domain(q):
        r = np.linalg.norm(q)
        if not np.isfinite(r) or r == 0.0:
            return "monopole potential is undefined at the origin"
        angle = np.arccos(np.clip(-sign * q[2] / r, -1.0, 1.0))
        if angle < MONOPOLE_AXIS_MARGIN:
            return f"point {q.tolist()} is within {MONOPOLE_AXIS_MARGIN} rad of the {patch} patch string"
        return None

    return GaugeChart(algebra, 3, potential, domain, f"monopole-{patch}(q_m={q_m:g})")


def exp_gauge_map(algebra: LieAlgebra, chi, name="exp"):
    """a(q) = exp(chi(q)) for an algebra-valued function chi."""
    return GaugeMap(algebra, lambda q: algebra.exp(chi(q)), name)


def constant_gauge_map(algebra: LieAlgebra, g, name="constant"):
    g = jnp.asarray(g, dtype=float)
    check_orthogonal(g)
    return GaugeMap(algebra, lambda q: g + 0.0 * q[0], name)


def monopole_transition(q_m, algebra=None):
    """a = exp(2 q_m phi e), taking the north patch to the south patch."""
    algebra = algebra or u1()
    return exp_gauge_map(algebra, lambda q: jnp.array([2.0 * q_m * jnp.arctan2(q[1], q[0])]), "transition")
