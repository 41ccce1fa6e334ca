"""Matrix presentations of compact Lie algebras and their groups.

Algebra elements are coordinate vectors in the generator basis, group elements
are orthogonal matrices, and dual elements share the coordinate representation
of the algebra, paired through ``pairing_metric``. Every method works on NumPy
arrays and on JAX tracers so the algebra can sit inside differentiated code.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import jax.numpy as jnp
import numpy as np
from jax import lax

from gaugeflow._util import is_concrete
from gaugeflow.errors import NumericError

# Scaling threshold for the degree-8 Taylor kernel: theta**9 / 9! < 1e-16.
_EXP_THETA = 0.0625
_EXP_DEGREE = 8


@dataclass(frozen=True, eq=False)
class LieAlgebra:
    """A real matrix Lie algebra inside so(N).

    ``structure_constants[a, b, c]`` holds c^c_ab, so that
    ``[T_a, T_b] = sum_c c^c_ab T_c``.
    """

    name: str
    generators: np.ndarray
    structure_constants: np.ndarray
    pairing_metric: np.ndarray

    @classmethod
    def from_generators(cls, name, generators, pairing_metric=None):
        gens = np.asarray(generators, dtype=float)
        if gens.ndim != 3 or gens.shape[1] != gens.shape[2]:
            raise ValueError("generators must have shape (dim, N, N)")
        if np.any(gens + np.transpose(gens, (0, 2, 1)) != 0.0):
            raise ValueError("generators must be antisymmetric matrices")
        dim = gens.shape[0]
        gram = np.einsum("aij,bij->ab", gens, gens)
        if np.linalg.matrix_rank(gram) < dim:
            raise ValueError("generators are linearly dependent")
        comm = np.einsum("aij,bjk->abik", gens, gens) - np.einsum("bij,ajk->abik", gens, gens)
        rhs = np.einsum("abij,cij->abc", comm, gens)
        consts = np.linalg.solve(gram, rhs.reshape(-1, dim).T).T.reshape(dim, dim, dim)
        residual = comm - np.einsum("abc,cij->abij", consts, gens)
        if np.max(np.abs(residual), initial=0.0) > 1e-12:
            raise ValueError("generators do not close under the commutator")
        consts[np.abs(consts) < 1e-15] = 0.0
        if pairing_metric is None:
            pairing_metric = -0.5 * np.einsum("aij,bji->ab", gens, gens)
        metric = np.asarray(pairing_metric, dtype=float)
        if metric.shape != (dim, dim) or not np.allclose(metric, metric.T, atol=0.0):
            raise ValueError("pairing metric must be a symmetric (dim, dim) matrix")
        if np.min(np.linalg.eigvalsh(metric)) <= 0.0:
            raise ValueError("pairing metric must be positive definite")
        return cls(name, gens, consts, metric)

    @property
    def dim(self):
        return self.generators.shape[0]

    @property
    def order(self):
        """Size N of the matrices."""
        return self.generators.shape[1]

    @property
    def is_abelian(self):
        return not np.any(self.structure_constants)

    @cached_property
    def _gram_inv(self):
        return np.linalg.inv(np.einsum("aij,bij->ab", self.generators, self.generators))

    @cached_property
    def _metric_inv(self):
        return np.linalg.inv(self.pairing_metric)

    def basis(self, a):
        e = np.zeros(self.dim)
        e[a] = 1.0
        return e

    def dual_basis(self, a):
        """Metric-dual basis element: ``pair(basis(b), dual_basis(a)) == delta_ab``."""
        return self._metric_inv[:, a].copy()

    def _check(self, *xs):
        out = []
        for x in xs:
            x = jnp.asarray(x, dtype=float)
            if x.ndim == 0 or x.shape[-1] != self.dim:
                raise ValueError(
                    f"{self.name} element has shape {x.shape}, expected (..., {self.dim})"
                )
            out.append(x)
        return out[0] if len(out) == 1 else out

    def matrix(self, x):
        """The matrix sum_a x^a T_a."""
        x = self._check(x)
        return jnp.einsum("...a,aij->...ij", x, self.generators)

    def coords(self, m, tol=1e-10):
        """Expand a matrix in the generator basis.

        Raises NumericError when the matrix is not in the algebra (residual above
        ``tol``); the check only runs on concrete input.
        """
        m = jnp.asarray(m)
        proj = jnp.einsum("...ij,bij->...b", m, self.generators)
        c = jnp.einsum("...b,ab->...a", proj, self._gram_inv)
        if tol is not None and is_concrete(m):
            residual = float(jnp.max(jnp.abs(m - self.matrix(c)), initial=0.0))
            if residual > tol:
                raise NumericError(
                    f"matrix is not in {self.name}: re-expansion residual {residual:.3e}"
                )
        return c

    def bracket(self, x, y):
        x, y = self._check(x, y)
        return jnp.einsum("...a,...b,abc->...c", x, y, self.structure_constants)

    def ad_matrix(self, x):
        """Matrix of ad_x acting on coordinate vectors: (ad_x)[c, b] = c^c_ab x^a."""
        x = self._check(x)
        return jnp.einsum("a,abc->cb", x, self.structure_constants)

    def pair(self, xi, mu):
        xi, mu = self._check(xi, mu)
        return jnp.einsum("...a,ab,...b->...", xi, self.pairing_metric, mu)

    def exp(self, x):
        """Group element exp(sum_a x^a T_a)."""
        m = self.matrix(jnp.asarray(x, dtype=float))
        if m.shape[-1] in (2, 3):
            return _rotation_exp(m)
        return expm(m)

    def adjoint_matrix(self, g):
        """Matrix of Ad_g in the generator basis (columns are Ad_g T_b)."""
        g = jnp.asarray(g)
        conj = jnp.einsum("ij,bjk,lk->bil", g, self.generators, g)
        return self.coords(conj).T

    def adjoint(self, g, x):
        """Ad_g x = g x g^-1, using g^-1 = g^T for orthogonal g."""
        x = self._check(x)
        g = jnp.asarray(g)
        check_orthogonal(g)
        return self.coords(g @ self.matrix(x) @ g.T)

    def coadjoint(self, g, mu):
        """Ad*_g mu, defined by pair(Ad_g x, Ad*_g mu) == pair(x, mu)."""
        mu = self._check(mu)
        g = jnp.asarray(g)
        check_orthogonal(g)
        ad_inv = self.adjoint_matrix(g.T)
        return self._metric_inv @ ad_inv.T @ self.pairing_metric @ mu

    def ad_star(self, xi, mu):
        """Infinitesimal coadjoint action: d/dt Ad*_{exp(t xi)} mu at t = 0."""
        mu = self._check(mu)
        return -self._metric_inv @ self.ad_matrix(xi).T @ self.pairing_metric @ mu

    def jacobi_residual(self):
        c = self.structure_constants
        jac = (
            np.einsum("abe,ecd->abcd", c, c)
            + np.einsum("bce,ead->abcd", c, c)
            + np.einsum("cae,ebd->abcd", c, c)
        )
        return float(np.max(np.abs(jac), initial=0.0))


def check_orthogonal(g, tol=1e-10):
    """Raise NumericError when a concrete matrix is not in SO(N)."""
    if not is_concrete(g):
        return
    g = np.asarray(g)
    err = np.max(np.abs(g.T @ g - np.eye(g.shape[0])))
    if err > tol or abs(np.linalg.det(g) - 1.0) > tol:
        raise NumericError(f"not a special orthogonal matrix (orthogonality error {err:.3e})")


def expm(m):
    """Matrix exponential by scaling and squaring with a degree-8 Taylor kernel.

    Traceable by JAX: the squaring count is data dependent, which forward-mode
    differentiation handles through ``lax.fori_loop``.
    """
    m = jnp.asarray(m, dtype=float)
    n = m.shape[-1]
    eye = jnp.eye(n)
    norm = jnp.max(jnp.sum(jnp.abs(m), axis=-2))
    squarings = jnp.ceil(jnp.log2(jnp.maximum(norm, 1e-300) / _EXP_THETA))
    squarings = jnp.clip(squarings, 0, 1000).astype(jnp.int32)
    scaled = m / jnp.exp2(squarings.astype(float))
    result = eye
    for k in range(_EXP_DEGREE, 0, -1):
        result = eye + scaled @ result / k
    return lax.fori_loop(0, squarings, lambda _, r: r @ r, result)


def _sinc(t2):
    """sin(t)/t as a function of t2 = t**2, smooth (with all derivatives) at 0."""
    small = t2 < 1e-2
    safe = jnp.where(small, 1.0, t2)
    t = jnp.sqrt(safe)
    series = 1.0 - t2 / 6 * (1.0 - t2 / 20 * (1.0 - t2 / 42 * (1.0 - t2 / 72 * (1.0 - t2 / 110))))
    return jnp.where(small, series, jnp.sin(t) / t)


def _rotation_exp(m):
    """Closed-form exponential of an antisymmetric 2x2 or 3x3 matrix (Rodrigues)."""
    if m.shape[-1] == 2:
        c, s = jnp.cos(m[1, 0]), jnp.sin(m[1, 0])
        return jnp.array([[c, -s], [s, c]])
    t2 = m[0, 1] ** 2 + m[0, 2] ** 2 + m[1, 2] ** 2
    half = _sinc(t2 / 4)
    # 1 - cos t = 2 sin(t/2)**2 avoids cancellation for small angles
    return jnp.eye(3) + _sinc(t2) * m + 0.5 * half * half * (m @ m)


def u1():
    """u(1) as so(2), generator [[0, -1], [1, 0]]."""
    return LieAlgebra.from_generators("u1", [[[0.0, -1.0], [1.0, 0.0]]])


def so3():
    """so(3) with (E_i)_jk = -eps_ijk, so that [E_1, E_2] = E_3."""
    gens = np.zeros((3, 3, 3))
    for i in range(3):
        for j in range(3):
            for k in range(3):
                gens[i, j, k] = -_levi_civita(i, j, k)
    return LieAlgebra.from_generators("so3", gens)


def so(n):
    """so(n) with basis E_ij - E_ji for i < j in lexicographic order."""
    gens = []
    for i in range(n):
        for j in range(i + 1, n):
            t = np.zeros((n, n))
            t[i, j], t[j, i] = 1.0, -1.0
            gens.append(t)
    return LieAlgebra.from_generators(f"so{n}", gens)


def so2k(k):
    if k < 1:
        raise ValueError("so(2k) needs k >= 1")
    return so(2 * k)


def _levi_civita(i, j, k):
    return (i - j) * (j - k) * (k - i) / 2


ALGEBRAS = {"u1": u1, "so3": so3}
