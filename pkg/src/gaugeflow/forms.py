"""Differential forms on coordinate charts, evaluated numerically.

A k-form on an n-dimensional chart is stored through its component function
``x -> a[i1, ..., ik]``, a fully antisymmetric array, with

    a(v1, ..., vk) = a[i1, ..., ik] v1^i1 ... vk^ik.

So dx^1 ^ dx^2 has components a[0, 1] = 1 and a[1, 0] = -1. Component
functions must be JAX-traceable unless a form is only evaluated, or
differentiated with ``method="fd"``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable

import jax
import jax.numpy as jnp
import numpy as np

from gaugeflow.errors import GeometryError


@dataclass(frozen=True)
class DifferentialForm:
    degree: int
    dim: int
    components: Callable
    name: str = ""

    def __call__(self, x, *vectors):
        return self.evaluate(x, *vectors)

    def evaluate(self, x, *vectors):
        if len(vectors) != self.degree:
            raise ValueError(f"{self.degree}-form needs {self.degree} vectors, got {len(vectors)}")
        c = self.components(jnp.asarray(x, dtype=float))
        for v in vectors:
            c = jnp.tensordot(jnp.asarray(v, dtype=float), c, axes=(0, 0))
        return c

    def __add__(self, other):
        _same_kind(self, other)
        return DifferentialForm(self.degree, self.dim, lambda x: self.components(x) + other.components(x))

    def __sub__(self, other):
        _same_kind(self, other)
        return DifferentialForm(self.degree, self.dim, lambda x: self.components(x) - other.components(x))

    def __neg__(self):
        return DifferentialForm(self.degree, self.dim, lambda x: -self.components(x))

    def scale(self, c):
        return DifferentialForm(self.degree, self.dim, lambda x: c * self.components(x))


def _same_kind(a, b):
    if a.degree != b.degree or a.dim != b.dim:
        raise ValueError(
            f"cannot combine a {a.degree}-form on R^{a.dim} with a {b.degree}-form on R^{b.dim}"
        )


def function_form(dim, f):
    """Wrap a scalar function as a 0-form."""
    return DifferentialForm(0, dim, lambda x: jnp.asarray(f(x), dtype=float))


def one_form(dim, coeffs):
    """1-form sum_i coeffs(x)[i] dx^i."""
    return DifferentialForm(1, dim, lambda x: jnp.asarray(coeffs(x), dtype=float))


def two_form(dim, matrix):
    """2-form with antisymmetric coefficient matrix, i.e. 1/2 M_ij dx^i ^ dx^j."""
    return DifferentialForm(2, dim, lambda x: jnp.asarray(matrix(x), dtype=float))


def constant_form(degree, components):
    comp = jnp.asarray(components, dtype=float)
    dim = comp.shape[0] if degree else 0
    return DifferentialForm(degree, dim, lambda x: comp)


def coordinate_differential(dim, i):
    e = np.zeros(dim)
    e[i] = 1.0
    return constant_form(1, e)


def canonical_two_form(n):
    """sum_i d(xi_i) ^ d(x^i) on T*R^n with coordinates (x, xi)."""
    m = np.zeros((2 * n, 2 * n))
    for i in range(n):
        m[n + i, i] = 1.0
        m[i, n + i] = -1.0
    return constant_form(2, m)


def canonical_one_form(n):
    """Liouville form sum_i xi_i dx^i on T*R^n with coordinates (x, xi)."""
    def comp(x):
        return jnp.concatenate([x[n:], jnp.zeros(n)])

    return DifferentialForm(1, 2 * n, comp, "liouville")


def _alternate_derivative(d, k):
    # d[j, i1..ik] = partial_j a[i1..ik]  ->  (da)[i0..ik]
    out = d
    for s in range(1, k + 1):
        out = out + (-1) ** s * jnp.moveaxis(d, 0, s)
    return out


def exterior_derivative(f: DifferentialForm, method="ad", h=1e-5):
    """Exterior derivative by forward-mode AD or by central differences.

    The finite-difference variant uses step ``h * max(1, |x|)`` and has
    O(h^2) error; it is meant as an independent check of the AD path.
    """
    k = f.degree
    if method == "ad":
        def comp(x):
            d = jax.jacfwd(f.components)(x)
            return _alternate_derivative(jnp.moveaxis(d, -1, 0), k)
    elif method == "fd":
        def comp(x):
            x = np.asarray(x, dtype=float)
            step = h * max(1.0, float(np.linalg.norm(x)))
            cols = []
            for j in range(f.dim):
                e = np.zeros_like(x)
                e[j] = step
                cols.append((np.asarray(f.components(x + e)) - np.asarray(f.components(x - e))) / (2 * step))
            return _alternate_derivative(jnp.asarray(np.stack(cols)), k)
    else:
        raise ValueError(f"unknown differentiation method {method!r}")
    return DifferentialForm(k + 1, f.dim, comp)


def _antisymmetrize_product(t, k, l):
    # (1/(k! l!)) sum over permutations of sign * permuted tensor
    total = k + l
    out = jnp.zeros_like(t)
    for perm in itertools.permutations(range(total)):
        out = out + _perm_sign(perm) * jnp.transpose(t, np.argsort(perm))
    return out / (math.factorial(k) * math.factorial(l))


def _perm_sign(perm):
    sign, seen = 1, list(perm)
    for i in range(len(seen)):
        while seen[i] != i:
            j = seen[i]
            seen[i], seen[j] = seen[j], seen[i]
            sign = -sign
    return sign


def wedge(a: DifferentialForm, b: DifferentialForm):
    if a.dim != b.dim and a.degree and b.degree:
        raise ValueError("wedge of forms on different charts")
    dim = max(a.dim, b.dim)
    k, l = a.degree, b.degree

    def comp(x):
        t = jnp.tensordot(a.components(x), b.components(x), axes=0)
        if k == 0 or l == 0:
            return t
        return _antisymmetrize_product(t, k, l)

    return DifferentialForm(k + l, dim, comp)


def interior_product(vector_field, f: DifferentialForm):
    """Contract a vector field (function of x, or a constant vector) into the first slot."""
    if f.degree == 0:
        raise ValueError("interior product of a 0-form is undefined")
    field = vector_field if callable(vector_field) else (lambda x, v=jnp.asarray(vector_field, dtype=float): v)

    def comp(x):
        return jnp.tensordot(field(x), f.components(x), axes=(0, 0))

    return DifferentialForm(f.degree - 1, f.dim, comp)


def pullback(f: DifferentialForm, phi, dim):
    """Pull f back along a map phi: R^dim -> R^f.dim."""
    k = f.degree

    def comp(x):
        c = f.components(phi(x))
        if k == 0:
            return c
        jac = jax.jacfwd(phi)(x)
        for _ in range(k):
            # contract the leading original slot, append the new slot at the end
            c = jnp.tensordot(c, jac, axes=(0, 0))
        return c

    return DifferentialForm(k, dim, comp)


def embed(f: DifferentialForm, dim, index):
    """Pull f back along the coordinate projection R^dim -> R^f.dim picking ``index``."""
    index = np.asarray(index)
    proj = np.zeros((f.dim, dim))
    proj[np.arange(f.dim), index] = 1.0
    return pullback(f, lambda x: x[index], dim) if f.degree == 0 else _embed_linear(f, dim, index, proj)


def _embed_linear(f, dim, index, proj):
    def comp(x):
        c = f.components(x[index])
        for _ in range(f.degree):
            c = jnp.tensordot(c, proj, axes=(0, 0))
        return c

    return DifferentialForm(f.degree, dim, comp)


def tangent_interior(f: DifferentialForm):
    """The derivation i_T: forms on X -> forms on TX.

    TX carries coordinates (x, xdot); the result at (x, xdot) is xdot contracted
    into f(x), pulled back along the projection TX -> X.
    """
    if f.degree == 0:
        raise ValueError("tangent interior product needs degree >= 1")
    n = f.dim
    proj = np.hstack([np.eye(n), np.zeros((n, n))])

    def comp(y):
        c = jnp.tensordot(y[n:], f.components(y[:n]), axes=(0, 0))
        for _ in range(f.degree - 1):
            c = jnp.tensordot(c, proj, axes=(0, 0))
        return c

    return DifferentialForm(f.degree - 1, 2 * n, comp)


def tangent_lift(f: DifferentialForm):
    """d_T = d i_T + i_T d, mapping k-forms on X to k-forms on TX."""
    lifted_d = tangent_interior(exterior_derivative(f))
    if f.degree == 0:
        return lifted_d
    return exterior_derivative(tangent_interior(f)) + lifted_d


# --- triangulated surfaces -------------------------------------------------


@dataclass(frozen=True)
class TriangulatedSurface:
    """Triangles in a parameter space mapped into a chart by ``embedding``.

    ``project`` maps new midpoint vertices back onto the parameter domain when
    refining (identity for flat domains, radial projection for spheres).
    """

    vertices: np.ndarray
    triangles: np.ndarray
    embedding: Callable
    project: Callable = None
    closed: bool = False

    def refine(self, levels=1):
        surf = self
        for _ in range(levels):
            surf = surf._subdivide()
        return surf

    def _subdivide(self):
        verts = [v for v in self.vertices]
        cache = {}

        def midpoint(i, j):
            key = (min(i, j), max(i, j))
            if key not in cache:
                m = 0.5 * (self.vertices[i] + self.vertices[j])
                if self.project is not None:
                    m = self.project(m)
                cache[key] = len(verts)
                verts.append(m)
            return cache[key]

        tris = []
        for a, b, c in self.triangles:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            tris += [(a, ab, ca), (ab, b, bc), (ca, bc, c), (ab, bc, ca)]
        return TriangulatedSurface(
            np.array(verts), np.array(tris, dtype=int), self.embedding, self.project, self.closed
        )

    def check(self, tol=1e-14):
        """Raise GeometryError on degenerate triangles (zero parameter area)."""
        v = self.vertices[self.triangles]
        e1, e2 = v[:, 1] - v[:, 0], v[:, 2] - v[:, 0]
        if v.shape[-1] == 2:
            area = 0.5 * np.abs(e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])
        else:
            area = 0.5 * np.linalg.norm(np.cross(e1, e2), axis=-1)
        bad = np.flatnonzero(area <= tol)
        if bad.size:
            raise GeometryError(f"{bad.size} degenerate triangle(s), first at index {bad[0]}")
        if self.closed:
            edges = {}
            for tri in self.triangles:
                for i, j in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])):
                    edges[(i, j)] = edges.get((i, j), 0) + 1
            for (i, j), count in edges.items():
                if count != 1 or edges.get((j, i), 0) != 1:
                    raise GeometryError(f"triangulation is not a closed oriented surface at edge ({i}, {j})")


# Barycentric points (l2, l3) and weights of triangle rules; weights sum to 1.
_A1, _B1 = 0.059715871789769820, 0.470142064105115090
_A2, _B2 = 0.797426985353087322, 0.101286507323456339
_W1, _W2 = 0.132394152788506181, 0.125939180544827153
QUADRATURE_RULES = {
    "centroid": (np.array([[1 / 3, 1 / 3]]), np.array([1.0])),
    "dunavant5": (
        np.array([
            [1 / 3, 1 / 3],
            [_B1, _B1], [_A1, _B1], [_B1, _A1],
            [_B2, _B2], [_A2, _B2], [_B2, _A2],
        ]),
        np.array([0.225, _W1, _W1, _W1, _W2, _W2, _W2]),
    ),
}


def surface_integral(f: DifferentialForm, surface: TriangulatedSurface, rule="centroid", check=True):
    """Integrate a 2-form over a triangulated surface.

    Each parameter triangle (a, b, c) contributes
    1/2 f(s(m))(Ds(m)(b - a), Ds(m)(c - a)) with m its centroid and s the
    embedding (``rule="centroid"``, second order). ``rule="dunavant5"`` uses the
    seven-point degree-5 rule instead. Contributions are summed with
    ``math.fsum`` in triangle-index order.
    """
    if f.degree != 2:
        raise ValueError("surface_integral needs a 2-form")
    if rule not in QUADRATURE_RULES:
        raise ValueError(f"unknown quadrature rule {rule!r}")
    if check:
        surface.check()
    bary, weights = QUADRATURE_RULES[rule]
    v = np.asarray(surface.vertices, dtype=float)[surface.triangles]
    e1, e2 = v[:, 1] - v[:, 0], v[:, 2] - v[:, 0]
    pts = v[:, None, 0] + bary[None, :, 0, None] * e1[:, None] + bary[None, :, 1, None] * e2[:, None]
    emb = surface.embedding

    def one(c, u, w):
        x, du = jax.jvp(emb, (c,), (u,))
        _, dw = jax.jvp(emb, (c,), (w,))
        return 0.5 * (du @ f.components(x) @ dw)

    per_point = jax.vmap(jax.vmap(one, in_axes=(0, None, None)))
    contrib = np.asarray(jax.jit(per_point)(pts, e1, e2)) @ weights
    if not np.all(np.isfinite(contrib)):
        raise GeometryError("non-finite integrand on the surface")
    return float(math.fsum(contrib))


def _unit(v):
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def icosphere(level=0, radius=1.0, center=(0.0, 0.0, 0.0), embedding=None):
    """Outward-oriented icosahedral sphere.

    The parameter space is the unit sphere in R^3 (flat triangles between unit
    vertices); the default embedding is radial projection onto the sphere of
    the given radius and center.
    """
    t = (1.0 + 5.0 ** 0.5) / 2.0
    verts = _unit(np.array([
        [-1, t, 0], [1, t, 0], [-1, -t, 0], [1, -t, 0],
        [0, -1, t], [0, 1, t], [0, -1, -t], [0, 1, -t],
        [t, 0, -1], [t, 0, 1], [-t, 0, -1], [-t, 0, 1],
    ], dtype=float))
    tris = np.array([
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ])
    p = verts[tris]
    normal = np.cross(p[:, 1] - p[:, 0], p[:, 2] - p[:, 0])
    flip = np.einsum("ij,ij->i", normal, p.mean(axis=1)) < 0
    tris[flip] = tris[flip][:, [0, 2, 1]]
    if embedding is None:
        c = jnp.asarray(center, dtype=float)

        def embedding(u):
            return c + radius * u / jnp.linalg.norm(u)

    surf = TriangulatedSurface(verts, tris, embedding, project=_unit, closed=True)
    return surf.refine(level)


def disk(n_radial=8, n_angular=32, embedding=None):
    """Unit disk in polar parameters (rho, phi) in [0, 1] x [0, 2 pi].

    The embedding receives (rho, phi); the default maps to the plane. The
    boundary rho = 1 is traversed counter-clockwise, so the disk bounds the
    loop ``t -> embedding((1, 2 pi t))``. The rho = 0 edge collapses to the
    center, where pulled-back integrands vanish.
    """
    if embedding is None:
        def embedding(u):
            return jnp.array([u[0] * jnp.cos(u[1]), u[0] * jnp.sin(u[1])])

    return rectangle((0.0, 1.0), (0.0, 2 * np.pi), n_radial, n_angular, embedding)


def rectangle(u_range, v_range, nu, nv, embedding=None):
    """Counter-clockwise triangulated rectangle [u0, u1] x [v0, v1]."""
    if nu < 1 or nv < 1:
        raise GeometryError("rectangle needs at least one cell in each direction")
    us = np.linspace(*u_range, nu + 1)
    vs = np.linspace(*v_range, nv + 1)
    verts = np.array([[u, v] for v in vs for u in us])
    tris = []
    for j in range(nv):
        for i in range(nu):
            a = j * (nu + 1) + i
            b, c, d = a + 1, a + nu + 2, a + nu + 1
            tris += [(a, b, c), (a, c, d)]
    if embedding is None:
        embedding = lambda u: u  # noqa: E731
    return TriangulatedSurface(verts, np.array(tris, dtype=int), embedding, project=None)
