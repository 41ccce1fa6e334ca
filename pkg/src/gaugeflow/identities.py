"""Numeric verification of the Tulczyjew-triple and moment-map identities.

Every identity is evaluated as a difference of two independently built
forms (or maps) on random points and random tangent vectors.
"""

from __future__ import annotations

from dataclasses import dataclass

import jax
import jax.numpy as jnp
import numpy as np

from gaugeflow.dynamics import Model, covariant_residuals, sternberg_matrix
from gaugeflow.forms import (
    DifferentialForm,
    canonical_one_form,
    canonical_two_form,
    embed,
    exterior_derivative,
    pullback,
    tangent_interior,
    tangent_lift,
)
from gaugeflow.internal import check_moment_identities
from gaugeflow.quantization import sternberg_two_form
from gaugeflow.tulczyjew import kappa_flat, liouville_forms


@dataclass
class IdentityResult:
    name: str
    residual: float
    threshold: float
    samples: int

    @property
    def passed(self):
        return bool(np.isfinite(self.residual) and self.residual <= self.threshold)

    def to_dict(self):
        return {"residual": self.residual, "threshold": self.threshold, "samples": self.samples, "pass": self.passed}


def _max_form_difference(a: DifferentialForm, b: DifferentialForm, points, vectors):
    """max |a(x)(v...) - b(x)(v...)| over points, each with its own vector tuple."""
    if a.degree != b.degree or a.dim != b.dim:
        raise ValueError("forms differ in degree or dimension")
    k = a.degree

    def diff(x, vs):
        ca, cb = a.components(x), b.components(x)
        d = ca - cb
        for i in range(k):
            d = jnp.tensordot(vs[i], d, axes=(0, 0))
        return jnp.abs(d)

    vals = jax.jit(jax.vmap(diff))(jnp.asarray(points), jnp.asarray(vectors[:, :max(k, 1)]))
    return float(jnp.max(vals))


def _classical_forms(n):
    """Forms on T*R^n (q, p) and on TT*R^n (q, p, qdot, pdot)."""
    theta = canonical_one_form(n)  # p . dq
    omega = canonical_two_form(n)  # dp ^ dq

    def theta_h(y):
        return jnp.concatenate([y[3 * n:], -y[2 * n:3 * n], jnp.zeros(2 * n)])

    def theta_l(y):
        return jnp.concatenate([y[3 * n:], jnp.zeros(n), y[n:2 * n], jnp.zeros(n)])

    def theta_hat(y):
        return y[n:2 * n] @ y[2 * n:3 * n]

    big = np.zeros((4 * n, 4 * n))
    for i in range(n):
        # dpdot_i ^ dq^i + dp_i ^ dqdot^i
        big[3 * n + i, i], big[i, 3 * n + i] = 1.0, -1.0
        big[n + i, 2 * n + i], big[2 * n + i, n + i] = 1.0, -1.0
    big_omega = DifferentialForm(2, 4 * n, lambda y: jnp.asarray(big))
    return (
        theta,
        omega,
        DifferentialForm(1, 4 * n, theta_h),
        DifferentialForm(1, 4 * n, theta_l),
        DifferentialForm(0, 4 * n, theta_hat),
        big_omega,
    )


def _sample_points(model: Model, rng, count, q_center, q_spread):
    """Random points (q, p, z, qdot, pdot, zdot) inside the model's chart domains."""
    n, m2 = model.n, model.space.dim
    out = []
    attempts = 0
    while len(out) < count:
        attempts += 1
        if attempts > 100 * count:
            raise RuntimeError("could not sample points inside the chart domain")
        q = np.asarray(q_center) + q_spread * rng.uniform(-1, 1, n)
        z = _sample_internal(model.space, rng)
        try:
            model.chart.check_domain(q)
            model.space.check_domain(z)
        except Exception:
            continue
        p = rng.normal(size=n)
        rest = rng.normal(size=2 * n + m2)
        out.append(np.concatenate([q, p, z, rest]))
    return np.array(out)


def _sample_internal(space, rng):
    if space.dim == 0:
        return np.zeros(0)
    if space.dim == 2 and "sphere" in space.name:
        mu = float(np.sqrt(space.algebra.pair(space.moment(jnp.zeros(2)), space.moment(jnp.zeros(2)))))
        return np.array([rng.uniform(0, 2 * np.pi), rng.uniform(-0.9, 0.9) * mu])
    return rng.uniform(-0.5, 0.5, space.dim)


def verify_identities(model: Model, samples=100, seed=0, q_center=None, q_spread=0.5, covariant=True):
    """Run the identity suite on a model. Returns a list of IdentityResult."""
    rng = np.random.default_rng(seed)
    n, m2 = model.n, model.space.dim
    N = 2 * n + m2
    space, chart = model.space, model.chart
    if q_center is None:
        q_center = np.zeros(n)
    results = []

    # canonical isomorphism, flat layout (base, covector) on the Sternberg side
    dim_k = 2 * N
    kpts = rng.normal(size=(2 * samples, dim_k))
    kvec = rng.normal(size=(2 * samples, 2, dim_k))
    can = canonical_two_form(N)
    pulled = pullback(can, lambda x: kappa_flat(x, n, m2), dim_k)
    results.append(IdentityResult("kappa_symplectomorphism", _max_form_difference(pulled, can, kpts, kvec), 1e-10, 2 * samples))

    # classical triple on T*R^n
    theta, omega, th_h, th_l, th_hat, big_omega = _classical_forms(n)
    cpts = rng.normal(size=(samples, 4 * n))
    cvec = rng.normal(size=(samples, 2, 4 * n))
    results.append(IdentityResult(
        "classical_theta_L_minus_theta_H",
        _max_form_difference(th_l - th_h, exterior_derivative(th_hat), cpts, cvec), 1e-6, samples))
    results.append(IdentityResult(
        "classical_theta_hat_eq_iT_theta",
        _max_form_difference(tangent_interior(theta), th_hat, cpts, cvec), 1e-6, samples))
    results.append(IdentityResult(
        "classical_theta_H_eq_iT_omega",
        _max_form_difference(tangent_interior(omega), th_h, cpts, cvec), 1e-6, samples))
    results.append(IdentityResult(
        "classical_theta_L_eq_dT_theta",
        _max_form_difference(tangent_lift(theta), th_l, cpts, cvec), 1e-6, samples))
    results.append(IdentityResult(
        "classical_Omega_eq_dT_omega",
        _max_form_difference(tangent_lift(omega), big_omega, cpts, cvec), 1e-6, samples))
    results.append(IdentityResult(
        "classical_d_theta_L_eq_d_theta_H_eq_Omega",
        max(_max_form_difference(exterior_derivative(th_l), big_omega, cpts, cvec),
            _max_form_difference(exterior_derivative(th_h), big_omega, cpts, cvec)), 1e-6, samples))

    # magnetized triple on the chart (q, p, z, qdot, pdot, zdot)
    pts = _sample_points(model, rng, samples, q_center, q_spread)
    vecs = rng.normal(size=(samples, 2, 2 * N))
    theta_h, theta_l = liouville_forms(space, chart)
    q_idx = np.arange(n)
    p_idx = np.arange(n, 2 * n)
    qd_idx = np.arange(N, N + n)
    theta_hat_m = DifferentialForm(0, 2 * N, lambda y: y[p_idx] @ y[qd_idx])
    results.append(IdentityResult(
        "magnetized_theta_L_minus_theta_H",
        _max_form_difference(theta_l - theta_h, exterior_derivative(theta_hat_m), pts, vecs), 1e-6, samples))

    omega_theta = DifferentialForm(2, N, lambda x: sternberg_matrix(space, chart, x), "omega_Theta")
    theta_x = DifferentialForm(1, N, lambda x: jnp.concatenate([x[n:2 * n], jnp.zeros(n + m2)]), "theta_X")
    zq_idx = np.concatenate([q_idx, np.arange(2 * n, N)])
    big_theta = embed(sternberg_two_form(space, chart), N, zq_idx)
    results.append(IdentityResult(
        "magnetized_theta_H_eq_iT_omega_Theta",
        _max_form_difference(tangent_interior(omega_theta), theta_h, pts, vecs), 1e-6, samples))
    results.append(IdentityResult(
        "magnetized_theta_L_eq_dT_theta_X_plus_iT_Omega_Theta",
        _max_form_difference(tangent_lift(theta_x) + tangent_interior(big_theta), theta_l, pts, vecs), 1e-6, samples))
    omega_f = exterior_derivative(theta_h)
    results.append(IdentityResult(
        "magnetized_Omega_F_eq_dT_omega_Theta",
        _max_form_difference(tangent_lift(omega_theta), omega_f, pts, vecs), 1e-6, samples))
    results.append(IdentityResult(
        "magnetized_d_theta_L_eq_d_theta_H",
        _max_form_difference(exterior_derivative(theta_l), omega_f, pts, vecs), 1e-6, samples))

    # omega_Theta matrix versus omega_X + Omega - d<A, Phi> built with form calculus
    base_pts = pts[:, :N]
    omega_x = embed(canonical_two_form(n), N, np.concatenate([q_idx, p_idx]))
    results.append(IdentityResult(
        "sternberg_matrix_vs_forms",
        _max_form_difference(omega_theta, omega_x + big_theta, base_pts, vecs[:, :, :N]), 1e-10, samples))

    # moment map identities
    if m2:
        zs = base_pts[:, 2 * n:]
        xis = rng.normal(size=(10, 2, space.algebra.dim))
        res = check_moment_identities(space, zs, xis)
        results.append(IdentityResult("moment_contraction", res.contraction, 1e-8, len(zs) * len(xis)))
        results.append(IdentityResult("moment_equivariance", res.equivariance, 1e-8, len(zs) * len(xis)))

    if covariant:
        ys = np.concatenate([pts[:, :n], pts[:, N:N + n], pts[:, 2 * n:N]], axis=1)
        cov = float(np.max(covariant_residuals(space, chart, model.lagrangian, ys)))
        results.append(IdentityResult("covariant_equation_of_motion", cov, 1e-7, samples))
    return results
