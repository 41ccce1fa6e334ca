"""Equations of motion on the Sternberg phase space and their integration.

Lagrangian states are flat vectors (q, v, z), Hamiltonian states (q, p, z).
L is called as L(q, v, z) and H as H(q, p, z); both must be JAX-traceable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import partial
from typing import Callable

import jax
import jax.numpy as jnp
import numpy as np

from gaugeflow._util import is_concrete
from gaugeflow.errors import NumericError
from gaugeflow.gauge import GaugeChart, GaugeMap, curvature, gauge_transform
from gaugeflow.internal import InternalSpace
from gaugeflow.tulczyjew import legendre_hamiltonian

MASS_COND_MAX = 1e10
STERNBERG_COND_MAX = 1e12


def _split(x, n):
    return x[:n], x[n:2 * n], x[2 * n:]


def _check_cond(mat, limit, what):
    if is_concrete(mat):
        cond = np.linalg.cond(np.asarray(mat))
        if not np.isfinite(cond) or cond > limit:
            raise NumericError(f"{what} is singular (condition {cond:.3e})")


def _gauge_data(space, chart, q, z):
    G = space.algebra.pairing_metric
    phi = space.moment(z)
    return G @ phi, space.moment_gradient(z), chart.potential(q), chart.derivative(q)


def sternberg_matrix(space: InternalSpace, chart: GaugeChart, x):
    """Coefficients W[a, b] = omega_Theta(e_a, e_b) in the ordered chart (q, p, z)."""
    x = jnp.asarray(x, dtype=float)
    n, m2 = chart.base_dim, space.dim
    q, p, z = _split(x, n)
    chart.check_domain(q)
    space.check_domain(z)
    gphi, dphi, A, dA = _gauge_data(space, chart, q, z)
    # dA[j, i] = d_j A_i, so d_i A_j - d_j A_i = dA[i, j] - dA[j, i]
    qq = -jnp.einsum("ija,a->ij", dA - jnp.transpose(dA, (1, 0, 2)), gphi)
    qz = A @ space.algebra.pairing_metric @ dphi
    eye = jnp.eye(n)
    zero = jnp.zeros((n, n))
    w = jnp.block([
        [qq, -eye, qz],
        [eye, zero, jnp.zeros((n, m2))],
        [-qz.T, jnp.zeros((m2, n)), space.omega(z) if m2 else jnp.zeros((0, 0))],
    ])
    _check_cond(w, STERNBERG_COND_MAX, "Sternberg matrix")
    return w


def hamiltonian_rhs(space: InternalSpace, chart: GaugeChart, H, x):
    """xdot with xdot _| omega_Theta = -dH, i.e. W xdot = grad H."""
    x = jnp.asarray(x, dtype=float)
    n = chart.base_dim
    w = sternberg_matrix(space, chart, x)
    grad = jax.grad(lambda y: H(*_split(y, n)))(x)
    return jnp.linalg.solve(w, grad)


def _local_terms(space, chart, L, q, v, z):
    """zdot and the right side of the momentum balance, in the chart form."""
    gphi, dphi, A, dA = _gauge_data(space, chart, q, z)
    G = space.algebra.pairing_metric
    dLdq = jax.grad(L, argnums=0)(q, v, z)
    if space.dim:
        dLdz = jax.grad(L, argnums=2)(q, v, z)
        w = dLdz - (v @ A) @ G @ dphi
        zdot = w @ space.omega_inv(z)
    else:
        zdot = jnp.zeros(0)
    curl = dA - jnp.transpose(dA, (1, 0, 2))  # [j, i] = d_j A_i - d_i A_j
    rhs = dLdq + jnp.einsum("j,jia,a->i", v, curl, gphi) + A @ G @ (dphi @ zdot)
    return zdot, rhs


def _mass_solve(L, q, v, z, zdot, rhs):
    mass = jax.hessian(L, argnums=1)(q, v, z)
    _check_cond(mass, MASS_COND_MAX, "mass matrix")
    mixed = jax.jacfwd(jax.grad(L, argnums=1), argnums=0)(q, v, z)  # [i, j] = d_vi d_qj L
    corr = mixed @ v
    if zdot.shape[0]:
        corr = corr + jax.jacfwd(jax.grad(L, argnums=1), argnums=2)(q, v, z) @ zdot
    return jnp.linalg.solve(mass, rhs - corr)


def lagrangian_rhs(space: InternalSpace, chart: GaugeChart, L, y):
    """Time derivative of (q, v, z) from the chart-local equations of motion."""
    y = jnp.asarray(y, dtype=float)
    n = chart.base_dim
    q, v, z = _split(y, n)
    chart.check_domain(q)
    space.check_domain(z)
    zdot, rhs = _local_terms(space, chart, L, q, v, z)
    return jnp.concatenate([v, _mass_solve(L, q, v, z, zdot, rhs), zdot])


def _covariant_terms(space, chart, L, y):
    n = chart.base_dim
    q, v, z = _split(y, n)
    alg = space.algebra
    zdot, rhs_local = _local_terms(space, chart, L, q, v, z)
    F = curvature(chart, q)
    gphi = alg.pairing_metric @ space.moment(z)
    rhs_cov = jax.grad(L, argnums=0)(q, v, z) + jnp.einsum("j,jia,a->i", v, F, gphi)
    if space.dim:
        dLdz = jax.grad(L, argnums=2)(q, v, z)
        a_phi = jax.jacfwd(lambda zz: chart.potential(q) @ alg.pairing_metric @ space.moment(zz))(z)  # [i, alpha]
        rhs_cov = rhs_cov + a_phi @ space.omega_inv(z).T @ dLdz
        line2 = (zdot + space.action_field(v @ chart.potential(q), z)) @ space.omega(z) - dLdz
        res2 = jnp.max(jnp.abs(line2))
    else:
        res2 = 0.0
    res1 = jnp.max(jnp.abs(rhs_cov - rhs_local))
    return jnp.maximum(res1, res2)


def covariant_residual(space: InternalSpace, chart: GaugeChart, L, y):
    """Difference between the covariant (curvature / internal bracket) form and the chart form.

    Compares the momentum-balance right sides, and checks
    (zdot + Y_{v.A}) _| Omega = d_z L for the chart-form zdot. Returns the
    larger of the two max-abs residuals.
    """
    y = jnp.asarray(y, dtype=float)
    q, _, z = _split(y, chart.base_dim)
    chart.check_domain(q)
    space.check_domain(z)
    return float(_covariant_terms(space, chart, L, y))


def covariant_residuals(space: InternalSpace, chart: GaugeChart, L, ys):
    """covariant_residual over a batch of states, compiled once."""
    ys = jnp.asarray(ys, dtype=float)
    n = chart.base_dim
    for y in np.asarray(ys):
        chart.check_domain(y[:n])
        space.check_domain(y[2 * n:])
    return np.asarray(jax.jit(jax.vmap(lambda y: _covariant_terms(space, chart, L, y)))(ys))


def abelian_rhs(chart: GaugeChart, L, q_e, y):
    """Charged particle with L(q, v): d/dt dL/dv = dL/dq - q_e v _| F."""
    if chart.algebra.dim != 1:
        raise ValueError("abelian_rhs needs a one-dimensional algebra")
    y = jnp.asarray(y, dtype=float)
    n = chart.base_dim
    q, v = y[:n], y[n:2 * n]
    chart.check_domain(q)
    F = curvature(chart, q)[..., 0]
    G = chart.algebra.pairing_metric[0, 0]
    L3 = lambda q, v, z: L(q, v)  # noqa: E731
    rhs = jax.grad(L, argnums=0)(q, v) - q_e * G * (v @ F)
    return jnp.concatenate([v, _mass_solve(L3, q, v, jnp.zeros(0), jnp.zeros(0), rhs)])


# --- models ----------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Model:
    """A charged particle: internal space, gauge chart, Lagrangian and optional Hamiltonian.

    Without an explicit Hamiltonian, one is built from L by the Legendre transform.
    """

    space: InternalSpace
    chart: GaugeChart
    lagrangian: Callable
    hamiltonian: Callable = None
    name: str = ""

    @property
    def n(self):
        return self.chart.base_dim

    @property
    def state_dim(self):
        return 2 * self.n + self.space.dim

    @property
    def H(self):
        return self.hamiltonian or legendre_hamiltonian(self.lagrangian)

    def lagrangian_rhs(self, y):
        return lagrangian_rhs(self.space, self.chart, self.lagrangian, y)

    def hamiltonian_rhs(self, x):
        return hamiltonian_rhs(self.space, self.chart, self.H, x)

    def split(self, y):
        return _split(y, self.n)

    def to_hamiltonian(self, y):
        q, v, z = _split(jnp.asarray(y, dtype=float), self.n)
        p = jax.grad(self.lagrangian, argnums=1)(q, v, z)
        return jnp.concatenate([q, p, z])

    def lagrangian_energy(self, y):
        q, v, z = _split(y, self.n)
        return v @ jax.grad(self.lagrangian, argnums=1)(q, v, z) - self.lagrangian(q, v, z)

    def hamiltonian_energy(self, x):
        return self.H(*_split(x, self.n))

    def check(self, y, time=None):
        q, _, z = _split(np.asarray(y), self.n)
        if not np.all(np.isfinite(y)):
            raise NumericError(f"{self.name}: non-finite state" + (f" at t = {time:.17g}" if time is not None else ""))
        self.chart.check_domain(q, time)
        self.space.check_domain(z, time)


# --- integration -----------------------------------------------------------


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    step_stats: np.ndarray = None
    kind: str = "lagrangian"
    n: int = 0

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.states = np.asarray(self.states, dtype=float)
        if self.states.ndim != 2 or self.states.shape[0] != self.times.shape[0]:
            raise ValueError("states must be (len(times), dim)")
        if self.times.size > 1 and np.any(np.diff(self.times) <= 0):
            raise ValueError("trajectory times must be strictly increasing")

    def __len__(self):
        return self.times.size

    @property
    def q(self):
        return self.states[:, :self.n]

    @property
    def second(self):
        """v for Lagrangian trajectories, p for Hamiltonian ones."""
        return self.states[:, self.n:2 * self.n]

    @property
    def z(self):
        return self.states[:, 2 * self.n:]


_RK4_C = np.array([0.0, 0.5, 0.5, 1.0])
_RK4_W = np.array([1.0, 2.0, 2.0, 1.0]) / 6.0


def _rk4_step(f, y, h):
    """Classical RK4 step; the four stages run in a loop so f is traced once."""
    def stage(i, carry):
        k, acc = carry
        k = f(y + jnp.asarray(_RK4_C)[i] * h * k)
        return k, acc + jnp.asarray(_RK4_W)[i] * k

    zero = jnp.zeros_like(y)
    _, acc = jax.lax.fori_loop(0, 4, stage, (zero, zero))
    return y + h * acc


_STEPPERS = {}


def _rk4_runner(rhs):
    if rhs not in _STEPPERS:
        if len(_STEPPERS) > 64:
            _STEPPERS.clear()

        @partial(jax.jit, static_argnums=3)
        def run(y, count, h, length):
            # count and h are traced, so short blocks and the final partial step
            # reuse one compiled scan
            def body(y, i):
                y = jax.lax.cond(i < count, lambda u: _rk4_step(rhs, u, h), lambda u: u, y)
                return y, y

            return jax.lax.scan(body, y, jnp.arange(length))

        _STEPPERS[rhs] = run
    return _STEPPERS[rhs]


# Fehlberg 4(5) tableau
_RKF_A = [
    [],
    [1 / 4],
    [3 / 32, 9 / 32],
    [1932 / 2197, -7200 / 2197, 7296 / 2197],
    [439 / 216, -8.0, 3680 / 513, -845 / 4104],
    [-8 / 27, 2.0, -3544 / 2565, 1859 / 4104, -11 / 40],
]
_RKF_B4 = [25 / 216, 0.0, 1408 / 2565, 2197 / 4104, -1 / 5, 0.0]
_RKF_B5 = [16 / 135, 0.0, 6656 / 12825, 28561 / 56430, -9 / 50, 2 / 55]


def _rkf_step(f, y, h):
    ks = []
    for row in _RKF_A:
        yi = y
        for a, k in zip(row, ks):
            yi = yi + h * a * k
        ks.append(f(yi))
    y4 = y + h * sum(b * k for b, k in zip(_RKF_B4, ks))
    y5 = y + h * sum(b * k for b, k in zip(_RKF_B5, ks))
    return y4, y5 - y4


def integrate(rhs, state0, t_span, dt, method="rk4", tol=1e-9, check=None, kind="lagrangian", n=0,
              chunk=2000):
    """Integrate ydot = rhs(y) from t_span[0] to t_span[1].

    rk4 takes fixed steps of size dt (the last step is shortened to land on
    the end time). rkf45 adapts the step to keep the local error below
    ``tol * (1 + |y|)`` componentwise, starting from dt. ``check(y, t)`` is
    called on every stored state and should raise DomainError when the state
    leaves the chart.
    """
    t0, t1 = map(float, t_span)
    if not dt > 0:
        raise ValueError("dt must be positive")
    if not t1 > t0:
        raise ValueError("t_span must be increasing")
    y0 = jnp.asarray(state0, dtype=float)
    if check is not None:
        check(np.asarray(y0), t0)
    if method == "rk4":
        times, states = _integrate_rk4(rhs, y0, t0, t1, dt, check, chunk)
        stats = np.zeros(len(times))
    elif method == "rkf45":
        times, states, stats = _integrate_rkf45(rhs, y0, t0, t1, dt, tol, check)
    else:
        raise ValueError(f"unknown integration method {method!r}")
    return Trajectory(times, states, stats, kind, n)


def _integrate_rk4(rhs, y0, t0, t1, dt, check, chunk):
    nsteps = max(1, int(math.ceil((t1 - t0) / dt - 1e-9)))
    last = (t1 - t0) - (nsteps - 1) * dt

    run = _rk4_runner(rhs)
    length = max(1, min(chunk, nsteps - 1))
    states = [np.asarray(y0)[None]]
    y = y0
    done = 0
    full = nsteps - 1
    while done < full:
        count = min(chunk, full - done)
        y, block = run(y, count, dt, length)
        block = np.asarray(block)[:count]
        _check_block(block, t0 + (done + 1 + np.arange(count)) * dt, check)
        states.append(block)
        done += count
    y, block = run(y, 1, last, length)
    block = np.asarray(block)[:1]
    _check_block(block, np.array([t1]), check)
    states.append(block)
    times = t0 + dt * np.arange(nsteps + 1, dtype=float)
    times[-1] = t1
    return times, np.concatenate(states)


def _check_block(block, times, check):
    bad = ~np.all(np.isfinite(block), axis=1)
    limit = int(np.argmax(bad)) if bad.any() else block.shape[0]
    if check is not None:
        for i in range(limit):
            check(block[i], float(times[i]))
    if bad.any():
        raise NumericError(f"state became non-finite at t = {float(times[limit]):.17g}")


def _integrate_rkf45(rhs, y0, t0, t1, dt, tol, check):
    step = jax.jit(lambda y, h: _rkf_step(rhs, y, h))
    t, y, h = t0, np.asarray(y0), dt
    times, states, stats = [t0], [y], [0.0]
    while t < t1:
        h = min(h, t1 - t)
        if h < 1e-14 * max(1.0, abs(t)):
            raise NumericError(f"rkf45 step size underflow at t = {t:.17g}")
        y_new, err = step(jnp.asarray(y), h)
        y_new, err = np.asarray(y_new), np.asarray(err)
        if not np.all(np.isfinite(y_new)):
            h *= 0.25
            continue
        scale = tol * (1.0 + np.maximum(np.abs(y), np.abs(y_new)))
        ratio = float(np.max(np.abs(err) / scale, initial=0.0))
        if ratio <= 1.0:
            t = t1 if t1 - (t + h) < 1e-12 * max(1.0, abs(t1)) else t + h
            y = y_new
            if check is not None:
                check(y, t)
            times.append(t)
            states.append(y)
            stats.append(ratio)
        factor = 5.0 if ratio == 0.0 else min(5.0, max(0.2, 0.9 * ratio ** -0.2))
        h *= factor
    return np.array(times), np.array(states), np.array(stats)


def integrate_model(model: Model, y0, t_span, dt, method="rk4", tol=1e-9, formulation="lagrangian"):
    if formulation == "lagrangian":
        rhs = model.lagrangian_rhs
    elif formulation == "hamiltonian":
        rhs = model.hamiltonian_rhs
    else:
        raise ValueError(f"unknown formulation {formulation!r}")
    return integrate(rhs, y0, t_span, dt, method, tol, check=model.check, kind=formulation, n=model.n)


# --- diagnostics -----------------------------------------------------------


@dataclass
class QuantityRecord:
    values: np.ndarray

    @property
    def initial(self):
        return float(self.values[0])

    @property
    def final(self):
        return float(self.values[-1])

    @property
    def max_drift(self):
        return float(np.max(np.abs(self.values - self.values[0])))


@dataclass
class DiagnosticsReport:
    quantities: dict = field(default_factory=dict)
    gauge_residual: float = None
    crosscheck_residual: float = None

    def to_dict(self):
        out = {
            name: {"initial": rec.initial, "final": rec.final, "max_drift": rec.max_drift}
            for name, rec in self.quantities.items()
        }
        if self.gauge_residual is not None:
            out["gauge_covariance"] = {"residual": self.gauge_residual}
        if self.crosscheck_residual is not None:
            out["crosscheck"] = {"residual": self.crosscheck_residual}
        return out


def energy_quantity(model: Model, kind="lagrangian"):
    return model.lagrangian_energy if kind == "lagrangian" else model.hamiltonian_energy


def casimir_quantity(model: Model):
    return lambda y: model.space.casimir(y[2 * model.n:])


def poincare_quantity(model: Model, q_e, q_m):
    """J = r x v - q_e q_m r / |r| on a Lagrangian state."""
    def J(y):
        r, v = y[:3], y[3:6]
        return jnp.cross(r, v) - q_e * q_m * r / jnp.linalg.norm(r)

    return J


def diagnose(trajectory: Trajectory, quantities, model: Model = None):
    """Evaluate named quantities along a trajectory.

    ``quantities`` maps names to functions of a state (scalar or vector
    valued; vectors become ``name_1``, ``name_2``, ...), or is a list that may
    also contain the builtin names ``energy`` and ``casimir`` (resolved with
    ``model``).
    """
    if len(trajectory) == 0:
        raise ValueError("cannot diagnose an empty trajectory")
    if not isinstance(quantities, dict):
        resolved = {}
        for name in quantities:
            if callable(name):
                raise ValueError("pass callables in a dict with names")
            if model is None:
                raise ValueError(f"builtin quantity {name!r} needs a model")
            if name == "energy":
                resolved[name] = energy_quantity(model, trajectory.kind)
            elif name == "casimir":
                resolved[name] = casimir_quantity(model)
            else:
                raise ValueError(f"unknown quantity {name!r}")
        quantities = resolved
    report = DiagnosticsReport()
    states = jnp.asarray(trajectory.states)
    for name, fn in quantities.items():
        vals = np.asarray(jax.jit(jax.vmap(fn))(states))
        if vals.ndim == 1:
            report.quantities[name] = QuantityRecord(vals)
        else:
            for k in range(vals.shape[1]):
                report.quantities[f"{name}_{k + 1}"] = QuantityRecord(vals[:, k])
    return report


def crosscheck(model: Model, y0, t_span, dt, method="rk4"):
    """Sup-norm difference of q(t) between the Lagrangian and Hamiltonian flows."""
    lag = integrate_model(model, y0, t_span, dt, method, formulation="lagrangian")
    x0 = model.to_hamiltonian(y0)
    ham = integrate_model(model, x0, t_span, dt, method, formulation="hamiltonian")
    if lag.times.shape != ham.times.shape or np.max(np.abs(lag.times - ham.times)) > 1e-12:
        raise NumericError("formulations produced different time grids; use rk4 for crosscheck")
    return float(np.max(np.abs(lag.q - ham.q))), lag, ham


def transport_state(model: Model, y0, gauge_map: GaugeMap):
    """Move the internal point of y0 by a(q0), keeping q and v."""
    y0 = np.asarray(y0, dtype=float)
    n = model.n
    if model.space.dim == 0:
        return y0
    if model.space.transport is None:
        raise ValueError(f"{model.space.name} has no group action on chart points")
    z = model.space.transport(np.asarray(gauge_map(y0[:n])), y0[2 * n:])
    return np.concatenate([y0[:2 * n], z])


def gauge_covariance_check(model: Model, y0, gauge_map: GaugeMap, t_span, dt, method="rk4"):
    """Sup-norm q(t) difference between a model and its gauge transform."""
    base = integrate_model(model, y0, t_span, dt, method)
    chart2 = gauge_transform(model.chart, gauge_map)
    model2 = Model(model.space, chart2, model.lagrangian, model.hamiltonian, f"{model.name}^gauge")
    y2 = transport_state(model, y0, gauge_map)
    other = integrate_model(model2, y2, t_span, dt, method)
    return float(np.max(np.abs(base.q - other.q)))
