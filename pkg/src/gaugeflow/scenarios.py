"""Builtin scenarios and the config -> model builder."""

from __future__ import annotations

import math
from dataclasses import dataclass

import jax.numpy as jnp
import numpy as np

from gaugeflow.config import ScenarioConfig, parse_config
from gaugeflow.dynamics import Model, casimir_quantity, energy_quantity, poincare_quantity
from gaugeflow.errors import ConfigInvariantError
from gaugeflow.gauge import constant_potential, monopole_chart, uniform_field_chart, zero_potential
from gaugeflow.internal import coadjoint_sphere_chart, point_orbit
from gaugeflow.lie import so2k, so3, u1
from gaugeflow.quantization import base_sphere_cycle, orbit_cycle, sternberg_two_form

BUILTINS = {
    "lorentz": """\
# Charged particle in a uniform magnetic field; gyro-period 2 pi / (q_e B).
[scenario]
name = lorentz
group = u1

[internal]
kind = point
charge = 1.0

[gauge]
kind = uniform
field = 0.0, 0.0, 2.0

[lagrangian]
kind = free
mass = 1.0

[initial]
q = 0.0, 0.0, 0.0
v = 1.0, 0.0, 0.0

[integrator]
method = rk4
dt = 0.001
t_end = 9.42477796076938  ; three periods

[quantize]
cycle = base_sphere
""",
    "dirac_monopole": """\
# Electric charge around a Dirac monopole (north Wu-Yang patch).
[scenario]
name = dirac_monopole
group = u1

[internal]
kind = point
charge = 1.0

[gauge]
kind = monopole
q_m = 0.5
patch = north

[lagrangian]
kind = free

[initial]
q = 1.0, 0.0, 0.5
v = 0.0, 1.0, 0.0

[integrator]
dt = 0.001
t_end = 10.0

[quantize]
cycle = base_sphere
radius = 1.0
level = 4
""",
    "wong_su2": """\
# Isospin particle in a constant non-abelian potential (Wong's equations).
[scenario]
name = wong_su2
group = so3

[internal]
kind = sphere
mu = 1.0

[gauge]
kind = constant
components = 0.0, 0.0, 0.5, 0.15, 0.0, 0.3, 0.0, 0.15, 0.2

[lagrangian]
kind = free

[dynamics]
formulation = both
hamiltonian = analytic

[initial]
q = 0.0, 0.0, 0.0
v = 0.6, 0.8, 0.0
z = 0.0, 0.0

[integrator]
dt = 0.001
t_end = 5.0

[quantize]
cycle = orbit
""",
    "magnetized_kepler": """\
# Kepler problem with a point internal space of so(2), k = 1, and a unit monopole.
[scenario]
name = magnetized_kepler
group = so2k
k = 1

[internal]
kind = point
charge = 1.0

[gauge]
kind = monopole
q_m = 1.0

[lagrangian]
kind = kepler
strength = 1.0

[dynamics]
formulation = lagrangian
hamiltonian = analytic

[initial]
# on the cone around +z, so J = r x v - q_e q_m r/|r| points along z
q = 1.4142135623730951, 0.0, 1.4142135623730951
v = 0.0, -0.5, 0.0

[integrator]
dt = 0.001
t_end = 10.0

[quantize]
cycle = base_sphere
radius = 2.0
""",
    "harmonic_oscillator": """\
# One-dimensional harmonic oscillator, no gauge field.
[scenario]
name = harmonic_oscillator
group = u1

[internal]
kind = point
charge = 0.0

[lagrangian]
kind = oscillator
omega = 1.0

[initial]
q = 1.0
v = 0.0

[integrator]
dt = 0.01
t_end = 10.0
""",
}


def list_builtins():
    return sorted(BUILTINS)


def builtin_config(name) -> ScenarioConfig:
    if name not in BUILTINS:
        raise KeyError(f"unknown builtin scenario {name!r}; choose from {', '.join(list_builtins())}")
    return parse_config(BUILTINS[name])


@dataclass
class Scenario:
    """A config turned into a model with its initial Lagrangian state."""

    config: ScenarioConfig
    model: Model
    y0: np.ndarray
    q_e: float = None  # abelian coupling for the Poincare vector, None when not defined

    @property
    def formulation(self):
        return self.config.get("dynamics", "formulation")

    @property
    def t_span(self):
        integ = self.config["integrator"]
        return integ["t_start"], integ["t_end"]

    @property
    def dt(self):
        return self.config.get("integrator", "dt")

    @property
    def method(self):
        return self.config.get("integrator", "method")

    def quantities(self, kind="lagrangian"):
        out = {"energy": energy_quantity(self.model, kind)}
        if self.model.space.dim:
            out["casimir"] = casimir_quantity(self.model)
        gauge = self.config["gauge"]
        if kind == "lagrangian" and gauge["kind"] == "monopole" and self.q_e is not None:
            out["poincare"] = poincare_quantity(self.model, self.q_e, gauge["q_m"])
        return out

    def cycle(self):
        """(two-form, closed surface) for the quantization check."""
        quant = self.config["quantize"]
        space, chart = self.model.space, self.model.chart
        kind = quant["cycle"]
        if kind == "auto":
            kind = "orbit" if space.dim else "base_sphere"
        if kind == "orbit":
            if not space.dim:
                raise ConfigInvariantError("quantize.cycle = orbit needs a sphere internal space", key="quantize.cycle")
            mu = self.config.get("internal", "mu")
            surface = orbit_cycle(space, mu, q0=self.y0[:self.model.n], level=quant["level"])
        else:
            center = quant["center"] if quant["center"] is not None else np.zeros(self.model.n)
            surface = base_sphere_cycle(space, quant["radius"], quant["level"], center,
                                        z0=self.y0[2 * self.model.n:])
        return sternberg_two_form(space, chart), surface


def _algebra(cfg):
    group = cfg.get("scenario", "group")
    if group == "u1":
        return u1()
    if group == "so3":
        return so3()
    return so2k(cfg.get("scenario", "k"))


def _lagrangian(cfg, space):
    lag = cfg["lagrangian"]
    m, kind = lag["mass"], lag["kind"]
    strength, omega = lag["strength"], lag["omega"]

    if kind == "free":
        def potential(q, z):
            return 0.0 * q[0]
    elif kind == "oscillator":
        def potential(q, z):
            return 0.5 * m * omega ** 2 * (q @ q)
    else:
        # the centrifugal term carries the Casimir |Phi|^2 of the internal point
        def potential(q, z):
            r = jnp.linalg.norm(q)
            c = space.casimir(z)
            return -strength / r + c * c / (2.0 * m * r * r)

    def L(q, v, z):
        return 0.5 * m * (v @ v) - potential(q, z)

    def H(q, p, z):
        return (p @ p) / (2.0 * m) + potential(q, z)

    return L, (H if cfg.get("dynamics", "hamiltonian") == "analytic" else None)


def build_scenario(cfg: ScenarioConfig) -> Scenario:
    alg = _algebra(cfg)
    internal = cfg["internal"]
    if internal["kind"] == "sphere":
        space = coadjoint_sphere_chart(internal["mu"], alg)
    else:
        # an electric charge q_e is the orbit Phi = -q_e
        value = np.full(alg.dim, -internal["charge"]) if alg.dim == 1 else np.zeros(alg.dim)
        space = point_orbit(alg, value, name=f"point(charge={internal['charge']:g})")

    init = cfg["initial"]
    q0 = np.asarray(init["q"], dtype=float)
    n = q0.size
    gauge = cfg["gauge"]
    if gauge["kind"] == "none":
        chart = zero_potential(alg, n)
    elif gauge["kind"] == "uniform":
        chart = uniform_field_chart(gauge["field"], alg)
    elif gauge["kind"] == "monopole":
        chart = monopole_chart(gauge["q_m"], gauge["patch"], alg)
    else:
        chart = constant_potential(alg, np.reshape(gauge["components"], (n, alg.dim)))

    L, H = _lagrangian(cfg, space)
    model = Model(space, chart, L, H, cfg.name)
    z0 = np.zeros(space.dim) if init["z"] is None else np.asarray(init["z"], dtype=float)
    y0 = np.concatenate([q0, np.asarray(init["v"], dtype=float), z0])
    model.check(y0)
    q_e = float(internal["charge"]) if alg.dim == 1 and space.dim == 0 else None
    return Scenario(cfg, model, y0, q_e)


def gyro_period(q_e, b, mass=1.0):
    return 2.0 * math.pi * mass / abs(q_e * b)
