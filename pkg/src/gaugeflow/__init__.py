"""Classical particles in abelian and non-abelian gauge fields.

Sternberg phase spaces, the magnetized Tulczyjew triple, dual Hamiltonian and
Lagrangian equations of motion, and numeric charge-quantization checks.
"""

import os

os.environ.setdefault("JAX_PLATFORMS", "cpu")
# The compiled kernels here are small; compile time dominates, so skip the heavy passes.
if "xla_backend_optimization_level" not in os.environ.get("XLA_FLAGS", ""):
    os.environ["XLA_FLAGS"] = (os.environ.get("XLA_FLAGS", "") + " --xla_backend_optimization_level=0").strip()

import jax  # noqa: E402

jax.config.update("jax_enable_x64", True)

from gaugeflow.errors import (  # noqa: E402
    ConfigError,
    ConfigInvariantError,
    ConfigSyntaxError,
    DomainError,
    GaugeflowError,
    GeometryError,
    NumericError,
    UnknownKeyError,
)
from gaugeflow.lie import LieAlgebra, so, so2k, so3, u1  # noqa: E402

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "ConfigInvariantError",
    "ConfigSyntaxError",
    "DomainError",
    "GaugeflowError",
    "GeometryError",
    "LieAlgebra",
    "NumericError",
    "UnknownKeyError",
    "so",
    "so2k",
    "so3",
    "u1",
]
