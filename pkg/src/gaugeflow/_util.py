import jax
import numpy as np


def is_concrete(*arrays):
    """True when none of the arguments is a JAX tracer.

    Runtime checks that raise on bad values (domain, residuals) only make sense
    on concrete data; inside ``jit``/``jacfwd`` they are skipped.
    """
    return not any(isinstance(a, jax.core.Tracer) for a in arrays)


def as_vector(x, dim=None, name="vector"):
    x = np.asarray(x, dtype=float).reshape(-1)
    if dim is not None and x.shape[0] != dim:
        raise ValueError(f"{name} has length {x.shape[0]}, expected {dim}")
    return x
