import numpy as np
import pytest
from hypothesis import settings

import gaugeflow  # noqa: F401  (enables x64 before any jax import in tests)

settings.register_profile("gaugeflow", deadline=None, max_examples=25)
settings.load_profile("gaugeflow")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
