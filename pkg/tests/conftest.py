import numpy as np
import pytest


@pytest.fixture(scope="session", autouse=True)
def _warm_jit():
    """Compile the solver kernel once so timed tests measure math, not JIT."""
    from ifamlab._glasso_kernel import glasso_sweep
    glasso_sweep(np.eye(3), 0.1, np.eye(3), np.eye(3), 1e-8, 5)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def random_spd(rng, p, cond_floor=0.2):
    """Well-conditioned random SPD matrix."""
    a = rng.standard_normal((p, p))
    return a @ a.T / p + cond_floor * np.eye(p)
