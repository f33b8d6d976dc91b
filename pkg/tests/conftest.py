import numpy as np
import pytest
from hypothesis import settings

from gmresbench import (
    BackendId,
    DenseMatrix,
    GmresConfig,
    Vector,
    create_backend,
    gmres_solve,
)
from gmresbench.backends import DispatchPolicy

# Reproducible hypothesis runs; failures replay identically in CI.
settings.register_profile("ci", derandomize=True, max_examples=200)
settings.load_profile("ci")


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    """Trigger numba compilation once so timed tests measure steady state."""
    a = DenseMatrix(np.array([[1.0, 2.0], [3.0, 4.0]]))
    b = Vector([1.0, 1.0])
    for backend_id in BackendId:
        backend = create_backend(backend_id)
        policy = DispatchPolicy(enabled_backend=backend_id, level2_threshold=1)
        gmres_solve(a, b, config=GmresConfig(tol=1e-12), backend=backend, policy=policy)
        backend.dot(b, b)
        backend.norm2(b)
        backend.axpy(0.5, b, b)
        backend.scale(2.0, b)


def rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


@pytest.fixture
def random_system():
    """Factory for seeded diagonally dominant systems."""
    from gmresbench.bench import generate_problem

    return generate_problem
