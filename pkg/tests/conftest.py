"""Shared fixtures and independent oracles used across the suite."""

import numpy as np
import pytest

from sella import StructuredProblem, make_random_quadratic


def rng_for(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


def power_iteration_norm(M: np.ndarray, iters: int = 10000,
                         rel_tol: float = 1e-12, seed: int = 0) -> float:
    """Spectral norm by power iteration on M'M; independent of LAPACK SVD."""
    rng = rng_for(seed)
    v = rng.standard_normal(M.shape[1])
    v /= np.linalg.norm(v)
    prev = 0.0
    for _ in range(iters):
        w = M.T @ (M @ v)
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        v = w / nw
        est = np.sqrt(nw)
        if abs(est - prev) <= rel_tol * est:
            return est
        prev = est
    return prev


def make_admissible_quadratic(n, m, p, q, seed, scale=1.0) -> StructuredProblem:
    """Structured instance whose coupling factors through both residual maps
    (A = C2' W C1), so the kernel inclusions of the dominance constants hold
    and the solution set is a genuine affine set when p < n or q < m."""
    rng = rng_for(seed)
    C1 = rng.standard_normal((p, n))
    C2 = rng.standard_normal((q, m))
    b1 = rng.standard_normal(p)
    b2 = rng.standard_normal(q)
    W = scale * rng.standard_normal((q, p))
    A = C2.T @ W @ C1
    return StructuredProblem(C1, b1, A, C2, b2,
                             meta={"constructor": "admissible_test"})


def make_scsc_quadratic(n, m, seed, coupling=1.0) -> StructuredProblem:
    """Strongly convex-strongly concave instance (square full-rank C1, C2)."""
    rng = rng_for(seed)
    C1 = rng.standard_normal((n, n)) + 3.0 * np.eye(n)
    C2 = rng.standard_normal((m, m)) + 3.0 * np.eye(m)
    b1 = rng.standard_normal(n)
    b2 = rng.standard_normal(m)
    A = coupling * rng.standard_normal((m, n))
    return StructuredProblem(C1, b1, A, C2, b2,
                             meta={"constructor": "scsc_test"})


@pytest.fixture(scope="session")
def desk_problem():
    return make_random_quadratic(20, 16, 16, 12, seed=1)
