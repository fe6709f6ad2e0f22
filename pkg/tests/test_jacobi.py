import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from octspec.errors import ComputationError
from octspec.jacobi import jacobi_eigh, round_robin_pairs


@pytest.mark.parametrize("n", [1, 2, 5, 8])
def test_round_robin_covers_each_pair_once(n):
    seen = [pq for rnd in round_robin_pairs(n) for pq in rnd]
    assert sorted(seen) == [(p, q) for p in range(n) for q in range(p + 1, n)]
    for rnd in round_robin_pairs(n):
        flat = [i for pq in rnd for i in pq]
        assert len(flat) == len(set(flat))


@given(st.integers(1, 24), st.integers(0, 2**31 - 1))
def test_jacobi_diagonalises_random_symmetric(n, seed):
    a = np.random.default_rng(seed).standard_normal((n, n))
    a = a + a.T
    w, v = jacobi_eigh(a)
    assert np.all(np.diff(w) >= 0)
    assert np.allclose(v.T @ v, np.eye(n), atol=1e-12)
    assert np.linalg.norm(a @ v - v * w) <= 1e-11 * max(1.0, np.linalg.norm(a))


def test_jacobi_repeated_eigenvalues():
    a = np.kron(np.diag([1.0, 2.0]), np.eye(4))
    w, _ = jacobi_eigh(a)
    assert np.array_equal(w, [1.0] * 4 + [2.0] * 4)


def test_jacobi_matches_numpy_eigvalsh(rng):
    a = rng.standard_normal((32, 32))
    a = a + a.T
    assert np.allclose(jacobi_eigh(a)[0], np.linalg.eigvalsh(a), atol=1e-11)


def test_jacobi_sweep_budget():
    a = np.random.default_rng(0).standard_normal((20, 20))
    with pytest.raises(ComputationError):
        jacobi_eigh(a + a.T, max_sweeps=1)


def test_jacobi_empty_and_non_square():
    w, v = jacobi_eigh(np.zeros((0, 0)))
    assert w.size == 0 and v.shape == (0, 0)
    with pytest.raises(ValueError):
        jacobi_eigh(np.zeros((2, 3)))
