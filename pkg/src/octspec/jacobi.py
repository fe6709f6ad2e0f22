"""Cyclic Jacobi eigensolver for real symmetric matrices.

Rotations are applied in round-robin order: each round annihilates n/2
disjoint off-diagonal pairs at once, and n - 1 rounds make one full sweep over
all pairs.
"""
from __future__ import annotations

import numpy as np

from .errors import ComputationError

__all__ = ["jacobi_eigh", "round_robin_pairs"]


def round_robin_pairs(n: int) -> list[list[tuple[int, int]]]:
    """Tournament schedule covering every pair (p, q), p < q, exactly once."""
    m = n + (n % 2)
    players = list(range(m))
    rounds = []
    for _ in range(m - 1):
        pairs = []
        for i in range(m // 2):
            p, q = players[i], players[m - 1 - i]
            if p < n and q < n:
                pairs.append((min(p, q), max(p, q)))
        rounds.append(pairs)
        players = [players[0], players[-1]] + players[1:-1]
    return rounds


def jacobi_eigh(a, tol: float = 1e-15, max_sweeps: int = 60) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending) and orthonormal eigenvectors (columns) of symmetric ``a``."""
    a = np.array(a, dtype=float)
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError("matrix must be square")
    a = 0.5 * (a + a.T)
    v = np.eye(n)
    if n == 0:
        return np.zeros(0), v
    scale = np.linalg.norm(a)
    schedule = round_robin_pairs(n)
    for _ in range(max_sweeps):
        off = np.linalg.norm(a - np.diag(np.diag(a)))
        if off <= tol * scale or off == 0.0:
            break
        for pairs in schedule:
            if not pairs:
                continue
            p = np.array([pq[0] for pq in pairs])
            q = np.array([pq[1] for pq in pairs])
            apq = a[p, q]
            live = apq != 0.0
            if not live.any():
                continue
            p, q, apq = p[live], q[live], apq[live]
            theta = (a[q, q] - a[p, p]) / (2.0 * apq)
            t = np.sign(theta) / (np.abs(theta) + np.sqrt(theta * theta + 1.0))
            t[theta == 0.0] = 1.0
            c = 1.0 / np.sqrt(t * t + 1.0)
            s = t * c
            g = np.eye(n)
            g[p, p] = c
            g[q, q] = c
            g[p, q] = s
            g[q, p] = -s
            a = g.T @ a @ g
            a = 0.5 * (a + a.T)
            v = v @ g
    else:
        off = np.linalg.norm(a - np.diag(np.diag(a)))
        if off > 1e3 * tol * max(scale, 1.0):
            raise ComputationError(f"Jacobi did not converge: off-diagonal norm {off:.3e}")
    w = np.diag(a).copy()
    order = np.argsort(w, kind="stable")
    return w[order], v[:, order]
