"""Seeded random test problems with controlled rank and conditioning.

``G = Q1 diag(s) Q2^T`` where Q1 (p x m) and Q2 (q x m) have orthonormal
columns from Gram-Schmidt on uniform matrices and s is uniform in [1, 2], so
the nonzero singular values of G stay within a factor of two of each other.

Q2 is orthonormalised from ``[I_m + E; R]`` with E small, so its leading m x m
block is well conditioned. The leading m columns of G are then independent and
well conditioned, which keeps the pivot-column factorization (and so the
deadbeat gains built on it) well conditioned too.

Both factors are rounded to multiples of 2**-20 before multiplying. Every
product and partial sum then fits in 53 bits, so G is formed exactly and has
rank exactly m rather than m plus rounding-level singular values.
"""
from __future__ import annotations

import numpy as np

from . import lalg
from .rng import Lcg

RANK_CLASSES = ("full-col", "full-row", "deficient")


def _orthonormal_columns(rng: Lcg, n: int, m: int, leading: bool = False) -> np.ndarray:
    a = rng.uniform(-1.0, 1.0, (n, m))
    if leading:
        a[:m] = np.eye(m) + rng.uniform(-0.5, 0.5, (m, m)) / m
    for _ in range(2):  # re-orthogonalise once for accuracy
        for j in range(m):
            col = np.ascontiguousarray(a[:, j])
            for i in range(j):
                prev = np.ascontiguousarray(a[:, i])
                col = col - lalg.matmul(prev[None, :], col)[0] * prev
            a[:, j] = col / lalg.norm2(col)
    return a


def rank_for_class(rng: Lcg, p: int, q: int, rank_class: str) -> int:
    if rank_class == "full-col":
        if q > p:
            raise ValueError(f"full-col needs q <= p, got {p}x{q}")
        return q
    if rank_class == "full-row":
        if p > q:
            raise ValueError(f"full-row needs p <= q, got {p}x{q}")
        return p
    if rank_class == "deficient":
        if min(p, q) < 2:
            raise ValueError(f"deficient rank needs min(p, q) >= 2, got {p}x{q}")
        return rng.integer(1, min(p, q) - 1)
    raise ValueError(f"unknown rank class {rank_class!r}; choose from {RANK_CLASSES}")


_GRID = 2.0**20


def _on_grid(a: np.ndarray) -> np.ndarray:
    return np.round(a * _GRID) / _GRID


def random_matrix(rng: Lcg, p: int, q: int, m: int) -> np.ndarray:
    q1 = _orthonormal_columns(rng, p, m)
    q2 = _orthonormal_columns(rng, q, m, leading=True)
    s = rng.uniform(1.0, 2.0, m)
    return lalg.as_matrix(lalg.matmul(_on_grid(q1 * s[None, :]), _on_grid(q2).T), "G")


def random_problem(rng: Lcg, p: int, q: int, rank_class: str, solvable: bool | None = None):
    """Return (G, y_d, m). ``solvable=None`` leaves y_d generic."""
    m = rank_for_class(rng, p, q, rank_class)
    g = random_matrix(rng, p, q, m)
    if solvable:
        y = lalg.matmul(g, rng.uniform(-1.0, 1.0, q))
    else:
        y = rng.uniform(-1.0, 1.0, p)
    return g, lalg.as_vector(y, "y_d"), m


def random_sizes(rng: Lcg, rank_class: str, max_dim: int = 30) -> tuple[int, int]:
    """Sizes valid for ``rank_class`` with both dimensions at most ``max_dim``."""
    while True:
        p, q = rng.integer(1, max_dim), rng.integer(1, max_dim)
        if rank_class == "full-col" and q > p:
            p, q = q, p
        if rank_class == "full-row" and p > q:
            p, q = q, p
        if rank_class == "deficient" and min(p, q) < 2:
            continue
        return p, q
