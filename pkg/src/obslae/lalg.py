"""Small dense real linear algebra on float64 numpy arrays.

Matrices are 2-D ``float64`` arrays and vectors are 1-D ones. Values handed
out by this module are read-only so they can be shared freely. Products go
through the sequential kernels in :mod:`obslae._kernels`; elimination is done
with whole-row numpy updates, which involve no reductions.

Numerical rank is decided by one rule everywhere: a pivot counts when its
magnitude exceeds ``tol`` times the largest absolute entry of the matrix being
reduced (``DEFAULT_TOL = 1e-10``).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import (
    DimensionError,
    NonFiniteError,
    NumericalError,
    SingularMatrixError,
    ZeroMatrixError,
)

DEFAULT_TOL = 1e-10


def _frozen(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


def as_matrix(a, name: str = "matrix") -> np.ndarray:
    """Validate and copy ``a`` into a read-only 2-D float64 array."""
    arr = np.array(a, dtype=np.float64)
    if arr.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise DimensionError(f"{name} must have positive dimensions, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError(f"{name} contains NaN or Inf")
    return _frozen(arr)


def as_vector(v, name: str = "vector") -> np.ndarray:
    """Validate and copy ``v`` into a read-only 1-D float64 array."""
    arr = np.array(v, dtype=np.float64)
    if arr.ndim == 2 and 1 in arr.shape:
        arr = arr.reshape(-1)
    if arr.ndim != 1:
        raise DimensionError(f"{name} must be 1-D, got shape {arr.shape}")
    if arr.shape[0] < 1:
        raise DimensionError(f"{name} must be non-empty")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError(f"{name} contains NaN or Inf")
    return _frozen(arr)


def identity(n: int) -> np.ndarray:
    return _frozen(np.eye(n))


def max_abs(a: np.ndarray) -> float:
    return float(np.max(np.abs(a))) if a.size else 0.0


def frobenius(a: np.ndarray) -> float:
    return math.sqrt(_kernels.sum_squares(np.ascontiguousarray(a, dtype=np.float64)))


def norm2(x: np.ndarray) -> float:
    """Euclidean norm of a vector."""
    return frobenius(x)


def trace_gram(g: np.ndarray) -> float:
    """trace(G G^T), i.e. the squared Frobenius norm."""
    return _kernels.sum_squares(np.ascontiguousarray(g, dtype=np.float64))


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Matrix product with sequential left-to-right accumulation.

    A 1-D ``b`` is treated as a column and a 1-D result is returned.
    """
    a = np.ascontiguousarray(a, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    if a.ndim != 2 or b.ndim not in (1, 2):
        raise DimensionError(f"cannot multiply shapes {a.shape} and {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise DimensionError(f"inner dimensions differ: {a.shape} @ {b.shape}")
    if b.ndim == 1:
        return _frozen(_kernels.matvec(a, b))
    return _frozen(_kernels.matmul(a, b))


def chain(*factors: np.ndarray) -> np.ndarray:
    """Left-to-right product of several matrices (and optionally a final vector)."""
    out = factors[0]
    for f in factors[1:]:
        out = matmul(out, f)
    return out


def rref(a: np.ndarray, tol: float = DEFAULT_TOL) -> tuple[np.ndarray, list[int], int]:
    """Reduced row-echelon form by Gauss-Jordan elimination with partial pivoting.

    Returns ``(reduced, pivot_cols, rank)``. Rows below the rank are set to
    exact zeros, as are sub-threshold entries left in rejected columns.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    r = np.array(a, dtype=np.float64)
    if r.ndim != 2:
        raise DimensionError(f"rref expects a 2-D array, got shape {r.shape}")
    rows, cols = r.shape
    threshold = tol * max_abs(r)
    pivots: list[int] = []
    if threshold == 0.0:
        return _frozen(np.zeros_like(r)), pivots, 0

    row = 0
    for col in range(cols):
        if row == rows:
            break
        best = row + int(np.argmax(np.abs(r[row:, col])))
        if abs(r[best, col]) <= threshold:
            r[row:, col] = 0.0
            continue
        if best != row:
            r[[row, best]] = r[[best, row]]
        r[row] /= r[row, col]
        r[row, col] = 1.0
        factors = r[:, col].copy()
        factors[row] = 0.0
        nz = np.nonzero(factors)[0]
        if nz.size:
            r[nz] -= factors[nz, None] * r[row][None, :]
            r[nz, col] = 0.0
        pivots.append(col)
        row += 1
    r[row:, :] = 0.0
    return _frozen(r), pivots, row


def rank(a: np.ndarray, tol: float = DEFAULT_TOL) -> int:
    return rref(a, tol)[2]


@dataclass(frozen=True)
class RankFactorization:
    """G = h @ ghat with h full column rank and ghat full row rank."""

    h: np.ndarray
    ghat: np.ndarray
    rank: int
    pivot_cols: tuple[int, ...]

    def reconstruct(self) -> np.ndarray:
        return matmul(self.h, self.ghat)

    def permuted(self, perm) -> "RankFactorization":
        """Equivalent factorization (h P, P^T ghat) for a permutation of 0..m-1."""
        perm = list(perm)
        if sorted(perm) != list(range(self.rank)):
            raise ValueError("perm must be a permutation of range(rank)")
        h = _frozen(self.h[:, perm].copy())
        ghat = _frozen(self.ghat[perm, :].copy())
        return RankFactorization(h, ghat, self.rank, tuple(self.pivot_cols[i] for i in perm))


def full_rank_factorization(g: np.ndarray, tol: float = DEFAULT_TOL) -> RankFactorization:
    """Pivot columns of ``g`` times the nonzero rows of its RREF."""
    g = as_matrix(g, "g")
    reduced, pivots, m = rref(g, tol)
    if m == 0:
        raise ZeroMatrixError("matrix has no entry above the rank threshold")
    h = _frozen(g[:, pivots].copy())
    ghat = _frozen(reduced[:m].copy())
    fact = RankFactorization(h, ghat, m, tuple(pivots))
    check_factorization(g, fact, tol)
    return fact


def check_factorization(g: np.ndarray, fact: RankFactorization, tol: float = DEFAULT_TOL) -> None:
    """Raise unless ``fact`` reproduces ``g`` and both factors have full rank."""
    p, q = g.shape
    m = fact.rank
    if fact.h.shape != (p, m) or fact.ghat.shape != (m, q):
        raise DimensionError(
            f"factor shapes {fact.h.shape}, {fact.ghat.shape} do not match G {g.shape} with rank {m}"
        )
    if m > min(p, q):
        raise NumericalError(f"rank {m} exceeds min{g.shape}")
    err = frobenius(g - fact.reconstruct())
    # Sub-threshold entries dropped by rref bound the mismatch; allow for them.
    budget = max(1e-10, tol * math.sqrt(p * q)) * max(1.0, frobenius(g))
    if err > budget:
        raise NumericalError(f"factorization residual {err:.3e} exceeds {budget:.3e}")
    if rank(fact.h, tol) != m or rank(fact.ghat, tol) != m:
        raise NumericalError("factor lost rank on re-reduction")


def gaussian_solve(a: np.ndarray, b: np.ndarray, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Solve ``a @ x = b`` for square ``a`` by LU with partial pivoting.

    ``b`` may be a vector or a matrix of right-hand sides.
    """
    a = np.array(a, dtype=np.float64)
    rhs = np.array(b, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"gaussian_solve needs a square matrix, got {a.shape}")
    n = a.shape[0]
    vector_rhs = rhs.ndim == 1
    if vector_rhs:
        rhs = rhs[:, None]
    if rhs.ndim != 2 or rhs.shape[0] != n:
        raise DimensionError(f"right-hand side shape {np.shape(b)} does not match {a.shape}")
    threshold = tol * max_abs(a)
    if threshold == 0.0:
        raise SingularMatrixError("zero matrix")

    for k in range(n):
        p = k + int(np.argmax(np.abs(a[k:, k])))
        if abs(a[p, k]) <= threshold:
            raise SingularMatrixError(f"pivot {k} has magnitude {abs(a[p, k]):.3e} <= {threshold:.3e}")
        if p != k:
            a[[k, p]] = a[[p, k]]
            rhs[[k, p]] = rhs[[p, k]]
        if k + 1 < n:
            l = a[k + 1:, k] / a[k, k]
            a[k + 1:, k:] -= l[:, None] * a[k, k:][None, :]
            rhs[k + 1:] -= l[:, None] * rhs[k][None, :]

    x = np.empty_like(rhs)
    for i in range(n - 1, -1, -1):
        row = np.ascontiguousarray(a[i, i + 1:])
        for j in range(rhs.shape[1]):
            tail = np.ascontiguousarray(x[i + 1:, j])
            x[i, j] = (rhs[i, j] - _kernels.dot(row, tail)) / a[i, i]
    if not np.all(np.isfinite(x)):
        raise SingularMatrixError("solution overflowed")
    return _frozen(x[:, 0].copy() if vector_rhs else x)


def thin_qr(a: np.ndarray, tol: float = DEFAULT_TOL) -> tuple[np.ndarray, np.ndarray]:
    """a = q @ r for full column rank ``a``: orthonormal q, upper triangular r.

    Classical Gram-Schmidt with one reorthogonalisation pass, which keeps q
    orthonormal to working precision.
    """
    a = np.ascontiguousarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[1] > a.shape[0]:
        raise DimensionError(f"thin_qr needs a tall 2-D matrix, got shape {a.shape}")
    n, m = a.shape
    q = np.zeros((n, m))
    r = np.zeros((m, m))
    threshold = tol * max(frobenius(a), np.finfo(float).tiny)
    for j in range(m):
        v = a[:, j].copy()
        for _ in range(2):
            if j:
                qj = np.ascontiguousarray(q[:, :j])
                coeffs = _kernels.matvec(np.ascontiguousarray(qj.T), v)
                v = v - _kernels.matvec(qj, coeffs)
                r[:j, j] += coeffs
        r[j, j] = norm2(v)
        if r[j, j] <= threshold:
            raise SingularMatrixError(f"column {j} is dependent on the previous ones")
        q[:, j] = v / r[j, j]
    return _frozen(q), _frozen(r)


def pseudo_inverse_full_column(a: np.ndarray, tol: float = DEFAULT_TOL) -> np.ndarray:
    """(a^T a)^{-1} a^T for full column rank ``a``, computed as r^{-1} q^T."""
    q, r = thin_qr(a, tol)
    return gaussian_solve(r, np.ascontiguousarray(q.T), tol)


def nilpotency_degree(a: np.ndarray, tol: float = DEFAULT_TOL) -> int | None:
    """Smallest nu in [1, n] with A^nu negligible next to A^(nu-1), else None."""
    a = np.ascontiguousarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"nilpotency_degree needs a square matrix, got {a.shape}")
    n = a.shape[0]
    prev_scale = 1.0  # max-abs of A^0 = I
    power = a
    for nu in range(1, n + 1):
        scale = max_abs(power)
        if scale <= tol * max(1.0, prev_scale):
            return nu
        if nu < n:
            power = _kernels.matmul(power, a)
            prev_scale = scale
    return None


def spectral_radius_estimate(a: np.ndarray, max_squarings: int = 30, tol: float = DEFAULT_TOL) -> float:
    """Gelfand-formula estimate of the spectral radius, good to about 1e-3.

    Uses rho ~ ||A^(2^j)||_F^(1/2^j) with a running log-scale so repeated
    squaring neither overflows nor underflows. Diagnostics only.
    """
    a = np.ascontiguousarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionError(f"spectral_radius_estimate needs a square matrix, got {a.shape}")
    if nilpotency_degree(a, tol) is not None:
        return 0.0
    s = frobenius(a)
    log_norm = math.log(s)  # log ||A^(2^j)||_F
    b = a / s
    estimate = s
    for j in range(1, max_squarings + 1):
        b = _kernels.matmul(b, b)
        s = frobenius(b)
        if s == 0.0:
            return 0.0
        b = b / s
        log_norm = 2.0 * log_norm + math.log(s)
        new_estimate = math.exp(log_norm / 2.0**j)
        if abs(new_estimate - estimate) < 1e-4:
            return new_estimate
        estimate = new_estimate
    return estimate
