"""Reference minimum-norm least-squares solutions for cross-checking the solver.

The route is deliberately unrelated to the solver: ridge-regularised normal
equations ``(G^T G + lam I) x = G^T y`` at several ``lam``, each polished by
iterative refinement with exactly rounded residuals, then Richardson
extrapolation to ``lam -> 0``. Nothing here touches the rank factorization or
the observer iteration.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import lalg
from .errors import DimensionError, IllConditionedError

LAMBDA_LADDER = (1e-6, 1e-8, 1e-10)
AGREEMENT = 1e-4
# The smallest ridge pivot is about lam itself, far below the rank rule's 1e-10.
PIVOT_TOL = 1e-15
_SPLITTER = 134217729.0  # 2**27 + 1


@dataclass(frozen=True)
class OracleResult:
    solution: np.ndarray
    residual: float
    lambda_ladder: tuple[float, ...]


def _two_product(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # Dekker: a*b == p + e exactly (barring overflow).
    p = a * b
    ca = _SPLITTER * a
    a_hi = ca - (ca - a)
    a_lo = a - a_hi
    cb = _SPLITTER * b
    b_hi = cb - (cb - b)
    b_lo = b - b_hi
    e = ((a_hi * b_hi - p) + a_hi * b_lo + a_lo * b_hi) + a_lo * b_lo
    return p, e


def _accurate_matvec(a: np.ndarray, x: np.ndarray, offset: np.ndarray | None = None, sign: float = 1.0) -> np.ndarray:
    """Correctly rounded ``offset + sign * (a @ x)``."""
    p, e = _two_product(a, x[None, :])
    out = np.empty(a.shape[0])
    for i in range(a.shape[0]):
        terms = list(sign * p[i]) + list(sign * e[i])
        if offset is not None:
            terms.append(offset[i])
        out[i] = math.fsum(terms)
    return out


def _ridge(g: np.ndarray, y: np.ndarray, gty: np.ndarray, lam: float, sweeps: int = 30) -> np.ndarray:
    q = g.shape[1]
    a = lalg.matmul(g.T, g) + lam * np.eye(q)
    x = np.array(lalg.gaussian_solve(a, gty, PIVOT_TOL))
    for _ in range(sweeps):
        r = _accurate_matvec(g, x, offset=y, sign=-1.0)  # y - G x
        rhs = _accurate_matvec(g.T, r, offset=-lam * x)  # G^T r - lam x
        dx = lalg.gaussian_solve(a, rhs, PIVOT_TOL)
        x = x + dx
        if lalg.norm2(dx) <= 4 * np.finfo(float).eps * max(lalg.norm2(x), np.finfo(float).tiny):
            break
    return x


def _richardson(lam1: float, x1: np.ndarray, lam2: float, x2: np.ndarray) -> np.ndarray:
    """Remove the term linear in lam from two ridge solutions."""
    return (lam1 * x2 - lam2 * x1) / (lam1 - lam2)


def min_norm_least_squares(g, y, ladder: tuple[float, ...] = LAMBDA_LADDER) -> OracleResult:
    """Minimum-norm least-squares solution of ``G x = y`` by the ridge ladder.

    The answer is the extrapolation of the two largest rungs; the extrapolation
    of the two smallest must agree with it to ``AGREEMENT`` relative, else the
    problem is too ill-conditioned for this route.
    """
    g = lalg.as_matrix(g, "G")
    y = lalg.as_vector(y, "y")
    if y.shape[0] != g.shape[0]:
        raise DimensionError(f"y has {y.shape[0]} entries, G has {g.shape[0]} rows")
    if lalg.max_abs(g) == 0.0:
        raise ValueError("G must be nonzero")
    if len(ladder) < 3:
        raise ValueError("ladder needs at least three values")
    ladder = tuple(sorted(ladder, reverse=True))

    gty = _accurate_matvec(g.T, y)
    xs = [_ridge(g, y, gty, lam) for lam in ladder]
    coarse = _richardson(ladder[0], xs[0], ladder[1], xs[1])
    fine = _richardson(ladder[-2], xs[-2], ladder[-1], xs[-1])
    scale = max(lalg.norm2(coarse), lalg.norm2(fine))
    if scale > 0 and lalg.norm2(coarse - fine) > AGREEMENT * scale:
        raise IllConditionedError(
            f"ridge extrapolations disagree by {lalg.norm2(coarse - fine) / scale:.3e} relative"
        )
    residual = lalg.norm2(_accurate_matvec(g, coarse, offset=y, sign=-1.0))
    return OracleResult(lalg._frozen(coarse), residual, ladder)


def residual_is_minimal(g, y, candidate, trials: int, seed: int = 0, margin: float = 1e-9) -> bool:
    """Probe that no random perturbation lowers ||y - G x|| by more than ``margin``."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    g = lalg.as_matrix(g, "G")
    y = lalg.as_vector(y, "y")
    x = lalg.as_vector(candidate, "candidate")
    base = lalg.norm2(y - lalg.matmul(g, x))
    step = 1e-3 * max(1.0, lalg.norm2(x))
    rng = np.random.default_rng(seed)
    for _ in range(trials):
        delta = rng.standard_normal(x.shape[0])
        delta *= step / lalg.norm2(delta)
        if lalg.norm2(y - lalg.matmul(g, x + delta)) < base - margin:
            return False
    return True
