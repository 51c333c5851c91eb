"""Observer-based iterative solver for ``Y_d = G U``.

The iteration is ``U_{k+1} = (I - F G) U_k + F Y_d``. With a full-rank
factorization ``G = H Ghat`` (rank m) it converges for every ``Y_d`` when
``rho(I_m - Ghat F H) < 1``, and the limit is

    [I - F H (H^T G F H)^{-1} H^T G] U_0 + F H (H^T G F H)^{-1} H^T Y_d.

When every column of F^T lies in the column space of G (called property P
below), that limit is a least-squares solution even if the equation has no
exact solution. Gains come in three flavours: the transpose rule
``F = sigma G^T``, deadbeat gains that make ``I_m - Ghat F H`` nilpotent, and
user-supplied matrices.
"""
from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from . import _kernels, lalg
from .errors import (
    DimensionError,
    NoCertificateError,
    NonFiniteError,
    NumericalError,
    PropertyPViolatedError,
    SigmaOutOfRangeError,
    SingularMatrixError,
)
from .lalg import DEFAULT_TOL, RankFactorization

log = logging.getLogger(__name__)

DIVERGENCE_MARGIN = 1e-3


class Solvability(enum.Enum):
    SOLVABLE = "Solvable"
    UNSOLVABLE = "Unsolvable"


class NilpotentKind(enum.Enum):
    ZERO = "zero"
    SHIFT = "shift"


# --- gain specifications ----------------------------------------------------

@dataclass(frozen=True)
class SigmaTranspose:
    sigma: float | None = None


@dataclass(frozen=True)
class Deadbeat:
    kind: NilpotentKind = NilpotentKind.ZERO


@dataclass(frozen=True)
class Custom:
    f: np.ndarray


GainSpec = Union[SigmaTranspose, Deadbeat, Custom]


# --- convergence certificates -----------------------------------------------

@dataclass(frozen=True)
class MonotoneContraction:
    def __str__(self) -> str:
        return "MonotoneContraction"


@dataclass(frozen=True)
class Nilpotent:
    nu: int

    def __str__(self) -> str:
        return f"Nilpotent(nu={self.nu})"


@dataclass(frozen=True)
class SpectralEstimate:
    rho: float
    diverging: bool = False

    def __str__(self) -> str:
        flag = ", diverging" if self.diverging else ""
        return f"SpectralEstimate(rho~{self.rho:.6g}{flag})"


@dataclass(frozen=True)
class Unverified:
    def __str__(self) -> str:
        return "Unverified"


Certificate = Union[MonotoneContraction, Nilpotent, SpectralEstimate, Unverified]


@dataclass(frozen=True)
class Gain:
    f: np.ndarray
    property_p: bool
    certificate: Certificate


# --- problem and results ----------------------------------------------------

@dataclass(frozen=True)
class LaeProblem:
    """The pair (G, Y_d) with its rank factorization.

    A factorization may be supplied (it is checked against ``g``); otherwise
    the pivot-column / RREF factorization is computed.
    """

    g: np.ndarray
    y_d: np.ndarray
    factorization: RankFactorization | None = None
    tol: float = DEFAULT_TOL

    def __post_init__(self):
        g = lalg.as_matrix(self.g, "G")
        y = lalg.as_vector(self.y_d, "Y_d")
        if y.shape[0] != g.shape[0]:
            raise DimensionError(f"Y_d has {y.shape[0]} entries but G has {g.shape[0]} rows")
        if lalg.max_abs(g) == 0.0:
            raise ValueError("G must be nonzero")
        if lalg.max_abs(y) == 0.0:
            raise ValueError("Y_d must be nonzero")
        fact = self.factorization
        if fact is None:
            fact = lalg.full_rank_factorization(g, self.tol)
        else:
            lalg.check_factorization(g, fact, self.tol)
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "y_d", y)
        object.__setattr__(self, "factorization", fact)

    @property
    def p(self) -> int:
        return self.g.shape[0]

    @property
    def q(self) -> int:
        return self.g.shape[1]

    @property
    def rank(self) -> int:
        return self.factorization.rank


@dataclass(frozen=True)
class SolverConfig:
    epsilon: float = 1e-5
    residual_epsilon: float = 1e-3
    max_iters: int = 1_000_000
    u0: np.ndarray | None = None
    record_trace: bool = False

    def __post_init__(self):
        if not self.epsilon > 0 or not self.residual_epsilon > 0:
            raise ValueError("epsilon and residual_epsilon must be positive")
        if int(self.max_iters) < 1:
            raise ValueError("max_iters must be a positive integer")
        if self.u0 is not None:
            object.__setattr__(self, "u0", lalg.as_vector(self.u0, "u0"))


@dataclass(frozen=True)
class IterationTrace:
    """Per-iteration step and residual norms; row i is iteration k = i + 1."""

    step_norms: np.ndarray
    residual_norms: np.ndarray

    @property
    def ks(self) -> np.ndarray:
        return np.arange(1, len(self.step_norms) + 1)

    def rows(self):
        for k, s, r in zip(self.ks, self.step_norms, self.residual_norms):
            yield int(k), float(s), float(r)

    def __len__(self) -> int:
        return len(self.step_norms)


@dataclass(frozen=True)
class SolveOutcome:
    u_inf: np.ndarray
    iterations: int
    final_step_norm: float
    final_residual: float
    solvability: Solvability
    converged: bool
    residual_probe_passed: bool
    trace: IterationTrace | None = None

    @property
    def converged_at(self) -> int | None:
        """Index k of the first iterate that already equals the limit within epsilon.

        The stopping rule compares U_k with U_{k-1}, so this is one less than
        ``iterations``; a deadbeat gain of degree nu gives ``converged_at == nu``.
        """
        return self.iterations - 1 if self.converged else None


@dataclass(frozen=True)
class SolutionSet:
    """Every limit of the iteration: ``null_projector @ U_0 + particular``."""

    particular: np.ndarray
    null_projector: np.ndarray
    null_basis: tuple[np.ndarray, ...]
    is_least_squares: bool

    def limit_from(self, u0) -> np.ndarray:
        u0 = lalg.as_vector(u0, "u0")
        return lalg.matmul(self.null_projector, u0) + self.particular


# --- rank tests -------------------------------------------------------------

def _span_contains(g: np.ndarray, extra: np.ndarray, tol: float) -> bool:
    """True when every column of ``extra`` lies in the column space of ``g``."""
    scale = lalg.max_abs(extra)
    if scale == 0.0:
        return True
    # Shrink oversized columns so they cannot mask the pivots of g; never
    # enlarge, or rounding noise in a near-zero column would look like rank.
    if scale > lalg.max_abs(g):
        extra = extra * (lalg.max_abs(g) / scale)
    return lalg.rank(np.hstack([g, extra]), tol) == lalg.rank(g, tol)


def classify_solvability(problem: LaeProblem) -> Solvability:
    """Solvable iff appending Y_d as a column leaves the rank unchanged."""
    if _span_contains(problem.g, problem.y_d[:, None], problem.tol):
        return Solvability.SOLVABLE
    return Solvability.UNSOLVABLE


def has_property_p(problem: LaeProblem, f: np.ndarray) -> bool:
    return _span_contains(problem.g, np.asarray(f).T, problem.tol)


# --- gains ------------------------------------------------------------------

def sigma_bound(problem: LaeProblem) -> float:
    """Upper end of the admissible step-size interval, 2 / trace(G G^T)."""
    return 2.0 / lalg.trace_gram(problem.g)


def default_gain(problem: LaeProblem, sigma: float | None = None) -> Gain:
    """F = sigma G^T; sigma defaults to 1/trace(G G^T)."""
    bound = sigma_bound(problem)
    if sigma is None:
        sigma = 1.0 / lalg.trace_gram(problem.g)
    elif not 0.0 < sigma < bound:
        raise SigmaOutOfRangeError(f"sigma={sigma!r} must lie in (0, {bound!r})")
    f = lalg.as_matrix(sigma * problem.g.T, "F")
    return Gain(f=f, property_p=True, certificate=MonotoneContraction())


def shift_matrix(m: int) -> np.ndarray:
    """Ones on the first super-diagonal; nilpotent of degree m."""
    return np.eye(m, k=1)


def _observable_block(problem: LaeProblem, f: np.ndarray) -> np.ndarray:
    """I_m - Ghat F H, the error map in the observable coordinates."""
    fact = problem.factorization
    return np.eye(fact.rank) - lalg.chain(fact.ghat, f, fact.h)


def _gram_condition(x: np.ndarray, tol: float) -> float:
    """Frobenius condition number of the m x m Gram matrix of a full-rank factor."""
    gram = lalg.matmul(x, x.T) if x.shape[0] < x.shape[1] else lalg.matmul(x.T, x)
    try:
        inv = lalg.gaussian_solve(gram, np.eye(gram.shape[0]), tol)
    except SingularMatrixError:
        return float("inf")
    return lalg.frobenius(gram) * lalg.frobenius(inv)


def _nilpotency_tol(problem: LaeProblem, f: np.ndarray) -> float:
    """Rank tolerance widened to the rounding floor of forming I_m - Ghat F H.

    Gains built through the Gram matrices of H and Ghat inherit their
    condition numbers, and the product itself adds m * eps * |Ghat| |F| |H|.
    Poorly conditioned pivot columns push that above the plain tolerance.
    """
    fact = problem.factorization
    spread = (_gram_condition(fact.h, problem.tol) + _gram_condition(fact.ghat, problem.tol)
              + lalg.frobenius(fact.ghat) * lalg.frobenius(f) * lalg.frobenius(fact.h))
    floor = fact.rank * np.finfo(float).eps * spread
    return max(problem.tol, floor) if math.isfinite(floor) else problem.tol


def deadbeat_gain(problem: LaeProblem, kind: NilpotentKind = NilpotentKind.ZERO) -> Gain:
    """F = Ghat^T (Ghat Ghat^T)^{-1} (I_m - N) (H^T H)^{-1} H^T for a nilpotent N."""
    fact = problem.factorization
    m = fact.rank
    kind = NilpotentKind(kind)
    nil = np.zeros((m, m)) if kind is NilpotentKind.ZERO else shift_matrix(m)
    expected_nu = 1 if kind is NilpotentKind.ZERO else m
    try:
        # Ghat^T (Ghat Ghat^T)^{-1} and (H^T H)^{-1} H^T, via QR so the
        # Gram matrices' squared condition numbers never enter.
        ghat_pinv = lalg.pseudo_inverse_full_column(fact.ghat.T, problem.tol).T
        h_pinv = lalg.pseudo_inverse_full_column(fact.h, problem.tol)
    except SingularMatrixError as exc:
        raise NumericalError(f"rank factorization is degenerate: {exc}") from exc
    f = lalg.as_matrix(lalg.chain(ghat_pinv, np.eye(m) - nil, h_pinv), "F")
    nu = lalg.nilpotency_degree(_observable_block(problem, f), _nilpotency_tol(problem, f))
    if nu != expected_nu:
        raise NumericalError(f"deadbeat gain has nilpotency degree {nu}, expected {expected_nu}")
    return Gain(f=f, property_p=has_property_p(problem, f), certificate=Nilpotent(nu))


def validate_gain(problem: LaeProblem, f) -> Gain:
    """Check property P and certify convergence of an arbitrary gain."""
    f = lalg.as_matrix(f, "F")
    if f.shape != (problem.q, problem.p):
        raise DimensionError(f"F must be {problem.q}x{problem.p}, got {f.shape[0]}x{f.shape[1]}")
    block = _observable_block(problem, f)
    nu = lalg.nilpotency_degree(block, _nilpotency_tol(problem, f))
    if nu is not None:
        cert: Certificate = Nilpotent(nu)
    else:
        rho = lalg.spectral_radius_estimate(block, tol=problem.tol)
        diverging = rho >= 1.0 + DIVERGENCE_MARGIN
        if diverging:
            log.warning("gain looks divergent: spectral radius estimate %.6g", rho)
        cert = SpectralEstimate(rho, diverging)
    return Gain(f=f, property_p=has_property_p(problem, f), certificate=cert)


def make_gain(problem: LaeProblem, spec: GainSpec) -> Gain:
    if isinstance(spec, SigmaTranspose):
        return default_gain(problem, spec.sigma)
    if isinstance(spec, Deadbeat):
        return deadbeat_gain(problem, spec.kind)
    if isinstance(spec, Custom):
        return validate_gain(problem, spec.f)
    raise TypeError(f"unknown gain spec {spec!r}")


# --- iteration --------------------------------------------------------------

def _check_gain_shape(problem: LaeProblem, f: np.ndarray) -> None:
    if f.shape != (problem.q, problem.p):
        raise DimensionError(f"F must be {problem.q}x{problem.p}, got {f.shape}")


def _iteration_matrices(problem: LaeProblem, f: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    m = np.eye(problem.q) - lalg.matmul(f, problem.g)
    c = lalg.matmul(f, problem.y_d)
    return np.ascontiguousarray(m), np.ascontiguousarray(c)


def iterate_once(problem: LaeProblem, f, u_k) -> np.ndarray:
    """One update U_{k+1} = (I_q - F G) U_k + F Y_d."""
    f = np.asarray(f, dtype=np.float64)
    _check_gain_shape(problem, f)
    u_k = lalg.as_vector(u_k, "U_k")
    if u_k.shape[0] != problem.q:
        raise DimensionError(f"U_k must have {problem.q} entries")
    m, c = _iteration_matrices(problem, f)
    return lalg._frozen(_kernels.affine_step(m, c, np.ascontiguousarray(u_k)))


def solve(problem: LaeProblem, gain: Gain | np.ndarray, config: SolverConfig | None = None) -> SolveOutcome:
    """Iterate from ``config.u0`` until ||U_k - U_{k-1}||_2 < epsilon.

    ``iterations`` is the first such k and ``u_inf`` is U_k. Hitting
    ``max_iters`` returns ``converged=False``; a NaN/Inf iterate raises.
    """
    config = config or SolverConfig()
    f = gain.f if isinstance(gain, Gain) else lalg.as_matrix(gain, "F")
    _check_gain_shape(problem, f)
    u0 = np.zeros(problem.q) if config.u0 is None else np.array(config.u0)
    if u0.shape != (problem.q,):
        raise DimensionError(f"u0 must have {problem.q} entries, got {u0.shape}")

    m, c = _iteration_matrices(problem, f)
    g = np.ascontiguousarray(problem.g)
    y = np.ascontiguousarray(problem.y_d)
    u, k, status, last_step, steps, residuals = _kernels.iterate(
        m, c, g, y, np.ascontiguousarray(u0), float(config.epsilon), int(config.max_iters), bool(config.record_trace)
    )
    if status == _kernels.NON_FINITE:
        raise NonFiniteError(f"iterate {k} is not finite; the gain diverges")

    residual = float(_kernels.residual_norm(g, y, u))
    trace = IterationTrace(lalg._frozen(steps), lalg._frozen(residuals)) if config.record_trace else None
    return SolveOutcome(
        u_inf=lalg._frozen(u),
        iterations=int(k),
        final_step_norm=float(last_step),
        final_residual=residual,
        solvability=classify_solvability(problem),
        converged=status == _kernels.CONVERGED,
        residual_probe_passed=residual < config.residual_epsilon,
        trace=trace,
    )


# --- closed forms -----------------------------------------------------------

def projected_target(problem: LaeProblem) -> np.ndarray:
    """Orthogonal projection H (H^T H)^{-1} H^T Y_d of Y_d onto span(G)."""
    h = problem.factorization.h
    coeffs = lalg.gaussian_solve(lalg.matmul(h.T, h), lalg.matmul(h.T, problem.y_d), problem.tol)
    return lalg.matmul(h, coeffs)


def _null_basis(ghat: np.ndarray, tol: float) -> tuple[np.ndarray, ...]:
    """Basis of null(G) = null(Ghat): one vector per free column of rref(Ghat)."""
    reduced, pivots, _ = lalg.rref(ghat, tol)
    q = ghat.shape[1]
    basis = []
    for j in range(q):
        if j in pivots:
            continue
        vec = np.zeros(q)
        vec[j] = 1.0
        for row, col in enumerate(pivots):
            vec[col] = -reduced[row, j]
        basis.append(lalg._frozen(vec))
    return tuple(basis)


def solution_set(problem: LaeProblem, gain: Gain) -> SolutionSet:
    """Particular solution and null-space projector of the iteration's limits."""
    if not gain.property_p:
        raise PropertyPViolatedError("gain rows leave span(G); limits need not be least-squares solutions")
    if not isinstance(gain.certificate, (MonotoneContraction, Nilpotent)):
        raise NoCertificateError(f"gain certificate {gain.certificate} does not prove convergence")
    f = gain.f
    _check_gain_shape(problem, f)
    h = problem.factorization.h
    fh = lalg.matmul(f, h)
    core = lalg.chain(h.T, problem.g, fh)
    try:
        solved = lalg.gaussian_solve(core, h.T, problem.tol)  # (H^T G F H)^{-1} H^T
    except SingularMatrixError as exc:
        raise NumericalError(f"H^T G F H is singular: {exc}") from exc
    lift = lalg.matmul(fh, solved)
    particular = lalg.matmul(lift, problem.y_d)
    projector = lalg._frozen(np.eye(problem.q) - lalg.matmul(lift, problem.g))

    basis = _null_basis(problem.factorization.ghat, problem.tol)
    if len(basis) != problem.q - problem.rank:
        raise NumericalError(f"null space has dimension {len(basis)}, expected {problem.q - problem.rank}")
    return SolutionSet(
        particular=particular,
        null_projector=projector,
        null_basis=basis,
        is_least_squares=classify_solvability(problem) is Solvability.UNSOLVABLE,
    )
