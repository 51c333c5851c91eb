import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from obslae import cases, lalg
from obslae.errors import DimensionError, NonFiniteError, SingularMatrixError, ZeroMatrixError
from obslae.problems import RANK_CLASSES, random_matrix, rank_for_class, random_sizes
from obslae.rng import Lcg

seeds = st.integers(min_value=0, max_value=2**32)


def _seeded_matrix(seed, max_dim=12):
    rng = Lcg(seed)
    rank_class = RANK_CLASSES[seed % 3]
    p, q = random_sizes(rng, rank_class, max_dim)
    m = rank_for_class(rng, p, q, rank_class)
    return random_matrix(rng, p, q, m), m


# --- construction -------------------------------------------------------------

def test_as_matrix_rejects_non_finite():
    with pytest.raises(NonFiniteError):
        lalg.as_matrix([[1.0, np.nan]])
    with pytest.raises(NonFiniteError):
        lalg.as_vector([np.inf])


def test_as_matrix_rejects_ragged_and_empty():
    with pytest.raises((DimensionError, ValueError)):
        lalg.as_matrix([[1.0, 2.0], [3.0]])
    with pytest.raises(DimensionError):
        lalg.as_matrix(np.zeros((0, 3)))


def test_values_are_read_only():
    m = lalg.as_matrix([[1.0, 2.0]])
    with pytest.raises(ValueError):
        m[0, 0] = 5.0


# --- products -----------------------------------------------------------------

def test_matmul_identity():
    m = np.array([[1.0, -2.0, 3.5], [0.25, 4.0, -1.0]])
    assert np.array_equal(lalg.matmul(np.eye(2), m), m)


def test_matmul_hand_example():
    out = lalg.matmul(np.array([[1.0, 2.0], [3.0, 4.0]]), np.array([[1.0], [1.0]]))
    assert np.array_equal(out, np.array([[3.0], [7.0]]))


def test_trace_gram_of_demo_matrix():
    assert lalg.trace_gram(cases.DEMO_G) == 232.0


def test_matmul_shape_mismatch():
    with pytest.raises(DimensionError):
        lalg.matmul(np.ones((2, 3)), np.ones((2, 3)))


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_matmul_matches_numpy(seed):
    rng = Lcg(seed)
    a = rng.uniform(-10, 10, (rng.integer(1, 9), rng.integer(1, 9)))
    b = rng.uniform(-10, 10, (a.shape[1], rng.integer(1, 9)))
    assert np.allclose(lalg.matmul(a, b), a @ b, rtol=1e-13, atol=1e-12)


# --- rref / rank ----------------------------------------------------------------

def test_rref_demo_rank():
    assert lalg.rank(cases.DEMO_G) == 3


def test_rref_identity():
    reduced, pivots, r = lalg.rref(np.eye(3))
    assert r == 3 and pivots == [0, 1, 2]
    assert np.array_equal(reduced, np.eye(3))


def test_rref_rank_one():
    reduced, pivots, r = lalg.rref(np.array([[1.0, 2.0], [2.0, 4.0]]))
    assert r == 1 and pivots == [0]
    assert np.allclose(reduced, [[1.0, 2.0], [0.0, 0.0]], atol=1e-15)


def test_rref_zero_matrix():
    reduced, pivots, r = lalg.rref(np.zeros((2, 3)))
    assert r == 0 and pivots == [] and not reduced.any()


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_rref_is_idempotent(seed):
    g, m = _seeded_matrix(seed)
    reduced, pivots, r = lalg.rref(g)
    again, pivots2, r2 = lalg.rref(reduced)
    assert r == r2 == m and pivots == pivots2
    assert np.allclose(again, reduced, atol=1e-10)


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_rank_matches_constructed_rank(seed):
    g, m = _seeded_matrix(seed)
    assert lalg.rank(g) == m == np.linalg.matrix_rank(g)


# --- full rank factorization ------------------------------------------------------

def test_factorization_rank_one():
    fact = lalg.full_rank_factorization(np.array([[1.0, 2.0], [2.0, 4.0]]))
    assert np.array_equal(fact.h, [[1.0], [2.0]])
    assert np.allclose(fact.ghat, [[1.0, 2.0]], atol=1e-15)


def test_factorization_identity():
    fact = lalg.full_rank_factorization(np.eye(4))
    assert fact.rank == 4
    assert np.array_equal(fact.h, np.eye(4)) and np.array_equal(fact.ghat, np.eye(4))


def test_factorization_demo():
    g = cases.DEMO_G
    fact = lalg.full_rank_factorization(g)
    assert fact.rank == 3 and fact.h.shape == (4, 3) and fact.ghat.shape == (3, 5)
    assert lalg.frobenius(g - fact.reconstruct()) <= 1e-10 * lalg.frobenius(g)


def test_factorization_of_zero_matrix():
    with pytest.raises(ZeroMatrixError):
        lalg.full_rank_factorization(np.zeros((3, 2)))


def test_check_factorization_rejects_wrong_factors():
    g = cases.DEMO_G
    fact = lalg.full_rank_factorization(g)
    bad = lalg.RankFactorization(fact.h, fact.ghat * 1.01, fact.rank, fact.pivot_cols)
    with pytest.raises(Exception):
        lalg.check_factorization(g, bad)


@settings(max_examples=60, deadline=None)
@given(seeds)
def test_factorization_round_trip(seed):
    g, m = _seeded_matrix(seed)
    fact = lalg.full_rank_factorization(g)
    assert fact.rank == m <= min(g.shape)
    assert lalg.frobenius(g - fact.reconstruct()) <= 1e-10 * lalg.frobenius(g)
    assert lalg.rank(fact.h) == m and lalg.rank(fact.ghat) == m


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_permuted_factorization_still_reconstructs(seed):
    g, m = _seeded_matrix(seed)
    fact = lalg.full_rank_factorization(g)
    perm = list(range(m))[::-1]
    alt = fact.permuted(perm)
    lalg.check_factorization(g, alt)
    assert np.allclose(alt.reconstruct(), fact.reconstruct(), atol=1e-13)


# --- gaussian_solve ---------------------------------------------------------------

def test_gaussian_solve_identity():
    assert np.array_equal(lalg.gaussian_solve(np.eye(3), [1.0, 2.0, 3.0]), [1.0, 2.0, 3.0])


def test_gaussian_solve_hand_example():
    x = lalg.gaussian_solve(np.array([[2.0, 1.0], [1.0, 2.0]]), [3.0, 3.0])
    assert np.allclose(x, [1.0, 1.0], atol=1e-15)


def test_gaussian_solve_singular():
    with pytest.raises(SingularMatrixError):
        lalg.gaussian_solve(np.array([[1.0, 2.0], [2.0, 4.0]]), [1.0, 2.0])


def test_gaussian_solve_matrix_rhs():
    a = np.array([[4.0, 1.0], [2.0, 3.0]])
    x = lalg.gaussian_solve(a, np.eye(2))
    assert np.allclose(a @ x, np.eye(2), atol=1e-15)


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_gaussian_solve_residual(seed):
    rng = Lcg(seed)
    n = rng.integer(1, 20)
    a = rng.uniform(-1, 1, (n, n)) + n * np.eye(n)
    b = rng.uniform(-1, 1, n)
    x = lalg.gaussian_solve(a, b)
    assert lalg.norm2(a @ x - b) <= 1e-12 * max(1.0, lalg.norm2(b))


# --- nilpotency and spectral radius ----------------------------------------------

def test_nilpotency_of_shift():
    assert lalg.nilpotency_degree(np.array([[0.0, 1.0], [0.0, 0.0]])) == 2


def test_identity_is_not_nilpotent():
    assert lalg.nilpotency_degree(np.eye(2)) is None


def test_zero_matrix_has_degree_one():
    assert lalg.nilpotency_degree(np.zeros((3, 3))) == 1


@pytest.mark.parametrize("n", [1, 3, 7, 30])
def test_shift_matrix_degree_is_its_size(n):
    assert lalg.nilpotency_degree(np.eye(n, k=1)) == n


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_similar_strictly_triangular_is_nilpotent(seed):
    rng = Lcg(seed)
    n = rng.integer(2, 8)
    t = np.triu(rng.uniform(0.5, 1.0, (n, n)), k=1)
    s = rng.uniform(-1, 1, (n, n)) + 3 * np.eye(n)
    a = s @ t @ np.linalg.inv(s)
    assert lalg.nilpotency_degree(a, 1e-9) == n


def test_spectral_radius_examples():
    assert abs(lalg.spectral_radius_estimate(np.eye(2)) - 1.0) <= 1e-3
    assert abs(lalg.spectral_radius_estimate(np.diag([0.5, 0.2])) - 0.5) <= 1e-3
    assert lalg.spectral_radius_estimate(np.array([[0.0, 1.0], [0.0, 0.0]])) == 0.0


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_spectral_radius_matches_eigenvalues(seed):
    rng = Lcg(seed)
    n = rng.integer(1, 8)
    a = rng.uniform(-1, 1, (n, n))
    a = (a + a.T) / 2 * rng.uniform(0.1, 3.0)  # symmetric, so no Jordan blocks
    rho = max(abs(np.linalg.eigvalsh(a)))
    assert abs(lalg.spectral_radius_estimate(a) - rho) <= 1e-3 * max(1.0, rho)


# --- thin QR ------------------------------------------------------------------------

@settings(max_examples=40, deadline=None)
@given(seeds)
def test_thin_qr(seed):
    rng = Lcg(seed)
    m = rng.integer(1, 10)
    a = rng.uniform(-1, 1, (m + rng.integer(0, 10), m))
    q, r = lalg.thin_qr(a)
    assert lalg.max_abs(q.T @ q - np.eye(m)) <= 1e-14
    assert np.array_equal(r, np.triu(r))
    assert lalg.max_abs(q @ r - a) <= 1e-14
    pinv = lalg.pseudo_inverse_full_column(a)
    assert lalg.max_abs(pinv @ a - np.eye(m)) <= 1e-10


def test_thin_qr_rejects_dependent_columns():
    with pytest.raises(SingularMatrixError):
        lalg.thin_qr(np.array([[1.0, 2.0], [2.0, 4.0], [0.0, 0.0]]))
    with pytest.raises(DimensionError):
        lalg.thin_qr(np.ones((2, 3)))


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_nilpotency_degree_is_consistent(seed):
    rng = Lcg(seed)
    n = rng.integer(1, 8)
    a = np.triu(rng.uniform(-1, 1, (n, n)), k=rng.integer(0, 2))
    tol = 1e-10
    nu = lalg.nilpotency_degree(a, tol)
    powers = [np.eye(n)]
    for _ in range(n):
        powers.append(powers[-1] @ a)
    if nu is None:
        assert all(lalg.max_abs(powers[k]) > tol * max(1.0, lalg.max_abs(powers[k - 1])) for k in range(1, n + 1))
    else:
        assert lalg.max_abs(powers[nu]) <= tol * max(1.0, lalg.max_abs(powers[nu - 1]))
        assert lalg.max_abs(powers[nu - 1]) > 0.0
        assert all(lalg.max_abs(powers[k]) > tol * max(1.0, lalg.max_abs(powers[k - 1])) for k in range(1, nu))


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_gaussian_solve_residual_bound_general(seed):
    rng = Lcg(seed)
    n = rng.integer(1, 25)
    a = rng.uniform(-1000, 1000, (n, n))
    b = rng.uniform(-1000, 1000, n)
    x = lalg.gaussian_solve(a, b)
    assert lalg.norm2(a @ x - b) <= 1e-8 * (lalg.frobenius(a) * lalg.norm2(x) + lalg.norm2(b))
