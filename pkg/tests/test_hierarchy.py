import numpy as np
import pytest
from hypothesis import given, strategies as st

from mgbounds.errors import BadDimension, BadParameter, NotSpd
from mgbounds.hierarchy import (
    BlockPartition,
    Hierarchy,
    alpha_parameterized_example,
    bilinear_interpolation_2d,
    cbs_constant_block,
    cbs_constant_general,
    check_prolongation,
    complement_basis,
    galerkin,
    ideal_interpolation,
    laplacian_1d,
    laplacian_2d,
    linear_interpolation_1d,
    normalize_prolongation,
    poisson_1d_hierarchy,
    poisson_2d_hierarchy,
)
from mgbounds.instances import random_prolongation
from mgbounds.linalg import eigvalsh, gen_eig, spd_inverse, spd_solve, spd_sqrt
from mgbounds.smoothers import make_weighted_jacobi

from conftest import spd_from_seed


def lap_eigs(n):
    return 2 - 2 * np.cos(np.arange(1, n + 1) * np.pi / (n + 1))


# -- model problems ------------------------------------------------------------

def test_laplacian_1d_small():
    np.testing.assert_array_equal(laplacian_1d(2), [[2, -1], [-1, 2]])
    np.testing.assert_allclose(eigvalsh(laplacian_1d(3)), [2 - np.sqrt(2), 2, 2 + np.sqrt(2)])
    assert eigvalsh(laplacian_1d(7))[0] == pytest.approx(2 - 2 * np.cos(np.pi / 8))


def test_laplacian_2d_structure():
    A = laplacian_2d(2, 2)
    assert A.shape == (4, 4)
    np.testing.assert_array_equal(np.diag(A), 4)
    np.testing.assert_array_equal(A, A.T)
    # x index fastest: neighbours of node 0 are nodes 1 (x) and 2 (y)
    np.testing.assert_array_equal(A[0], [4, -1, -1, 0])


def test_laplacian_2d_kronecker_sum_spectrum():
    w = eigvalsh(laplacian_2d(4, 3))
    sums = np.sort(np.add.outer(lap_eigs(3), lap_eigs(4)).ravel())
    np.testing.assert_allclose(w, sums, atol=1e-13)
    assert eigvalsh(laplacian_2d(4, 4))[-1] == pytest.approx(2 * lap_eigs(4)[-1])


def test_laplacian_too_small():
    with pytest.raises(BadDimension):
        laplacian_1d(1)


def test_linear_interpolation_shapes():
    np.testing.assert_array_equal(linear_interpolation_1d(3), [[0.5], [1.0], [0.5]])
    P = linear_interpolation_1d(7)
    assert P.shape == (7, 3)
    np.testing.assert_array_equal(P.sum(axis=0), [2, 2, 2])
    with pytest.raises(BadDimension):
        linear_interpolation_1d(8)


def test_galerkin_linear_interpolation_stencil():
    # P^T A P of the 1D Laplacian is (1/2) tridiag(-1, 2, -1)
    Ac = galerkin(laplacian_1d(7), linear_interpolation_1d(7))
    np.testing.assert_allclose(Ac, 0.5 * laplacian_1d(3), atol=1e-15)
    P = linear_interpolation_1d(7)
    np.testing.assert_allclose(Ac, P.T @ laplacian_1d(7) @ P, atol=1e-15)


def test_galerkin_identity_prolongation():
    A = spd_from_seed(0, 5)
    np.testing.assert_allclose(galerkin(A, np.eye(5)), A)


def test_bilinear_interpolation_matches_kron():
    P = bilinear_interpolation_2d(7, 5)
    assert P.shape == (35, 6)
    Ac = galerkin(laplacian_2d(7, 5), P)
    assert np.all(eigvalsh(Ac) > 0)


def test_rank_deficient_prolongation_rejected():
    with pytest.raises(NotSpd):
        check_prolongation(np.array([[1.0, 2.0], [2.0, 4.0], [0.0, 0.0]]))
    with pytest.raises(BadDimension):
        check_prolongation(np.eye(3))
    check_prolongation(np.eye(3), allow_square=True)


# -- ideal interpolation and Schur complements -----------------------------

def test_ideal_interpolation_decoupled():
    A = np.diag([1.0, 2.0, 3.0])
    part = BlockPartition((0, 1), (2,))
    np.testing.assert_array_equal(ideal_interpolation(A, part), [[0], [0], [1]])


def test_ideal_interpolation_small_laplacian():
    part = BlockPartition.from_coarse(3, [1])
    np.testing.assert_allclose(ideal_interpolation(laplacian_1d(3), part), [[0.5], [1], [0.5]])


@given(st.integers(0, 10_000), st.integers(2, 20))
def test_ideal_interpolation_gives_schur_complement(seed, n):
    rng = np.random.default_rng(seed)
    A = spd_from_seed(seed, n, max_cond=1e2)
    coarse = rng.choice(n, size=int(rng.integers(1, n)), replace=False)
    part = BlockPartition.from_coarse(n, coarse)
    Aff, Afc, Acc = part.blocks(A)
    schur = Acc - Afc.T @ spd_solve(Aff, Afc)
    Ac = galerkin(A, ideal_interpolation(A, part))
    assert np.abs(Ac - schur).max() <= 1e-12 * max(1, np.abs(schur).max())


@given(st.integers(0, 10_000), st.integers(2, 25))
def test_galerkin_spd_for_full_rank(seed, n):
    A = spd_from_seed(seed, n)
    P = random_prolongation(np.random.default_rng(seed), n)
    assert eigvalsh(galerkin(A, P))[0] > 0


def test_partition_validation():
    with pytest.raises(BadParameter):
        BlockPartition((0, 1), (1, 2))
    with pytest.raises(BadParameter):
        BlockPartition((), (0,))
    part = BlockPartition.from_coarse(4, [3, 1])
    assert part.fine == (0, 2) and part.coarse == (1, 3)
    P0, S0 = part.coarse_embedding(), part.fine_embedding()
    np.testing.assert_array_equal(np.hstack([S0, P0]).sum(axis=1), 1)


# -- normalization, complements, C.B.S. constants -----------------------------

def test_normalize_orthonormal_and_scaled():
    Q, _ = np.linalg.qr(np.random.default_rng(1).standard_normal((6, 3)))
    Ps, U = normalize_prolongation(Q)
    np.testing.assert_allclose(np.abs(U), np.eye(3), atol=1e-14)
    np.testing.assert_allclose(Ps @ U, Q, atol=1e-14)
    Ps, U = normalize_prolongation(2 * Q)
    np.testing.assert_allclose(np.abs(U), 2 * np.eye(3), atol=1e-14)
    np.testing.assert_allclose(np.abs(Ps.T @ Q), np.eye(3), atol=1e-14)


def test_normalize_linear_interpolation():
    P = linear_interpolation_1d(7)
    Ps, U = normalize_prolongation(P)
    np.testing.assert_allclose(Ps.T @ Ps, np.eye(3), atol=1e-12)
    np.testing.assert_allclose(U.T @ U, P.T @ P, atol=1e-12)
    assert np.allclose(U, np.triu(U))


def test_complement_basis_examples():
    S = complement_basis(np.array([[0.0], [1.0]]))
    assert abs(abs(S[0, 0]) - 1) < 1e-15 and abs(S[1, 0]) < 1e-15
    P = np.vstack([np.eye(2), np.zeros((3, 2))])
    S = complement_basis(P)
    np.testing.assert_allclose(S[:2], 0, atol=1e-15)
    assert np.linalg.matrix_rank(S[2:]) == 3


@given(st.integers(0, 10_000), st.integers(2, 25))
def test_complement_basis_properties(seed, n):
    P = random_prolongation(np.random.default_rng(seed), n)
    S = complement_basis(P)
    assert S.shape == (n, n - P.shape[1])
    assert np.linalg.norm(P.T @ S, 2) <= 1e-12 * np.linalg.norm(P, 2) * np.linalg.norm(S, 2)
    np.testing.assert_allclose(S.T @ S, np.eye(S.shape[1]), atol=1e-12)
    assert np.linalg.matrix_rank(np.hstack([S, P])) == n


def test_cbs_examples():
    part = BlockPartition((0,), (1,))
    assert cbs_constant_block(np.diag([2.0, 3.0]), part) == 0.0
    assert cbs_constant_block(np.array([[2.0, 1.0], [1.0, 2.0]]), part) == pytest.approx(0.5)


@given(st.integers(0, 10_000), st.integers(2, 25))
def test_cbs_below_one(seed, n):
    rng = np.random.default_rng(seed)
    A = spd_from_seed(seed, n)
    part = BlockPartition.from_coarse(n, rng.choice(n, size=int(rng.integers(1, n)), replace=False))
    alpha = cbs_constant_block(A, part)
    assert 0 <= alpha < 1
    Aff, Afc, Acc = part.blocks(A)
    oracle = np.linalg.norm(spd_inverse(spd_sqrt(Aff)) @ Afc @ spd_inverse(spd_sqrt(Acc)), 2)
    assert alpha == pytest.approx(oracle, abs=1e-10)


def test_cbs_general_orthogonal_complement_identity_weight():
    P = random_prolongation(np.random.default_rng(2), 6, 2)
    Ps, _ = normalize_prolongation(P)
    assert cbs_constant_general(np.eye(6), complement_basis(P), Ps) == pytest.approx(0, abs=1e-14)


def _pmp_window(W, P):
    Ps, _ = normalize_prolongation(P)
    beta = cbs_constant_general(W, complement_basis(P), Ps)
    inner = spd_inverse(galerkin(spd_inverse(W), Ps))
    return beta, gen_eig(inner, galerkin(W, Ps))


def test_restricted_weight_equivalence_on_laplacian():
    A = laplacian_1d(7)
    W = make_weighted_jacobi(A, 2 / 3).Mtilde
    beta, w = _pmp_window(W, linear_interpolation_1d(7))
    assert 0 < beta < 1
    assert w[0] >= 1 - beta ** 2 - 1e-9 and w[-1] <= 1 + 1e-9


@given(st.integers(0, 10_000), st.integers(3, 20))
def test_restricted_weight_equivalence_random(seed, n):
    W = spd_from_seed(seed, n, max_cond=1e2)
    beta, w = _pmp_window(W, random_prolongation(np.random.default_rng(seed), n))
    assert w[0] >= 1 - beta ** 2 - 1e-9 and w[-1] <= 1 + 1e-9


# -- block example --------------------------------------------------------------

def test_alpha_example_cases():
    A, part = alpha_parameterized_example(0.0, 3, 2)
    np.testing.assert_array_equal(A, np.eye(5))
    A, part = alpha_parameterized_example(0.5, 1, 1)
    np.testing.assert_array_equal(A, [[1, 0.5], [0.5, 1]])
    A, part = alpha_parameterized_example(0.9, 3, 2)
    assert cbs_constant_block(A, part) == pytest.approx(0.9, abs=1e-12)
    with pytest.raises(BadParameter):
        alpha_parameterized_example(1.0, 2, 2)


@given(st.floats(0, 0.99), st.integers(1, 8), st.integers(1, 8), st.booleans())
def test_alpha_example_hits_target(alpha, nf, nc, rotate):
    A, part = alpha_parameterized_example(alpha, nf, nc, seed=3, rotate=rotate)
    Aff, Afc, Acc = part.blocks(A)
    np.testing.assert_array_equal(Aff, np.eye(nf))
    np.testing.assert_array_equal(Acc, np.eye(nc))
    assert cbs_constant_block(A, part) == pytest.approx(alpha, abs=1e-12)


# -- hierarchy bundle ------------------------------------------------------------

def test_poisson_hierarchies():
    h = poisson_1d_hierarchy(31, 3)
    assert h.sizes() == [3, 7, 15, 31] and h.L == 3
    for k in range(1, h.L + 1):
        np.testing.assert_allclose(h.P[k].T @ h.A[k] @ h.P[k], h.A[k - 1], atol=1e-12)
    h2 = poisson_2d_hierarchy(7, 7, 2)
    assert h2.sizes() == [1, 9, 49]


def test_hierarchy_validation():
    h = poisson_1d_hierarchy(15, 2)
    with pytest.raises(BadParameter):
        h.with_coarsest(0.5 * h.A[0])  # A0_hat - A0 not SPSD
    with pytest.raises(BadParameter):
        h.with_gamma(0)
    bad_A = (h.A[0] * 1.01,) + h.A[1:]
    with pytest.raises(BadParameter):
        Hierarchy(bad_A, h.P, h.smoothers, bad_A[0], 1)
