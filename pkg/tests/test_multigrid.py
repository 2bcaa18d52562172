import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from mgbounds.errors import BadBracket, BadParameter
from mgbounds.hierarchy import (
    build_hierarchy,
    galerkin,
    laplacian_1d,
    linear_interpolation_1d,
    poisson_1d_hierarchy,
    smoother_factory,
)
from mgbounds.instances import random_hierarchy, random_triple
from mgbounds.linalg import energy_norm, gen_eig, gen_eig_extremes, is_spsd, operator_energy_norm
from mgbounds.multigrid import (
    coarsest_scale,
    coarsest_shift,
    condition24_threshold,
    corollary43_bounds,
    fixed_point_map,
    fixed_point_residual,
    fixed_point_root,
    implicit_coarse_operator,
    level_quantities,
    mg_cycle,
    mg_error_matrices,
    mg_error_matrix,
    power_iteration_factor,
    restricted_smoother,
    theorem42_certify,
)
from mgbounds.twogrid import TwoGridSetup, build_exact_twogrid, build_inexact_twogrid, deviation_extremes, k_tg


def poisson(n=15, levels=2, gamma=1):
    return poisson_1d_hierarchy(n, levels, smoother_factory("jacobi", 2 / 3), gamma)


# -- cycle ------------------------------------------------------------------------

def test_cycle_fixed_point():
    h = poisson(31, 3, 2)
    u = np.random.default_rng(0).standard_normal(31)
    np.testing.assert_allclose(mg_cycle(h, 3, h.A[3] @ u, u), u, atol=1e-12)


def test_level_one_cycle_is_exact_two_grid_step():
    h = poisson(15, 2)
    E_tg, _ = build_exact_twogrid(TwoGridSetup.exact(h.A[1], h.smoothers[1], h.P[1]))
    rng = np.random.default_rng(1)
    u_star, u0 = rng.standard_normal(7), rng.standard_normal(7)
    u = mg_cycle(h, 1, h.A[1] @ u_star, u0)
    np.testing.assert_allclose(u_star - u, E_tg @ (u_star - u0), atol=1e-12)


def test_single_coarsening_equals_two_grid():
    h = poisson(15, 1)
    E_tg, _ = build_exact_twogrid(TwoGridSetup.exact(h.A[1], h.smoothers[1], h.P[1]))
    np.testing.assert_allclose(mg_error_matrix(h, 1), E_tg, atol=1e-12)


@pytest.mark.parametrize("gamma", [1, 2, 3])
def test_cycle_matches_error_matrix(gamma):
    h = poisson(31, 3, gamma)
    rng = np.random.default_rng(gamma)
    for k in range(1, h.L + 1):
        E = mg_error_matrix(h, k)
        n = h.A[k].shape[0]
        for _ in range(5):
            u_star, u0 = rng.standard_normal(n), rng.standard_normal(n)
            u = mg_cycle(h, k, h.A[k] @ u_star, u0)
            np.testing.assert_allclose(u_star - u, E @ (u_star - u0), atol=1e-11)


def test_error_contraction_in_energy_norm():
    h = poisson(31, 3, 1)
    q = level_quantities(h)
    rng = np.random.default_rng(3)
    A = h.A[3]
    for _ in range(10):
        u_star, u0 = rng.standard_normal(31), rng.standard_normal(31)
        u = mg_cycle(h, 3, A @ u_star, u0)
        assert energy_norm(u_star - u, A) <= q.sigma_img_per_level[2] * energy_norm(u_star - u0, A) + 1e-10


def test_power_iteration_oracle():
    h = poisson(15, 2, 2)
    sigma = level_quantities(h).sigma_img_per_level[1]
    assert power_iteration_factor(h, 2) == pytest.approx(sigma, abs=1e-8)


@given(st.integers(0, 10_000))
def test_random_hierarchy_cycle_matrix(seed):
    rng = np.random.default_rng(seed)
    h = random_hierarchy(rng)
    errors = mg_error_matrices(h)
    for k in range(1, h.L + 1):
        n = h.A[k].shape[0]
        u_star, u0 = rng.standard_normal(n), rng.standard_normal(n)
        u = mg_cycle(h, k, h.A[k] @ u_star, u0)
        np.testing.assert_allclose(u_star - u, errors[k] @ (u_star - u0),
                                   atol=1e-11 * max(1, np.linalg.norm(u_star - u0)))
        assert operator_energy_norm(errors[k], h.A[k]) < 1


# -- implicit coarse operator ----------------------------------------------------------

def test_implicit_coarse_operator_level_one_is_coarsest():
    h = coarsest_shift(poisson(15, 2), 0.3)
    np.testing.assert_array_equal(implicit_coarse_operator(h, 1), h.A0_hat)


def test_perfect_coarse_solve_gives_galerkin():
    h = poisson(31, 3, 2)
    errors = mg_error_matrices(h)
    errors[2] = np.zeros_like(errors[2])
    np.testing.assert_allclose(implicit_coarse_operator(h, 3, errors), h.A[2], atol=1e-12)


@pytest.mark.parametrize("gamma", [1, 2])
def test_two_grid_reduction(gamma):
    h = poisson(31, 3, gamma)
    errors = mg_error_matrices(h)
    for k in range(1, h.L + 1):
        Bc = implicit_coarse_operator(h, k, errors)
        E, _ = build_inexact_twogrid(TwoGridSetup(h.A[k], h.smoothers[k], h.P[k], Bc))
        np.testing.assert_allclose(E, errors[k], atol=1e-10)
        d1, d2 = deviation_extremes(h.A[k], h.smoothers[k].Mtilde, h.P[k], Bc)
        assert d1 <= d2 <= 1 + 1e-10


def test_implicit_coarse_operator_gamma_spot_check():
    h1, h2 = poisson(31, 3, 1), poisson(31, 3, 2)
    B1, B2 = implicit_coarse_operator(h1, 3), implicit_coarse_operator(h2, 3)
    # on this hierarchy W-cycle coarse solves are closer to A_c from above
    assert is_spsd(B1 - B2, scale=np.linalg.norm(B1, 2))


# -- level quantities ---------------------------------------------------------------------

def test_level_quantities_two_level():
    h = poisson(15, 1)
    q = level_quantities(h)
    K = k_tg(h.A[1], h.smoothers[1].Mtilde, h.P[1])
    assert q.sigma_L == pytest.approx(1 - 1 / K)
    assert q.sigma_img_per_level[0] == pytest.approx(q.sigma_L, abs=1e-12)


def test_level_quantities_dense_oracles():
    h = poisson(31, 3)
    q = level_quantities(h)
    taus, epss, sigs = [], [], []
    for k in range(1, 4):
        Mt = h.smoothers[k].Mtilde
        W = galerkin(Mt, h.P[k])
        taus.append(np.max(np.linalg.eigvals(np.linalg.solve(W, h.A[k - 1])).real))
        epss.append(np.min(np.linalg.eigvals(np.linalg.solve(Mt, h.A[k])).real))
        E, _ = build_exact_twogrid(TwoGridSetup.exact(h.A[k], h.smoothers[k], h.P[k]))
        sigs.append(operator_energy_norm(E, h.A[k]))
    assert q.tau_L == pytest.approx(max(taus), rel=1e-10)
    assert q.eps_L == pytest.approx(min(epss), rel=1e-10)
    assert q.sigma_L == pytest.approx(max(sigs), abs=1e-10)
    assert 0 < q.eps_L <= q.tau_L
    for s_img, s_tg in zip(q.sigma_img_per_level, q.sigma_tg_per_level):
        assert s_img >= s_tg - 1e-10


@given(st.integers(0, 10_000))
def test_random_hierarchy_level_laws(seed):
    q = level_quantities(random_hierarchy(np.random.default_rng(seed)))
    assert 0 < q.eps_L <= q.tau_L * (1 + 1e-12)
    for s_img, s_tg in zip(q.sigma_img_per_level, q.sigma_tg_per_level):
        assert s_tg - 1e-10 <= s_img < 1


def test_exact_smoother_sits_on_gate_boundary():
    # Mt = A makes sigma_L = 0 = 1 - eps_L, the degenerate end of the gate
    A = laplacian_1d(7)
    h = build_hierarchy(A, [linear_interpolation_1d(7)], lambda B: _exact_smoother(B))
    q = level_quantities(h, check_gate=False)
    assert abs(q.sigma_L) <= 1e-12 and abs(1 - q.eps_L) <= 1e-12


@given(st.integers(0, 10_000))
def test_sigma_never_exceeds_one_minus_eps(seed):
    q = level_quantities(random_hierarchy(np.random.default_rng(seed)), check_gate=False)
    assert q.sigma_L <= 1 - q.eps_L + 1e-10


def _exact_smoother(B):
    from mgbounds.smoothers import make_smoother
    return make_smoother(B, B)


# -- fixed-point roots ---------------------------------------------------------------------

def test_root_matches_quadratic_closed_form():
    sigma, tau, eps = 0.5, 0.25, 0.2
    x = fixed_point_root(sigma, tau, eps, 1).x_gamma
    # F_1(x) = 0 clears to a quadratic; evaluate its roots independently
    a = tau * (1 - sigma) - eps
    b = eps + sigma * eps - tau * (1 - eps) * (1 - sigma)
    c = -sigma * eps
    roots = np.roots([a, b, c])
    inside = [r.real for r in roots if sigma < r.real < 1 - eps]
    assert len(inside) == 1 and x == pytest.approx(inside[0], abs=1e-12)
    assert corollary43_bounds(sigma, tau, eps)[0] == pytest.approx(x, abs=1e-12)


def test_special_branch_roots():
    x1, x2_hat = corollary43_bounds(0.5, 0.4, 0.2)
    assert x1 == pytest.approx(5 / 7, abs=1e-12)
    assert x2_hat == pytest.approx(1 / (1 + math.sqrt(0.4)), abs=1e-12)
    assert fixed_point_root(0.5, 0.4, 0.2, 1).x_gamma == pytest.approx(5 / 7, abs=1e-12)


def test_generic_branch_x2_hat():
    s, t, e = 0.3, 0.6, 0.1
    x1, x2_hat = corollary43_bounds(s, t, e)
    assert x2_hat == pytest.approx(fixed_point_map(x1, s, t, e, 2), abs=1e-15)


def test_gamma_sweep_decreases_to_sigma():
    s, t, e = 0.4, 0.5, 0.15
    roots = [fixed_point_root(s, t, e, g).x_gamma for g in range(1, 9)]
    gaps = np.diff(roots)
    assert np.all(gaps < 0)
    assert roots[-1] - s < roots[0] - s


def test_root_gate_and_bracket():
    with pytest.raises(BadParameter):
        corollary43_bounds(0.9, 0.5, 0.2)
    with pytest.raises(BadParameter):
        fixed_point_root(0.5, 0.5, 0.2, 0)
    with pytest.raises(BadBracket):
        fixed_point_root(0.9, 0.5, 0.2, 1)  # sigma > 1 - eps


@given(st.integers(0, 100_000))
def test_random_triples(seed):
    s, t, e = random_triple(np.random.default_rng(seed))
    roots = [fixed_point_root(s, t, e, g) for g in range(1, 10)]
    xs = [r.x_gamma for r in roots]
    for r in roots:
        assert s < r.x_gamma < 1 - e
        assert abs(fixed_point_residual(r.x_gamma, s, t, e, r.gamma)) <= 1e-13
    assert all(b < a for a, b in zip(xs, xs[1:]))
    x1, x2_hat = corollary43_bounds(s, t, e)
    assert abs(x1 - xs[0]) <= 1e-10
    assert s < xs[1] <= x2_hat + 1e-10 and x2_hat <= x1 + 1e-12 and x1 < 1 - e


# -- certification ---------------------------------------------------------------------------

def test_threshold_formula():
    from mgbounds.multigrid import MgLevelQuantities
    q = MgLevelQuantities((0.2,), (0.25,), 0.2, 0.5, 0.1)
    assert condition24_threshold(q, 0.5) == pytest.approx(0.1 * 0.3 / (0.8 * 0.4))


@pytest.mark.parametrize("gamma", [1, 2])
def test_certify_exact_coarsest(gamma):
    c = theorem42_certify(poisson(15, 3), gamma)
    assert c.condition24 and c.verified and c.bound_holds


@pytest.mark.parametrize("gamma", [1, 2])
def test_certify_half_threshold_shift(gamma):
    h = poisson(15, 2)
    thr = theorem42_certify(h, gamma).threshold
    h2 = coarsest_shift(h, 0.5 * thr)
    dev = gen_eig(h2.A0_hat - h2.A[0], restricted_smoother(h2))
    np.testing.assert_allclose(dev, 0.5 * thr, rtol=1e-10)
    c = theorem42_certify(h2, gamma)
    assert c.condition24 and c.verified
    assert max(c.quantities.sigma_img_per_level) <= c.x_gamma + 1e-9


def test_certify_far_above_threshold_reports():
    h = poisson(15, 2)
    thr = theorem42_certify(h, 1).threshold
    c = theorem42_certify(coarsest_shift(h, 50 * thr), 1)
    assert not c.condition24 and not c.condition_holds


def test_certify_scaled_coarsest():
    h = poisson(15, 2)
    c = theorem42_certify(coarsest_scale(h, 0.99), 1)
    assert c.remark44
    lo, hi = gen_eig_extremes(h.A[0], h.A[0] / 0.99)
    assert hi == pytest.approx(0.99)


def test_x_gamma_decreases_between_cycles():
    h = poisson(15, 3)
    assert theorem42_certify(h, 2).x_gamma < theorem42_certify(h, 1).x_gamma


def test_certification_record():
    rec = theorem42_certify(poisson(15, 2), 2).to_record()
    assert [lvl["k"] for lvl in rec["levels"]] == [1, 2]
    assert rec["gamma"] == 2 and rec["verified"] is True
    for key in ("sigma_L", "tau_L", "eps_L", "x_gamma", "x1", "x2_hat", "condition24"):
        assert key in rec
