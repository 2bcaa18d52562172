"""Seeded invariant suite covering every module.

Each invariant draws its own instances from an independent stream spawned
off the suite seed, evaluates a *slack* per trial (nonnegative means the
invariant held, and the magnitude says by how much) and reports the worst
one.  An exception inside a trial counts as a failure.
"""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass
from typing import Callable, Iterator

import numpy as np

from . import instances as inst
from .hierarchy import (
    BlockPartition,
    cbs_constant_general,
    cbs_constant_block,
    complement_basis,
    galerkin,
    ideal_interpolation,
    normalize_prolongation,
)
from .linalg import (
    SPSD_TOL,
    SYM_TOL,
    asymmetry,
    eigvalsh,
    energy_norm,
    energy_similarity,
    gen_eig,
    gen_eig_extremes,
    operator_energy_norm,
    spd_inverse,
    spd_solve,
    spd_sqrt,
    sym_eig,
    symmetrize,
)
from .multigrid import (
    coarsest_shift,
    corollary43_bounds,
    fixed_point_root,
    level_quantities,
    mg_cycle,
    mg_error_matrices,
    implicit_coarse_operator,
    theorem42_certify,
)
from .smoothers import make_weighted_jacobi, smoother_relations_residual
from .twogrid import (
    TwoGridSetup,
    build_exact_twogrid,
    build_inexact_twogrid,
    deviation_extremes,
    lemma32_identities,
    preconditioner_residual,
    theorem33_bounds,
)

DEFAULT_TRIALS = 20


@dataclass(frozen=True)
class InvariantResult:
    module: str
    name: str
    passed: bool
    worst_slack: float
    trials: int
    seconds: float
    error: str = ""

    def to_record(self) -> dict:
        return asdict(self)


Check = Callable[[np.random.Generator], Iterator[float]]
_REGISTRY: list[tuple[str, str, Check]] = []


def invariant(module: str, name: str):
    def register(fn: Check) -> Check:
        _REGISTRY.append((module, name, fn))
        return fn
    return register


def invariant_names() -> list[str]:
    return [name for _, name, _ in _REGISTRY]


# -- linalg-core ------------------------------------------------------------

@invariant("linalg-core", "spd-eigenvalues-positive")
def _spd_positive(rng):
    A = inst.random_spd(rng, int(rng.integers(2, 30)))
    w = sym_eig(A).eigenvalues
    yield float(w[0])
    B = inst.random_prolongation(rng, A.shape[0] + 1, A.shape[0])
    S = symmetrize(B @ A @ B.T)  # rank deficient SPSD
    ws = sym_eig(S).eigenvalues
    yield float(ws[0] + SPSD_TOL * ws[-1])


@invariant("linalg-core", "gen-eig-cross-oracle")
def _gen_eig_oracle(rng):
    n = int(rng.integers(2, 25))
    A, B = inst.random_spd(rng, n), inst.random_spd(rng, n)
    lo, hi = gen_eig_extremes(A, B)
    Bi = spd_inverse(spd_sqrt(B))
    w = sym_eig(symmetrize(Bi @ A @ Bi), method="jacobi").eigenvalues
    yield 1e-10 * max(1.0, abs(w[-1])) - max(abs(lo - w[0]), abs(hi - w[-1]))


@invariant("linalg-core", "energy-norm-dominates-samples")
def _energy_norm_witness(rng):
    setup = inst.random_setup(rng, n_range=(3, 20))
    E, _ = build_inexact_twogrid(setup)
    A = setup.A
    nrm = operator_energy_norm(E, A)
    V = rng.standard_normal((A.shape[0], 50))
    ratios = [energy_norm(E @ v, A) / energy_norm(v, A) for v in V.T]
    yield nrm - max(ratios) + 1e-12


# -- smoothers --------------------------------------------------------------

@invariant("smoothers", "symmetrized-smoothers-dominate-A")
def _smoother_dominance(rng):
    A = inst.random_spd(rng, int(rng.integers(2, 25)), max_cond=1e2)
    s = inst.random_smoother(rng, A)
    scale = float(eigvalsh(A)[-1])
    for X in (s.Mtilde, s.Mbar):
        yield float(eigvalsh(symmetrize(X - A))[0]) / scale + SPSD_TOL


@invariant("smoothers", "a-convergence-contraction")
def _smoother_contraction(rng):
    A = inst.random_spd(rng, int(rng.integers(2, 25)), max_cond=1e2)
    s = inst.random_smoother(rng, A)
    E = np.eye(s.n) - spd_solve(s.Mbar, A)
    yield 1.0 - operator_energy_norm(E, A)


@invariant("smoothers", "product-identities")
def _smoother_identities(rng):
    A = inst.random_spd(rng, int(rng.integers(2, 20)), max_cond=1e2)
    s = inst.random_smoother(rng, A)
    yield 1e-12 - max(smoother_relations_residual(s))


@invariant("smoothers", "jacobi-weight-scaling")
def _jacobi_scaling(rng):
    A = inst.random_spd(rng, int(rng.integers(2, 20)))
    omega = rng.uniform(0.3, 0.95) * inst.jacobi_weight_limit(A)
    c = rng.uniform(1.0, 4.0)
    M1 = make_weighted_jacobi(A, omega).M
    M2 = make_weighted_jacobi(A, omega / c).M
    yield 4 * np.finfo(float).eps * float(np.abs(M2).max()) - float(np.abs(M2 - c * M1).max())


# -- hierarchy --------------------------------------------------------------

def _random_partition(rng, n):
    perm = rng.permutation(n)
    n_c = int(rng.integers(1, n))
    return BlockPartition(tuple(sorted(perm[n_c:].tolist())), tuple(sorted(perm[:n_c].tolist())))


@invariant("hierarchy", "galerkin-spd")
def _galerkin_spd(rng):
    n = int(rng.integers(2, 30))
    A = inst.random_spd(rng, n)
    P = inst.random_prolongation(rng, n)
    yield float(eigvalsh(galerkin(A, P))[0])


@invariant("hierarchy", "ideal-interpolation-schur-complement")
def _ideal_schur(rng):
    n = int(rng.integers(2, 30))
    A = inst.random_spd(rng, n, max_cond=1e2)
    part = _random_partition(rng, n)
    Aff, Afc, Acc = part.blocks(A)
    schur = Acc - Afc.T @ spd_solve(Aff, Afc)
    Ac = galerkin(A, ideal_interpolation(A, part))
    yield 1e-12 * max(1.0, float(np.abs(schur).max())) - float(np.abs(Ac - schur).max())


@invariant("hierarchy", "complement-basis")
def _complement(rng):
    n = int(rng.integers(2, 30))
    P = inst.random_prolongation(rng, n)
    S = complement_basis(P)
    bound = 1e-12 * np.linalg.norm(P, 2) * np.linalg.norm(S, 2)
    yield bound - float(np.linalg.norm(P.T @ S, 2))
    sv = np.linalg.svd(np.hstack([S, P]), compute_uv=False)
    yield float(sv[-1] / sv[0]) - 1e-10


@invariant("hierarchy", "cbs-constant-below-one")
def _cbs_below_one(rng):
    n = int(rng.integers(2, 30))
    A = inst.random_spd(rng, n)
    alpha = cbs_constant_block(A, _random_partition(rng, n))
    yield min(alpha, 1.0 - alpha)


@invariant("hierarchy", "restricted-smoother-equivalence")
def _eig_pmp(rng):
    n = int(rng.integers(3, 25))
    A = inst.random_spd(rng, n, max_cond=1e2)
    Mt = inst.random_smoother(rng, A).Mtilde
    P = inst.random_prolongation(rng, n)
    P_sharp, _ = normalize_prolongation(P)
    S = complement_basis(P)
    beta = cbs_constant_general(Mt, S, P_sharp)
    inner = spd_inverse(galerkin(spd_inverse(Mt), P_sharp))
    w = gen_eig(inner, galerkin(Mt, P_sharp))
    yield min(w[0] - (1.0 - beta ** 2) + 1e-9, 1.0 + 1e-9 - w[-1])


# -- twogrid-analysis -------------------------------------------------------

@invariant("twogrid-analysis", "sandwich")
def _sandwich(rng):
    for case in inst.CASES:
        r = theorem33_bounds(inst.random_setup(rng, case=case))
        yield min(r.actual - r.lower, r.upper - r.actual) + 1e-9


@invariant("twogrid-analysis", "exact-case-collapse")
def _exact_collapse(rng):
    setup = inst.random_setup(rng, exact=True)
    r = theorem33_bounds(setup)
    E, _ = build_exact_twogrid(setup)
    xz = 1.0 - 1.0 / r.quantities.K_TG
    err = max(abs(r.upper - r.lower), abs(r.lower - xz), abs(r.actual - xz),
              abs(operator_energy_norm(E, setup.A) - xz))
    yield 1e-10 - err


@invariant("twogrid-analysis", "projection-identities")
def _projection_identities(rng):
    setup = inst.random_setup(rng, exact=True)
    r = theorem33_bounds(setup)
    got = lemma32_identities(setup.A, setup.Mt, setup.P)
    q = r.quantities
    want = (0.0, q.K_TG - 1.0, 0.0, q.lam_max_AinvMtPi - 1.0)
    yield 1e-9 - max(abs(a - b) for a, b in zip(got, want))


@invariant("twogrid-analysis", "k-tg-lower-estimate")
def _k_tg_lower_estimate(rng):
    q = theorem33_bounds(inst.random_setup(rng)).quantities
    yield q.K_TG - (q.lam_max_AinvMt - q.lam_max_AinvMtPi + 1.0) + 1e-10


@invariant("twogrid-analysis", "notay-dominance")
def _notay(rng):
    r = theorem33_bounds(inst.random_setup(rng))
    yield r.notay_upper - r.actual + 1e-9


@invariant("twogrid-analysis", "spectrum-location")
def _spectrum(rng):
    setup = inst.random_setup(rng, exact=True)
    E, _ = build_exact_twogrid(setup)
    w = eigvalsh(energy_similarity(E, setup.A))
    yield min(w[0] + 1e-10, 1.0 - w[-1])
    # inexact cycle: only realness is claimed, i.e. A-self-adjointness of E
    setup = inst.random_setup(rng)
    E, _ = build_inexact_twogrid(setup)
    R = spd_sqrt(setup.A)
    T = R @ E @ spd_inverse(R)
    yield SYM_TOL - asymmetry(T, max(1.0, float(np.abs(T).max())))


@invariant("twogrid-analysis", "preconditioner-identity")
def _smw(rng):
    yield 1e-10 - preconditioner_residual(inst.random_setup(rng))


@invariant("twogrid-analysis", "scaled-identity-deviation-decay")
def _scaled_identity_decay(rng):
    setup = inst.random_setup(rng, exact=True)
    d = [deviation_extremes(setup.A, setup.Mt, setup.P, w * np.eye(setup.n_c))
         for w in (1e2, 1e4, 1e6, 1e8)]
    for (a1, a2), (b1, b2) in zip(d, d[1:]):
        yield min(a1 - b1, a2 - b2)


# -- multigrid --------------------------------------------------------------

@invariant("multigrid", "cycle-matrix-equivalence")
def _cycle_matrix(rng):
    h = inst.random_hierarchy(rng)
    errors = mg_error_matrices(h)
    for k in range(1, h.L + 1):
        n = h.A[k].shape[0]
        u_star, u0 = rng.standard_normal(n), rng.standard_normal(n)
        u = mg_cycle(h, k, h.A[k] @ u_star, u0)
        err = np.linalg.norm((u_star - u) - errors[k] @ (u_star - u0))
        yield 1e-11 * max(1.0, np.linalg.norm(u_star - u0)) - err


@invariant("multigrid", "two-grid-reduction")
def _two_grid_reduction(rng):
    h = inst.random_hierarchy(rng)
    errors = mg_error_matrices(h)
    for k in range(1, h.L + 1):
        Bc = implicit_coarse_operator(h, k, errors)
        setup = TwoGridSetup(h.A[k], h.smoothers[k], h.P[k], Bc)
        E, _ = build_inexact_twogrid(setup)
        yield 1e-10 - float(np.abs(E - errors[k]).max())


@invariant("multigrid", "lower-bound-law")
def _mg_lower(rng):
    q = level_quantities(inst.random_hierarchy(rng))
    for s_img, s_tg in zip(q.sigma_img_per_level, q.sigma_tg_per_level):
        yield s_img - s_tg + 1e-10


@invariant("multigrid", "energy-contraction")
def _mg_contraction(rng):
    q = level_quantities(inst.random_hierarchy(rng))
    for s_img in q.sigma_img_per_level:
        yield 1.0 - s_img


@invariant("multigrid", "root-monotone-in-gamma")
def _root_monotone(rng):
    s, t, e = inst.random_triple(rng)
    roots = [fixed_point_root(s, t, e, g).x_gamma for g in range(1, 10)]
    for a, b in zip(roots, roots[1:]):
        yield a - b


@invariant("multigrid", "root-location")
def _root_location(rng):
    s, t, e = inst.random_triple(rng)
    for g in (1, 2, 3):
        x = fixed_point_root(s, t, e, g).x_gamma
        yield min(x - s, 1.0 - e - x)


@invariant("multigrid", "closed-form-roots")
def _closed_forms(rng):
    s, t, e = inst.random_triple(rng)
    x1, x2_hat = corollary43_bounds(s, t, e)
    r1 = fixed_point_root(s, t, e, 1).x_gamma
    r2 = fixed_point_root(s, t, e, 2).x_gamma
    yield 1e-10 - abs(x1 - r1)
    yield x2_hat - r2 + 1e-10


@invariant("multigrid", "certified-level-bound")
def _certified(rng):
    h = inst.random_hierarchy(rng)
    thr = theorem42_certify(h).threshold
    cert = theorem42_certify(coarsest_shift(h, 0.5 * thr))
    if not cert.condition24:
        yield -1.0
        return
    yield cert.x_gamma + 1e-9 - max(cert.quantities.sigma_img_per_level)


# -- driver -------------------------------------------------------------------

def run_invariant(module, name, fn, rng, trials) -> InvariantResult:
    t0 = time.perf_counter()
    worst, count, error = np.inf, 0, ""
    try:
        for _ in range(trials):
            for slack in fn(rng):
                worst = min(worst, float(slack))
                count += 1
    except Exception as exc:  # any failure inside a trial is a violation
        error = f"{type(exc).__name__}: {exc}"
    passed = not error and count > 0 and worst >= 0.0
    return InvariantResult(module, name, bool(passed), float(worst) if count else float("nan"),
                           trials, time.perf_counter() - t0, error)


def run_suite(seed: int = inst.DEFAULT_SEED, trials: int = DEFAULT_TRIALS,
              only=None) -> list[InvariantResult]:
    """Run every registered invariant (or those named in ``only``)."""
    streams = np.random.SeedSequence(seed).spawn(len(_REGISTRY))
    results = []
    for (module, name, fn), ss in zip(_REGISTRY, streams):
        if only is not None and name not in only:
            continue
        results.append(run_invariant(module, name, fn, np.random.default_rng(ss), trials))
    return results
