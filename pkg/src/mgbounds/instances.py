"""Seeded random problem instances for property checks and sweeps.

All draws come from :func:`numpy.random.default_rng` (PCG64) seeded with an
explicit integer, so a seed fixes every instance.
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from .errors import BadParameter, OutOfTheoryRange
from .hierarchy import Hierarchy, build_hierarchy, galerkin
from .linalg import eigvalsh, gen_eig, gen_eig_extremes, spd_sqrt, symmetrize
from .smoothers import Smoother, make_gauss_seidel, make_weighted_jacobi
from .twogrid import TwoGridSetup, case_bounds, lam_max_AinvMt_Pi, spectral_quantities

DEFAULT_SEED = 42
CASES = ("i", "ii", "iii")


def random_orthogonal(rng, n: int) -> np.ndarray:
    Q, R = np.linalg.qr(rng.standard_normal((n, n)))
    return Q * np.sign(np.diag(R))


def random_spd(rng, n: int, max_cond: float = 1e3) -> np.ndarray:
    """SPD matrix with log-uniform spectrum in ``[1, cond]``, ``cond <= max_cond``."""
    cond = 10.0 ** rng.uniform(0.0, np.log10(max_cond))
    w = 10.0 ** rng.uniform(0.0, np.log10(cond), n)
    w[0], w[-1] = 1.0, cond
    Q = random_orthogonal(rng, n)
    return symmetrize((Q * w) @ Q.T)


def random_prolongation(rng, n: int, n_c: Optional[int] = None) -> np.ndarray:
    """Gaussian ``n x n_c`` matrix (full column rank with probability one)."""
    if n_c is None:
        n_c = int(rng.integers(1, n))
    if not 1 <= n_c < n:
        raise BadParameter(f"need 1 <= n_c < n, got n_c={n_c}, n={n}")
    while True:
        P = rng.standard_normal((n, n_c))
        s = np.linalg.svd(P, compute_uv=False)
        if s[-1] > 1e-3 * s[0]:
            return P


def jacobi_weight_limit(A) -> float:
    """Largest ``omega`` for which ``diag(A)/omega`` is A-convergent."""
    d = 1.0 / np.sqrt(np.diag(A))
    return 2.0 / float(eigvalsh(symmetrize(d[:, None] * A * d[None, :]))[-1])


def random_smoother(rng, A, kind: Optional[str] = None) -> Smoother:
    """Weighted Jacobi at a random fraction of its admissible weight, or
    forward Gauss-Seidel."""
    if kind is None:
        kind = "jacobi" if rng.random() < 0.5 else "gauss-seidel"
    if kind == "jacobi":
        return make_weighted_jacobi(A, rng.uniform(0.3, 0.95) * jacobi_weight_limit(A))
    if kind == "gauss-seidel":
        return make_gauss_seidel(A)
    raise BadParameter(f"unknown smoother {kind!r}")


def _shifted_bc(rng, Ac, W, deltas) -> np.ndarray:
    """``A_c + W^{1/2} Q diag(deltas) Q^T W^{1/2}``: the pencil
    ``(B_c - A_c, W)`` then has eigenvalues exactly ``deltas``."""
    R = spd_sqrt(W)
    Q = random_orthogonal(rng, len(deltas))
    return symmetrize(Ac + R @ ((Q * deltas) @ Q.T) @ R)


def random_coarse_solver(rng, A, smoother: Smoother, P, case: str) -> np.ndarray:
    """SPD ``B_c`` whose deviation from ``A_c`` lands in the requested case.

    The eigenvalues ``delta`` of the pencil ``(B_c - A_c, P^T Mt P)`` are
    drawn directly: all ``>= 0`` for case (i), mixed signs for case (ii),
    all negative for case (iii).  Negative values stay above
    ``-min(1 / lambda_max(A^{-1} Mt Pi), lambda_min(W^{-1} A_c))`` so that
    ``B_c`` is SPD and ``d2`` stays inside the admissible range.
    """
    if case not in CASES:
        raise BadParameter(f"case must be one of {CASES}, got {case!r}")
    Ac = galerkin(A, P)
    W = galerkin(smoother.Mtilde, P)
    n_c = P.shape[1]
    lp = lam_max_AinvMt_Pi(A, smoother.Mtilde, P)
    floor = min(1.0 / lp, gen_eig_extremes(Ac, W)[0])
    pos = lambda m: 10.0 ** rng.uniform(-3.0, 1.0, m)  # noqa: E731
    neg = lambda m: -floor * rng.uniform(0.01, 0.95, m)  # noqa: E731
    if case == "i":
        deltas = pos(n_c)
        if rng.random() < 0.2:
            deltas[rng.integers(n_c)] = 0.0
    elif case == "iii":
        deltas = neg(n_c)
    else:
        if n_c == 1:
            raise BadParameter("case (ii) needs n_c >= 2")
        k = int(rng.integers(1, n_c))
        deltas = np.concatenate([neg(k), pos(n_c - k)])
    return _shifted_bc(rng, Ac, W, deltas)


def random_setup(rng, n_range=(3, 40), case: Optional[str] = None,
                 exact: bool = False, smoother_kind: Optional[str] = None) -> TwoGridSetup:
    """Random ``(A, M, P, B_c)``.

    ``case`` picks the deviation regime of ``B_c`` (random when ``None``);
    ``exact=True`` forces ``B_c = A_c``.
    """
    lo, hi = n_range
    while True:
        n = int(rng.integers(max(lo, 2), hi + 1))
        A = random_spd(rng, n)
        s = random_smoother(rng, A, smoother_kind)
        min_nc = 2 if case == "ii" else 1
        if n - 1 < min_nc:
            continue
        P = random_prolongation(rng, n, int(rng.integers(min_nc, n)))
        if exact:
            return TwoGridSetup.exact(A, s, P)
        c = case if case is not None else CASES[int(rng.integers(3))]
        if c == "ii" and P.shape[1] < 2:
            c = "i"
        Bc = random_coarse_solver(rng, A, s, P, c)
        setup = TwoGridSetup(A, s, P, Bc)
        try:
            got, _, _ = case_bounds(spectral_quantities(setup))
        except OutOfTheoryRange:
            continue
        if case is None or got == case:
            return setup


def random_setups(seed: int, count: int, **kwargs) -> list[TwoGridSetup]:
    rng = np.random.default_rng(seed)
    return [random_setup(rng, **kwargs) for _ in range(count)]


def random_hierarchy(rng, n_finest_range=(8, 20), levels_range=(1, 3),
                     gamma: Optional[int] = None) -> Hierarchy:
    """Galerkin hierarchy from a random SPD matrix and Gaussian prolongations."""
    L = int(rng.integers(levels_range[0], levels_range[1] + 1))
    n = int(rng.integers(max(n_finest_range[0], L + 1), n_finest_range[1] + 1))
    A = random_spd(rng, n, max_cond=1e2)
    sizes = sorted(rng.choice(np.arange(1, n), size=L, replace=False), reverse=True)
    Ps, m = [], n
    for nc in sizes:
        Ps.append(random_prolongation(rng, m, int(nc)))
        m = int(nc)
    kind = "jacobi" if rng.random() < 0.5 else "gauss-seidel"
    if kind == "jacobi":
        frac = rng.uniform(0.3, 0.95)
        factory = lambda B: make_weighted_jacobi(B, frac * jacobi_weight_limit(B))  # noqa: E731
    else:
        factory = make_gauss_seidel
    g = int(rng.integers(1, 3)) if gamma is None else int(gamma)
    return build_hierarchy(A, Ps, factory, gamma=g)


def random_triple(rng) -> tuple[float, float, float]:
    """Admissible ``(sigma, tau, eps)``: ``0 < sigma < 1 - eps``, ``0 < eps <= tau <= 1``.

    ``sigma >= 0.1`` keeps the roots ``x_gamma`` for ``gamma <= 9`` apart by
    more than double precision can resolve (``x_gamma - sigma`` shrinks
    like ``sigma**gamma``).
    """
    eps = rng.uniform(0.01, 0.85)
    sigma = rng.uniform(0.1, 0.95 * (1.0 - eps))
    tau = rng.uniform(eps, 1.0)
    return float(sigma), float(tau), float(eps)


def pencil_deltas(setup: TwoGridSetup) -> np.ndarray:
    """Eigenvalues of ``(B_c - A_c, P^T Mt P)``; used to check the generators."""
    return gen_eig(symmetrize(setup.Bc - setup.Ac), galerkin(setup.Mt, setup.P))
