"""Model problems, prolongations, Galerkin coarsening and C.B.S. constants.

Also home of :class:`Hierarchy`, the multilevel bundle consumed by
:mod:`mgbounds.multigrid`.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.linalg

from .errors import BadDimension, BadParameter, NotSpd
from .linalg import (
    as_matrix,
    check_symmetric,
    cholesky,
    is_spsd,
    smallest_singular_ratio,
    spd_solve,
    symmetrize,
)
from .smoothers import Smoother, make_gauss_seidel, make_weighted_jacobi

RANK_TOL = 1e-10


# -- model problems ---------------------------------------------------------

def laplacian_1d(n: int) -> np.ndarray:
    """``tridiag(-1, 2, -1)`` of order ``n``."""
    if n < 2:
        raise BadDimension(f"1D Laplacian needs n >= 2, got {n}")
    return 2.0 * np.eye(n) - np.eye(n, k=1) - np.eye(n, k=-1)


def laplacian_2d(nx: int, ny: int) -> np.ndarray:
    """5-point Laplacian on an ``nx x ny`` grid (x index fastest)."""
    if nx < 2 or ny < 2:
        raise BadDimension(f"2D Laplacian needs nx, ny >= 2, got {nx}x{ny}")
    return np.kron(np.eye(ny), laplacian_1d(nx)) + np.kron(laplacian_1d(ny), np.eye(nx))


# -- prolongations ----------------------------------------------------------

def check_prolongation(P, allow_square: bool = False) -> np.ndarray:
    P = as_matrix(P, "P")
    n, nc = P.shape
    if nc > n or (nc == n and not allow_square):
        raise BadDimension(f"prolongation must be tall (n_c < n), got {P.shape}")
    if smallest_singular_ratio(P) <= RANK_TOL:
        raise NotSpd("prolongation is numerically rank deficient")
    return P


def linear_interpolation_1d(n_fine: int) -> np.ndarray:
    """Linear interpolation onto ``n_fine = 2m + 1`` points from ``m`` coarse ones.

    Coarse point ``j`` sits at fine index ``2j + 1`` (0-based) and spreads
    with the stencil ``(1/2, 1, 1/2)``.
    """
    if n_fine < 3 or n_fine % 2 == 0:
        raise BadDimension(f"n_fine must be 2m+1 with m >= 1, got {n_fine}")
    m = (n_fine - 1) // 2
    P = np.zeros((n_fine, m))
    for j in range(m):
        P[2 * j, j] = 0.5
        P[2 * j + 1, j] = 1.0
        P[2 * j + 2, j] = 0.5
    return P


def bilinear_interpolation_2d(nx: int, ny: int) -> np.ndarray:
    """Tensor product of 1D linear interpolations, matching :func:`laplacian_2d`."""
    return np.kron(linear_interpolation_1d(ny), linear_interpolation_1d(nx))


@dataclass(frozen=True)
class BlockPartition:
    """Disjoint fine (F) and coarse (C) index sets covering ``0..n-1``."""

    fine: tuple
    coarse: tuple

    def __post_init__(self):
        f = tuple(int(i) for i in self.fine)
        c = tuple(int(i) for i in self.coarse)
        object.__setattr__(self, "fine", f)
        object.__setattr__(self, "coarse", c)
        allidx = sorted(f + c)
        if not f or not c:
            raise BadParameter("both F and C must be nonempty")
        if allidx != list(range(len(allidx))):
            raise BadParameter("F and C must be disjoint and cover 0..n-1")

    @classmethod
    def from_coarse(cls, n: int, coarse: Sequence[int]) -> "BlockPartition":
        c = sorted(set(int(i) for i in coarse))
        f = [i for i in range(n) if i not in set(c)]
        return cls(tuple(f), tuple(c))

    @property
    def n(self) -> int:
        return len(self.fine) + len(self.coarse)

    def blocks(self, A):
        """``(A_ff, A_fc, A_cc)``."""
        F, C = list(self.fine), list(self.coarse)
        return A[np.ix_(F, F)], A[np.ix_(F, C)], A[np.ix_(C, C)]

    def coarse_embedding(self) -> np.ndarray:
        """``P_0``: injection of the coarse unknowns."""
        P0 = np.zeros((self.n, len(self.coarse)))
        P0[list(self.coarse), range(len(self.coarse))] = 1.0
        return P0

    def fine_embedding(self) -> np.ndarray:
        """``S_0``: injection of the fine unknowns."""
        S0 = np.zeros((self.n, len(self.fine)))
        S0[list(self.fine), range(len(self.fine))] = 1.0
        return S0


def ideal_interpolation(A, part: BlockPartition) -> np.ndarray:
    """``P = [-A_ff^{-1} A_fc; I]`` placed back in the original ordering."""
    A = check_symmetric(A, name="A")
    if A.shape[0] != part.n:
        raise BadDimension("partition does not match A")
    A_ff, A_fc, _ = part.blocks(A)
    W = spd_solve(A_ff, A_fc)
    P = np.zeros((part.n, len(part.coarse)))
    P[list(part.fine), :] = -W
    P[list(part.coarse), :] = np.eye(len(part.coarse))
    return P


def galerkin(A, P) -> np.ndarray:
    """``P^T A P``, symmetrized and checked SPD."""
    A = check_symmetric(A, name="A")
    P = as_matrix(P, "P")
    if P.shape[0] != A.shape[0]:
        raise BadDimension(f"P has {P.shape[0]} rows, A has order {A.shape[0]}")
    Ac = symmetrize(P.T @ A @ P)
    cholesky(Ac, name="Galerkin coarse matrix")
    return Ac


def normalize_prolongation(P):
    """Return ``(P_sharp, U_c)`` with ``P^T P = U_c^T U_c`` and ``P_sharp = P U_c^{-1}``."""
    P = as_matrix(P, "P")
    L = cholesky(symmetrize(P.T @ P), name="P^T P")
    U = L.T
    P_sharp = scipy.linalg.solve_triangular(U, P.T, trans="T", lower=False).T
    return P_sharp, U


def complement_basis(P) -> np.ndarray:
    """Orthonormal basis ``S`` of the null space of ``P^T`` (full QR of ``P``)."""
    P = check_prolongation(P)
    Q, _ = np.linalg.qr(P, mode="complete")
    return Q[:, P.shape[1]:]


def _cbs(B11, B12, B22) -> float:
    L1 = cholesky(B11, name="first diagonal block")
    L2 = cholesky(B22, name="second diagonal block")
    X = scipy.linalg.solve_triangular(L1, B12, lower=True)
    X = scipy.linalg.solve_triangular(L2, X.T, lower=True).T
    return float(np.linalg.norm(X, 2))


def cbs_constant_block(A, part: BlockPartition) -> float:
    """``alpha = ||A_ff^{-1/2} A_fc A_cc^{-1/2}||_2``.

    Uses Cholesky factors in place of the symmetric square roots; the two
    differ by orthogonal factors, which leave the 2-norm unchanged.
    """
    A = check_symmetric(A, name="A")
    A_ff, A_fc, A_cc = part.blocks(A)
    return _cbs(A_ff, A_fc, A_cc)


def cbs_constant_general(W, S, P_sharp) -> float:
    """C.B.S. constant of ``[[S^T W S, S^T W P], [P^T W S, P^T W P]]``."""
    W = check_symmetric(W, name="W")
    S = as_matrix(S, "S")
    P_sharp = as_matrix(P_sharp, "P_sharp")
    if np.linalg.matrix_rank(np.hstack([S, P_sharp])) < W.shape[0]:
        raise NotSpd("[S P] is singular")
    return _cbs(symmetrize(S.T @ W @ S), S.T @ W @ P_sharp, symmetrize(P_sharp.T @ W @ P_sharp))


def alpha_parameterized_example(alpha: float, n_f: int, n_c: int,
                                seed: int = 0, rotate: bool = False):
    """Two-by-two block SPD matrix with identity diagonal blocks and C.B.S.
    constant exactly ``alpha``.

    ``A_fc`` is a rectangular diagonal with leading singular value
    ``alpha`` and the rest drawn from ``[0, 0.9 alpha)``.  With
    ``rotate=True`` it is further multiplied by random orthogonal factors on
    both sides (singular values unchanged).

    Returns
    -------
    A : ndarray, shape (n_f + n_c, n_f + n_c)
    part : BlockPartition
        F = first ``n_f`` indices, C = the remaining ``n_c``.
    """
    if not (0.0 <= alpha < 1.0):
        raise BadParameter(f"alpha must lie in [0, 1), got {alpha}")
    if n_f < 1 or n_c < 1:
        raise BadParameter("n_f and n_c must be positive")
    rng = np.random.default_rng(seed)
    k = min(n_f, n_c)
    sv = np.empty(k)
    sv[0] = alpha
    sv[1:] = alpha * 0.9 * rng.random(k - 1)
    A_fc = np.zeros((n_f, n_c))
    A_fc[range(k), range(k)] = sv
    if rotate:
        U, _ = np.linalg.qr(rng.standard_normal((n_f, n_f)))
        V, _ = np.linalg.qr(rng.standard_normal((n_c, n_c)))
        A_fc = U @ A_fc @ V.T
    n = n_f + n_c
    A = np.eye(n)
    A[:n_f, n_f:] = A_fc
    A[n_f:, :n_f] = A_fc.T
    part = BlockPartition(tuple(range(n_f)), tuple(range(n_f, n)))
    return A, part


# -- multilevel hierarchy ---------------------------------------------------

@dataclass(frozen=True)
class Hierarchy:
    """Levels ``k = 0..L`` of a Galerkin hierarchy.

    ``A[k]`` is the level-``k`` matrix (``A[L]`` the finest),
    ``P[k]`` and ``smoothers[k]`` are defined for ``k >= 1`` (index 0 holds
    ``None``), ``A0_hat`` replaces ``A[0]`` in the coarsest solve and
    ``gamma`` is the cycle index.
    """

    A: tuple
    P: tuple
    smoothers: tuple
    A0_hat: np.ndarray
    gamma: int = 1

    def __post_init__(self):
        L = self.L
        if L < 1:
            raise BadParameter("a hierarchy needs at least two levels")
        if len(self.P) != L + 1 or len(self.smoothers) != L + 1:
            raise BadParameter("P and smoothers must have L + 1 entries")
        if int(self.gamma) < 1:
            raise BadParameter(f"cycle index must be >= 1, got {self.gamma}")
        for k in range(1, L + 1):
            Ak, Pk = self.A[k], self.P[k]
            if Pk.shape != (Ak.shape[0], self.A[k - 1].shape[0]):
                raise BadDimension(f"P_{k} has shape {Pk.shape}")
            if not self.A[k - 1].shape[0] < Ak.shape[0]:
                raise BadDimension("level sizes must strictly increase")
            Ac = Pk.T @ Ak @ Pk
            scale = max(1.0, float(np.max(np.abs(Ac))))
            if np.max(np.abs(Ac - self.A[k - 1])) > 1e-12 * scale:
                raise BadParameter(f"A_{k-1} is not the Galerkin product at level {k}")
            if self.smoothers[k].A.shape != Ak.shape:
                raise BadDimension(f"smoother at level {k} has the wrong order")
        if self.A0_hat.shape != self.A[0].shape:
            raise BadDimension("A0_hat has the wrong order")
        cholesky(self.A0_hat, name="A0_hat")
        if not is_spsd(symmetrize(self.A0_hat - self.A[0]),
                       scale=float(np.linalg.norm(self.A0_hat, 2))):
            raise BadParameter("A0_hat - A0 must be SPSD")

    @property
    def L(self) -> int:
        return len(self.A) - 1

    def sizes(self) -> list[int]:
        return [a.shape[0] for a in self.A]

    def with_gamma(self, gamma: int) -> "Hierarchy":
        return replace(self, gamma=int(gamma))

    def with_coarsest(self, A0_hat) -> "Hierarchy":
        return replace(self, A0_hat=symmetrize(np.asarray(A0_hat, dtype=float)))


SmootherFactory = Callable[[np.ndarray], Smoother]


def smoother_factory(kind: str = "jacobi", omega: float = 2.0 / 3.0) -> SmootherFactory:
    if kind == "jacobi":
        return lambda A: make_weighted_jacobi(A, omega)
    if kind in ("gauss-seidel", "gs"):
        return make_gauss_seidel
    raise BadParameter(f"unknown smoother {kind!r}")


def build_hierarchy(A, prolongations: Sequence, smoother: SmootherFactory,
                    gamma: int = 1, A0_hat: Optional[np.ndarray] = None) -> Hierarchy:
    """Galerkin hierarchy from the finest matrix and prolongations listed
    fine-to-coarse (``P_L, P_{L-1}, ..., P_1``)."""
    A = check_symmetric(A, name="A")
    mats = [A]
    for P in prolongations:
        mats.append(galerkin(mats[-1], check_prolongation(P)))
    mats.reverse()
    Ps = [None] + [np.asarray(P, dtype=float) for P in reversed(prolongations)]
    smoothers = [None] + [smoother(mats[k]) for k in range(1, len(mats))]
    A0_hat = mats[0].copy() if A0_hat is None else symmetrize(np.asarray(A0_hat, dtype=float))
    return Hierarchy(tuple(mats), tuple(Ps), tuple(smoothers), A0_hat, int(gamma))


def poisson_1d_hierarchy(n: int, levels: int, smoother: SmootherFactory | None = None,
                         gamma: int = 1) -> Hierarchy:
    """1D Poisson hierarchy with ``levels`` coarsenings by linear interpolation.

    ``levels`` is ``L``; the hierarchy holds ``L + 1`` matrices.
    """
    if smoother is None:
        smoother = smoother_factory("jacobi", 2.0 / 3.0)
    Ps, m = [], n
    for _ in range(levels):
        P = linear_interpolation_1d(m)
        Ps.append(P)
        m = P.shape[1]
    return build_hierarchy(laplacian_1d(n), Ps, smoother, gamma)


def poisson_2d_hierarchy(nx: int, ny: int, levels: int,
                         smoother: SmootherFactory | None = None, gamma: int = 1) -> Hierarchy:
    """2D analogue of :func:`poisson_1d_hierarchy` with bilinear interpolation."""
    if smoother is None:
        smoother = smoother_factory("jacobi", 2.0 / 3.0)
    A = laplacian_2d(nx, ny)
    Ps, mx, my = [], nx, ny
    for _ in range(levels):
        Ps.append(bilinear_interpolation_2d(mx, my))
        mx, my = (mx - 1) // 2, (my - 1) // 2
    return build_hierarchy(A, Ps, smoother, gamma)
