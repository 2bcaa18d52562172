"""Smoothers ``M`` and their symmetrized variants.

For an A-convergent ``M`` (``M + M^T - A`` SPD) two SPD operators are
attached::

    Mbar   = M   (M + M^T - A)^{-1} M^T
    Mtilde = M^T (M + M^T - A)^{-1} M

so that ``I - Mbar^{-1} A = (I - M^{-T} A)(I - M^{-1} A)`` and
``I - Mtilde^{-1} A = (I - M^{-1} A)(I - M^{-T} A)``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg

from .errors import BadParameter, NotAConvergent, NotSpd, Singular
from .linalg import as_matrix, check_symmetric, cholesky, is_spd, symmetrize


def _lu(M):
    with warnings.catch_warnings():
        # singularity is detected and reported below
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(M, check_finite=True)
    diag = np.abs(np.diag(lu))
    if diag.min() <= np.finfo(float).eps * max(diag.max(), 1.0) * M.shape[0]:
        raise Singular("smoother M is numerically singular")
    return lu, piv


@dataclass(frozen=True)
class Smoother:
    """A validated A-convergent smoother with cached symmetrizations.

    Build instances with :func:`make_smoother` or one of the named
    constructors rather than directly.
    """

    M: np.ndarray
    A: np.ndarray
    Mbar: np.ndarray
    Mtilde: np.ndarray
    omega: float | None = None
    _lu: tuple = field(repr=False, compare=False, default=None)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    def solve(self, b):
        """Apply ``M^{-1}``."""
        return scipy.linalg.lu_solve(self._lu, b)

    def solve_transpose(self, b):
        """Apply ``M^{-T}``."""
        return scipy.linalg.lu_solve(self._lu, b, trans=1)

    def pre_error(self):
        """``I - M^{-1} A``."""
        return np.eye(self.n) - self.solve(self.A)

    def post_error(self):
        """``I - M^{-T} A``."""
        return np.eye(self.n) - self.solve_transpose(self.A)

    def mbar_inverse(self):
        """``Mbar^{-1} = M^{-T} (M + M^T - A) M^{-1}`` without inverting Mbar."""
        D = self.M + self.M.T - self.A
        X = self.solve(np.eye(self.n))
        return symmetrize(self.solve_transpose(D @ X))


def make_smoother(M, A, omega=None) -> Smoother:
    """Validate ``M`` against ``A`` and cache ``Mbar`` and ``Mtilde``."""
    A = check_symmetric(A, name="A")
    M = as_matrix(M, "M")
    if M.shape != A.shape:
        raise BadParameter(f"M {M.shape} and A {A.shape} differ in shape")
    cholesky(A, name="A")
    lu = _lu(M)
    D = symmetrize(M + M.T - A)
    try:
        L = cholesky(D, name="M + M^T - A")
    except NotSpd as exc:
        raise NotAConvergent("M + M^T - A is not SPD; smoother is not A-convergent") from exc
    Mbar = symmetrize(M @ scipy.linalg.cho_solve((L, True), M.T))
    Mtilde = symmetrize(M.T @ scipy.linalg.cho_solve((L, True), M))
    return Smoother(M=M, A=A, Mbar=Mbar, Mtilde=Mtilde, omega=omega, _lu=lu)


def make_weighted_jacobi(A, omega: float) -> Smoother:
    """``M = diag(A) / omega``."""
    A = check_symmetric(A, name="A")
    if not omega > 0:
        raise BadParameter(f"Jacobi weight must be positive, got {omega}")
    d = np.diag(A)
    if np.any(d <= 0):
        raise NotSpd("Jacobi smoother needs a positive diagonal")
    return make_smoother(np.diag(d / omega), A, omega=omega)


def make_gauss_seidel(A) -> Smoother:
    """Forward Gauss-Seidel: ``M`` is the lower triangle of ``A``.

    ``M + M^T - A = diag(A)``, so this never fails for SPD ``A``.  The
    postsmoother ``M^T`` is then the backward sweep.
    """
    A = check_symmetric(A, name="A")
    return make_smoother(np.tril(A), A)


def make_block_jacobi(A, blocks: Sequence[Sequence[int]]) -> Smoother:
    """Block-diagonal ``M`` keeping the ``A`` blocks on the given index sets."""
    A = check_symmetric(A, name="A")
    M = np.zeros_like(A)
    seen = np.zeros(A.shape[0], dtype=bool)
    for idx in blocks:
        idx = np.asarray(idx, dtype=int)
        if seen[idx].any():
            raise BadParameter("blocks overlap")
        seen[idx] = True
        M[np.ix_(idx, idx)] = A[np.ix_(idx, idx)]
    if not seen.all():
        raise BadParameter("blocks do not cover all indices")
    return make_smoother(M, A)


def check_a_convergent(M, A) -> bool:
    """True iff ``M + M^T - A`` is SPD (equivalently ``||I - M^{-1}A||_A < 1``)."""
    M = as_matrix(M, "M")
    A = check_symmetric(A, name="A")
    if M.shape != A.shape:
        raise BadParameter(f"M {M.shape} and A {A.shape} differ in shape")
    _lu(M)
    return is_spd(symmetrize(M + M.T - A))


def smoother_relations_residual(s: Smoother) -> tuple[float, float]:
    """Spectral-norm residuals of the two product identities for Mbar, Mtilde."""
    I = np.eye(s.n)
    pre, post = s.pre_error(), s.post_error()
    bar = I - scipy.linalg.solve(s.Mbar, s.A, assume_a="pos")
    tilde = I - scipy.linalg.solve(s.Mtilde, s.A, assume_a="pos")
    r_bar = np.linalg.norm(bar - post @ pre, 2)
    r_tilde = np.linalg.norm(tilde - pre @ post, 2)
    return float(r_bar), float(r_tilde)
