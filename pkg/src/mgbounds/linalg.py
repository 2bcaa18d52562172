"""Dense symmetric linear algebra kernels.

Everything downstream works with explicit dense ``numpy`` arrays.  The
helpers here are the only place where eigenvalues, Cholesky factors and
matrix square roots are computed, so that the tolerance policy lives in one
spot:

============  =====================================================
``SYM_TOL``   relative max-norm asymmetry accepted as "symmetric"
``SPD_TOL``   Cholesky pivot floor, relative to the largest diagonal
``SPSD_TOL``  relative slack on the smallest eigenvalue for SPSD
``EIG_TOL``   reconstruction residual accepted from an eigensolver
============  =====================================================
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg

from .errors import NoConvergence, NonSymmetric, NotSpd, SimilarityNotSymmetric

SYM_TOL = 1e-10
SPD_TOL = 1e-12
SPSD_TOL = 1e-10
EIG_TOL = 1e-10

JACOBI_MAX_SWEEPS = 100
JACOBI_OFF_TOL = 1e-14


@dataclass(frozen=True)
class Spectrum:
    """Ascending eigenvalues, optionally with orthonormal eigenvectors."""

    eigenvalues: np.ndarray
    eigenvectors: Optional[np.ndarray] = None

    @property
    def min(self) -> float:
        return float(self.eigenvalues[0])

    @property
    def max(self) -> float:
        return float(self.eigenvalues[-1])


def as_matrix(S, name="matrix") -> np.ndarray:
    S = np.asarray(S, dtype=float)
    if S.ndim != 2 or S.shape[0] < 1 or S.shape[1] < 1:
        raise ValueError(f"{name} must be a nonempty 2-D array, got shape {S.shape}")
    if not np.all(np.isfinite(S)):
        raise ValueError(f"{name} has non-finite entries")
    return S


def symmetrize(S: np.ndarray) -> np.ndarray:
    return 0.5 * (S + S.T)


def asymmetry(S: np.ndarray, scale: Optional[float] = None) -> float:
    """Relative max-norm asymmetry ``max|S - S^T| / scale``."""
    if scale is None:
        scale = float(np.max(np.abs(S)))
    diff = float(np.max(np.abs(S - S.T)))
    if diff == 0.0:
        return 0.0
    return diff / scale if scale > 0 else np.inf


def check_symmetric(S, tol: float = SYM_TOL, scale: Optional[float] = None,
                    name: str = "matrix") -> np.ndarray:
    """Validate symmetry and return the explicitly symmetrized matrix."""
    S = as_matrix(S, name)
    if S.shape[0] != S.shape[1]:
        raise NonSymmetric(f"{name} is not square: {S.shape}")
    err = asymmetry(S, scale)
    if err > tol:
        raise NonSymmetric(f"{name} asymmetry {err:.3e} exceeds {tol:.1e}")
    return symmetrize(S)


def jacobi_eigh(S: np.ndarray, max_sweeps: int = JACOBI_MAX_SWEEPS,
                off_tol: float = JACOBI_OFF_TOL):
    """Cyclic Jacobi eigensolver for a dense symmetric matrix.

    Sweeps the strict upper triangle row by row, annihilating each entry by
    a plane rotation.  Stops once the off-diagonal Frobenius norm drops
    below ``off_tol * ||S||_F``.

    Returns
    -------
    w : ndarray
        Unsorted eigenvalues (diagonal of the rotated matrix).
    V : ndarray
        Orthogonal matrix with ``S = V diag(w) V^T``.
    """
    a = np.array(S, dtype=float)
    n = a.shape[0]
    v = np.eye(n)
    norm_f = np.linalg.norm(a)
    if norm_f == 0.0 or n == 1:
        return np.diag(a).copy(), v
    for _ in range(max_sweeps):
        if np.linalg.norm(a - np.diag(np.diag(a))) <= off_tol * norm_f:
            return np.diag(a).copy(), v
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = np.copysign(1.0, theta) / (abs(theta) + np.hypot(theta, 1.0))
                c = 1.0 / np.hypot(t, 1.0)
                s = t * c
                col_p = a[:, p].copy()
                col_q = a[:, q]
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q
                row_p = a[p, :].copy()
                row_q = a[q, :]
                a[p, :] = c * row_p - s * row_q
                a[q, :] = s * row_p + c * row_q
                a[p, q] = a[q, p] = 0.0
                vp = v[:, p].copy()
                vq = v[:, q]
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    if np.linalg.norm(a - np.diag(np.diag(a))) <= off_tol * norm_f:
        return np.diag(a).copy(), v
    raise NoConvergence(f"Jacobi eigensolver exceeded {max_sweeps} sweeps")


def sym_eig(S, vectors: bool = False, method: str = "lapack") -> Spectrum:
    """Full ascending spectrum of a symmetric matrix.

    ``method="lapack"`` (default) calls ``numpy.linalg.eigh``;
    ``method="jacobi"`` runs :func:`jacobi_eigh`.  Both are checked against
    the reconstruction residual ``EIG_TOL * ||S||_2`` when vectors are
    requested.
    """
    S = check_symmetric(S)
    if method == "jacobi":
        w, V = jacobi_eigh(S)
    elif method == "lapack":
        try:
            w, V = np.linalg.eigh(S)
        except np.linalg.LinAlgError as exc:
            raise NoConvergence(str(exc)) from exc
    else:
        raise ValueError(f"unknown eigensolver {method!r}")
    order = np.argsort(w, kind="stable")
    w = w[order]
    if not vectors:
        return Spectrum(w)
    V = V[:, order]
    scale = max(float(np.max(np.abs(w))), np.finfo(float).tiny)
    resid = np.linalg.norm(V @ np.diag(w) @ V.T - S, 2)
    if resid > EIG_TOL * scale:
        raise NoConvergence(f"eigen reconstruction residual {resid:.2e}")
    return Spectrum(w, V)


def eigvalsh(S) -> np.ndarray:
    return sym_eig(S).eigenvalues


def cholesky(S, name: str = "matrix") -> np.ndarray:
    """Lower Cholesky factor; raises :class:`NotSpd` on tiny or failed pivots."""
    S = check_symmetric(S, name=name)
    try:
        L = np.linalg.cholesky(S)
    except np.linalg.LinAlgError as exc:
        raise NotSpd(f"{name} is not positive definite") from exc
    floor = SPD_TOL * float(np.max(np.diag(S)))
    if floor <= 0 or np.min(np.diag(L)) ** 2 <= floor:
        raise NotSpd(f"{name} has a Cholesky pivot below {SPD_TOL:.0e} * max diagonal")
    return L


def is_spd(S) -> bool:
    try:
        cholesky(S)
    except NotSpd:
        return False
    return True


def is_spsd(S, tol: float = SPSD_TOL, scale: Optional[float] = None) -> bool:
    """True iff ``lambda_min(S) >= -tol * scale`` (``scale`` defaults to ``||S||_2``).

    Pass the size of the operands as ``scale`` when ``S`` is a difference
    of nearly equal matrices; ``||S||_2`` is then itself roundoff.
    """
    w = eigvalsh(S)
    if scale is None:
        scale = max(abs(w[0]), abs(w[-1]))
    return bool(w[0] >= -tol * scale)


def spd_solve(S, B) -> np.ndarray:
    """Solve ``S X = B`` through a validated Cholesky factor."""
    L = cholesky(S)
    return scipy.linalg.cho_solve((L, True), B)


def spd_inverse(S) -> np.ndarray:
    S = np.asarray(S, dtype=float)
    return symmetrize(spd_solve(S, np.eye(S.shape[0])))


def gen_eig(A, B) -> np.ndarray:
    """All eigenvalues of the pencil ``A v = lambda B v`` (``B`` SPD).

    Reduces with ``B = L L^T`` to the symmetric ``L^{-1} A L^{-T}``.
    """
    A = check_symmetric(A, name="A")
    L = cholesky(B, name="B")
    if A.shape != L.shape:
        raise ValueError(f"pencil shapes differ: {A.shape} vs {L.shape}")
    X = scipy.linalg.solve_triangular(L, A, lower=True)
    C = scipy.linalg.solve_triangular(L, X.T, lower=True)
    return eigvalsh(symmetrize(C))


def gen_eig_extremes(A, B) -> tuple[float, float]:
    w = gen_eig(A, B)
    return float(w[0]), float(w[-1])


def spd_sqrt(S) -> np.ndarray:
    """Principal square root of an SPD matrix."""
    cholesky(S)
    spec = sym_eig(S, vectors=True)
    V, w = spec.eigenvectors, spec.eigenvalues
    return symmetrize((V * np.sqrt(w)) @ V.T)


def psd_sqrt(S, scale: Optional[float] = None) -> np.ndarray:
    """Square root of an SPSD matrix; roundoff-negative eigenvalues clip to 0.

    Eigenvalues below ``-SPSD_TOL * scale`` are an error; ``scale`` defaults
    to ``||S||_2`` and should be the operand size when ``S`` is a difference.
    """
    spec = sym_eig(S, vectors=True)
    V, w = spec.eigenvectors, spec.eigenvalues
    if scale is None:
        scale = max(abs(w[0]), abs(w[-1]))
    if w[0] < -SPSD_TOL * scale:
        raise NotSpd(f"matrix is indefinite (lambda_min = {w[0]:.3e})")
    return symmetrize((V * np.sqrt(np.clip(w, 0.0, None))) @ V.T)


def energy_similarity(E, A, R=None) -> np.ndarray:
    """Return ``A^{1/2} E A^{-1/2}``, symmetrized after a symmetry check.

    Raises :class:`SimilarityNotSymmetric` when the transform is not
    symmetric, which means ``E`` is not ``A``-self-adjoint.
    """
    E = as_matrix(E, "E")
    if R is None:
        R = spd_sqrt(A)
    if E.shape != R.shape:
        raise ValueError(f"E {E.shape} and A {R.shape} differ in order")
    T = scipy.linalg.solve(R, (R @ E).T, assume_a="pos").T
    # iteration matrices are O(1); floor the scale so E ~ 0 is not all noise
    err = asymmetry(T, max(float(np.max(np.abs(T))), 1.0))
    if err > SYM_TOL:
        raise SimilarityNotSymmetric(
            f"A^(1/2) E A^(-1/2) asymmetry {err:.3e} exceeds {SYM_TOL:.0e}")
    return symmetrize(T)


def operator_energy_norm(E, A) -> float:
    """``||E||_A`` for an ``A``-self-adjoint ``E``: spectral radius of the
    symmetric similarity transform."""
    w = eigvalsh(energy_similarity(E, A))
    return float(max(abs(w[0]), abs(w[-1])))


def energy_norm(v, A) -> float:
    v = np.asarray(v, dtype=float)
    return float(np.sqrt(max(v @ (A @ v), 0.0)))


def smallest_singular_ratio(P) -> float:
    s = np.linalg.svd(np.asarray(P, dtype=float), compute_uv=False)
    return float(s[-1] / s[0]) if s[0] > 0 else 0.0
