"""Exact and inexact two-grid operators and their convergence bounds.

The two-grid cycle is: presmooth with ``M``, restrict with ``P^T``,
coarse-solve with ``B_c``, prolong with ``P``, postsmooth with ``M^T``.
Its error propagation matrix is

    E_ITG = (I - M^{-T} A)(I - P B_c^{-1} P^T A)(I - M^{-1} A) = I - B_ITG^{-1} A.

Every spectral quantity here is computed from a symmetric matrix (a
congruence or similarity transform of the nonsymmetric product it stands
for), so the eigensolver always sees a symmetric input.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np
import scipy.linalg

from .errors import BadDimension, CrossCheckFailed, DegeneratePencil, OutOfTheoryRange
from .hierarchy import check_prolongation, galerkin
from .linalg import (
    check_symmetric,
    cholesky,
    eigvalsh,
    energy_similarity,
    gen_eig_extremes,
    is_spsd,
    psd_sqrt,
    spd_inverse,
    spd_solve,
    spd_sqrt,
    symmetrize,
)
from .smoothers import Smoother

CASE_TOL = 1e-12
SANDWICH_TOL = 1e-9


@dataclass(frozen=True)
class TwoGridSetup:
    """``(A, M, P, B_c)`` for one run of the two-grid cycle."""

    A: np.ndarray
    smoother: Smoother
    P: np.ndarray
    Bc: np.ndarray

    def __post_init__(self):
        A = check_symmetric(self.A, name="A")
        P = check_prolongation(self.P, allow_square=True)
        Bc = check_symmetric(self.Bc, name="B_c")
        if P.shape[0] != A.shape[0] or Bc.shape[0] != P.shape[1]:
            raise BadDimension(f"A {A.shape}, P {P.shape}, B_c {Bc.shape} do not conform")
        if self.smoother.A.shape != A.shape or not np.allclose(self.smoother.A, A, rtol=0, atol=0):
            raise BadDimension("smoother was built for a different A")
        cholesky(Bc, name="B_c")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "P", P)
        object.__setattr__(self, "Bc", Bc)

    @classmethod
    def exact(cls, A, smoother: Smoother, P) -> "TwoGridSetup":
        return cls(A, smoother, P, galerkin(A, P))

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def n_c(self) -> int:
        return self.P.shape[1]

    @property
    def Mt(self) -> np.ndarray:
        return self.smoother.Mtilde

    @property
    def Ac(self) -> np.ndarray:
        return galerkin(self.A, self.P)


@dataclass(frozen=True)
class SpectralQuantities:
    K_TG: float
    lam_max_AinvMt: float
    lam_min_AinvMt: float
    lam_max_AinvMtPi: float
    d1: float
    d2: float


@dataclass(frozen=True)
class BoundsReport:
    """Two-sided estimate of ``||E_ITG||_A`` next to its actual value."""

    quantities: SpectralQuantities
    case_id: str
    lower: float
    upper: float
    actual: float
    notay_upper: float
    sandwich_ok: bool
    n: int
    n_c: int

    def to_record(self) -> dict:
        """Flat JSON-compatible record of scalars."""
        q = asdict(self.quantities)
        return {
            "n": self.n,
            "n_c": self.n_c,
            "case_id": self.case_id,
            "K_TG": q["K_TG"],
            "lam_max_AinvMt": q["lam_max_AinvMt"],
            "lam_min_AinvMt": q["lam_min_AinvMt"],
            "lam_max_AinvMtPi": q["lam_max_AinvMtPi"],
            "d1": q["d1"],
            "d2": q["d2"],
            "lower": self.lower,
            "upper": self.upper,
            "actual": self.actual,
            "notay_upper": self.notay_upper,
            "sandwich_ok": self.sandwich_ok,
        }


# -- projections -----------------------------------------------------------

def correction_projection(A, P) -> np.ndarray:
    """``Pi_A = P A_c^{-1} P^T A``."""
    Ac = galerkin(A, P)
    return P @ spd_solve(Ac, P.T @ A)


def mtilde_projection(Mt, P) -> np.ndarray:
    """``Pi_Mt = P (P^T Mt P)^{-1} P^T Mt``, the Mt-orthogonal projector onto range(P)."""
    return P @ spd_solve(galerkin(Mt, P), P.T @ Mt)


def _mt_complement(Mt, P) -> np.ndarray:
    """Symmetric ``Mt (I - Pi_Mt) = Mt - Mt P (P^T Mt P)^{-1} P^T Mt``."""
    MtP = Mt @ P
    return symmetrize(Mt - MtP @ spd_solve(galerkin(Mt, P), MtP.T))


def _mt_range(Mt, P) -> np.ndarray:
    """Symmetric ``Mt Pi_Mt``."""
    MtP = Mt @ P
    return symmetrize(MtP @ spd_solve(galerkin(Mt, P), MtP.T))


def _deficit_root(A, Mt) -> np.ndarray:
    """``(A^{-1} - Mt^{-1})^{1/2}``; the argument is SPSD because Mt - A is."""
    Ainv = spd_inverse(A)
    return psd_sqrt(symmetrize(Ainv - spd_inverse(Mt)), scale=float(np.linalg.norm(Ainv, 2)))


# -- K_TG and its identities ----------------------------------------------

def _k_tg_congruence(A, Mt, P) -> float:
    C = _deficit_root(A, Mt)
    return 1.0 + float(eigvalsh(symmetrize(C @ _mt_complement(Mt, P) @ C))[-1])


def _k_tg_rayleigh(A, Mt, P) -> float:
    return gen_eig_extremes(_mt_complement(Mt, P), A)[1]


def _k_tg_preconditioner(A, M: Smoother, P) -> float:
    B_TG = exact_preconditioner(A, M, P)
    return gen_eig_extremes(B_TG, A)[1]


def k_tg(A, Mt, P, smoother: Optional[Smoother] = None) -> float:
    """Exact two-grid constant ``K_TG``, computed two independent ways.

    Route (a) is ``lambda_max(A^{-1} B_TG)`` when a smoother is given, or
    else the Rayleigh-quotient definition ``lambda_max`` of the pencil
    ``(Mt (I - Pi_Mt), A)``.  Route (b) is ``1 + lambda_max`` of
    ``C Mt (I - Pi_Mt) C`` with ``C = (A^{-1} - Mt^{-1})^{1/2}``.
    """
    A = check_symmetric(A, name="A")
    Mt = check_symmetric(Mt, name="Mt")
    if smoother is not None:
        a = _k_tg_preconditioner(A, smoother, P)
    else:
        a = _k_tg_rayleigh(A, Mt, P)
    b = _k_tg_congruence(A, Mt, P)
    if abs(a - b) > 1e-8 * max(abs(a), 1.0):
        raise CrossCheckFailed(f"K_TG routes disagree: {a!r} vs {b!r}")
    return a


def lemma32_identities(A, Mt, P) -> tuple[float, float, float, float]:
    """Extreme eigenvalues of ``(A^{-1}Mt - I)(I - Pi)`` and ``(A^{-1}Mt - I) Pi``.

    Returned as ``(min, max)`` of the first product followed by ``(min, max)``
    of the second; they should equal ``(0, K_TG - 1, 0, lambda_max(A^{-1} Mt Pi) - 1)``.
    """
    A = check_symmetric(A, name="A")
    Mt = check_symmetric(Mt, name="Mt")
    C = _deficit_root(A, Mt)
    w1 = eigvalsh(symmetrize(C @ _mt_complement(Mt, P) @ C))
    w2 = eigvalsh(symmetrize(C @ _mt_range(Mt, P) @ C))
    return float(w1[0]), float(w1[-1]), float(w2[0]), float(w2[-1])


def lam_max_AinvMt_Pi(A, Mt, P) -> float:
    """``lambda_max(A^{-1} Mt Pi_Mt)`` via the pencil ``(Mt Pi_Mt, A)``."""
    return gen_eig_extremes(_mt_range(Mt, P), A)[1]


def deviation_extremes(A, Mt, P, Bc) -> tuple[float, float]:
    """``(d1, d2)``: reciprocal shifts of the pencil ``(B_c - A_c, P^T Mt P)``."""
    Ac = galerkin(A, P)
    lo, hi = gen_eig_extremes(symmetrize(np.asarray(Bc, dtype=float) - Ac), galerkin(Mt, P))
    if 1.0 + hi <= 0.0 or 1.0 + lo <= 0.0:
        raise DegeneratePencil(
            f"B_c - A_c is too negative: pencil extremes ({lo:.3e}, {hi:.3e})")
    return 1.0 / (1.0 + hi), 1.0 / (1.0 + lo)


def spectral_quantities(setup: TwoGridSetup) -> SpectralQuantities:
    A, Mt, P = setup.A, setup.Mt, setup.P
    lam_min, lam_max = gen_eig_extremes(Mt, A)
    d1, d2 = deviation_extremes(A, Mt, P, setup.Bc)
    return SpectralQuantities(
        K_TG=k_tg(A, Mt, P, setup.smoother),
        lam_max_AinvMt=lam_max,
        lam_min_AinvMt=lam_min,
        lam_max_AinvMtPi=lam_max_AinvMt_Pi(A, Mt, P),
        d1=d1,
        d2=d2,
    )


# -- preconditioners and error propagation matrices -------------------------

def exact_preconditioner(A, smoother: Smoother, P) -> np.ndarray:
    """``B_TG = A + (I - A M^{-T}) Mt (I - Pi_Mt) (I - M^{-1} A)``."""
    pre = smoother.pre_error()
    return symmetrize(A + pre.T @ _mt_complement(smoother.Mtilde, P) @ pre)


def inexact_preconditioner(setup: TwoGridSetup) -> np.ndarray:
    """``B_ITG`` in closed form (no inverse of ``B_ITG^{-1}`` taken)::

        A + (I - A M^{-T}) Mt (I - P (P^T Mt P + B_c - A_c)^{-1} P^T Mt) (I - M^{-1} A)
    """
    s, P, Mt = setup.smoother, setup.P, setup.Mt
    pre = s.pre_error()
    MtP = Mt @ P
    core = galerkin(Mt, P) + setup.Bc - setup.Ac
    middle = symmetrize(Mt - MtP @ spd_solve(symmetrize(core), MtP.T))
    return symmetrize(setup.A + pre.T @ middle @ pre)


def inexact_preconditioner_inverse(setup: TwoGridSetup) -> np.ndarray:
    """``B_ITG^{-1} = Mbar^{-1} + (I - M^{-T} A) P B_c^{-1} P^T (I - A M^{-1})``."""
    s, P = setup.smoother, setup.P
    post = s.post_error()
    W = post @ P
    return symmetrize(s.mbar_inverse() + W @ spd_solve(setup.Bc, W.T))


def inexact_error_matrix(setup: TwoGridSetup) -> np.ndarray:
    s, P = setup.smoother, setup.P
    coarse = np.eye(setup.n) - P @ spd_solve(setup.Bc, P.T @ setup.A)
    return s.post_error() @ coarse @ s.pre_error()


def preconditioner_residual(setup: TwoGridSetup) -> float:
    """``||B_ITG (B_ITG^{-1}) - I||_2`` with the two factors built independently."""
    B = inexact_preconditioner(setup)
    Binv = inexact_preconditioner_inverse(setup)
    return float(np.linalg.norm(B @ Binv - np.eye(setup.n), 2))


def _check_error_form(E, Binv, A, tol, label):
    n = A.shape[0]
    resid = np.linalg.norm(E - (np.eye(n) - Binv @ A), 2)
    # both forms carry rounding error that grows with the conditioning of A
    tol = max(tol, 64 * n * np.finfo(float).eps * np.linalg.cond(A))
    if resid > tol * max(1.0, np.linalg.norm(Binv @ A, 2)):
        raise CrossCheckFailed(f"{label}: E != I - B^-1 A (residual {resid:.2e})")


def build_exact_twogrid(setup: TwoGridSetup):
    """``(E_TG, B_TG)`` for ``B_c = A_c``, with the identities cross-checked."""
    A, s, P = setup.A, setup.smoother, setup.P
    E = s.post_error() @ (np.eye(setup.n) - correction_projection(A, P)) @ s.pre_error()
    B = exact_preconditioner(A, s, P)
    _check_error_form(E, spd_inverse(B), A, 1e-11, "exact two-grid")
    lam_max = gen_eig_extremes(A, B)[1]
    if abs(lam_max - 1.0) > 1e-10:
        raise CrossCheckFailed(f"lambda_max(B_TG^-1 A) = {lam_max!r}, expected 1")
    if not is_spsd(symmetrize(B - A), scale=float(np.linalg.norm(B, 2))):
        raise CrossCheckFailed("B_TG - A is not SPSD")
    return E, B


def build_inexact_twogrid(setup: TwoGridSetup):
    """``(E_ITG, B_ITG)``; the closed-form ``B_ITG`` is checked against the
    independently assembled ``B_ITG^{-1}``."""
    E = inexact_error_matrix(setup)
    B = inexact_preconditioner(setup)
    Binv = inexact_preconditioner_inverse(setup)
    resid = np.linalg.norm(B @ Binv - np.eye(setup.n), 2)
    if resid > 1e-10:
        raise CrossCheckFailed(f"B_ITG * B_ITG^-1 deviates from I by {resid:.2e}")
    _check_error_form(E, Binv, setup.A, 1e-11, "inexact two-grid")
    return E, B


def convergence_factor(setup: TwoGridSetup) -> float:
    """``||E_ITG||_A`` two ways: spectral radius of ``A^{1/2} E A^{-1/2}`` and the
    max-formula over the extreme eigenvalues of ``A^{-1} B_ITG``."""
    E, B = build_inexact_twogrid(setup)
    w = eigvalsh(energy_similarity(E, setup.A))
    rho = float(max(abs(w[0]), abs(w[-1])))
    lo, hi = gen_eig_extremes(B, setup.A)
    via_b = max(1.0 / lo - 1.0, 1.0 - 1.0 / hi)
    if abs(rho - via_b) > 1e-9:
        raise CrossCheckFailed(f"||E_ITG||_A routes disagree: {rho!r} vs {via_b!r}")
    return rho


# -- bounds -----------------------------------------------------------------

def notay_bound(setup: TwoGridSetup, K_TG: Optional[float] = None) -> float:
    """Upper bound in terms of ``K_TG`` and the extremes of ``B_c^{-1} A_c``."""
    if K_TG is None:
        K_TG = k_tg(setup.A, setup.Mt, setup.P, setup.smoother)
    lo, hi = gen_eig_extremes(setup.Ac, setup.Bc)
    return max(1.0 - min(1.0, lo) / K_TG, max(1.0, hi) - 1.0)


def bound_terms(q: SpectralQuantities) -> dict:
    """Candidate lower/upper bounds ``L1, U1, L2, U2, L3, U3``."""
    K, lM, lm, lp, d1, d2 = (q.K_TG, q.lam_max_AinvMt, q.lam_min_AinvMt,
                             q.lam_max_AinvMtPi, q.d1, q.d2)
    U2 = 1.0 / ((1.0 - d2) * lp + d2) - 1.0
    return {
        "L1": 1.0 - 1.0 / max(K, lM - d2 * lp + d2),
        "U1": 1.0 - 1.0 / (d1 * K + (1.0 - d1) * lM),
        "L2": 1.0 - 1.0 / max(lm, d2 * K + (1.0 - d2) * lM),
        "U2": U2,
        "L3": 1.0 / (min(lM - d1 * lp, (1.0 - d1) * lm) + d1) - 1.0,
        "U3": max(1.0 - 1.0 / K, U2),
    }


def select_case(q: SpectralQuantities) -> str:
    if q.d2 <= 1.0 + CASE_TOL:
        return "i"
    if q.d1 <= 1.0 + CASE_TOL:
        return "ii"
    return "iii"


def admissible_d2_limit(q: SpectralQuantities) -> float:
    """Upper limit on ``d2`` for cases (ii)/(iii); ``inf`` when lambda_max(A^{-1}Mt Pi) <= 1."""
    lp = q.lam_max_AinvMtPi
    return lp / (lp - 1.0) if lp > 1.0 + CASE_TOL else np.inf


def case_bounds(q: SpectralQuantities) -> tuple[str, float, float]:
    """Case id and the (lower, upper) pair for that case."""
    case = select_case(q)
    t = bound_terms(q)
    if case == "i":
        return case, t["L1"], t["U1"]
    limit = admissible_d2_limit(q)
    if not q.d2 < limit:
        raise OutOfTheoryRange(
            f"case ({case}) needs d2 < {limit:.6g}, got d2 = {q.d2:.6g}")
    if case == "ii":
        return case, t["L2"], max(t["U1"], t["U2"])
    return case, max(t["L2"], t["L3"]), t["U3"]


def theorem33_bounds(setup: TwoGridSetup) -> BoundsReport:
    """Two-sided bounds for ``||E_ITG||_A`` plus the actual value and the
    Notay-type upper bound."""
    q = spectral_quantities(setup)
    case, lower, upper = case_bounds(q)
    actual = convergence_factor(setup)
    ok = lower - SANDWICH_TOL <= actual <= upper + SANDWICH_TOL
    return BoundsReport(
        quantities=q,
        case_id=case,
        lower=float(lower),
        upper=float(upper),
        actual=actual,
        notay_upper=float(notay_bound(setup, q.K_TG)),
        sandwich_ok=bool(ok),
        n=setup.n,
        n_c=setup.n_c,
    )
