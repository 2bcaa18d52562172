"""Recursive multigrid cycles, their error matrices, and level-wide bounds.

The cycle at level ``k`` is an inexact two-grid cycle whose coarse solve is
``gamma`` recursive cycles at level ``k - 1`` (or ``A0_hat^{-1}`` at
``k = 1``).  Its error matrix obeys

    E^(k) = (I - M_k^{-T} A_k) [I - P_k (I - (E^(k-1))^gamma) A_{k-1}^{-1} P_k^T A_k] (I - M_k^{-1} A_k).

Level constants::

    sigma_L = max_k sigma_TG^(k)
    tau_L   = max_k lambda_max((P_k^T Mt_k P_k)^{-1} A_{k-1})
    eps_L   = min_k lambda_min(Mt_k^{-1} A_k)

and ``x_gamma`` is a root in ``(sigma_L, 1 - eps_L)`` of

    F_gamma(x) = (s e (1 - x^g) + t (1 - e)(1 - s) x^g) / (e (1 - x^g) + t (1 - s) x^g) - x.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg

from .errors import BadBracket, BadParameter, CrossCheckFailed, NontrivialCaseViolated, NotSpd
from .hierarchy import Hierarchy, galerkin
from .linalg import (
    cholesky,
    eigvalsh,
    energy_similarity,
    energy_norm,
    gen_eig,
    gen_eig_extremes,
    spd_solve,
    spd_sqrt,
    symmetrize,
)
from .twogrid import k_tg

ROOT_TOL = 1e-13
BISECT_MAX_ITER = 200
SCAN_POINTS = 1000
GATE_TOL = 1e-12


@dataclass(frozen=True)
class MgLevelQuantities:
    sigma_tg_per_level: tuple
    sigma_img_per_level: tuple
    sigma_L: float
    tau_L: float
    eps_L: float


@dataclass(frozen=True)
class FixedPointResult:
    gamma: int
    x_gamma: float
    bracket: tuple
    iterations: int
    multiple_roots: bool = False


@dataclass(frozen=True)
class Certification:
    """Outcome of checking the coarsest-solve condition and the level bound."""

    gamma: int
    x_gamma: float
    threshold: float
    condition24: bool
    remark44: bool
    bound_holds: bool
    verified: bool
    quantities: MgLevelQuantities
    sizes: tuple
    x1: float
    x2_hat: float

    @property
    def condition_holds(self) -> bool:
        return self.condition24

    def to_record(self) -> dict:
        q = self.quantities
        return {
            "levels": [
                {"k": k, "n_k": self.sizes[k],
                 "sigma_TG": q.sigma_tg_per_level[k - 1],
                 "sigma_IMG": q.sigma_img_per_level[k - 1]}
                for k in range(1, len(self.sizes))
            ],
            "sigma_L": q.sigma_L,
            "tau_L": q.tau_L,
            "eps_L": q.eps_L,
            "gamma": self.gamma,
            "x_gamma": self.x_gamma,
            "x1": self.x1,
            "x2_hat": self.x2_hat,
            "condition24": self.condition24,
            "remark44": self.remark44,
            "verified": self.verified,
        }


# -- the cycle --------------------------------------------------------------

def mg_cycle(h: Hierarchy, k: int, f, u0) -> np.ndarray:
    """One multigrid cycle at level ``k`` (``1 <= k <= L``)."""
    if not 1 <= k <= h.L:
        raise BadParameter(f"level must be in 1..{h.L}, got {k}")
    A, P, s = h.A[k], h.P[k], h.smoothers[k]
    f = np.asarray(f, dtype=float)
    u = np.asarray(u0, dtype=float)
    if f.shape != (A.shape[0],) or u.shape != f.shape:
        raise BadParameter(f"vectors must have length {A.shape[0]}")
    u = u + s.solve(f - A @ u)
    r = P.T @ (f - A @ u)
    if k == 1:
        e = spd_solve(h.A0_hat, r)
    else:
        e = np.zeros_like(r)
        for _ in range(h.gamma):
            e = mg_cycle(h, k - 1, r, e)
    u = u + P @ e
    return u + s.solve_transpose(f - A @ u)


# -- explicit error matrices -------------------------------------------------

def _power_energy(E, A, gamma, R=None):
    """``E^gamma`` formed in the symmetric coordinates ``R E R^{-1}``."""
    if R is None:
        R = spd_sqrt(A)
    T = energy_similarity(E, A, R)
    Tg = np.linalg.matrix_power(T, gamma)
    Tg = symmetrize(Tg)
    return scipy.linalg.solve(R, Tg @ R, assume_a="pos"), Tg


def mg_error_matrices(h: Hierarchy) -> list:
    """``[None, E^(1), ..., E^(L)]``, built bottom-up once per level."""
    out = [None]
    for k in range(1, h.L + 1):
        A, P, s = h.A[k], h.P[k], h.smoothers[k]
        if k == 1:
            coarse = P @ spd_solve(h.A0_hat, P.T @ A)
        else:
            Eg, _ = _power_energy(out[k - 1], h.A[k - 1], h.gamma)
            Ic = np.eye(h.A[k - 1].shape[0])
            coarse = P @ (Ic - Eg) @ spd_solve(h.A[k - 1], P.T @ A)
        E = s.post_error() @ (np.eye(A.shape[0]) - coarse) @ s.pre_error()
        out.append(E)
    return out


def _check_cycle_matches(h, k, E, seed=0, trials=3, tol=1e-11):
    rng = np.random.default_rng(seed)
    A = h.A[k]
    for _ in range(trials):
        u_star = rng.standard_normal(A.shape[0])
        u0 = rng.standard_normal(A.shape[0])
        err = u_star - mg_cycle(h, k, A @ u_star, u0)
        pred = E @ (u_star - u0)
        scale = max(1.0, np.linalg.norm(u_star - u0))
        if np.linalg.norm(err - pred) > tol * scale:
            raise CrossCheckFailed(
                f"cycle error and E^({k}) disagree at level {k}: "
                f"{np.linalg.norm(err - pred):.2e}")


def mg_error_matrix(h: Hierarchy, k: int, check: bool = True) -> np.ndarray:
    """Explicit ``E^(k)``, cross-checked against :func:`mg_cycle` and its
    spectrum location ``[0, 1)``."""
    if not 1 <= k <= h.L:
        raise BadParameter(f"level must be in 1..{h.L}, got {k}")
    E = mg_error_matrices(h)[k]
    if check:
        _check_cycle_matches(h, k, E)
        w = eigvalsh(energy_similarity(E, h.A[k]))
        if w[0] < -1e-10 or w[-1] >= 1.0:
            raise CrossCheckFailed(
                f"spectrum of E^({k}) leaves [0, 1): [{w[0]:.3e}, {w[-1]:.3e}]")
    return E


def energy_spectrum(E, A) -> np.ndarray:
    return eigvalsh(energy_similarity(E, A))


def implicit_coarse_operator(h: Hierarchy, k: int, errors: Optional[list] = None) -> np.ndarray:
    """``B_c = A_{k-1} (I - (E^(k-1))^gamma)^{-1}`` at level ``k >= 2``
    (``A0_hat`` at ``k = 1``)."""
    if not 1 <= k <= h.L:
        raise BadParameter(f"level must be in 1..{h.L}, got {k}")
    if k == 1:
        return h.A0_hat.copy()
    if errors is None:
        errors = mg_error_matrices(h)
    Ac = h.A[k - 1]
    R = spd_sqrt(Ac)
    _, Tg = _power_energy(errors[k - 1], Ac, h.gamma, R)
    inner = np.eye(Ac.shape[0]) - Tg
    try:
        Bc = symmetrize(R @ spd_solve(symmetrize(inner), R))
        cholesky(Bc, name="implicit B_c")
    except NotSpd as exc:
        raise NotSpd(f"implicit coarse operator at level {k} is not SPD") from exc
    return Bc


# -- level quantities --------------------------------------------------------

def level_quantities(h: Hierarchy, check_gate: bool = True) -> MgLevelQuantities:
    errors = mg_error_matrices(h)
    sig_tg, sig_img, taus, epss = [], [], [], []
    for k in range(1, h.L + 1):
        A, P, s = h.A[k], h.P[k], h.smoothers[k]
        sig_tg.append(1.0 - 1.0 / k_tg(A, s.Mtilde, P, s))
        w = energy_spectrum(errors[k], A)
        sig_img.append(float(max(abs(w[0]), abs(w[-1]))))
        taus.append(gen_eig_extremes(h.A[k - 1], galerkin(s.Mtilde, P))[1])
        epss.append(gen_eig_extremes(A, s.Mtilde)[0])
    q = MgLevelQuantities(
        sigma_tg_per_level=tuple(sig_tg),
        sigma_img_per_level=tuple(sig_img),
        sigma_L=max(sig_tg),
        tau_L=max(taus),
        eps_L=min(epss),
    )
    if check_gate and not (0.0 < q.sigma_L < 1.0 - q.eps_L):
        raise NontrivialCaseViolated(
            f"need 0 < sigma_L < 1 - eps_L, got sigma_L = {q.sigma_L:.6g}, "
            f"eps_L = {q.eps_L:.6g}")
    return q


# -- fixed-point roots --------------------------------------------------------

def fixed_point_map(x, sigma, tau, eps, gamma):
    """``F_gamma(x) + x``, the level-to-level bound map."""
    xg = x ** gamma
    num = sigma * eps * (1.0 - xg) + tau * (1.0 - eps) * (1.0 - sigma) * xg
    den = eps * (1.0 - xg) + tau * (1.0 - sigma) * xg
    return num / den


def fixed_point_residual(x, sigma, tau, eps, gamma):
    """``F_gamma(x)``."""
    return fixed_point_map(x, sigma, tau, eps, gamma) - x


def _check_gate(sigma, tau, eps):
    if not (0.0 < sigma < 1.0 - eps and 0.0 < eps <= tau * (1.0 + GATE_TOL)):
        raise BadParameter(
            f"need 0 < sigma < 1 - eps and 0 < eps <= tau; "
            f"got sigma={sigma}, tau={tau}, eps={eps}")


def fixed_point_root(sigma: float, tau: float, eps: float, gamma: int) -> FixedPointResult:
    """Root of ``F_gamma`` in ``(sigma, 1 - eps)`` by bisection.

    The bracket is scanned at ``SCAN_POINTS`` uniform points first; when
    more than one sign change shows up, the smallest root is returned and
    ``multiple_roots`` is set.
    """
    if int(gamma) < 1:
        raise BadParameter(f"cycle index must be >= 1, got {gamma}")
    gamma = int(gamma)
    lo, hi = float(sigma), 1.0 - float(eps)
    F = lambda x: fixed_point_residual(x, sigma, tau, eps, gamma)  # noqa: E731
    f_lo, f_hi = F(lo), F(hi)
    if not (f_lo > 0.0 and f_hi < 0.0):
        raise BadBracket(f"F_{gamma} has no sign change on [{lo}, {hi}]: "
                         f"F(lo) = {f_lo:.3e}, F(hi) = {f_hi:.3e}")
    xs = np.linspace(lo, hi, SCAN_POINTS + 1)
    fs = fixed_point_residual(xs, sigma, tau, eps, gamma)
    fs[0], fs[-1] = f_lo, f_hi
    signs = np.sign(fs)
    first = int(np.nonzero(signs[1:] != signs[:-1])[0][0])
    nz = signs[signs != 0]
    n_roots = int(np.count_nonzero(nz[1:] != nz[:-1]))
    a, b, fa = xs[first], xs[first + 1], fs[first]
    it = 0
    x = 0.5 * (a + b)
    for it in range(1, BISECT_MAX_ITER + 1):
        x = 0.5 * (a + b)
        fx = F(x)
        if fx == 0.0 or b - a <= 2.0 * np.finfo(float).eps * abs(x):
            break
        if (fx > 0) == (fa > 0):
            a, fa = x, fx
        else:
            b = x
    if abs(F(x)) > ROOT_TOL:
        raise CrossCheckFailed(f"bisection stalled: |F(x)| = {abs(F(x)):.2e}")
    return FixedPointResult(gamma, float(x), (lo, hi), it, n_roots > 1)


def corollary43_bounds(sigma: float, tau: float, eps: float) -> tuple[float, float]:
    """Closed-form V-cycle root ``x1`` and W-cycle bound ``x2_hat``.

    Both are cross-checked against bisection roots of ``F_1`` and ``F_2``.
    """
    _check_gate(sigma, tau, eps)
    mu = 1.0 + sigma - tau * (1.0 - eps) * (1.0 - sigma) / eps
    disc = mu * mu - 4.0 * sigma * (1.0 - tau / eps * (1.0 - sigma))
    x1 = 2.0 * sigma / (mu + math.sqrt(max(disc, 0.0)))
    if abs(tau * (1.0 - sigma) - eps) <= 1e-12:
        x2_hat = 2.0 * sigma / (1.0 + math.sqrt(1.0 - 4.0 * sigma * (1.0 - sigma - eps)))
    else:
        x2_hat = fixed_point_map(x1, sigma, tau, eps, 2)
    r1 = fixed_point_root(sigma, tau, eps, 1).x_gamma
    if abs(r1 - x1) > 1e-10:
        raise CrossCheckFailed(f"x1 closed form {x1!r} != bisection root {r1!r}")
    r2 = fixed_point_root(sigma, tau, eps, 2).x_gamma
    if r2 > x2_hat + 1e-10:
        raise CrossCheckFailed(f"W-cycle root {r2!r} exceeds x2_hat {x2_hat!r}")
    return float(x1), float(x2_hat)


# -- coarsest-level replacements and certification ----------------------------

def condition24_threshold(q: MgLevelQuantities, x_gamma: float) -> float:
    s, e = q.sigma_L, q.eps_L
    return e * (x_gamma - s) / ((1.0 - s) * (1.0 - e - x_gamma))


def restricted_smoother(h: Hierarchy, k: int = 1) -> np.ndarray:
    """``P_k^T Mt_k P_k``."""
    return galerkin(h.smoothers[k].Mtilde, h.P[k])


def coarsest_shift(h: Hierarchy, theta: float) -> Hierarchy:
    """Replace ``A0_hat`` by ``A_0 + theta P_1^T Mt_1 P_1``."""
    if theta < 0:
        raise BadParameter(f"shift must be nonnegative, got {theta}")
    return h.with_coarsest(h.A[0] + theta * restricted_smoother(h))


def coarsest_scale(h: Hierarchy, c: float) -> Hierarchy:
    """Replace ``A0_hat`` by ``A_0 / c`` with ``0 < c <= 1``."""
    if not 0.0 < c <= 1.0:
        raise BadParameter(f"scale must lie in (0, 1], got {c}")
    return h.with_coarsest(h.A[0] / c)


def theorem42_certify(h: Hierarchy, gamma: Optional[int] = None) -> Certification:
    """Check the coarsest-solve conditions and the bound ``sigma_IMG^(k) <= x_gamma``.

    Never raises on a failed bound; the booleans report what held.
    ``verified`` means a certificate (either condition) holds and the
    computed factors indeed satisfy the bound.
    """
    if gamma is not None:
        h = h.with_gamma(gamma)
    q = level_quantities(h)
    root = fixed_point_root(q.sigma_L, q.tau_L, q.eps_L, h.gamma)
    x = root.x_gamma
    thr = condition24_threshold(q, x)
    dev = gen_eig(symmetrize(h.A0_hat - h.A[0]), restricted_smoother(h))
    cond24 = bool(dev[0] >= -1e-12 and dev[-1] <= thr + 1e-12)
    ratio = gen_eig(h.A[0], h.A0_hat)
    lower44 = (1.0 - q.eps_L - x) / (1.0 - q.eps_L - q.sigma_L)
    rem44 = bool(ratio[0] >= lower44 - 1e-12 and ratio[-1] <= 1.0 + 1e-12)
    holds = all(s <= x + 1e-9 for s in q.sigma_img_per_level)
    x1, x2_hat = corollary43_bounds(q.sigma_L, q.tau_L, q.eps_L)
    return Certification(
        gamma=h.gamma,
        x_gamma=x,
        threshold=thr,
        condition24=cond24,
        remark44=rem44,
        bound_holds=holds,
        verified=bool((cond24 or rem44) and holds),
        quantities=q,
        sizes=tuple(h.sizes()),
        x1=x1,
        x2_hat=x2_hat,
    )


def power_iteration_factor(h: Hierarchy, k: int, iters: int = 10000, seed: int = 0,
                           tol: float = 1e-9) -> float:
    """``||E^(k)||_{A_k}`` estimated by power iteration on the cycle itself.

    ``E^(k)`` is A-self-adjoint and positive semidefinite, so the
    A-Rayleigh quotient converges to its largest eigenvalue.  Iteration stops
    once the A-norm residual ``||E v - rho v||_A`` drops below ``tol``.
    """
    rng = np.random.default_rng(seed)
    A = h.A[k]
    v = rng.standard_normal(A.shape[0])
    v /= energy_norm(v, A)
    zero = np.zeros_like(v)
    est = 0.0
    for _ in range(iters):
        w = -mg_cycle(h, k, zero, -v)  # error propagation with u* = 0, u0 = -v
        est = float(v @ (A @ w))  # A-Rayleigh quotient
        if energy_norm(w - est * v, A) <= tol:
            break
        nrm = energy_norm(w, A)
        if nrm == 0.0:
            return 0.0
        v = w / nrm
    return abs(est)
