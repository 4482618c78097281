"""Optimal secondary sensor configuration under an SNR budget.

Everything here lives in the whitened domain: the primary mixing matrix
``A~``, the candidate secondary ``B~`` and the noise cross-correlation
``rho`` after both modalities are whitened. The design objective is the
trace of the joint information, maximized subject to the budget
``Tr(B~^T B~) <= p``; stationarity gives the closed form
``B~* = [I - lambda (I - rho^T rho)]^-1 rho^T A~`` with the multiplier
fixed by a scalar root equation in the singular values of rho.

The root is taken on the branch containing lambda = 0 on which all
denominators stay positive (keeping B~* finite). First-order
stationarity is verified by finite differences on every solve; whether
the stationary point is a global maximizer is measured empirically by
the perturbation probe, not asserted.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.optimize

from .errors import DegenerateBudget, FormDisagreement, Inadmissible, NoRoot
from .information import whitened_joint_fisher
from .matrixkit import symmetrize
from .model import SourcePrior


@dataclass(frozen=True)
class PlacementSolution:
    """Secondary configuration, multiplier, budget and stationarity diagnostics.

    ``B_star`` is in the whitened domain (map back with
    :func:`unwhiten_secondary`). ``kkt_residual`` is the Frobenius norm
    of the finite-difference gradient of the Lagrangian at the solution,
    normalized by ``1 + |objective|``. Degenerate solutions (rho = 0)
    carry no matrix, only the analysis note.
    """

    B_star: np.ndarray | None
    lambda_: float
    budget_p: float
    objective_e: float
    kkt_residual: float
    degenerate: bool = False
    note: str = ""

    def to_json_dict(self) -> dict:
        return {
            "B_star": None if self.B_star is None else self.B_star.tolist(),
            "lambda": self.lambda_,
            "p": self.budget_p,
            "objective": self.objective_e,
            "kkt_residual": self.kkt_residual,
            "degenerate": self.degenerate,
            "note": self.note,
        }


@dataclass(frozen=True)
class SvdOfRho:
    """SVD of rho plus the diagonal weights of the budget root equation.

    ``d`` holds the diagonal entries of ``U^T A~ A~^T U``; the root
    equation is ``sum_i d_i sigma_i^2 / [1 - lambda (1 - sigma_i^2)]^2 = p``.
    """

    U: np.ndarray
    singular_values: np.ndarray
    V: np.ndarray
    d: np.ndarray


@dataclass(frozen=True)
class ProbeReport:
    """Outcome of random feasible perturbations around a placement solution."""

    n_perturbations: int
    n_violations: int
    max_improvement: float
    seed: int


def _check_admissible(rho: np.ndarray, strict: bool = True) -> float:
    if not np.any(rho):
        return 0.0
    sigma_max = float(np.linalg.svd(rho, compute_uv=False)[0])
    limit_ok = sigma_max < 1.0 if strict else sigma_max <= 1.0 + 1e-10
    if not limit_ok:
        raise Inadmissible(
            f"sigma_max(rho) = {sigma_max:.8f} outside the admissible range",
            sigma_max=sigma_max,
        )
    return sigma_max


def synergy_objective(A_tilde, B_tilde, rho, prior: SourcePrior | None = None) -> float:
    """Trace of the joint information for a whitened pair (the synergy score).

    Equals the trace of the information-module joint matrix; the inverse
    of the minimum mean square error in the scalar sense.
    """
    A_tilde = np.asarray(A_tilde, dtype=float)
    B_tilde = np.asarray(B_tilde, dtype=float)
    rho = np.asarray(rho, dtype=float)
    _check_admissible(rho)
    e = float(np.trace(whitened_joint_fisher(A_tilde, B_tilde, rho)))
    if prior is not None:
        e += float(np.trace(prior.info_matrix()))
    return e


def synergy_gradient_rho(A_tilde, B_tilde, rho) -> np.ndarray:
    """Gradient of the synergy objective with respect to rho.

    Both published algebraic forms are evaluated (the second appears in
    transposed orientation and is transposed back); they must agree to
    1e-8 relative Frobenius. The gradient vanishes at the redundancy
    configurations ``B~ = rho^T A~`` and ``A~ = rho B~``.
    """
    A = np.asarray(A_tilde, dtype=float)
    B = np.asarray(B_tilde, dtype=float)
    rho = np.asarray(rho, dtype=float)
    _check_admissible(rho)
    n1, n2 = rho.shape

    K = np.linalg.solve(symmetrize(np.eye(n2) - rho.T @ rho), np.eye(n2))
    M = A.T @ rho - B.T
    form1 = 2.0 * (A + rho @ K @ M.T) @ M @ K

    Kp = np.linalg.solve(symmetrize(np.eye(n1) - rho @ rho.T), np.eye(n1))
    N = B.T @ rho.T - A.T
    form2 = (2.0 * (B + rho.T @ Kp @ N.T) @ N @ Kp).T

    err = float(np.linalg.norm(form1 - form2, "fro")) / (
        1.0 + float(np.linalg.norm(form1, "fro"))
    )
    if err >= 1e-8:
        raise FormDisagreement(
            f"gradient forms disagree (relative error {err:.3e})", max_relative_error=err
        )
    return form1


def svd_of_rho(A_tilde, rho) -> SvdOfRho:
    """SVD of rho and the primary-side diagonal weights for the root equation."""
    A_tilde = np.asarray(A_tilde, dtype=float)
    rho = np.asarray(rho, dtype=float)
    U, s, Vt = np.linalg.svd(rho)
    d = np.diag(U.T @ A_tilde @ A_tilde.T @ U).copy()
    return SvdOfRho(U=U, singular_values=s, V=Vt.T, d=np.maximum(d, 0.0))


def _budget_terms(svd: SvdOfRho) -> tuple[np.ndarray, np.ndarray]:
    k = svd.singular_values.shape[0]
    c = svd.d[:k] * svd.singular_values**2
    one_minus_sq = 1.0 - svd.singular_values**2
    return c, one_minus_sq


def _budget_value(lam: float, c: np.ndarray, oms: np.ndarray) -> float:
    return float(np.sum(c / (1.0 - lam * oms) ** 2))


def _budget_slope(lam: float, c: np.ndarray, oms: np.ndarray) -> float:
    return float(np.sum(2.0 * c * oms / (1.0 - lam * oms) ** 3))


def lambda_root(svd: SvdOfRho, p: float) -> float:
    """Multiplier solving the budget equation on the positive-denominator branch.

    The left side is monotone increasing on ``[0, lambda_hi)`` where
    ``lambda_hi`` keeps every denominator (and the secondary closed form)
    finite, so the root nearest zero is bracketed and refined with Brent
    plus a Newton polish to relative residual 1e-10.

    Raises
    ------
    NoRoot
        If ``p`` lies outside the attainable range on the branch; the
        error reports the attainable minimum (the value at lambda = 0).
    DegenerateBudget
        If every active singular value is at 1, making the equation
        independent of the multiplier.
    """
    if p <= 0.0:
        raise ValueError("budget p must be positive")
    c, oms = _budget_terms(svd)
    if not np.any(svd.singular_values > 0.0):
        raise ValueError("rho has no nonzero singular values; budget equation is void")

    active = c > 1e-300
    if np.any(active) and float(np.max(oms[active])) <= 1e-10:
        raise DegenerateBudget(
            "all active singular values are at 1: budget equation does not depend "
            "on the multiplier",
            attainable_value=float(np.sum(c)),
        )

    at_zero = _budget_value(0.0, c, oms)
    if abs(p - at_zero) <= 1e-12 * max(p, at_zero):
        return 0.0
    if p < at_zero:
        raise NoRoot(
            f"budget {p:.6g} below the attainable minimum {at_zero:.6g} on the "
            "positive-denominator branch",
            attainable_min=at_zero,
        )

    # Branch upper limit: every eigenvalue of rho^T rho (including padded
    # zeros when the secondary has more channels than the primary) must
    # keep 1 - lambda (1 - sigma^2) positive.
    n2 = svd.V.shape[0]
    tau = np.zeros(n2)
    k = svd.singular_values.shape[0]
    tau[:k] = svd.singular_values**2
    max_one_minus = float(np.max(1.0 - tau))
    lam_hi = np.inf if max_one_minus <= 0.0 else 1.0 / max_one_minus

    hi = min(1.0, 0.5 * lam_hi) if np.isfinite(lam_hi) else 1.0
    while _budget_value(hi, c, oms) < p:
        nxt = hi * 2.0 if not np.isfinite(lam_hi) else hi + 0.5 * (lam_hi - hi)
        if np.isfinite(lam_hi) and (lam_hi - nxt) <= 1e-14 * lam_hi:
            sup = _budget_value(nxt, c, oms)
            raise NoRoot(
                f"budget {p:.6g} above the attainable supremum ~{sup:.6g} on the "
                "positive-denominator branch",
                attainable_min=at_zero,
            )
        if not np.isfinite(lam_hi) and hi > 1e12:
            raise NoRoot(
                f"budget {p:.6g} not attainable (equation saturates)", attainable_min=at_zero
            )
        hi = nxt

    lam = float(
        scipy.optimize.brentq(
            lambda t: _budget_value(t, c, oms) - p, 0.0, hi, xtol=1e-30, rtol=8.9e-16
        )
    )
    # Newton polish against the analytic slope for the residual contract.
    for _ in range(8):
        resid = _budget_value(lam, c, oms) - p
        if abs(resid) <= 1e-12 * p:
            break
        slope = _budget_slope(lam, c, oms)
        if slope <= 0.0:
            break
        step = resid / slope
        candidate = lam - step
        if candidate < 0.0 or (np.isfinite(lam_hi) and candidate >= lam_hi):
            break
        lam = candidate
    return lam


def optimal_secondary(
    A_tilde, rho, p: float, prior: SourcePrior | None = None
) -> PlacementSolution:
    """Whitened secondary mixing matrix maximizing synergy under the budget.

    Closed form ``B~* = [I - lambda (I - rho^T rho)]^-1 rho^T A~`` with
    the multiplier from :func:`lambda_root`. Corner cases:

    * ``rho^T rho = I``: the multiplier vanishes and ``B~* = rho^T A~``
      regardless of the budget (equivalent to the redundancy relation).
    * ``rho = 0``: the closed form collapses to the zero matrix while the
      objective is direction-independent on the budget sphere, so a
      degenerate solution with that analysis is returned instead of a
      misleading zero matrix.
    """
    A_tilde = np.asarray(A_tilde, dtype=float)
    rho = np.asarray(rho, dtype=float)
    if p <= 0.0:
        raise ValueError("budget p must be positive")
    _check_admissible(rho, strict=False)

    prior_trace = 0.0 if prior is None else float(np.trace(prior.info_matrix()))

    if float(np.linalg.norm(rho, "fro")) <= 1e-12:
        e = float(np.trace(A_tilde.T @ A_tilde)) + p + prior_trace
        return PlacementSolution(
            B_star=None,
            lambda_=0.0,
            budget_p=p,
            objective_e=e,
            kkt_residual=0.0,
            degenerate=True,
            note=(
                "rho = 0: the objective is direction-independent; any secondary "
                "with Tr(B^T B) = p attains the same value, and the closed form "
                "degenerates to the zero matrix"
            ),
        )

    n2 = rho.shape[1]
    gram = rho.T @ rho
    if float(np.max(np.abs(gram - np.eye(n2)))) <= 1e-8:
        B_star = rho.T @ A_tilde
        e = float(np.trace(A_tilde.T @ A_tilde)) + prior_trace
        return PlacementSolution(
            B_star=B_star,
            lambda_=0.0,
            budget_p=p,
            objective_e=e,
            kkt_residual=0.0,
            degenerate=False,
            note=(
                "rho^T rho = I: multiplier vanishes and B* = rho^T A is optimal "
                "regardless of the budget (redundancy corner)"
            ),
        )

    svd = svd_of_rho(A_tilde, rho)
    lam = lambda_root(svd, p)
    B_star = np.linalg.solve(np.eye(n2) - lam * (np.eye(n2) - gram), rho.T @ A_tilde)
    e = synergy_objective(A_tilde, B_star, rho, prior=prior)
    kkt = _lagrangian_stationarity(A_tilde, B_star, rho, lam, e)
    return PlacementSolution(
        B_star=B_star,
        lambda_=lam,
        budget_p=p,
        objective_e=e,
        kkt_residual=kkt,
        degenerate=False,
        note="",
    )


def _lagrangian_stationarity(A_tilde, B_star, rho, lam: float, e: float) -> float:
    """Normalized FD-gradient norm of the Lagrangian at the solution."""

    def lagrangian(B):
        return synergy_objective(A_tilde, B, rho) - lam * float(np.sum(B * B))

    grad = np.zeros_like(B_star)
    for i in range(B_star.shape[0]):
        for j in range(B_star.shape[1]):
            h = 1e-6 * (1.0 + abs(B_star[i, j]))
            Bp = B_star.copy()
            Bp[i, j] += h
            Bm = B_star.copy()
            Bm[i, j] -= h
            grad[i, j] = (lagrangian(Bp) - lagrangian(Bm)) / (2.0 * h)
    return float(np.linalg.norm(grad, "fro")) / (1.0 + abs(e))


def unwhiten_secondary(B_star, L_u) -> np.ndarray:
    """Map a whitened secondary mixing matrix back to the raw domain."""
    return np.asarray(L_u, dtype=float) @ np.asarray(B_star, dtype=float)


def local_optimality_probe(
    A_tilde,
    rho,
    solution: PlacementSolution,
    n_perturbations: int = 200,
    seed: int = 0,
    delta: float = 1e-3,
    prior: SourcePrior | None = None,
) -> ProbeReport:
    """Probe a solution with random budget-feasible perturbations.

    Each perturbation displaces ``B~*`` by a random direction of norm
    ``delta`` and renormalizes back to the budget sphere; improvements of
    the objective beyond 1e-8 are counted as violations of local
    optimality and reported (never hidden): first-order stationarity does
    not imply the stationary point maximizes the objective.
    """
    if solution.B_star is None:
        raise ValueError("degenerate solutions have no matrix to probe")
    A_tilde = np.asarray(A_tilde, dtype=float)
    rho = np.asarray(rho, dtype=float)
    B0 = solution.B_star
    p = float(np.sum(B0 * B0))
    base = synergy_objective(A_tilde, B0, rho, prior=prior)
    rng = np.random.default_rng(seed)
    violations = 0
    max_gain = 0.0
    for _ in range(n_perturbations):
        Z = rng.standard_normal(B0.shape)
        Z *= delta / max(float(np.linalg.norm(Z, "fro")), 1e-300)
        B = B0 + Z
        B *= np.sqrt(p / float(np.sum(B * B)))
        gain = synergy_objective(A_tilde, B, rho, prior=prior) - base
        if gain > 1e-8:
            violations += 1
            max_gain = max(max_gain, gain)
    return ProbeReport(
        n_perturbations=n_perturbations,
        n_violations=violations,
        max_improvement=max_gain,
        seed=seed,
    )
