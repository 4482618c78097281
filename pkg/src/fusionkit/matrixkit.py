"""Dense symmetric-matrix toolkit: PSD square roots, block inversion, Schur factors.

All operations are pure functions on small dense arrays. Inverses are
always computed through factorizations (Cholesky / eigendecomposition),
and condition estimates are surfaced in error objects when a solve is
refused.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import NotPD, NotPSD, Singular

# Condition estimate above which a solve is refused as numerically singular.
SINGULAR_CONDITION = 1e12

# Absolute eigenvalue tolerance for PSD checks, scaled by the matrix norm
# when the norm exceeds one.
PSD_EIG_TOL = 1e-10


def require_symmetric(M, name: str = "matrix", tol: float = 1e-12) -> np.ndarray:
    """Validate that ``M`` is square, finite and symmetric; return it as float array.

    Symmetry tolerance is ``tol * max(1, |M_ij|)`` per entry.
    """
    M = np.asarray(M, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"{name} must be square, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError(f"{name} has non-finite entries")
    scale = np.maximum(1.0, np.abs(M))
    if np.any(np.abs(M - M.T) > tol * scale):
        worst = float(np.max(np.abs(M - M.T)))
        raise ValueError(f"{name} is not symmetric (max asymmetry {worst:.3e})")
    return M


def symmetrize(M) -> np.ndarray:
    """Return the symmetric part (M + M^T) / 2."""
    M = np.asarray(M, dtype=float)
    return 0.5 * (M + M.T)


def psd_tolerance(M: np.ndarray, tol: float = PSD_EIG_TOL) -> float:
    """Effective PSD eigenvalue tolerance: absolute, norm-scaled above unit norm."""
    norm = float(np.linalg.norm(M, 2)) if M.size else 0.0
    return tol * max(1.0, norm)


def is_psd(M, tol: float = PSD_EIG_TOL) -> tuple[bool, float]:
    """Check positive semidefiniteness of a symmetric matrix.

    Parameters
    ----------
    M:
        Symmetric matrix.
    tol:
        Eigenvalues >= -tol count as nonnegative.

    Returns
    -------
    (bool, float)
        Whether the minimum eigenvalue is >= -tol, and that eigenvalue.
    """
    M = require_symmetric(M)
    min_eig = float(np.linalg.eigvalsh(symmetrize(M))[0])
    return min_eig >= -tol, min_eig


def sym_sqrt(M) -> np.ndarray:
    """Unique symmetric PSD square root L with ``L @ L.T == M``.

    Eigenvalues in [-1e-10, 0] are clamped to zero before rooting; a
    minimum eigenvalue below ``-1e-8 * ||M||_2`` raises :class:`NotPSD`.
    """
    M = require_symmetric(M)
    w, V = np.linalg.eigh(symmetrize(M))
    norm2 = max(abs(float(w[0])), abs(float(w[-1])))
    if w[0] < -1e-8 * max(norm2, 1e-300):
        raise NotPSD(
            f"matrix is not PSD: min eigenvalue {w[0]:.6e}", min_eigenvalue=float(w[0])
        )
    w = np.clip(w, 0.0, None)
    return symmetrize((V * np.sqrt(w)) @ V.T)


def psd_inverse(M, name: str = "matrix") -> np.ndarray:
    """Inverse of a symmetric PD matrix via Cholesky; raises on indefiniteness.

    Raises
    ------
    NotPD
        If the Cholesky factorization fails.
    Singular
        If the condition estimate exceeds ``SINGULAR_CONDITION``.
    """
    M = require_symmetric(M, name=name)
    cond = condition_estimate(M)
    if not np.isfinite(cond) or cond > SINGULAR_CONDITION:
        raise Singular(f"{name} is numerically singular (cond~{cond:.3e})", condition=cond)
    try:
        c, low = scipy.linalg.cho_factor(M, lower=True)
    except scipy.linalg.LinAlgError as exc:
        raise NotPD(f"{name} is not positive definite: {exc}") from exc
    inv = scipy.linalg.cho_solve((c, low), np.eye(M.shape[0]))
    return symmetrize(inv)


def pd_solve(M, B, name: str = "matrix") -> np.ndarray:
    """Solve ``M x = B`` for symmetric PD ``M`` through Cholesky."""
    M = require_symmetric(M, name=name)
    try:
        c, low = scipy.linalg.cho_factor(M, lower=True)
    except scipy.linalg.LinAlgError as exc:
        raise NotPD(f"{name} is not positive definite: {exc}") from exc
    return scipy.linalg.cho_solve((c, low), np.asarray(B, dtype=float))


def condition_estimate(M) -> float:
    """Two-norm condition number estimate of a symmetric matrix."""
    w = np.abs(np.linalg.eigvalsh(symmetrize(np.asarray(M, dtype=float))))
    hi = float(np.max(w))
    lo = float(np.min(w))
    if lo == 0.0:
        return np.inf
    return hi / lo


@dataclass(frozen=True)
class BlockCovariance:
    """Joint noise covariance of two sensor groups.

    ``sigma_v`` (n1 x n1) and ``sigma_u`` (n2 x n2) are the marginal
    covariances, ``sigma_vu`` (n1 x n2) the cross-covariance. The
    assembled joint matrix must be symmetric positive definite.
    """

    sigma_v: np.ndarray
    sigma_u: np.ndarray
    sigma_vu: np.ndarray

    def __post_init__(self):
        sv = require_symmetric(self.sigma_v, name="sigma_v")
        su = require_symmetric(self.sigma_u, name="sigma_u")
        svu = np.asarray(self.sigma_vu, dtype=float)
        if svu.shape != (sv.shape[0], su.shape[0]):
            raise ValueError(
                f"sigma_vu shape {svu.shape} does not match blocks "
                f"({sv.shape[0]}, {su.shape[0]})"
            )
        if not np.all(np.isfinite(svu)):
            raise ValueError("sigma_vu has non-finite entries")
        object.__setattr__(self, "sigma_v", sv)
        object.__setattr__(self, "sigma_u", su)
        object.__setattr__(self, "sigma_vu", svu)

    @property
    def n1(self) -> int:
        return self.sigma_v.shape[0]

    @property
    def n2(self) -> int:
        return self.sigma_u.shape[0]

    @property
    def sigma_uv(self) -> np.ndarray:
        return self.sigma_vu.T

    def joint(self) -> np.ndarray:
        """Assemble the full (n1+n2) x (n1+n2) covariance."""
        return np.block([[self.sigma_v, self.sigma_vu], [self.sigma_uv, self.sigma_u]])

    def check_pd(self, tol: float = PSD_EIG_TOL) -> float:
        """Minimum eigenvalue of the joint matrix; raises NotPD if <= tol-negative."""
        min_eig = float(np.linalg.eigvalsh(symmetrize(self.joint()))[0])
        if min_eig <= -psd_tolerance(self.joint(), tol):
            raise NotPD(
                f"joint covariance is not PD: min eigenvalue {min_eig:.6e}",
                min_eigenvalue=min_eig,
            )
        return min_eig

    @staticmethod
    def uncorrelated(sigma_v, sigma_u) -> "BlockCovariance":
        sv = np.asarray(sigma_v, dtype=float)
        su = np.asarray(sigma_u, dtype=float)
        return BlockCovariance(sv, su, np.zeros((sv.shape[0], su.shape[0])))


def schur_factors(block: BlockCovariance) -> tuple[np.ndarray, np.ndarray]:
    """Inverses of the two Schur complements of the joint covariance.

    Returns
    -------
    (F, G)
        ``F = (sigma_u - sigma_uv sigma_v^-1 sigma_vu)^-1`` and
        ``G = (sigma_v - sigma_vu sigma_u^-1 sigma_uv)^-1``; both PD
        whenever the joint covariance is PD.

    Raises
    ------
    Singular
        If either Schur complement has condition estimate above 1e12.
    """
    sv, su, svu = block.sigma_v, block.sigma_u, block.sigma_vu
    schur_u = symmetrize(su - svu.T @ pd_solve(sv, svu, name="sigma_v"))
    schur_v = symmetrize(sv - svu @ pd_solve(su, svu.T, name="sigma_u"))
    for name, parent, S in (("sigma_u", su, schur_u), ("sigma_v", sv, schur_v)):
        w = np.linalg.eigvalsh(S)
        # Condition measured against the parent block's scale: a Schur
        # complement tiny relative to its block signals joint collapse
        # even when it is well-conditioned in isolation.
        scale = max(float(np.linalg.norm(parent, 2)), float(np.max(np.abs(w))))
        lo = float(w[0])
        cond = np.inf if lo <= 0.0 else scale / lo
        if not np.isfinite(cond) or cond > SINGULAR_CONDITION:
            raise Singular(
                f"Schur complement of {name} block is numerically singular "
                f"(cond~{cond:.3e})",
                condition=cond,
            )
    F = psd_inverse(schur_u, name="Schur complement (u block)")
    G = psd_inverse(schur_v, name="Schur complement (v block)")
    return F, G


def block_inverse(
    block: BlockCovariance,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Four blocks of the inverse of the joint covariance.

    Uses the block matrix inversion lemma around the v-block:
    the (2,2) block is the inverse Schur complement F, and the
    off-diagonal blocks are exactly zero for block-diagonal input.

    Returns
    -------
    (omega_11, omega_12, omega_21, omega_22)
        Blocks of ``joint()^-1`` with shapes (n1,n1), (n1,n2), (n2,n1), (n2,n2).
    """
    sv, svu = block.sigma_v, block.sigma_vu
    F, _ = schur_factors(block)
    sv_inv = psd_inverse(sv, name="sigma_v")
    if not np.any(svu):
        # Block-diagonal input: keep the zero blocks exact.
        su_inv = psd_inverse(block.sigma_u, name="sigma_u")
        z = np.zeros_like(svu)
        return sv_inv, z, z.T, su_inv
    sv_inv_svu = sv_inv @ svu
    omega_12 = -sv_inv_svu @ F
    omega_11 = symmetrize(sv_inv + sv_inv_svu @ F @ sv_inv_svu.T)
    return omega_11, omega_12, omega_12.T, F
