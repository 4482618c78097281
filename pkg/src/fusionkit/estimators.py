"""WLS, ML and Gaussian MMSE source estimators with closed-form error covariances.

For the linear model with noise covariance S, the weighted least squares
solution with weight W = S^-1 coincides with the Gaussian maximum
likelihood estimate; its error covariance is the inverse of the SNR
matrix ``A^T S^-1 A``. The Gaussian-prior posterior mean adds prior
information to the same normal equations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import SingularNormalMatrix, SingularPosterior
from .matrixkit import (
    SINGULAR_CONDITION,
    condition_estimate,
    psd_inverse,
    require_symmetric,
    symmetrize,
)
from .model import GaussianPrior, LinearModel


@dataclass(frozen=True)
class Estimate:
    """Point estimate of the source vector plus its closed-form error covariance."""

    s_hat: np.ndarray
    error_cov: np.ndarray | None
    method: str  # "WLS" | "ML" | "MMSE"


def _solve_normal(N: np.ndarray, rhs: np.ndarray, context: str) -> np.ndarray:
    cond = condition_estimate(N)
    if not np.isfinite(cond) or cond > SINGULAR_CONDITION:
        raise SingularNormalMatrix(
            f"{context}: normal matrix is numerically singular (cond~{cond:.3e})",
            condition=cond,
        )
    return np.linalg.solve(N, rhs)


def wls_estimate(model: LinearModel, W, x) -> Estimate:
    """Weighted least squares estimate ``(A^T W A)^-1 A^T W x``.

    The attached error covariance is ``(A^T W A)^-1``, which is the
    estimation error covariance exactly when W is the inverse of the
    noise covariance (the weighting this library uses throughout).

    Raises
    ------
    SingularNormalMatrix
        If ``A^T W A`` has condition estimate above 1e12 (rank-deficient
        mixing or fewer channels than sources). No silent pseudo-inverse
        fallback: singularity here means the data carry no information
        on some source direction.
    """
    W = require_symmetric(W, name="weight matrix")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape != (model.n,):
        raise ValueError(f"x has shape {x.shape}, expected ({model.n},)")
    A = model.A
    WA = W @ A
    N = symmetrize(A.T @ WA)
    s_hat = _solve_normal(N, WA.T @ x, "wls_estimate")
    error_cov = symmetrize(_solve_normal(N, np.eye(model.m), "wls_estimate"))
    return Estimate(s_hat=s_hat, error_cov=error_cov, method="WLS")


def ml_estimate(model: LinearModel, sigma, x) -> Estimate:
    """Gaussian maximum likelihood estimate; equals WLS with W = sigma^-1.

    Solves through a Cholesky factorization of the noise covariance
    (a different numerical route than :func:`wls_estimate`, which forms
    the weight matrix explicitly). The error covariance is the inverse
    of the SNR matrix ``A^T sigma^-1 A``.
    """
    sigma = require_symmetric(sigma, name="noise covariance")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape != (model.n,):
        raise ValueError(f"x has shape {x.shape}, expected ({model.n},)")
    A = model.A
    c, low = scipy.linalg.cho_factor(sigma, lower=True)
    si_A = scipy.linalg.cho_solve((c, low), A)
    si_x = scipy.linalg.cho_solve((c, low), x)
    snr = symmetrize(A.T @ si_A)
    s_hat = _solve_normal(snr, A.T @ si_x, "ml_estimate")
    error_cov = symmetrize(_solve_normal(snr, np.eye(model.m), "ml_estimate"))
    return Estimate(s_hat=s_hat, error_cov=error_cov, method="ML")


def mmse_gaussian_estimate(
    model: LinearModel, sigma, prior: GaussianPrior, x, form: str = "information"
) -> Estimate:
    """Posterior mean of a Gaussian source under Gaussian noise.

    Two algebraically equivalent forms are available:

    * ``information``: ``(G^-1 + snr)^-1 (A^T sigma^-1 x + G^-1 mu)``
    * ``gain``: ``mu + G A^T (A G A^T + sigma)^-1 (x - A mu)``

    where G is the prior covariance. Both attach the posterior covariance
    ``(G^-1 + snr)^-1``; the quadratic-cost weight of the Bayes risk never
    enters because the conditional mean is optimal for every PSD weight.
    """
    sigma = require_symmetric(sigma, name="noise covariance")
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.shape != (model.n,):
        raise ValueError(f"x has shape {x.shape}, expected ({model.n},)")
    A = model.A
    gamma_inv = prior.info_matrix()
    sigma_inv = psd_inverse(sigma, name="noise covariance")
    posterior_info = symmetrize(gamma_inv + A.T @ sigma_inv @ A)
    cond = condition_estimate(posterior_info)
    if not np.isfinite(cond) or cond > SINGULAR_CONDITION:
        raise SingularPosterior(
            f"posterior information matrix is numerically singular (cond~{cond:.3e})",
            condition=cond,
        )
    error_cov = symmetrize(np.linalg.solve(posterior_info, np.eye(model.m)))

    if form == "information":
        s_hat = np.linalg.solve(posterior_info, A.T @ (sigma_inv @ x) + gamma_inv @ prior.mean)
    elif form == "gain":
        gamma = prior.cov
        innovation_cov = symmetrize(A @ gamma @ A.T + sigma)
        gain = gamma @ A.T @ np.linalg.solve(innovation_cov, np.eye(model.n))
        s_hat = prior.mean + gain @ (x - A @ prior.mean)
    else:
        raise ValueError(f"unknown form {form!r}, expected 'information' or 'gain'")
    return Estimate(s_hat=s_hat, error_cov=error_cov, method="MMSE")


def error_covariance(model: LinearModel, sigma) -> np.ndarray:
    """Closed-form ML/WLS error covariance ``(A^T sigma^-1 A)^-1``."""
    sigma = require_symmetric(sigma, name="noise covariance")
    sigma_inv = psd_inverse(sigma, name="noise covariance")
    snr = symmetrize(model.A.T @ sigma_inv @ model.A)
    cond = condition_estimate(snr)
    if not np.isfinite(cond) or cond > SINGULAR_CONDITION:
        raise SingularNormalMatrix(
            f"SNR matrix is numerically singular (cond~{cond:.3e})", condition=cond
        )
    return symmetrize(np.linalg.solve(snr, np.eye(model.m)))
