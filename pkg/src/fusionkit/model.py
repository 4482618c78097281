"""Data model types: linear mixtures, source priors, noise pairs, sampling.

The observation model is ``x = A s + v`` with an n x m mixing matrix A,
source vector s and additive zero-mean noise v. Two sensor groups share
the source and may have cross-correlated noise, described jointly by a
:class:`~fusionkit.matrixkit.BlockCovariance`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import NoPriorInfo, NoScore, NotSampleable
from .matrixkit import (
    BlockCovariance,
    psd_inverse,
    psd_tolerance,
    require_symmetric,
    sym_sqrt,
    symmetrize,
)


@dataclass(frozen=True)
class LinearModel:
    """Linear mixing model ``x = A s + v`` with A of shape (n, m)."""

    A: np.ndarray

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        if A.ndim != 2 or A.shape[0] < 1 or A.shape[1] < 1:
            raise ValueError(f"mixing matrix must be 2-D and nonempty, got {A.shape}")
        if not np.all(np.isfinite(A)):
            raise ValueError("mixing matrix has non-finite entries")
        object.__setattr__(self, "A", A)

    @property
    def n(self) -> int:
        """Channel (observation) count."""
        return self.A.shape[0]

    @property
    def m(self) -> int:
        """Source count."""
        return self.A.shape[1]

    def channel_row(self, k: int) -> np.ndarray:
        """k-th channel row of the mixing matrix (the per-channel gain vector)."""
        return self.A[k, :]


class SourcePrior:
    """Base class for source priors.

    A prior may be sampleable, may expose an information matrix (the
    expected outer product of the score of its log-density), and may
    expose a covariance. Subclasses override whichever pieces exist;
    the defaults raise.
    """

    m: int

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        raise NotSampleable(f"{type(self).__name__} cannot produce samples")

    def info_matrix(self) -> np.ndarray:
        raise NoPriorInfo(f"{type(self).__name__} does not expose an information matrix")

    def score(self, s: np.ndarray) -> np.ndarray:
        raise NoScore(f"{type(self).__name__} has no score function")

    @property
    def has_info(self) -> bool:
        try:
            self.info_matrix()
        except NoPriorInfo:
            return False
        return True

    @property
    def sampleable(self) -> bool:
        try:
            self.sample(np.random.default_rng(0), 0)
        except NotSampleable:
            return False
        return True

    def covariance(self) -> np.ndarray | None:
        """Source covariance P where defined, else None."""
        return None


@dataclass(frozen=True)
class GaussianPrior(SourcePrior):
    """Gaussian source prior N(mean, cov); information matrix is cov^-1."""

    mean: np.ndarray
    cov: np.ndarray
    _sqrt: np.ndarray = field(init=False, repr=False)
    _info: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        cov = require_symmetric(self.cov, name="source covariance")
        if mean.shape != (cov.shape[0],):
            raise ValueError(f"mean shape {mean.shape} does not match cov {cov.shape}")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)
        object.__setattr__(self, "_sqrt", sym_sqrt(cov))
        object.__setattr__(self, "_info", psd_inverse(cov, name="source covariance"))

    @property
    def m(self) -> int:
        return self.mean.shape[0]

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        z = rng.standard_normal((size, self.m))
        return z @ self._sqrt.T + self.mean

    def info_matrix(self) -> np.ndarray:
        return self._info

    def score(self, s: np.ndarray) -> np.ndarray:
        return -(np.atleast_2d(s) - self.mean) @ self._info

    def covariance(self) -> np.ndarray:
        return self.cov


@dataclass(frozen=True)
class InfoOnlyPrior(SourcePrior):
    """Prior known only through its information matrix J_s (PSD, may be zero).

    ``J_s = 0`` represents a deterministic/unknown source with no prior
    information, unifying the deterministic CRLB with the Bayesian one.
    """

    J_s: np.ndarray

    def __post_init__(self):
        J = require_symmetric(self.J_s, name="J_s")
        min_eig = float(np.linalg.eigvalsh(J)[0])
        if min_eig < -psd_tolerance(J):
            raise ValueError(f"J_s must be PSD, min eigenvalue {min_eig:.3e}")
        object.__setattr__(self, "J_s", J)

    @property
    def m(self) -> int:
        return self.J_s.shape[0]

    def info_matrix(self) -> np.ndarray:
        return self.J_s


def no_prior(m: int) -> InfoOnlyPrior:
    """Zero-information prior of dimension m (deterministic-source analysis)."""
    return InfoOnlyPrior(np.zeros((m, m)))


@dataclass(frozen=True)
class SamplerPrior(SourcePrior):
    """Prior defined by a sampling function and an optional score function.

    ``draw(rng, size)`` returns a (size, m) array. ``score_fn``, when
    given, maps a (N, m) batch to the (N, m) gradient of the log-density;
    without it the prior information matrix is unavailable (not silently
    zero). ``cov`` optionally records the source covariance P.
    """

    m: int
    draw: Callable[[np.random.Generator, int], np.ndarray]
    score_fn: Callable[[np.ndarray], np.ndarray] | None = None
    cov: np.ndarray | None = None

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        out = np.asarray(self.draw(rng, size), dtype=float)
        if out.shape != (size, self.m):
            raise ValueError(f"draw returned shape {out.shape}, expected {(size, self.m)}")
        return out

    def score(self, s: np.ndarray) -> np.ndarray:
        if self.score_fn is None:
            raise NoScore("SamplerPrior constructed without a score function")
        return np.asarray(self.score_fn(np.atleast_2d(s)), dtype=float)

    def covariance(self) -> np.ndarray | None:
        return None if self.cov is None else np.asarray(self.cov, dtype=float)


@dataclass(frozen=True)
class ModalityPair:
    """Two sensor groups observing the same source with jointly Gaussian noise."""

    first: LinearModel
    second: LinearModel
    noise: BlockCovariance

    def __post_init__(self):
        if self.first.m != self.second.m:
            raise ValueError(
                f"modalities must share the source dimension: "
                f"{self.first.m} != {self.second.m}"
            )
        if self.noise.n1 != self.first.n or self.noise.n2 != self.second.n:
            raise ValueError(
                f"noise block dims ({self.noise.n1}, {self.noise.n2}) do not match "
                f"channel counts ({self.first.n}, {self.second.n})"
            )

    @property
    def m(self) -> int:
        return self.first.m

    def stacked(self) -> LinearModel:
        """Augmented model [A; B] acting on the shared source."""
        return LinearModel(np.vstack([self.first.A, self.second.A]))


@dataclass(frozen=True)
class SampleBatch:
    """Simulated sources and observations, reproducible from the seed."""

    sources: np.ndarray
    observations: np.ndarray
    seed: int
    second_observations: np.ndarray | None = None


@dataclass(frozen=True)
class Diagnostic:
    level: str  # "error" | "warning"
    code: str
    message: str


def validate(model, prior: SourcePrior | None = None, noise=None) -> list[Diagnostic]:
    """Report-only consistency check of a scenario.

    Parameters
    ----------
    model:
        LinearModel or ModalityPair.
    prior:
        Optional source prior; checked for dimension agreement.
    noise:
        For a LinearModel, the noise covariance (n x n). Ignored for a
        ModalityPair, which carries its own BlockCovariance.

    Returns
    -------
    list[Diagnostic]
        Empty when the scenario is consistent. Dimension mismatches and
        non-PSD covariances are errors; a channel count below the source
        count is a warning (the Fisher information matrix is singular and
        no ML estimate exists without prior information).
    """
    report: list[Diagnostic] = []

    if isinstance(model, ModalityPair):
        models = [model.first, model.second]
        covs = [("first", model.noise.sigma_v), ("second", model.noise.sigma_u)]
        try:
            model.noise.check_pd()
        except Exception as exc:
            report.append(Diagnostic("error", "NotPSD", f"joint noise covariance: {exc}"))
        n_total = model.first.n + model.second.n
        m = model.m
    else:
        models = [model]
        covs = []
        if noise is not None:
            covs = [("noise", np.asarray(noise, dtype=float))]
        n_total = model.n
        m = model.m

    for name, cov in covs:
        try:
            C = require_symmetric(cov, name=f"{name} covariance")
        except ValueError as exc:
            report.append(Diagnostic("error", "BadCovariance", str(exc)))
            continue
        min_eig = float(np.linalg.eigvalsh(C)[0])
        if min_eig <= -psd_tolerance(C):
            report.append(
                Diagnostic(
                    "error",
                    "NotPSD",
                    f"{name} covariance has negative eigenvalue {min_eig:.3e}",
                )
            )
        sub = models[0] if name != "second" else models[1]
        if C.shape[0] != sub.n:
            report.append(
                Diagnostic(
                    "error",
                    "DimMismatch",
                    f"{name} covariance is {C.shape[0]}x{C.shape[0]} but the model "
                    f"has {sub.n} channels",
                )
            )

    if prior is not None and prior.m != m:
        report.append(
            Diagnostic(
                "error",
                "DimMismatch",
                f"prior dimension {prior.m} does not match source count {m}",
            )
        )

    if n_total < m:
        report.append(
            Diagnostic(
                "warning",
                "FisherSingular",
                f"observation count {n_total} < source count {m}: the Fisher "
                "information matrix is singular and the ML estimate does not exist",
            )
        )
    return report


def simulate(model, prior: SourcePrior, N: int, seed: int, noise=None) -> SampleBatch:
    """Draw N source/observation rows from the scenario, deterministically per seed.

    Sources come from the prior; noise is jointly Gaussian with the
    configured (cross-)covariance, realized through the symmetric PSD
    square root of the assembled covariance. Source and noise streams use
    independent children of the seed, so each is reproducible on its own.

    Raises
    ------
    NotSampleable
        If the prior has no sampling function (information-only priors).
    """
    if N < 0:
        raise ValueError("N must be nonnegative")
    ss = np.random.SeedSequence(seed)
    src_ss, noise_ss = ss.spawn(2)
    sources = prior.sample(np.random.default_rng(src_ss), N)

    if isinstance(model, ModalityPair):
        joint = model.noise.joint()
        L = sym_sqrt(symmetrize(joint))
        z = np.random.default_rng(noise_ss).standard_normal((N, joint.shape[0]))
        noise_rows = z @ L.T
        n1 = model.first.n
        x = sources @ model.first.A.T + noise_rows[:, :n1]
        y = sources @ model.second.A.T + noise_rows[:, n1:]
        return SampleBatch(sources=sources, observations=x, seed=seed, second_observations=y)

    sigma = require_symmetric(noise, name="noise covariance")
    L = sym_sqrt(sigma)
    z = np.random.default_rng(noise_ss).standard_normal((N, model.n))
    x = sources @ model.A.T + z @ L.T
    return SampleBatch(sources=sources, observations=x, seed=seed)
