"""Moments, Wasserstein-2 distances and integrator-order estimates."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import Integrator, PhasePoint, hamiltonian, trajectory
from .potentials import InvalidInputError, Potential

EIG_FLOOR = 1e-14
SPD_TOL = 1e-12


class InsufficientDataError(ValueError):
    """Raised when too few samples are available for an estimate."""


@dataclass(frozen=True)
class SampleSet:
    """``n`` samples in ``d`` dimensions, tagged with where they came from."""

    samples: np.ndarray
    source: str = ""

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float)
        if s.ndim == 1:
            s = s[:, None]
        if s.ndim != 2 or s.shape[0] < 1:
            raise InvalidInputError("samples must be a non-empty n x d matrix")
        object.__setattr__(self, "samples", s)

    @property
    def n(self) -> int:
        return self.samples.shape[0]

    @property
    def dim(self) -> int:
        return self.samples.shape[1]


@dataclass(frozen=True)
class GaussianSpec:
    """A Gaussian ``N(mean, covariance)``.

    ``covariance`` may be given as a full matrix or as the vector of its
    diagonal. It must be symmetric with eigenvalues above ``-1e-12``.
    """

    mean: np.ndarray
    covariance: np.ndarray

    def __post_init__(self):
        mu = np.atleast_1d(np.asarray(self.mean, dtype=float))
        cov = np.asarray(self.covariance, dtype=float)
        if cov.ndim == 0:
            cov = cov.reshape(1)
        d = mu.shape[0]
        if cov.ndim == 1:
            if cov.shape != (d,) or np.any(cov < -SPD_TOL):
                raise InvalidInputError("diagonal covariance must be "
                                        "non-negative and match the mean")
        elif cov.shape == (d, d):
            if not np.allclose(cov, cov.T, rtol=0, atol=SPD_TOL * (
                    1 + np.abs(cov).max())):
                raise InvalidInputError("covariance must be symmetric")
            if np.linalg.eigvalsh(cov)[0] < -SPD_TOL * (1 + np.abs(cov).max()):
                raise InvalidInputError("covariance must be positive "
                                        "semidefinite")
        else:
            raise InvalidInputError(
                f"covariance shape {cov.shape} does not match mean ({d},)")
        object.__setattr__(self, "mean", mu)
        object.__setattr__(self, "covariance", cov)

    @property
    def dim(self) -> int:
        return self.mean.shape[0]

    @property
    def is_diagonal(self) -> bool:
        return self.covariance.ndim == 1

    def full_covariance(self) -> np.ndarray:
        if self.is_diagonal:
            return np.diag(self.covariance)
        return self.covariance

    @classmethod
    def standard(cls, d: int) -> "GaussianSpec":
        return cls(np.zeros(d), np.ones(d))


def empirical_moments(s: SampleSet | np.ndarray) -> GaussianSpec:
    """Sample mean and unbiased sample covariance."""
    if not isinstance(s, SampleSet):
        s = SampleSet(s)
    if s.n < 2:
        raise InsufficientDataError("need at least two samples")
    mu = s.samples.mean(axis=0)
    cov = np.atleast_2d(np.cov(s.samples, rowvar=False))
    return GaussianSpec(mu, 0.5 * (cov + cov.T))


def psd_sqrt(a: np.ndarray) -> np.ndarray:
    """Symmetric square root via eigendecomposition, eigenvalues floored."""
    w, q = np.linalg.eigh(0.5 * (a + a.T))
    return (q * np.sqrt(np.maximum(w, EIG_FLOOR))) @ q.T


def w2_gaussian(a: GaussianSpec, b: GaussianSpec) -> float:
    """Closed-form Wasserstein-2 distance between two Gaussians."""
    if a.dim != b.dim:
        raise InvalidInputError(f"dimensions differ: {a.dim} vs {b.dim}")
    mean_term = float(np.sum((a.mean - b.mean) ** 2))
    if a.is_diagonal and b.is_diagonal:
        cov_term = float(np.sum(
            (np.sqrt(np.maximum(a.covariance, 0.0))
             - np.sqrt(np.maximum(b.covariance, 0.0))) ** 2))
    else:
        sa, sb = a.full_covariance(), b.full_covariance()
        root_b = psd_sqrt(sb)
        cross = psd_sqrt(root_b @ sa @ root_b)
        cov_term = float(np.trace(sa) + np.trace(sb) - 2.0 * np.trace(cross))
    return float(np.sqrt(max(mean_term + cov_term, 0.0)))


def w2_empirical_1d(xs, ys) -> float:
    """W2 between two equal-size 1D samples via the sorted coupling."""
    xs = np.sort(np.asarray(xs, dtype=float).ravel())
    ys = np.sort(np.asarray(ys, dtype=float).ravel())
    if xs.size != ys.size or xs.size == 0:
        raise InvalidInputError("need two non-empty samples of equal size")
    return float(np.sqrt(np.mean((xs - ys) ** 2)))


def energy_drift(p: Potential, integ: Integrator, z0: PhasePoint,
                 T: float) -> float:
    """Largest ``|H(z_j) - H(z_0)|`` over the integrator's inner steps."""
    h0 = hamiltonian(p, z0)
    drift = 0.0
    for z in trajectory(p, integ, z0, T):
        drift = max(drift, float(np.max(np.abs(hamiltonian(p, z) - h0))))
    return drift


def loglog_slope(x, y) -> float:
    """Least-squares slope of ``log y`` against ``log x``."""
    slope, _ = np.polyfit(np.log(x), np.log(y), 1)
    return float(slope)


def order_estimate(drifts) -> float:
    """Convergence order from ``(eta, drift)`` pairs via a log-log fit."""
    pts = np.asarray(drifts, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 3:
        raise InvalidInputError("need at least three (eta, drift) pairs")
    etas, vals = pts[:, 0], pts[:, 1]
    if np.unique(etas).size != etas.size or np.any(etas <= 0):
        raise InvalidInputError("step sizes must be positive and distinct")
    if np.any(vals <= 0):
        raise InvalidInputError("drifts must be positive")
    return loglog_slope(etas, vals)


def w2_to_target(samples, target: GaussianSpec) -> float:
    """W2 between the moment-matched Gaussian of ``samples`` and ``target``."""
    return w2_gaussian(empirical_moments(samples), target)
