"""Synchronous coupling of two HMC chains and its contraction predictions.

Two chains ``X`` and ``Y`` receive the same momentum at every step. For a
quadratic potential the difference ``X - Y`` then evolves deterministically,
coordinate by coordinate in the Hessian eigenbasis, by a cosine factor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import samplers
from .potentials import InvalidInputError, Potential, minimizer, sample_target
from .samplers import (HMC_KINDS, InvalidConfigError, MomentumStreams,
                       SamplerConfig, SamplerKind, make_rng)

WARM_START_STEPS = 1000
# stream id of Y-start draws, kept clear of per-chain momentum streams
START_STREAM = 2 ** 32


class UndefinedFitError(ValueError):
    """Raised when a contraction slope cannot be fitted."""


@dataclass
class CoupledTrace:
    """Distances between two synchronously coupled chains.

    Attributes:
        distances: ``|X_k - Y_k|`` for ``k = 0 .. k_max``.
        per_coordinate: ``(k_max + 1, d)`` array of ``|X_k[j] - Y_k[j]|``.
        config: Sampler configuration shared by both chains.
    """

    distances: np.ndarray
    per_coordinate: np.ndarray | None
    config: SamplerConfig

    def __post_init__(self):
        self.distances = np.asarray(self.distances, dtype=float)
        if np.any(self.distances < 0):
            raise InvalidInputError("distances must be non-negative")

    @property
    def steps(self) -> int:
        return len(self.distances) - 1


def stationary_starts(p: Potential, seeds, warm_steps: int = WARM_START_STEPS,
                      T: float | None = None) -> np.ndarray:
    """One draw from ``pi`` per seed, as an ``(len(seeds), d)`` array.

    Quadratic targets are sampled exactly. Otherwise each draw is the end of
    a ``warm_steps``-step idealized HMC chain started at the minimizer, with
    integration time ``T`` (default ``T*`` of the potential's bounds); all
    warm-up chains advance together.
    """
    seeds = [int(s) for s in seeds]
    if p.is_quadratic:
        return np.stack(
            [sample_target(p, make_rng(s, START_STREAM)) for s in seeds])
    if T is None:
        T, _ = predicted_contraction_gamma(p.m, p.M)
    cfg = SamplerConfig(SamplerKind.IDEALIZED_HMC, k=warm_steps, T=T)
    x = np.tile(minimizer(p), (len(seeds), 1))
    streams = MomentumStreams([make_rng(s, START_STREAM) for s in seeds],
                              p.dim)
    for _ in range(warm_steps):
        x = samplers.move(p, cfg, x, streams.next())
    return x


def stationary_start(p: Potential, seed: int, **kwargs) -> np.ndarray:
    """Single-seed form of :func:`stationary_starts`."""
    return stationary_starts(p, [seed], **kwargs)[0]


def coupled_runs(p: Potential, cfg: SamplerConfig, x0, y0_seeds,
                 first_rep: int = 0) -> list[CoupledTrace]:
    """Several independent coupled pairs advanced as one batch.

    Repetition ``r`` starts ``X`` at ``x0`` and ``Y`` at a stationary draw
    seeded by ``y0_seeds[r]``; the shared momenta come from stream
    ``first_rep + r`` of ``cfg.seed``.
    """
    if cfg.sampler not in HMC_KINDS:
        raise InvalidConfigError(
            f"coupling needs an HMC sampler, got {cfg.sampler.value}")
    x0 = np.asarray(x0, dtype=float)
    if x0.shape != (p.dim,):
        raise InvalidInputError(
            f"x0 has shape {x0.shape}, potential dimension is {p.dim}")
    reps = len(y0_seeds)
    x = np.tile(x0, (reps, 1))
    y = stationary_starts(p, y0_seeds, T=cfg.T)
    gaps = np.empty((cfg.k + 1, reps, p.dim))
    gaps[0] = np.abs(x - y)
    streams = MomentumStreams(samplers.chain_rngs(cfg.seed, reps, first_rep),
                              p.dim, block=max(1, min(cfg.k, 256)))
    for i in range(cfg.k):
        xi = streams.next()
        both = samplers.move(p, cfg, np.concatenate([x, y]),
                             np.concatenate([xi, xi]))
        x, y = both[:reps], both[reps:]
        gaps[i + 1] = np.abs(x - y)
    dist = np.sqrt(np.sum(gaps * gaps, axis=-1))
    return [CoupledTrace(dist[:, r], gaps[:, r], cfg) for r in range(reps)]


def coupled_run(p: Potential, cfg: SamplerConfig, x0,
                y0_seed: int) -> CoupledTrace:
    """One pair of chains sharing every momentum draw."""
    return coupled_runs(p, cfg, x0, [y0_seed])[0]


def predicted_coordinate_factor(c: float, T: float) -> float:
    """``cos(sqrt(2 c) T)``: shrink factor of a coordinate with coefficient c.

    ``c`` is the coefficient of ``c x_j^2`` in ``f``, i.e. half the Hessian
    eigenvalue.
    """
    if c <= 0 or T < 0:
        raise InvalidInputError("need c > 0 and T >= 0")
    return math.cos(math.sqrt(2.0 * c) * T)


def predicted_contraction_gamma(m: float, M: float) -> tuple[float, float]:
    """Second-order coupling estimate of the best time and contraction.

    Minimising ``1 - 2 m t^2 + 2 M^2 t^4`` over ``t`` gives
    ``T* = sqrt(m) / (sqrt(2) M)`` and the squared-distance contraction
    ``1 - gamma`` with ``gamma = m^2 / (2 M^2)``. ``m`` and ``M`` are Hessian
    eigenvalue bounds.
    """
    if not 0 < m <= M:
        raise InvalidInputError(f"need 0 < m <= M, got m={m}, M={M}")
    return math.sqrt(m) / (math.sqrt(2.0) * M), m * m / (2.0 * M * M)


def cosine_bound_holds(m: float, M: float) -> bool:
    """Check ``cos(s) <= 1 - s^2 / 8`` at ``s = sqrt(m/M) * pi / 2``."""
    s = math.sqrt(2.0 * m) * (math.pi / 2.0) / math.sqrt(2.0 * M)
    return math.cos(s) <= 1.0 - s * s / 8.0


def contraction_fit(trace: CoupledTrace | np.ndarray) -> float:
    """Least-squares slope of ``log |X_k - Y_k|`` against ``k``.

    Exactly-zero distances (coalesced chains) end the usable part of the
    trace.
    """
    d = trace.distances if isinstance(trace, CoupledTrace) else np.asarray(
        trace, dtype=float)
    if len(d) < 5:
        raise UndefinedFitError("need at least 5 distances")
    if d[0] <= 0:
        raise UndefinedFitError("initial distance is zero")
    zero = np.flatnonzero(d <= 0)
    if zero.size:
        d = d[:zero[0]]
    if len(d) < 2:
        raise UndefinedFitError("chains coalesce immediately")
    k = np.arange(len(d), dtype=float)
    slope, _ = np.polyfit(k, np.log(d), 1)
    return float(slope)


def steps_to_epsilon(trace: CoupledTrace, eps: float) -> int | None:
    """First ``k`` with ``|X_k - Y_k| < eps``, or ``None``."""
    hits = np.flatnonzero(trace.distances < eps)
    return int(hits[0]) if hits.size else None


def step_budget(m: float, M: float, d0: float, eps: float) -> int:
    """``10 (M/m)^2 ln(d0/eps)`` steps, rounded up."""
    return max(1, math.ceil(10.0 * (M / m) ** 2 * math.log(d0 / eps)))
