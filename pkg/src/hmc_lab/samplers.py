"""Markov chains targeting ``pi ~ exp(-f)``.

Idealized HMC (exact or reference flow), unadjusted HMC with the second-order
Euler integrator, random walk Metropolis and the unadjusted Langevin algorithm.

Random streams: chain ``i`` of a run seeded with ``seed`` draws from
``PCG64(SeedSequence(seed, spawn_key=(i,)))``. Every step draws its Gaussian
vector first and, for RWM only, one uniform afterwards. Ensembles of chains
(:func:`run_ensemble`) give each chain its own stream, so chain ``i`` of an
ensemble is bit-identical to ``run_chain(..., chain_id=i)``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace

import numpy as np

from . import dynamics
from .dynamics import Integrator, PhasePoint, Scheme
from .potentials import InvalidInputError, Potential, eval_f, grad_f


class InvalidConfigError(ValueError):
    """Raised when a sampler configuration violates its invariants."""


class SamplerKind(enum.Enum):
    IDEALIZED_HMC = "idealized_hmc"
    UNADJUSTED_HMC = "unadjusted_hmc"
    RWM = "rwm"
    ULA = "ula"


HMC_KINDS = frozenset({SamplerKind.IDEALIZED_HMC, SamplerKind.UNADJUSTED_HMC})


def make_rng(seed: int, chain_id: int = 0) -> np.random.Generator:
    """Independent generator for chain ``chain_id`` of master seed ``seed``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(chain_id),))
    return np.random.Generator(np.random.PCG64(ss))


@dataclass
class ChainState:
    """Current position of one chain, its step counter and random stream."""

    position: np.ndarray
    rng: np.random.Generator
    step_index: int = 0

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=float)

    @classmethod
    def start(cls, x0, seed: int, chain_id: int = 0) -> "ChainState":
        return cls(np.array(x0, dtype=float), make_rng(seed, chain_id))


@dataclass(frozen=True)
class SamplerConfig:
    """Which chain to run and for how long.

    Attributes:
        sampler: Transition kernel.
        k: Number of Markov steps.
        seed: Master seed for the random streams.
        T: HMC integration time (HMC samplers only).
        eta: Integrator step size (unadjusted HMC) or proposal/step scale
            (RWM, ULA).
    """

    sampler: SamplerKind
    k: int
    seed: int = 0
    T: float | None = None
    eta: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "sampler", SamplerKind(self.sampler))
        errors = config_errors(self)
        if errors:
            raise InvalidConfigError("; ".join(errors))


def config_errors(cfg: SamplerConfig) -> list[str]:
    """Every invariant violated by ``cfg`` (empty when valid)."""
    errors = []
    kind = SamplerKind(cfg.sampler)
    if not isinstance(cfg.k, (int, np.integer)) or cfg.k < 0:
        errors.append("k: must be a non-negative integer")
    if not 0 <= int(cfg.seed) < 2 ** 64:
        errors.append("seed: must fit in an unsigned 64-bit integer")
    needs_T = kind in HMC_KINDS
    needs_eta = kind is not SamplerKind.IDEALIZED_HMC
    if needs_T and (cfg.T is None or not cfg.T > 0):
        errors.append(f"T: {kind.value} requires T > 0")
    if not needs_T and cfg.T is not None:
        errors.append(f"T: not used by {kind.value}")
    if needs_eta and (cfg.eta is None or not cfg.eta > 0):
        errors.append(f"eta: {kind.value} requires eta > 0")
    if not needs_eta and cfg.eta is not None:
        errors.append(f"eta: not used by {kind.value}")
    return errors


def sample_momentum(state: ChainState, d: int) -> np.ndarray:
    """Draw ``xi ~ N(0, I_d)`` from the chain's stream."""
    return state.rng.standard_normal(d)


# Transition kernels given their randomness. All broadcast over leading axes.

def idealized_hmc_move(p: Potential, x, xi, T: float):
    """Position part of the (exact or reference) flow from ``(x, xi)``."""
    return dynamics.ideal_flow(p, PhasePoint(x, xi), T).x


def unadjusted_hmc_move(p: Potential, x, xi, T: float, eta: float):
    """Final position of the second-order Euler trajectory from ``(x, xi)``."""
    return dynamics.integrate(p, Integrator(Scheme.EULER2, eta),
                              PhasePoint(x, xi), T).x


def rwm_move(p: Potential, x, xi, u, eta: float):
    """Metropolis-filtered Gaussian random walk proposal.

    Returns the new positions and a boolean acceptance mask.
    """
    x = np.asarray(x, dtype=float)
    proposal = x + eta * xi
    log_ratio = eval_f(p, x) - eval_f(p, proposal)
    accept = np.log(u) < np.minimum(0.0, log_ratio)
    return np.where(accept[..., None], proposal, x), accept


def ula_move(p: Potential, x, xi, eta: float):
    """``x - eta grad f(x) + sqrt(2 eta) xi``."""
    x = np.asarray(x, dtype=float)
    return x - eta * grad_f(p, x) + np.sqrt(2.0 * eta) * xi


def _advance(state: ChainState, position) -> ChainState:
    return replace(state, position=position, step_index=state.step_index + 1)


def idealized_hmc_step(p: Potential, state: ChainState, T: float) -> ChainState:
    if not T > 0:
        raise InvalidInputError("T must be positive")
    xi = sample_momentum(state, p.dim)
    return _advance(state, idealized_hmc_move(p, state.position, xi, T))


def unadjusted_hmc_step(p: Potential, state: ChainState, T: float,
                        eta: float) -> ChainState:
    if not (T > 0 and eta > 0):
        raise InvalidInputError("T and eta must be positive")
    xi = sample_momentum(state, p.dim)
    return _advance(state, unadjusted_hmc_move(p, state.position, xi, T, eta))


def rwm_step(p: Potential, state: ChainState, eta: float) -> ChainState:
    if eta < 0:
        raise InvalidInputError("eta must be non-negative")
    xi = sample_momentum(state, p.dim)
    u = state.rng.random()
    x, _ = rwm_move(p, state.position, xi, u, eta)
    return _advance(state, x)


def ula_step(p: Potential, state: ChainState, eta: float) -> ChainState:
    if eta < 0:
        raise InvalidInputError("eta must be non-negative")
    xi = sample_momentum(state, p.dim)
    return _advance(state, ula_move(p, state.position, xi, eta))


def step(p: Potential, cfg: SamplerConfig, state: ChainState) -> ChainState:
    """One Markov step of the sampler named in ``cfg``."""
    if cfg.sampler is SamplerKind.IDEALIZED_HMC:
        return idealized_hmc_step(p, state, cfg.T)
    if cfg.sampler is SamplerKind.UNADJUSTED_HMC:
        return unadjusted_hmc_step(p, state, cfg.T, cfg.eta)
    if cfg.sampler is SamplerKind.RWM:
        return rwm_step(p, state, cfg.eta)
    return ula_step(p, state, cfg.eta)


def _check_start(p: Potential, x0) -> np.ndarray:
    x0 = np.asarray(x0, dtype=float)
    if x0.shape[-1:] != (p.dim,):
        raise InvalidInputError(
            f"start has shape {x0.shape}, potential dimension is {p.dim}")
    return x0


def run_chain(p: Potential, cfg: SamplerConfig, x0,
              chain_id: int = 0) -> np.ndarray:
    """Positions ``X_1 .. X_k`` as a ``(k, d)`` array."""
    x0 = _check_start(p, x0)
    if x0.ndim != 1:
        raise InvalidInputError("run_chain takes a single start; "
                                "use run_ensemble for many")
    state = ChainState.start(x0, cfg.seed, chain_id)
    out = np.empty((cfg.k, p.dim))
    for i in range(cfg.k):
        state = step(p, cfg, state)
        out[i] = state.position
    return out


class MomentumStreams:
    """Per-chain Gaussian draws for a whole ensemble, one row per chain.

    Draws are fetched from each chain's generator in blocks of steps; for a
    generator this yields the same numbers as drawing step by step.
    """

    def __init__(self, rngs, d: int, block: int = 256):
        self.rngs = list(rngs)
        self.d = d
        self.block = block
        self._buf = None
        self._pos = 0

    def next(self) -> np.ndarray:
        if self._buf is None or self._pos == self._buf.shape[1]:
            self._buf = np.stack(
                [r.standard_normal((self.block, self.d)) for r in self.rngs])
            self._pos = 0
        xi = self._buf[:, self._pos]
        self._pos += 1
        return xi


def chain_rngs(seed: int, n: int, first: int = 0):
    return [make_rng(seed, first + i) for i in range(n)]


def run_ensemble(p: Potential, cfg: SamplerConfig, x0s,
                 first_chain: int = 0, return_acceptance: bool = False):
    """Run ``n`` independent chains side by side.

    Args:
        p: Target potential.
        cfg: Sampler configuration shared by every chain.
        x0s: ``(n, d)`` starting positions.
        first_chain: Chain id of the first row; row ``i`` uses stream
            ``first_chain + i``.
        return_acceptance: Also return the ``(k, n)`` RWM acceptance mask.

    Returns:
        ``(k, n, d)`` array of positions ``X_1 .. X_k`` for every chain.
    """
    x = _check_start(p, x0s)
    if x.ndim != 2:
        raise InvalidInputError("x0s must have shape (n, d)")
    n = x.shape[0]
    rngs = chain_rngs(cfg.seed, n, first_chain)
    out = np.empty((cfg.k, n, p.dim))
    accepted = np.ones((cfg.k, n), dtype=bool)
    if cfg.sampler is SamplerKind.RWM:
        # normals and uniforms interleave in each stream: no block draws
        for i in range(cfg.k):
            xi = np.empty((n, p.dim))
            u = np.empty(n)
            for j, r in enumerate(rngs):
                xi[j] = r.standard_normal(p.dim)
                u[j] = r.random()
            x, accepted[i] = rwm_move(p, x, xi, u, cfg.eta)
            out[i] = x
    else:
        streams = MomentumStreams(rngs, p.dim, block=max(1, min(cfg.k, 256)))
        for i in range(cfg.k):
            x = move(p, cfg, x, streams.next())
            out[i] = x
    if return_acceptance:
        return out, accepted
    return out


def move(p: Potential, cfg: SamplerConfig, x, xi):
    """Deterministic part of an HMC or ULA step given the Gaussian draw."""
    if cfg.sampler is SamplerKind.IDEALIZED_HMC:
        return idealized_hmc_move(p, x, xi, cfg.T)
    if cfg.sampler is SamplerKind.UNADJUSTED_HMC:
        return unadjusted_hmc_move(p, x, xi, cfg.T, cfg.eta)
    if cfg.sampler is SamplerKind.ULA:
        return ula_move(p, x, xi, cfg.eta)
    raise InvalidConfigError("RWM needs a uniform draw; use rwm_move")
