"""Hamiltonian flows, numerical integrators and their conservation checks.

The Hamiltonian is ``H(x, v) = f(x) + |v|^2 / 2`` (unit mass). Positions and
velocities may carry leading batch axes; every map here acts row-wise.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .potentials import (InvalidInputError, Potential, PotentialKind,
                         UnsupportedPotentialError, _sigmoid, eval_f, grad_f)

FD_STEP = 1e-5
REFERENCE_STEP = 1e-3
# absorbs rounding in T / eta so that e.g. 1 / 0.2 is five steps, not six
_STEP_COUNT_RTOL = 1e-9


@dataclass(frozen=True)
class PhasePoint:
    """A point ``(x, v)`` of phase space."""

    x: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        v = np.asarray(self.v, dtype=float)
        if x.shape != v.shape or x.ndim == 0:
            raise InvalidInputError(
                f"position {x.shape} and velocity {v.shape} shapes differ")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "v", v)

    @property
    def dim(self) -> int:
        return self.x.shape[-1]

    def flipped(self) -> "PhasePoint":
        """Same position, negated velocity."""
        return PhasePoint(self.x, -self.v)

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.x, self.v], axis=-1)

    @classmethod
    def from_vector(cls, z) -> "PhasePoint":
        z = np.asarray(z, dtype=float)
        d = z.shape[-1] // 2
        return cls(z[..., :d], z[..., d:])


class Scheme(enum.Enum):
    EXACT = "exact"
    LEAPFROG = "leapfrog"
    EULER2 = "euler2"


@dataclass(frozen=True)
class Integrator:
    """A time-stepping scheme and its step size ``eta``.

    ``eta`` is ignored by ``Scheme.EXACT``.
    """

    scheme: Scheme
    eta: float | None = None

    def __post_init__(self):
        scheme = Scheme(self.scheme)
        object.__setattr__(self, "scheme", scheme)
        if scheme is not Scheme.EXACT:
            if self.eta is None or not self.eta > 0:
                raise InvalidInputError(
                    f"{scheme.value} integrator needs eta > 0")


def _check(p: Potential, z: PhasePoint):
    if z.dim != p.dim:
        raise InvalidInputError(
            f"phase point has dimension {z.dim}, potential has {p.dim}")


def hamiltonian(p: Potential, z: PhasePoint):
    """Total energy ``f(x) + |v|^2 / 2``."""
    _check(p, z)
    return eval_f(p, z.x) + 0.5 * np.sum(z.v * z.v, axis=-1)


def _to_eigenbasis(p: Potential, x):
    return x if p.eigvecs is None else x @ p.eigvecs


def _from_eigenbasis(p: Potential, y):
    return y if p.eigvecs is None else y @ p.eigvecs.T


def _eigen_frequencies(p: Potential) -> np.ndarray:
    if p.kind is PotentialKind.SPHERICAL:
        return np.ones(p.dim)
    if p.kind is PotentialKind.DIAGONAL:
        return np.sqrt(2.0 * p.coeffs)
    return np.sqrt(p.spectrum)


def exact_quadratic_flow(p: Potential, z0: PhasePoint, t: float) -> PhasePoint:
    """Closed-form Hamiltonian flow of a quadratic potential.

    Each Hessian eigendirection with eigenvalue ``lambda_j`` oscillates at
    frequency ``omega_j = sqrt(lambda_j)``.
    """
    if not p.is_quadratic:
        raise UnsupportedPotentialError(
            f"no closed-form flow for {p.kind.value} potential")
    _check(p, z0)
    if t < 0:
        raise InvalidInputError("flow time must be non-negative")
    if t == 0:
        return z0
    omega = _eigen_frequencies(p)
    cos, sin = np.cos(omega * t), np.sin(omega * t)
    x = _to_eigenbasis(p, z0.x)
    v = _to_eigenbasis(p, z0.v)
    xt = x * cos + v * (sin / omega)
    vt = v * cos - x * (omega * sin)
    return PhasePoint(_from_eigenbasis(p, xt), _from_eigenbasis(p, vt))


def leapfrog_step(p: Potential, z: PhasePoint, eta: float) -> PhasePoint:
    """Velocity Verlet: half kick, drift, half kick."""
    _check(p, z)
    v_half = z.v - 0.5 * eta * grad_f(p, z.x)
    x = z.x + eta * v_half
    return PhasePoint(x, v_half - 0.5 * eta * grad_f(p, x))


def euler2_step(p: Potential, z: PhasePoint, eta: float) -> PhasePoint:
    """Second-order Taylor step with a finite-difference Hessian-vector product.

    ``x' = x + eta v - eta^2 grad f(x) / 2`` and
    ``v' = v - eta (grad f(x) + grad f(x')) / 2``.
    """
    _check(p, z)
    g = grad_f(p, z.x)
    x = z.x + eta * z.v - 0.5 * eta * eta * g
    return PhasePoint(x, z.v - 0.5 * eta * (g + grad_f(p, x)))


_STEPPERS = {Scheme.LEAPFROG: leapfrog_step, Scheme.EULER2: euler2_step}


def step_schedule(T: float, eta: float) -> list[float]:
    """Step lengths covering ``[0, T]``: full steps plus a shortened last one."""
    if T < 0:
        raise InvalidInputError("integration time must be non-negative")
    if T == 0:
        return []
    n = max(1, math.ceil(T / eta * (1.0 - _STEP_COUNT_RTOL)))
    last = T - (n - 1) * eta
    return [eta] * (n - 1) + [last]


def trajectory(p: Potential, integ: Integrator, z0: PhasePoint, T: float):
    """Yield ``z0`` and every intermediate phase point up to time ``T``.

    For the exact scheme only the endpoints are produced.
    """
    yield z0
    if integ.scheme is Scheme.EXACT:
        if T > 0:
            yield exact_quadratic_flow(p, z0, T)
        return
    step = _STEPPERS[integ.scheme]
    z = z0
    for h in step_schedule(T, integ.eta):
        z = step(p, z, h)
        yield z


def _grad(p: Potential):
    # grad_f without per-call validation, for inner loops on checked input
    if p.kind is PotentialKind.SPHERICAL:
        return lambda x: x
    if p.kind is PotentialKind.DIAGONAL:
        two_c = 2.0 * p.coeffs
        return lambda x: two_c * x
    if p.kind is PotentialKind.DENSE:
        return p._apply_matrix
    return lambda x: p._apply_matrix(x) + p.amplitude * _sigmoid(x)


def integrate(p: Potential, integ: Integrator, z0: PhasePoint,
              T: float) -> PhasePoint:
    """Advance ``z0`` by time ``T`` with the given integrator.

    Numerical schemes reuse the end-of-step gradient as the next step's
    start gradient; results equal composing the step functions.
    """
    _check(p, z0)
    if integ.scheme is Scheme.EXACT:
        return exact_quadratic_flow(p, z0, T)
    grad = _grad(p)
    x, v = z0.x, z0.v
    g = grad(x)
    for h in step_schedule(T, integ.eta):
        if integ.scheme is Scheme.LEAPFROG:
            v_half = v - 0.5 * h * g
            x = x + h * v_half
            g_new = grad(x)
            v = v_half - 0.5 * h * g_new
        else:
            x = x + h * v - 0.5 * h * h * g
            g_new = grad(x)
            v = v - 0.5 * h * (g + g_new)
        g = g_new
    return PhasePoint(x, v)


def reference_integrator(p: Potential) -> Integrator:
    """Fine leapfrog standing in for the exact flow of a non-quadratic ``f``."""
    return Integrator(Scheme.LEAPFROG, REFERENCE_STEP / math.sqrt(p.M))


def flow_reference(p: Potential, z0: PhasePoint, T: float) -> PhasePoint:
    """Leapfrog with ``eta_ref = 1e-3 / sqrt(M)`` up to time ``T``."""
    return integrate(p, reference_integrator(p), z0, T)


def ideal_flow(p: Potential, z0: PhasePoint, T: float) -> PhasePoint:
    """Exact flow when available, the reference flow otherwise."""
    if p.is_quadratic:
        return exact_quadratic_flow(p, z0, T)
    return flow_reference(p, z0, T)


def flow_jacobian(p: Potential, integ: Integrator, z0: PhasePoint, T: float,
                  h: float = FD_STEP) -> np.ndarray:
    """Central finite-difference Jacobian of ``z0 -> integrate(z0, T)``.

    All ``4 d`` perturbed starting points are integrated as one batch.
    """
    _check(p, z0)
    if z0.x.ndim != 1:
        raise InvalidInputError("Jacobian estimate takes a single phase point")
    n = 2 * p.dim
    base = z0.as_vector()
    offsets = h * np.eye(n)
    starts = np.concatenate([base + offsets, base - offsets])
    ends = integrate(p, integ, PhasePoint.from_vector(starts), T).as_vector()
    return ((ends[:n] - ends[n:]) / (2.0 * h)).T


def jacobian_det_estimate(p: Potential, integ: Integrator, z0: PhasePoint,
                          T: float, h: float = FD_STEP) -> float:
    """Determinant of the finite-difference Jacobian of the flow map."""
    if T == 0:
        return 1.0
    return float(np.linalg.det(flow_jacobian(p, integ, z0, T, h)))


def reversibility_defect(p: Potential, integ: Integrator, z0: PhasePoint,
                         T: float) -> float:
    """``|x2 - x0| + |v2 + v0|`` after flowing forward, flipping, flowing again."""
    z1 = integrate(p, integ, z0, T)
    z2 = integrate(p, integ, z1.flipped(), T)
    return float(np.linalg.norm(z2.x - z0.x) + np.linalg.norm(z2.v + z0.v))
