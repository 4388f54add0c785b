"""Target potentials f for Gibbs densities pi(x) ~ exp(-f(x)).

Every potential carries exact gradients and two-sided Hessian eigenvalue
bounds ``m * I <= hess f <= M * I``. The bounds always refer to the Hessian,
never to the quadratic coefficients: ``f(x) = sum_j c_j x_j**2`` has Hessian
``2 * diag(c)`` and therefore ``m = 2 * min(c)``, ``M = 2 * max(c)``.

All evaluation functions broadcast over leading axes, so ``x`` may be a single
point of shape ``(d,)`` or a batch of shape ``(..., d)``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np


class InvalidInputError(ValueError):
    """Raised for malformed arguments (bad dimensions, non-SPD matrices, ...)."""


class UnsupportedPotentialError(TypeError):
    """Raised when an operation requires a potential kind it does not support."""


class PotentialKind(enum.Enum):
    SPHERICAL = "spherical"
    DIAGONAL = "diagonal"
    DENSE = "dense"
    PERTURBED = "perturbed"


QUADRATIC_KINDS = frozenset(
    {PotentialKind.SPHERICAL, PotentialKind.DIAGONAL, PotentialKind.DENSE})

# softplus'' = sigmoid * (1 - sigmoid) peaks at 1/4
SOFTPLUS_CURVATURE_MAX = 0.25


def _softplus(x):
    return np.logaddexp(0.0, x)


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


@dataclass(frozen=True, eq=False)
class Potential:
    """An immutable, strongly convex and smooth potential.

    Use the constructors :func:`spherical`, :func:`diagonal`, :func:`dense`
    and :func:`perturbed` rather than building instances directly.

    Attributes:
        kind: Which family the potential belongs to.
        dim: Dimension ``d`` of the position space.
        m: Lower Hessian eigenvalue bound.
        M: Upper Hessian eigenvalue bound.
        coeffs: Diagonal coefficients ``c_j`` (``DIAGONAL`` only).
        matrix: Quadratic-form matrix ``A``. For ``DENSE`` this is the Hessian
            of ``f(x) = x.A.x / 2``; for ``PERTURBED`` it is the base matrix.
        spectrum: Hessian eigenvalues in ascending order for quadratic kinds,
            eigenvalues of ``A`` for ``PERTURBED``.
        eigvecs: Orthonormal eigenvectors (columns) matching ``spectrum``, or
            ``None`` when the eigenbasis is the standard basis.
        amplitude: Softplus perturbation amplitude ``a`` (``PERTURBED`` only).
        spectrum_seed: Seed used to draw the random rotation of ``DENSE``.
    """

    kind: PotentialKind
    dim: int
    m: float
    M: float
    coeffs: np.ndarray | None = None
    matrix: np.ndarray | None = None
    spectrum: np.ndarray = field(default=None, repr=False)
    eigvecs: np.ndarray | None = field(default=None, repr=False)
    amplitude: float = 0.0
    spectrum_seed: int | None = None

    @property
    def is_quadratic(self) -> bool:
        return self.kind in QUADRATIC_KINDS

    def _check(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.ndim == 0 or x.shape[-1] != self.dim:
            raise InvalidInputError(
                f"expected trailing dimension {self.dim}, got shape {x.shape}")
        return x

    def _apply_matrix(self, x):
        # x @ A for symmetric A, batched over leading axes
        if self.matrix.ndim == 1:
            return x * self.matrix
        return x @ self.matrix

    def __call__(self, x):
        return eval_f(self, x)

    def grad(self, x):
        return grad_f(self, x)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


def spherical(dim: int) -> Potential:
    """``f(x) = |x|^2 / 2``; the standard Gaussian target."""
    if dim < 1:
        raise InvalidInputError("dim must be positive")
    return Potential(PotentialKind.SPHERICAL, int(dim), 1.0, 1.0,
                     spectrum=_frozen(np.ones(dim)))


def diagonal(coeffs) -> Potential:
    """``f(x) = sum_j c_j x_j^2`` with all ``c_j > 0``."""
    c = np.atleast_1d(np.asarray(coeffs, dtype=float))
    if c.ndim != 1 or c.size == 0:
        raise InvalidInputError("coefficients must be a non-empty vector")
    if np.any(c <= 0) or not np.all(np.isfinite(c)):
        raise InvalidInputError("coefficients must be finite and positive")
    lam = 2.0 * c
    order = np.argsort(lam, kind="stable")
    return Potential(PotentialKind.DIAGONAL, c.size, float(lam.min()),
                     float(lam.max()), coeffs=_frozen(c),
                     spectrum=_frozen(lam[order]))


def random_rotation(dim: int, seed: int) -> np.ndarray:
    """Haar-distributed orthogonal matrix, deterministic in ``seed``."""
    rng = np.random.default_rng(seed)
    q, r = np.linalg.qr(rng.standard_normal((dim, dim)))
    return q * np.sign(np.diag(r))


def dense(spectrum, seed: int = 0) -> Potential:
    """``f(x) = x.A.x / 2`` with ``A = Q diag(spectrum) Q^T``.

    ``Q`` is a random orthogonal matrix drawn from ``seed`` so that the Hessian
    eigenvalues, and hence the exact flow, are known by construction.
    """
    lam = np.atleast_1d(np.asarray(spectrum, dtype=float))
    if lam.ndim != 1 or lam.size == 0:
        raise InvalidInputError("spectrum must be a non-empty vector")
    if np.any(lam <= 0) or not np.all(np.isfinite(lam)):
        raise InvalidInputError("spectrum must be finite and positive")
    order = np.argsort(lam, kind="stable")
    lam = lam[order]
    q = random_rotation(lam.size, seed)
    a = (q * lam) @ q.T
    a = 0.5 * (a + a.T)
    return Potential(PotentialKind.DENSE, lam.size, float(lam[0]),
                     float(lam[-1]), matrix=_frozen(a), spectrum=_frozen(lam),
                     eigvecs=_frozen(q), spectrum_seed=int(seed))


def perturbed(base, amplitude: float) -> Potential:
    """``f(x) = x.A.x / 2 + a * sum_j softplus(x_j)``.

    Args:
        base: SPD matrix ``A``, either as a full ``(d, d)`` array or as the
            vector of its diagonal.
        amplitude: Perturbation amplitude ``a >= 0``.

    The result is ``lambda_min(A)``-strongly convex and
    ``lambda_max(A) + a/4``-smooth.
    """
    a_mat = np.asarray(base, dtype=float)
    if amplitude < 0 or not np.isfinite(amplitude):
        raise InvalidInputError("amplitude must be finite and non-negative")
    if a_mat.ndim == 1:
        if a_mat.size == 0 or np.any(a_mat <= 0):
            raise InvalidInputError("diagonal of A must be positive")
        lam = np.sort(a_mat)
    elif a_mat.ndim == 2 and a_mat.shape[0] == a_mat.shape[1]:
        if not np.allclose(a_mat, a_mat.T, rtol=0, atol=1e-12):
            raise InvalidInputError("A must be symmetric")
        lam = np.linalg.eigvalsh(a_mat)
        if lam[0] <= 0:
            raise InvalidInputError("A must be positive definite")
    else:
        raise InvalidInputError("A must be a vector or a square matrix")
    return Potential(PotentialKind.PERTURBED, a_mat.shape[0], float(lam[0]),
                     float(lam[-1] + SOFTPLUS_CURVATURE_MAX * amplitude),
                     matrix=_frozen(a_mat), spectrum=_frozen(lam),
                     amplitude=float(amplitude))


def eval_f(p: Potential, x):
    """Potential energy ``f(x)``; broadcasts over leading axes."""
    x = p._check(x)
    if p.kind is PotentialKind.SPHERICAL:
        return 0.5 * np.sum(x * x, axis=-1)
    if p.kind is PotentialKind.DIAGONAL:
        return np.sum(p.coeffs * x * x, axis=-1)
    quad = 0.5 * np.sum(x * p._apply_matrix(x), axis=-1)
    if p.kind is PotentialKind.DENSE:
        return quad
    return quad + p.amplitude * np.sum(_softplus(x), axis=-1)


def grad_f(p: Potential, x):
    """Exact gradient of :func:`eval_f`."""
    x = p._check(x)
    if p.kind is PotentialKind.SPHERICAL:
        return x.copy()
    if p.kind is PotentialKind.DIAGONAL:
        return 2.0 * p.coeffs * x
    g = p._apply_matrix(x)
    if p.kind is PotentialKind.PERTURBED:
        g = g + p.amplitude * _sigmoid(x)
    return g


def hessian(p: Potential, x) -> np.ndarray:
    """Exact Hessian at a single point ``x`` of shape ``(d,)``."""
    x = p._check(x)
    if x.ndim != 1:
        raise InvalidInputError("hessian takes a single point")
    if p.kind is PotentialKind.SPHERICAL:
        return np.eye(p.dim)
    if p.kind is PotentialKind.DIAGONAL:
        return np.diag(2.0 * p.coeffs)
    h = np.diag(p.matrix) if p.matrix.ndim == 1 else np.array(p.matrix)
    if p.kind is PotentialKind.PERTURBED:
        s = _sigmoid(x)
        h = h + np.diag(p.amplitude * s * (1.0 - s))
    return h


def convexity_bounds(p: Potential) -> tuple[float, float]:
    """Hessian eigenvalue bounds ``(m, M)``; tight for quadratics."""
    return p.m, p.M


def minimizer(p: Potential, tol: float = 1e-14, max_iter: int = 100):
    """The unique minimizer ``x*`` of ``f``.

    Zero for quadratics; found by Newton's method for the perturbed family.
    """
    x = np.zeros(p.dim)
    if p.is_quadratic:
        return x
    for _ in range(max_iter):
        g = grad_f(p, x)
        step = np.linalg.solve(hessian(p, x), g)
        x = x - step
        if np.linalg.norm(step) <= tol * (1.0 + np.linalg.norm(x)):
            break
    return x


def covariance(p: Potential) -> np.ndarray:
    """Covariance of the Gaussian target of a quadratic potential."""
    if not p.is_quadratic:
        raise UnsupportedPotentialError(
            f"{p.kind.value} potential has no Gaussian target")
    if p.kind is PotentialKind.SPHERICAL:
        return np.eye(p.dim)
    if p.kind is PotentialKind.DIAGONAL:
        return np.diag(1.0 / (2.0 * p.coeffs))
    q = p.eigvecs
    return (q / p.spectrum) @ q.T


def sample_target(p: Potential, rng: np.random.Generator, size=None):
    """Exact draws from ``pi ~ exp(-f)`` for quadratic ``p``.

    Uses ``Sigma^{1/2} xi`` with ``xi`` standard normal from ``rng``.
    """
    if not p.is_quadratic:
        raise UnsupportedPotentialError(
            f"{p.kind.value} potential has no exact sampler")
    shape = (p.dim,) if size is None else (size, p.dim)
    xi = rng.standard_normal(shape)
    if p.kind is PotentialKind.SPHERICAL:
        return xi
    if p.kind is PotentialKind.DIAGONAL:
        return xi / np.sqrt(2.0 * p.coeffs)
    q = p.eigvecs
    return (xi / np.sqrt(p.spectrum)) @ q.T
