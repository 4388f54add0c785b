"""Target potentials and their curvature bounds.

Every potential carries the smallest and largest Hessian eigenvalue
(m, M). For the diagonal family f(x) = sum_j c_j x_j^2 the Hessian is
2 diag(c), so the bounds are twice the extreme coefficients.
"""

import numpy as np

from hmc_lab import potentials as pots

diag = pots.diagonal([0.5, 0.8, 1.0, 1.5, 2.0])
print("diagonal bounds (m, M):", pots.convexity_bounds(diag))
print("f(1, 1, 1, 1, 1) =", pots.eval_f(diag, np.ones(5)))
print("grad f(1, ..., 1) =", pots.grad_f(diag, np.ones(5)))

# A dense quadratic with a prescribed Hessian spectrum in a random basis.
dense = pots.dense([0.5, 1.5, 3.0], seed=4)
print("\ndense Hessian eigenvalues:", np.linalg.eigvalsh(dense.matrix).round(12))

# The perturbed family adds a softplus bump. Its curvature is at most a / 4,
# so M grows by a quarter of the amplitude.
bumpy = pots.perturbed(np.linspace(1, 2, 5), 1.0)
print("\nperturbed bounds (m, M):", pots.convexity_bounds(bumpy))
print("perturbed minimizer:", pots.minimizer(bumpy).round(6))

# Quadratic targets are Gaussian, so they can be sampled exactly.
x = pots.sample_target(diag, np.random.default_rng(0), size=100_000)
print("\nempirical variances:", x.var(axis=0).round(3))
print("exact variances:    ", np.diag(pots.covariance(diag)).round(3))
