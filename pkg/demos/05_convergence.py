"""Convergence to the target measured by the Gaussian W2 distance.

Chains started at the origin approach N(0, I) geometrically. Once the
true distance is small the curve flattens at the sampling-noise floor of
the moment fit, which shrinks like 1 / sqrt(n_chains).
"""

import numpy as np

from hmc_lab import coupling as cp
from hmc_lab import experiments as ex
from hmc_lab import potentials as pots
from hmc_lab.samplers import SamplerConfig

p = pots.spherical(4)
T, _ = cp.predicted_contraction_gamma(1.0, 1.0)
for n in (1_000, 10_000, 100_000):
    w2 = ex.convergence_curve(p, SamplerConfig("idealized_hmc", k=15, seed=0, T=T),
                              np.zeros(4), n)
    print(f"n = {n:>6}: " + " ".join(f"{w:.3f}" for w in w2))
