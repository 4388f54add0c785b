"""Exact flow versus leapfrog and euler2.

The exact flow conserves energy and volume and is reversible. Leapfrog
keeps volume and reversibility exactly and bounds the energy error at
O(eta^2).
"""

import numpy as np

from hmc_lab import diagnostics as diag
from hmc_lab import dynamics as dyn
from hmc_lab import potentials as pots
from hmc_lab.dynamics import Integrator, PhasePoint, Scheme

p = pots.diagonal([0.5, 1.0, 2.0])
z0 = PhasePoint(np.array([1.0, -0.5, 0.3]), np.array([0.2, 0.7, -1.0]))

exact = Integrator(Scheme.EXACT)
for T in (0.1, 1.0, 10.0):
    print(f"exact flow T = {T:>4}: "
          f"energy drift {diag.energy_drift(p, exact, z0, T):.1e}, "
          f"det J - 1 {dyn.jacobian_det_estimate(p, exact, z0, T) - 1:+.1e}, "
          f"reversibility {dyn.reversibility_defect(p, exact, z0, T):.1e}")

print()
etas = [0.2, 0.1, 0.05, 0.025]
for scheme in (Scheme.LEAPFROG, Scheme.EULER2):
    pairs = [(eta, diag.energy_drift(p, Integrator(scheme, eta), z0, 1.0))
             for eta in etas]
    for eta, drift in pairs:
        print(f"{scheme.value:8s} eta = {eta:<6} energy drift {drift:.3e}")
    print(f"{scheme.value:8s} fitted order {diag.order_estimate(pairs):.3f}\n")

lf = Integrator(Scheme.LEAPFROG, 0.1)
print("leapfrog det J - 1:",
      f"{dyn.jacobian_det_estimate(p, lf, z0, 1.0) - 1:+.1e}")
print("leapfrog reversibility:",
      f"{dyn.reversibility_defect(p, lf, z0, 1.0):.1e}")
