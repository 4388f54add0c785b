"""Idealized and unadjusted Hamiltonian Monte Carlo with coupling diagnostics."""

from .potentials import (InvalidInputError, Potential, PotentialKind,
                         UnsupportedPotentialError, convexity_bounds, dense,
                         diagonal, eval_f, grad_f, minimizer, perturbed,
                         spherical)
from .dynamics import (Integrator, PhasePoint, Scheme, euler2_step,
                       exact_quadratic_flow, flow_reference, hamiltonian,
                       integrate, jacobian_det_estimate, leapfrog_step,
                       reversibility_defect)
from .samplers import (ChainState, InvalidConfigError, SamplerConfig,
                       SamplerKind, idealized_hmc_step, make_rng, run_chain,
                       run_ensemble, rwm_step, sample_momentum, ula_step,
                       unadjusted_hmc_step)
from .coupling import (CoupledTrace, contraction_fit, coupled_run,
                       coupled_runs, predicted_contraction_gamma,
                       predicted_coordinate_factor)
from .diagnostics import (GaussianSpec, SampleSet, empirical_moments,
                          energy_drift, order_estimate, w2_empirical_1d,
                          w2_gaussian)

__version__ = "0.1.0"
