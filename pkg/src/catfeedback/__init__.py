"""Simulation of stroboscopic autofeedback protecting a cavity cat state."""

__version__ = "0.1.0"

from ._accel import HAVE_NUMBA, backend
from .adiabatic import (SweepParams, adiabatic_eigenvalues, adiabatic_eigenstate_plus,
                        dynamical_phase, dynamical_phase_quadrature, phase_spread,
                        sweep_integrate, transfer_probability)
from .analysis import (WignerGrid, coherence_metrics, offdiag_norm, stationary_check,
                       support_01_mass, wigner, wigner_origin)
from .channels import (KrausSet, apply_channel, cprime_survival, damp, damping_kraus,
                       parity_interference, parity_projections, phase_diffusion_generator,
                       photon_injection)
from .errors import CatFeedbackError, ToleranceError, TruncationError
from .feedback import (FeedbackParams, averaged_cycle_map, check_timing_constraints, cycle_map,
                       cycle_map_diss, cycle_map_fb, evolve, mean_attempt_time, mean_cycle_time,
                       protection_bound, run_trajectories, waiting_pmf)
from .fock import (FieldState, TruncationConfig, cat_state, coherent_state, fidelity,
                   ladder_operators, mean_photon, parity_expectation, parity_operator,
                   trace_distance)
from .verify import (analytic_coherent_dyad_decay, decayed_cat, interference_weight,
                     joint_cycle_oracle)
