"""Analysis toolkit for cryogenic whispering-gallery-mode resonator measurements."""

from .lineshape import FanoParams, FitResult, FrequencyTrace, TraceMeta, fano_eval, fit_fano, snr_estimate, synth_trace
from .material import analyze_power_sweep, chi_prime, delta_chi_double_prime, fit_saturation, loss_tangent
from .mode_solver import ModeSpec, ModeSolution, field_amplitudes, filling_factors, solve_mode
from .power_chain import ChainStage, IntracavityState, PowerChain, chain_apply, coupling_loss_db, intracavity_state

__version__ = "0.1.0"
