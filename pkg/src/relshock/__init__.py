"""relshock: viscous shock profiles and weighted relative-entropy contraction
for 1D scalar conservation laws with strictly convex flux."""

from .calculus import (FluxEntropyPair, HypothesisReport, antiderivative_F,
                       check_hypotheses, make_pair, mu, relative_eta_prime,
                       relative_value)
from .config import ExperimentConfig
from .dynamics import (RunReport, ShiftState, coupled_step, identity_study,
                       phi_eps, run_contraction)
from .functionals import (FunctionalSnapshot, ProfileOnGrid, SearchReport,
                          TruncReport, entropy_identity_residual, eval_B,
                          eval_G, eval_R_eps_delta, eval_R_main, eval_Y,
                          evaluate_functionals, poincare_R, poincare_search,
                          truncate, truncation_diagnostics)
from .grid import Field, Grid, derivative, integrate, shift_sample
from .pde import PdeState, build_initial, cfl_limit, energy_check, step
from .profile import (ShockProfile, TailReport, rankine_hugoniot,
                      solve_profile, tail_diagnostics, y_map_check)

__version__ = "0.1.0"

__all__ = [
    "FluxEntropyPair", "HypothesisReport", "antiderivative_F",
    "check_hypotheses", "make_pair", "mu", "relative_eta_prime",
    "relative_value", "ExperimentConfig", "RunReport", "ShiftState",
    "coupled_step", "identity_study", "phi_eps", "run_contraction",
    "FunctionalSnapshot", "ProfileOnGrid", "SearchReport", "TruncReport",
    "entropy_identity_residual", "eval_B", "eval_G", "eval_R_eps_delta",
    "eval_R_main", "eval_Y", "evaluate_functionals", "poincare_R",
    "poincare_search", "truncate", "truncation_diagnostics", "Field", "Grid",
    "derivative", "integrate", "shift_sample", "PdeState", "build_initial",
    "cfl_limit", "energy_check", "step", "ShockProfile", "TailReport",
    "rankine_hugoniot", "solve_profile", "tail_diagnostics", "y_map_check",
    "__version__",
]
