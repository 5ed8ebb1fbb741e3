"""Operator-splitting time integration for the 1-D non-degenerate
Westervelt equation: four operator decompositions, pluggable subproblem
solvers, error-norm measurement, and a convergence-study harness."""

from .errors import (BlowupDetected, DegenerateState, GridMismatch,
                     NewtonDivergence, RadicandNonpositive,
                     SelfConsistencyFailure, WesterveltError)
from .grid import (DIRICHLET, Field, Grid1D, H3H1, L2L2, PERIODIC,
                   first_difference, laplacian, laplacian_fd,
                   laplacian_spectral, norm_hk, norm_l2, state_norm)
from .model import (Decomposition, ModelParams, NondegReport, State,
                    check_nondegeneracy, coeff_alpha_tilde, coeff_beta_tilde,
                    commutator_AB_I, eval_A, eval_B, eval_F,
                    state_difference)
from .splitting import (IntegratorConfig, IntegrationResult, LIE_AB, LIE_BA,
                        SCHEME_PRESETS, STRANG_ABA, STRANG_BAB, SplitScheme,
                        config_for, integrate, split_step)
from .subsolvers import (CLOSED_FORM, CRANK_NICOLSON, EXPLICIT_EULER,
                         IMPLICIT_EULER, InnerScheme, RK2_EXPLICIT,
                         SubstepResult, solve_A, solve_B_closed_form,
                         solve_B_wave)
from .experiments import (ErrorRecord, RunReport, Scenario,
                          compare_decompositions, linear_monolithic_cn,
                          measure_errors, model_problem, realistic,
                          realistic_run, reference_solution)

__all__ = [name for name in dir() if not name.startswith("_")]

__version__ = "0.1.0"
