"""Two-fold singularities of piecewise-smooth flows and their regularization.

Define a system as three expression vector fields (f+, f-, hidden), analyze
its switching surface (sliding modes, critical manifold, non-hyperbolic
curve, folded singularities with canonical coefficients and classification),
and integrate trajectories either event-driven on the piecewise-smooth
system or through a smooth sigmoid regularization.
"""

from .exceptions import (DegenerateClassificationError, DegenerateSystemError,
                         EvaluationError, EventLimitError, IntegrationError,
                         NonHyperbolicPointError, ParseError, PwsfoldError,
                         SlidingResidualError, StepBudgetError,
                         StepUnderflowError, ValidationError)
from .expr import (Expression, differentiate, evaluate, parse_expression,
                   to_text)
from .pws import (PiecewiseSystem, PwsOptions, SurfaceMode, Trajectory,
                  classify_surface_point, combination, integrate_pws,
                  sliding_field, sliding_lambdas)
from .regularize import (CriticalPoint, Sigmoid, Stability, builtin_sigmoid,
                         critical_manifold, degeneracy_probe, dummy_field,
                         layer_field, nonhyperbolic_curve, regularized_field,
                         slow_u_dot)
from .sim import (IntegratorOptions, compare_trajectories, example_system,
                  integrate_smooth, regularized_trajectory, run_example,
                  section6_system, trajectory_csv)
from .twofold import (Canard, Flavour, FoldedClass, FoldedReport,
                      TwoFoldClass, TwoFoldParams, build_normal_form,
                      canonical_coefficients, canonical_fit, classify_folded,
                      classify_twofold, folded_points, folded_reports)

__version__ = "0.1.0"
