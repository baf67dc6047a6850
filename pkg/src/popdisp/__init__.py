"""Steady states and total-population curves for logistic growth with directed dispersal.

Solves  d*Lap(u/P) + r*u*(1 - u/K) = 0  on an interval with no-flux ends and
studies M(d), the integral of the positive steady state, as d varies.
"""
from .expr import DomainError, ExpressionSyntaxError, evaluate, parse, sample
from .grid import GridSpec, ScalarField, gradient, integrate, inf_norm_diff, neumann_laplacian
from .solver import (NoConvergence, Problem, SingularJacobian, SolveResult, SolverOptions,
                     SweepFailure, continuation_sweep, jacobian, newton_solve, pseudo_transient,
                     residual, thomas_solve)
from .analysis import (SweepTable, beta_limit, classify_profile, correlation_integral,
                       lambda_sweep, m_infinity, run_sweep, total_population, verdicts,
                       weighted_moments)
from .scenario import ConfigError, Scenario, builtin_example, load_scenario, serialize

__version__ = "0.1.0"
