"""D-gap merit functions and sampling certificates for variational inequalities."""

__version__ = "0.1.0"

from dgap.errors import CapabilityError, ConfigError, DGapError, InputError, LineSearchFailed
from dgap.gap import GapParams, VIProblem, basic_property_report, d_gap, is_solution, regularized_gap
from dgap.geometry import ConvexSet, project
from dgap.problems import builtin, load_problem, resolve_problem
from dgap.solver import SolverConfig, diagnostics, solve
from dgap.subdiff import clarke_generators, grad_fab, mu_estimate, solution_characterization
from dgap.verify import equivalence_sweep, error_bound_check, kl_check, mu_check

__all__ = [
    "CapabilityError", "ConfigError", "ConvexSet", "DGapError", "GapParams", "InputError",
    "LineSearchFailed", "SolverConfig", "VIProblem", "basic_property_report", "builtin",
    "clarke_generators", "d_gap", "diagnostics", "equivalence_sweep", "error_bound_check",
    "grad_fab", "is_solution", "kl_check", "load_problem", "mu_check", "mu_estimate", "project",
    "regularized_gap", "resolve_problem", "solution_characterization", "solve",
]
