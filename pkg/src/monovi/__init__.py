"""monovi: extremal solutions of quasilinear elliptic inclusions with
discontinuous nonlinearities, by monotone iteration of convex variational
inequalities on P1 finite elements."""

__version__ = "0.1.0"

from .assembly import (DiscreteProblem, apply_A, energy_Phi, functional_J,
                       load_from, truncation_identity_check)
from .bracket_check import (check_lower, check_upper, linear_bracket_helper,
                            standard_bracket)
from .extremal import (Bracket, SolveReport, certify_solution,
                       maximality_probe, solve_extremal)
from .graphs import (ConvexPotential, MonotoneGraph, PiecewiseMonotone,
                     constant, heaviside, identity, zero)
from .meshing import Mesh, build_mesh, interval_mesh, rectangle_mesh
from .nonlinearity import Decomposition, NemitskiiG
from .operators import OperatorSpec, plaplacian, validate
from .vi import Tolerances, ViSolution, check_T_monotone, prox_step, solve_vi

__all__ = [
    "__version__",
    "PiecewiseMonotone", "MonotoneGraph", "ConvexPotential",
    "heaviside", "identity", "constant", "zero",
    "OperatorSpec", "plaplacian", "validate",
    "Decomposition", "NemitskiiG",
    "Mesh", "build_mesh", "interval_mesh", "rectangle_mesh",
    "DiscreteProblem", "apply_A", "energy_Phi", "functional_J",
    "load_from", "truncation_identity_check",
    "Tolerances", "ViSolution", "solve_vi", "prox_step", "check_T_monotone",
    "Bracket", "SolveReport", "solve_extremal", "certify_solution",
    "maximality_probe",
    "check_upper", "check_lower", "linear_bracket_helper", "standard_bracket",
]
