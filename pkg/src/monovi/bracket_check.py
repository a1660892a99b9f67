"""Discrete verification of upper/lower solutions and standard brackets.

A pair (u, v) is an upper solution when v lies in the graph at u nodally,
u is nonnegative on the boundary, and the residual of the inclusion is
nonnegative against every interior hat function; lower solutions mirror
the signs.  Testing against the hat functions suffices: they span the
nonnegative test cone with nonnegative coefficients.

Residual margins are reported relative to the local lumped mass, so the
tolerance is mesh-independent.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .assembly import DiscreteProblem, apply_A, load_from
from .extremal import Bracket
from .graphs import constant, zero
from .nonlinearity import Decomposition
from .vi import Tolerances, solve_vi

__all__ = ["BracketCheckReport", "check_upper", "check_lower",
           "linear_bracket_helper", "standard_bracket", "BracketHelperError"]


class BracketHelperError(RuntimeError):
    pass


@dataclass(frozen=True)
class BracketCheckReport:
    kind: str                 # "upper" | "lower"
    membership_max: float     # worst distance of v_i to the graph at u_i
    boundary_margin: float    # min boundary sign slack (>= -tol passes)
    residual_margin: float    # min mass-scaled one-sided residual slack
    passed: bool

    def __str__(self):
        status = "pass" if self.passed else "FAIL"
        return (f"{self.kind}-solution check [{status}]: membership "
                f"{self.membership_max:.3e}, boundary margin "
                f"{self.boundary_margin:.3e}, residual margin "
                f"{self.residual_margin:.3e}")


def _check(problem: DiscreteProblem, u, v, tol, kind):
    mesh = problem.mesh
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    membership = float(np.max(problem.graph.membership_distance(u, v)))
    idx = mesh.interior
    resid = apply_A(problem, u) + mesh.lumped_mass * v - load_from(problem, u)
    scaled = resid[idx] / mesh.lumped_mass[idx]
    if kind == "upper":
        boundary = float(np.min(u[mesh.boundary]))   # needs u >= 0 there
        margin = float(np.min(scaled))               # needs residual >= 0
    else:
        boundary = float(-np.max(u[mesh.boundary]))  # needs u <= 0 there
        margin = float(-np.max(scaled))              # needs residual <= 0
    passed = (membership <= tol) and (boundary >= -tol) and (margin >= -tol)
    return BracketCheckReport(kind, membership, boundary, margin, bool(passed))


def check_upper(problem: DiscreteProblem, u_bar, v_bar, tol=1e-9):
    """Verify (u_bar, v_bar) as a discrete upper solution."""
    return _check(problem, u_bar, v_bar, tol, "upper")


def check_lower(problem: DiscreteProblem, u_low, v_low, tol=1e-9):
    """Verify (u_low, v_low) as a discrete lower solution."""
    return _check(problem, u_low, v_low, tol, "lower")


def linear_bracket_helper(problem: DiscreteProblem, c_upper, tol=1e-9,
                          tols=None):
    """Standard upper solution: solve the jump-free problem with constant
    load ``c_upper`` and select the left graph limits along the result.

    ``c_upper`` must dominate g at every value the construction reaches;
    this is checked a posteriori and a too-small constant is rejected with
    instructions to raise it.  Returns (u_bar, v_bar, report) with a
    passing upper check.
    """
    if problem.op.potential is None and not problem.op.linear:
        raise BracketHelperError(
            "the bracket helper needs a variational or linear operator")
    free = Decomposition(constant(float(c_upper)), zero())
    plain = DiscreteProblem(problem.mesh, problem.op, free)
    if tols is None:
        tols = Tolerances.defaults(problem.mesh.dim)
    u_bar = solve_vi(plain, problem.mesh.zeros(), tols=tols).u
    g_vals = problem.decomposition.eval_g_array(u_bar)
    worst = float(np.max(g_vals))
    if worst > c_upper + tol:
        raise BracketHelperError(
            f"c_upper={c_upper:g} does not dominate g along the candidate "
            f"(g reaches {worst:g}); rerun with a larger c_upper")
    v_bar = problem.graph.h.limits(u_bar)[0]
    report = check_upper(problem, u_bar, v_bar, tol=max(tol, 10 * tols.stat))
    if not report.passed:
        raise BracketHelperError(f"constructed upper solution failed: {report}")
    return u_bar, v_bar, report


def standard_bracket(problem: DiscreteProblem, c_upper, tol=1e-9, tols=None):
    """Bracket [0, helper upper solution]; needs g(0) >= 0 so the zero
    field is a lower solution (with the zero selection)."""
    g0 = problem.decomposition.eval_g(0.0)
    if g0 < -tol:
        raise BracketHelperError(
            f"g(0) = {g0:g} < 0: the zero field is not a lower solution; "
            "supply an explicit or analytic lower solution instead")
    u_bar, v_bar, up_report = linear_bracket_helper(problem, c_upper, tol, tols)
    zero_field = problem.mesh.zeros()
    low_report = check_lower(problem, zero_field, zero_field, tol)
    if not low_report.passed:
        raise BracketHelperError(f"zero lower solution failed: {low_report}")
    return Bracket(
        lower_u=zero_field, lower_v=zero_field.copy(),
        upper_u=u_bar, upper_v=v_bar,
        lower_report=low_report, upper_report=up_report, verified=True)
