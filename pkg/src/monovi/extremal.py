"""Outer monotone iteration between a lower and an upper solution.

Starting from the upper field (or the lower one), repeatedly solve the
inner variational inequality with the previous iterate frozen in the load.
The iterates decrease (resp. increase) nodally, stay inside the bracket,
and stop when the sup-norm increment falls below the outer tolerance; the
final pair (u, v) is certified as a solution of the inclusion by checking
the extracted selection against the graph node by node.

Starting from the upper side requires g to take right limits at its jumps,
from the lower side left limits (for a jump-free g either side is fine).
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .assembly import DiscreteProblem, apply_A, load_from
from .vi import SolverError, Tolerances, solve_vi

__all__ = ["Bracket", "SolveReport", "IterationError", "solve_extremal",
           "certify_solution", "maximality_probe", "random_start_fixed_points"]


class IterationError(RuntimeError):
    pass


@dataclass
class Bracket:
    """Discrete lower/upper solution pair with their graph selections."""

    lower_u: np.ndarray
    lower_v: np.ndarray
    upper_u: np.ndarray
    upper_v: np.ndarray
    lower_report: object = None
    upper_report: object = None
    verified: bool = False

    def __post_init__(self):
        if not np.all(self.lower_u <= self.upper_u + 1e-14):
            raise IterationError("bracket requires lower_u <= upper_u nodally")


@dataclass
class SolveReport:
    """Outcome of one extremal run, with per-iteration evidence."""

    u_final: np.ndarray
    v_final: np.ndarray
    direction: str
    outer_iterations: int
    increments: list = field(default_factory=list)       # sup |u^{n+1} - u^n|
    mono_margins: list = field(default_factory=list)     # signed worst violation
    inner_iterations: list = field(default_factory=list)
    energies: list = field(default_factory=list)
    seminorms: list = field(default_factory=list)
    inner_traces: list = field(default_factory=list)     # kept only on request
    membership_residual: float = 0.0
    stationarity_residual: float = 0.0
    wall_time: float = 0.0
    converged: bool = True


def _check_side(problem: DiscreteProblem, direction):
    dec = problem.decomposition
    needed = "right" if direction == "from_upper" else "left"
    if dec.g.has_jumps and dec.g_side != needed:
        raise IterationError(
            f"direction {direction} needs g_side={needed!r} when g has jumps "
            f"(got {dec.g_side!r})")


def solve_extremal(problem: DiscreteProblem, bracket: Bracket,
                   direction="from_upper", tols=None, require_verified=True,
                   keep_inner_traces=False):
    """Monotone iteration toward the extremal solution in the bracket.

    ``direction="from_upper"`` descends from the upper solution to the
    maximal solution; ``"from_lower"`` ascends to the minimal one.  With
    ``require_verified`` the bracket must carry passing check reports.
    ``keep_inner_traces`` retains each inner solve's energy and residual
    series on the report (for the JSON-lines export).
    """
    if direction not in ("from_upper", "from_lower"):
        raise IterationError(f"unknown direction {direction!r}")
    _check_side(problem, direction)
    if require_verified and not bracket.verified:
        raise IterationError(
            "bracket is not verified; run the upper/lower checks first or "
            "pass require_verified=False to waive them")
    if tols is None:
        tols = Tolerances.tied(problem.mesh.dim)

    start = time.perf_counter()
    descending = direction == "from_upper"
    u = (bracket.upper_u if descending else bracket.lower_u).astype(float).copy()
    report = SolveReport(u_final=u, v_final=np.zeros_like(u),
                         direction=direction, outer_iterations=0)
    lo = bracket.lower_u - tols.mono
    hi = bracket.upper_u + tols.mono

    converged = False
    for n in range(tols.max_outer):
        inner = solve_vi(problem, u, u_init=u, tols=tols)
        u_next = inner.u
        step = u_next - u
        margin = float(np.max(step)) if descending else float(-np.min(step))
        increment = float(np.max(np.abs(step)))
        report.mono_margins.append(margin)
        report.increments.append(increment)
        report.inner_iterations.append(inner.inner_iterations)
        report.seminorms.append(inner.seminorm_p)
        if inner.energy_trace:
            report.energies.append(inner.energy_trace[-1])
        if keep_inner_traces:
            report.inner_traces.append(
                {"energy": list(inner.energy_trace),
                 "residual": list(inner.residual_trace)})
        if margin > tols.mono:
            raise IterationError(
                f"monotonicity violated at outer step {n}: worst increase "
                f"{margin:g} exceeds {tols.mono:g} (solver tolerance or "
                "bracket error)")
        if np.any(u_next < lo) or np.any(u_next > hi):
            raise IterationError(
                f"iterate left the bracket at outer step {n}")
        u = u_next
        report.outer_iterations = n + 1
        if increment <= tols.outer:
            converged = True
            break
    if not converged:
        raise IterationError(
            f"no convergence within {tols.max_outer} outer iterations "
            f"(last increment {report.increments[-1]:g})")

    v, cert = certify_solution(problem, u, tols)
    if not cert["passed"]:
        raise IterationError(
            f"final certificate failed: membership residual "
            f"{cert['membership_max']:g} exceeds {tols.member:g}")
    report.u_final = u
    report.v_final = v
    report.membership_residual = cert["membership_max"]
    report.stationarity_residual = cert["stationarity_max"]
    report.wall_time = time.perf_counter() - start
    report.converged = True
    return report


def certify_solution(problem: DiscreteProblem, u, tols=None):
    """Extract the selection v from stationarity and check it nodally.

    v_i = (m_i g(u_i) - (A u)_i) / m_i on interior nodes (zero on the
    boundary, where 0 belongs to the graph at 0).  The report carries the
    worst distance of v_i to the graph interval at u_i; within tolerance
    this certifies u as a solution of the discrete inclusion.
    """
    if tols is None:
        tols = Tolerances.defaults(problem.mesh.dim)
    mesh = problem.mesh
    u = np.asarray(u, dtype=float)
    idx = mesh.interior
    b = load_from(problem, u)
    Au = apply_A(problem, u)
    v = np.zeros(mesh.n_nodes)
    v[idx] = (b[idx] - Au[idx]) / mesh.lumped_mass[idx]
    dist = problem.graph.membership_distance(u[idx], v[idx])
    stat = float(np.max(np.abs(Au[idx] + mesh.lumped_mass[idx] * v[idx] - b[idx])))
    membership_max = float(np.max(dist)) if dist.size else 0.0
    return v, {
        "membership_max": membership_max,
        "stationarity_max": stat,
        "passed": membership_max <= tols.member,
    }


def maximality_probe(problem: DiscreteProblem, bracket: Bracket, candidates,
                     tol=1e-6, extremes=None, tols=None):
    """Check that certified candidate solutions sit between the two
    extremal outputs.

    ``extremes`` may supply precomputed (u_min, u_max); otherwise both
    directions are run here.  A violating candidate is reported with node
    index and margin (that means a genuine bug or a tolerance breach, the
    probe can only falsify extremality, never prove it).
    """
    if tols is None:
        tols = Tolerances.tied(problem.mesh.dim)
    if extremes is None:
        u_max = solve_extremal(problem, bracket, "from_upper", tols).u_final
        u_min = solve_extremal(problem, bracket, "from_lower", tols).u_final
    else:
        u_min, u_max = extremes
    report = {"count": len(candidates), "passed": True, "violations": [],
              "worst_margin": 0.0}
    for k, cand in enumerate(candidates):
        cand = np.asarray(cand, dtype=float)
        _, cert = certify_solution(problem, cand, tols)
        if not cert["passed"]:
            report["passed"] = False
            report["violations"].append(
                {"candidate": k, "reason": "certificate",
                 "membership": cert["membership_max"]})
            continue
        below = cand - u_max
        above = u_min - cand
        worst = float(max(np.max(below), np.max(above)))
        report["worst_margin"] = max(report["worst_margin"], worst)
        if worst > tol:
            node = int(np.argmax(np.maximum(below, above)))
            report["passed"] = False
            report["violations"].append(
                {"candidate": k, "reason": "outside", "node": node,
                 "margin": worst})
    return report


def random_start_fixed_points(problem: DiscreteProblem, bracket: Bracket,
                              count, seed, tols=None, max_picard=100):
    """Fixed points of the inner map found by iterating it from random
    fields inside the bracket (probe material for extremality checks)."""
    if tols is None:
        tols = Tolerances.tied(problem.mesh.dim)
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(int(count)):
        theta = rng.uniform(0.0, 1.0, bracket.lower_u.shape)
        z = bracket.lower_u + theta * (bracket.upper_u - bracket.lower_u)
        u = solve_vi(problem, z, tols=tols).u
        for _ in range(max_picard):
            u_next = solve_vi(problem, u, u_init=u, tols=tols).u
            delta = float(np.max(np.abs(u_next - u)))
            u = u_next
            if delta <= tols.outer:
                break
        else:
            raise SolverError("random-start fixed-point search did not settle")
        out.append(u)
    return out
