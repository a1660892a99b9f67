"""Embedded invariant suites for the self-test command and run summaries.

Each suite runs on fixed seeds, is cheap enough for routine execution, and
returns a small dict with the worst observed margin so failures are
attributable.  The ``fault`` hook lets the self-test demonstrate that a
corrupted build is actually caught (it perturbs the comparison, never the
library under test).
"""

from __future__ import annotations

import numpy as np

from . import graphs as gr
from .assembly import (DiscreteProblem, apply_A, energy_Phi, functional_J,
                       truncation_identity_check)
from .bracket_check import standard_bracket
from .meshing import interval_mesh, rectangle_mesh
from .nonlinearity import Decomposition
from .operators import plaplacian
from .vi import Tolerances, check_T_monotone

__all__ = ["run_all", "problem_invariants", "FAULTS"]

FAULTS = ("flip-flux-sign",)


def _canonical_graphs():
    return (
        ("heaviside", gr.MonotoneGraph(gr.heaviside(0.0, 1.0))),
        ("identity-plus-jump",
         gr.MonotoneGraph(gr.PiecewiseMonotone(slopes=(1.0,), jumps=((1.0, 2.0),)))),
        ("two-jump",
         gr.MonotoneGraph(gr.PiecewiseMonotone(
             breakpoints=(0.5,), slopes=(0.2, 1.0),
             jumps=((-0.3, 1.5), (0.7, 0.5))))),
    )


def graph_properties_suite(seed=0):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _, graph in _canonical_graphs():
        s = np.unique(rng.uniform(-4.0, 4.0, 200))
        lo, hi = graph.h.limits(s)
        worst = max(worst, float(np.max(hi[:-1] - lo[1:])))      # monotone
        worst = max(worst, float(np.max(-graph.potential(s))))   # j >= 0
        worst = max(worst, abs(graph.potential(0.0)))            # j(0) = 0
        lam = rng.uniform(0.1, 10.0, 100)
        y = rng.uniform(-5.0, 5.0, 100)
        x = graph.resolvent(lam, y)
        worst = max(worst, float(np.max(
            graph.membership_distance(x, (y - x) / lam))))       # certificate
        y2 = rng.uniform(-5.0, 5.0, 100)
        x2 = graph.resolvent(lam, y2)
        worst = max(worst, float(np.max(np.abs(x - x2) - np.abs(y - y2))))
    return {"name": "graph-properties", "passed": worst <= 1e-12,
            "worst": worst}


def truncation_identity_suite(seed=0):
    rng = np.random.default_rng(seed)
    mesh = interval_mesh(0.0, 1.0, 16)
    op = plaplacian(2.0)
    worst = 0.0
    for _, graph in _canonical_graphs():
        h = graph.h
        problem = DiscreteProblem(mesh, op, Decomposition(gr.constant(1.0), h))
        for _ in range(60):
            u = rng.uniform(-3.0, 3.0, mesh.n_nodes)
            w = rng.uniform(-3.0, 3.0, mesh.n_nodes)
            res = truncation_identity_check(problem, u, w)
            scale = 1.0 + abs(functional_J(problem, u)) + abs(functional_J(problem, w))
            worst = max(worst, abs(res) / scale)
    return {"name": "truncation-identity", "passed": worst <= 1e-12,
            "worst": worst}


def inner_monotonicity_suite(seed=0):
    rng = np.random.default_rng(seed)
    mesh = interval_mesh(0.0, 1.0, 32)
    dec = Decomposition(gr.PiecewiseMonotone(slopes=(0.5,), anchor=1.0),
                        gr.heaviside(0.05, 1.0))
    problem = DiscreteProblem(mesh, plaplacian(2.0), dec)
    bracket = standard_bracket(problem, 2.0)
    tols = Tolerances.tied(1)
    worst_ok = True
    for _ in range(10):
        t1 = rng.uniform(0.0, 1.0, mesh.n_nodes)
        t2 = rng.uniform(0.0, 1.0, mesh.n_nodes)
        z1 = bracket.lower_u + t1 * (bracket.upper_u - bracket.lower_u)
        z2 = z1 + t2 * (bracket.upper_u - z1)
        if not check_T_monotone(problem, z1, z2, tol=1e-8, tols=tols):
            worst_ok = False
    return {"name": "inner-map-monotone", "passed": worst_ok,
            "worst": 0.0 if worst_ok else 1.0}


def gradient_consistency_suite(seed=0, fault=None):
    rng = np.random.default_rng(seed)
    dec = Decomposition(gr.constant(1.0), gr.zero())
    worst = {"2.0": 0.0, "1.5": 0.0, "3.0": 0.0}
    for mesh in (interval_mesh(0.0, 1.0, 16), rectangle_mesh(0, 1, 0, 1, 4, 4)):
        for p in (2.0, 1.5, 3.0):
            problem = DiscreteProblem(mesh, plaplacian(p), dec)
            u = mesh.zeros()
            u[mesh.interior] = 0.3 * rng.standard_normal(mesh.interior.size)
            u += 0.5 * mesh.coords[:, 0]          # keep gradients nondegenerate
            u[mesh.boundary] = 0.0
            residual = apply_A(problem, u)
            if fault == "flip-flux-sign":
                residual = -residual
            delta = 1e-6
            nodes = mesh.interior[rng.choice(mesh.interior.size,
                                             min(8, mesh.interior.size),
                                             replace=False)]
            for i in nodes:
                up, dn = u.copy(), u.copy()
                up[i] += delta
                dn[i] -= delta
                fd = (energy_Phi(problem, up) - energy_Phi(problem, dn)) / (2 * delta)
                rel = abs(fd - residual[i]) / max(abs(residual[i]), 1e-8)
                worst[str(p)] = max(worst[str(p)], rel)
    passed = worst["2.0"] <= 1e-6 and worst["1.5"] <= 1e-4 and worst["3.0"] <= 1e-4
    return {"name": "gradient-consistency", "passed": passed,
            "worst": max(worst.values()), "by_exponent": worst}


def mesh_mass_suite():
    worst = 0.0
    m1 = interval_mesh(0.0, 2.0, 13)
    worst = max(worst, abs(float(np.sum(m1.lumped_mass)) - 2.0) / 2.0)
    m2 = rectangle_mesh(0.0, 3.0, 0.0, 2.0, 5, 4)
    worst = max(worst, abs(float(np.sum(m2.lumped_mass)) - 6.0) / 6.0)
    return {"name": "mesh-mass", "passed": worst <= 1e-12, "worst": worst}


def run_all(seed=0, fault=None):
    """All suites in a fixed order; ``fault`` is forwarded to the suite
    able to demonstrate detection of a corrupted build."""
    return [
        graph_properties_suite(seed),
        truncation_identity_suite(seed),
        mesh_mass_suite(),
        gradient_consistency_suite(seed, fault=fault),
        inner_monotonicity_suite(seed),
    ]


def problem_invariants(problem, seed=0):
    """Cheap invariant outcomes on the configured problem, echoed into run
    summaries: graph certificate, truncation identity, load monotonicity."""
    rng = np.random.default_rng(seed)
    graph = problem.graph
    lam = rng.uniform(0.1, 10.0, 50)
    y = rng.uniform(-5.0, 5.0, 50)
    x = graph.resolvent(lam, y)
    res_cert = float(np.max(graph.membership_distance(x, (y - x) / lam)))
    worst_tid = 0.0
    for _ in range(20):
        u = rng.uniform(-2.0, 2.0, problem.mesh.n_nodes)
        w = rng.uniform(-2.0, 2.0, problem.mesh.n_nodes)
        scale = 1.0 + abs(functional_J(problem, u)) + abs(functional_J(problem, w))
        worst_tid = max(worst_tid, abs(truncation_identity_check(problem, u, w)) / scale)
    s = np.sort(rng.uniform(-3.0, 3.0, 100))
    gv = problem.decomposition.eval_g_array(s)
    g_mono = float(np.max(gv[:-1] - gv[1:])) if gv.size > 1 else 0.0
    return {
        "resolvent_certificate": res_cert,
        "truncation_identity": worst_tid,
        "g_monotone_margin": g_mono,
        "passed": res_cert <= 1e-12 and worst_tid <= 1e-12 and g_mono <= 1e-12,
    }
