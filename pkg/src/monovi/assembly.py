"""Discrete realizations of the flux operator, the jump functional and loads.

Everything acts on nodal fields over a fixed mesh.  Flux terms use one-point
(midpoint/centroid) quadrature, exact for P1 fields when the flux has no
x-dependence; zeroth-order terms use the lumped (diagonal) mass, which makes
the jump functional separable per node.  Scatter order is fixed, so repeated
assembly of the same data is bit-identical.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .graphs import MonotoneGraph
from .meshing import Mesh, gradients, positive_part
from .nonlinearity import Decomposition, NemitskiiG
from .operators import OperatorSpec

__all__ = ["DiscreteProblem", "apply_A", "energy_Phi", "functional_J",
           "load_from", "truncation_identity_check", "UnsupportedOperatorError"]


class UnsupportedOperatorError(RuntimeError):
    """Operation requires a capability the operator does not provide."""


class AssemblyError(RuntimeError):
    pass


@dataclass(frozen=True)
class DiscreteProblem:
    """Mesh + operator + nonlinearity bundle the solvers act on."""

    mesh: Mesh
    op: OperatorSpec
    decomposition: Decomposition

    @property
    def graph(self) -> MonotoneGraph:
        return self.decomposition.graph

    @property
    def G(self) -> NemitskiiG:
        return NemitskiiG(self.decomposition)

    @property
    def mass(self):
        return self.mesh.lumped_mass

    @property
    def interior(self):
        return self.mesh.interior


def apply_A(problem: DiscreteProblem, u):
    """Residual of the flux operator: component i is the flux integrated
    against the gradient of hat function i.

    Boundary components are assembled too (callers exclude them from
    solves, but upper/lower-solution checks need them).
    """
    mesh = problem.mesh
    u = np.asarray(u, dtype=float)
    g = gradients(mesh, u)
    a = problem.op.flux(mesh.centers, g)
    if not np.all(np.isfinite(a)):
        raise AssemblyError("flux evaluation produced non-finite values")
    contrib = np.einsum("ed,eld->el", a * mesh.measures[:, None], mesh.grads)
    out = np.zeros(mesh.n_nodes)
    np.add.at(out, mesh.elements, contrib)
    return out


def energy_Phi(problem: DiscreteProblem, u):
    """Scalar potential of the flux term (sum of element potentials).

    Its gradient in u equals ``apply_A`` on interior components; only
    available when the operator carries a potential.
    """
    if problem.op.potential is None:
        raise UnsupportedOperatorError(
            f"operator {problem.op.name!r} has no scalar potential")
    mesh = problem.mesh
    g = gradients(mesh, np.asarray(u, dtype=float))
    return float(np.sum(problem.op.potential(mesh.centers, g) * mesh.measures))


def functional_J(problem: DiscreteProblem, u):
    """Lumped jump functional: sum_i m_i * j(u_i).  Always finite, >= 0."""
    j = problem.graph.potential(np.asarray(u, dtype=float))
    return float(np.dot(problem.mass, j))


def load_from(problem: DiscreteProblem, z):
    """Lumped load induced by the frozen field z: b_i = m_i * g(z_i)."""
    return problem.mass * problem.decomposition.eval_g_array(z)


def truncation_identity_check(problem: DiscreteProblem, u, w):
    """Value of J(u - (u-w)+) - J(u) + J(w + (u-w)+) - J(w).

    Swapping the values of u and w node-by-node where u > w leaves the
    multiset of (mass, value) pairs unchanged, so this vanishes; the
    returned number is the rounding residual.
    """
    u = np.asarray(u, dtype=float)
    w = np.asarray(w, dtype=float)
    excess = positive_part(u - w)
    return (functional_J(problem, u - excess) - functional_J(problem, u)
            + functional_J(problem, w + excess) - functional_J(problem, w))
