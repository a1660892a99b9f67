import sys
import pathlib

import pytest

sys.path.insert(0, str(pathlib.Path(__file__).parent))

from monovi import graphs as gr
from monovi.assembly import DiscreteProblem
from monovi.meshing import interval_mesh
from monovi.nonlinearity import Decomposition
from monovi.operators import plaplacian

# the three graphs the identity/property tests cycle through
CANONICAL_GRAPHS = (
    ("step", gr.MonotoneGraph(gr.heaviside(0.0, 1.0))),
    ("identity-plus-jump",
     gr.MonotoneGraph(gr.PiecewiseMonotone(slopes=(1.0,), jumps=((1.0, 2.0),)))),
    ("two-jump",
     gr.MonotoneGraph(gr.PiecewiseMonotone(
         breakpoints=(0.5,), slopes=(0.2, 1.0),
         jumps=((-0.3, 1.5), (0.7, 0.5))))),
)


@pytest.fixture
def mesh_1d_small():
    return interval_mesh(0.0, 1.0, 16)


@pytest.fixture
def smooth_problem_1d():
    """p = 2, no jump part, unit load: the parabola problem."""
    mesh = interval_mesh(0.0, 1.0, 200)
    dec = Decomposition(gr.constant(1.0), gr.zero())
    return DiscreteProblem(mesh, plaplacian(2.0), dec)


@pytest.fixture
def step_problem_1d():
    """p = 2, unit load, step of height 5 switching at 0.2 (inactive)."""
    mesh = interval_mesh(0.0, 1.0, 200)
    dec = Decomposition(gr.constant(1.0), gr.heaviside(0.2, 5.0))
    return DiscreteProblem(mesh, plaplacian(2.0), dec)


@pytest.fixture
def plateau_problem_1d():
    """p = 2, load 2, step of height 5 at 0.2: the solution plateaus."""
    mesh = interval_mesh(0.0, 1.0, 200)
    dec = Decomposition(gr.constant(2.0), gr.heaviside(0.2, 5.0))
    return DiscreteProblem(mesh, plaplacian(2.0), dec)


def random_nodal(rng, mesh, lo=-3.0, hi=3.0, dirichlet=False):
    u = rng.uniform(lo, hi, mesh.n_nodes)
    if dirichlet:
        u[mesh.boundary] = 0.0
    return u
