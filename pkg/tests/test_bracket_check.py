import numpy as np
import pytest

from monovi import graphs as gr
from monovi.assembly import DiscreteProblem
from monovi.bracket_check import (BracketHelperError, check_lower, check_upper,
                                  linear_bracket_helper, standard_bracket)
from monovi.extremal import certify_solution, solve_extremal
from monovi.meshing import interval_mesh
from monovi.nonlinearity import Decomposition
from monovi.operators import plaplacian
from monovi.vi import Tolerances


def make_problem(n=100, p=2.0, g=None, h=None):
    mesh = interval_mesh(0.0, 1.0, n)
    dec = Decomposition(g if g is not None else gr.constant(1.0),
                        h if h is not None else gr.zero())
    return DiscreteProblem(mesh, plaplacian(p), dec)


def test_upper_check_parabola_equality_margin():
    problem = make_problem()
    x = problem.mesh.coords[:, 0]
    u_bar = x * (1 - x) / 2
    v_bar = np.zeros_like(u_bar)
    report = check_upper(problem, u_bar, v_bar)
    assert report.passed
    assert report.residual_margin == pytest.approx(0.0, abs=1e-9)
    assert report.membership_max == 0.0


def test_upper_check_rejects_zero_field():
    problem = make_problem()
    zero = problem.mesh.zeros()
    report = check_upper(problem, zero, zero)
    assert not report.passed
    assert report.residual_margin == pytest.approx(-1.0)   # 0 >= g = 1 fails


def test_upper_check_with_jump_selection():
    problem = make_problem(h=gr.heaviside(0.05, 5.0))
    x = problem.mesh.coords[:, 0]
    u_bar = x * (1 - x) / 2
    v_bar = problem.graph.h.limits(u_bar)[0]    # left limits along the field
    report = check_upper(problem, u_bar, v_bar)
    assert report.passed                        # nonnegative v only helps


def test_lower_check_zero_field():
    problem = make_problem(h=gr.heaviside(0.0, 1.0))
    zero = problem.mesh.zeros()
    report = check_lower(problem, zero, zero)
    assert report.passed
    assert report.residual_margin == pytest.approx(1.0)    # g = 1 slack


def test_lower_check_rejects_strict_upper_solution():
    # double the curvature: a strict upper solution for the unit load
    problem = make_problem()
    x = problem.mesh.coords[:, 0]
    u_bar = x * (1 - x)
    report = check_lower(problem, u_bar, np.zeros_like(u_bar))
    assert not report.passed
    assert check_upper(problem, u_bar, np.zeros_like(u_bar)).passed


def test_boundary_sign_checks():
    problem = make_problem()
    x = problem.mesh.coords[:, 0]
    u = x * (1 - x) / 2 - 0.01       # negative on the boundary
    rep_up = check_upper(problem, u, np.zeros_like(u))
    assert rep_up.boundary_margin == pytest.approx(-0.01)
    assert not rep_up.passed
    rep_low = check_lower(problem, -u, np.zeros_like(u))
    assert rep_low.boundary_margin == pytest.approx(-0.01)


def test_helper_reproduces_parabola():
    problem = make_problem()
    u_bar, v_bar, report = linear_bracket_helper(problem, 1.0)
    x = problem.mesh.coords[:, 0]
    assert np.max(np.abs(u_bar - x * (1 - x) / 2)) <= 1e-10
    assert report.passed
    assert np.allclose(v_bar, 0.0)


def test_helper_zero_load():
    problem = make_problem(g=gr.constant(0.0), h=gr.heaviside(0.0, 1.0))
    u_bar, v_bar, report = linear_bracket_helper(problem, 0.0)
    assert np.allclose(u_bar, 0.0)
    assert report.passed


def test_helper_p3_with_bounded_g():
    # g saturating at 2: the p = 3 construction with c_upper = 2 passes
    # (residual tolerance matched to the slow degenerate-exponent path)
    g = gr.PiecewiseMonotone(breakpoints=(1.0,), slopes=(2.0, 0.0))
    problem = make_problem(n=50, p=3.0, g=g, h=gr.heaviside(0.1, 1.0))
    u_bar, v_bar, report = linear_bracket_helper(
        problem, 2.0, tols=Tolerances(stat=1e-6, member=1e-4))
    assert report.passed
    assert np.max(problem.decomposition.eval_g_array(u_bar)) <= 2.0


def test_helper_rejects_insufficient_constant():
    # g == 1 cannot be dominated by c_upper = 0.5 along the candidate
    problem = make_problem()
    with pytest.raises(BracketHelperError):
        linear_bracket_helper(problem, 0.5)


def test_standard_bracket_requires_nonnegative_g_at_zero():
    problem = make_problem(g=gr.constant(-1.0))
    with pytest.raises(BracketHelperError):
        standard_bracket(problem, 1.0)


def test_standard_bracket_is_verified():
    problem = make_problem(h=gr.heaviside(0.2, 5.0))
    bracket = standard_bracket(problem, 1.0)
    assert bracket.verified
    assert bracket.upper_report.passed and bracket.lower_report.passed
    assert np.all(bracket.lower_u <= bracket.upper_u)


def test_certified_solution_is_both_upper_and_lower():
    # a solution passes both one-sided checks with its certificate selection
    problem = make_problem(g=gr.constant(2.0), h=gr.heaviside(0.2, 5.0))
    bracket = standard_bracket(problem, 2.0)
    report = solve_extremal(problem, bracket, "from_upper", Tolerances.tied(1))
    v, cert = certify_solution(problem, report.u_final)
    assert cert["passed"]
    tol = 1e-7
    assert check_upper(problem, report.u_final, v, tol).passed
    assert check_lower(problem, report.u_final, v, tol).passed
