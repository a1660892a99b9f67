import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from monovi import graphs as gr
from oracles import quad_potential, scan_resolvent

from conftest import CANONICAL_GRAPHS


def heaviside_graph():
    return gr.MonotoneGraph(gr.heaviside(0.0, 1.0))


# -- one-sided limits ---------------------------------------------------------

def test_limits_unit_step_at_origin():
    h = gr.heaviside(0.0, 1.0)
    assert h.limits(0.0) == (0.0, 1.0)


def test_limits_identity():
    assert gr.identity().limits(2.0) == (2.0, 2.0)


def test_limits_step_height_five():
    h = gr.heaviside(0.2, 5.0)
    assert h.limits(0.2) == (0.0, 5.0)


def test_limits_are_ordered_everywhere():
    rng = np.random.default_rng(3)
    for _, graph in CANONICAL_GRAPHS:
        s = rng.uniform(-5, 5, 500)
        lo, hi = graph.h.limits(s)
        assert np.all(lo <= hi)


# -- interval map -------------------------------------------------------------

def test_interval_step_inside_and_outside():
    g = heaviside_graph()
    assert g.interval(0.0) == (0.0, 1.0)
    assert g.interval(-1.0) == (0.0, 0.0)


def test_interval_identity_plus_jump():
    # left/right limits at the jump, evaluated from the representation at
    # 1 -/+ eps, converge to 1 and 3
    h = gr.PiecewiseMonotone(slopes=(1.0,), jumps=((1.0, 2.0),))
    for eps in (1e-3, 1e-6, 1e-9):
        assert h.limits(1.0 - eps)[0] == pytest.approx(1.0 - eps)
        assert h.limits(1.0 + eps)[1] == pytest.approx(3.0 + eps)
    g = gr.MonotoneGraph(h)
    assert g.interval(1.0) == (1.0, 3.0)


# -- potential ----------------------------------------------------------------

def test_potential_step_against_quadrature():
    g = heaviside_graph()
    expected = quad_potential(lambda t: 1.0 if t > 0 else 0.0, 3.0, points=(0.0,))
    assert g.potential(3.0) == pytest.approx(expected, abs=1e-10)
    assert expected == pytest.approx(3.0)


def test_potential_zero_at_origin():
    for _, graph in CANONICAL_GRAPHS:
        assert graph.potential(0.0) == 0.0


def test_potential_step_left_of_origin():
    g = heaviside_graph()
    expected = quad_potential(lambda t: 1.0 if t > 0 else 0.0, -3.0)
    assert g.potential(-3.0) == pytest.approx(expected, abs=1e-12)
    assert expected == pytest.approx(0.0, abs=1e-12)


def test_potential_matches_quadrature_on_canonical_graphs():
    rng = np.random.default_rng(11)
    for _, graph in CANONICAL_GRAPHS:
        h = graph.h
        pts = tuple(h.knots)

        def h_mid(t):
            lo, hi = h.limits(float(t))
            return 0.5 * (lo + hi)   # point values at jumps are irrelevant

        for s in rng.uniform(-4, 4, 12):
            expected = quad_potential(np.vectorize(h_mid), float(s), points=pts)
            assert graph.potential(float(s)) == pytest.approx(expected, abs=1e-9)


def test_potential_nonnegative():
    rng = np.random.default_rng(4)
    for _, graph in CANONICAL_GRAPHS:
        s = rng.uniform(-10, 10, 300)
        assert np.all(graph.potential(s) >= 0.0)


def test_potential_one_sided_slopes_match_limits():
    for _, graph in CANONICAL_GRAPHS:
        for s in (-1.3, 0.0, 0.5, 0.7, 1.0):
            lo, hi = graph.h.limits(s)
            eps = 1e-7
            fwd = (graph.potential(s + eps) - graph.potential(s)) / eps
            bwd = (graph.potential(s) - graph.potential(s - eps)) / eps
            assert fwd == pytest.approx(hi, abs=1e-6)
            assert bwd == pytest.approx(lo, abs=1e-6)


# -- resolvent ----------------------------------------------------------------

def test_resolvent_step_against_scan():
    g = heaviside_graph()
    expected = scan_resolvent(g.potential, 1.0, 0.5)
    assert abs(expected) < 1e-3                       # scan says ~0
    assert g.resolvent(1.0, 0.5) == pytest.approx(0.0, abs=1e-12)


def test_resolvent_zero_graph_is_identity():
    g = gr.MonotoneGraph(gr.zero())
    for lam in (0.1, 1.0, 7.5):
        assert g.resolvent(lam, 3.3) == 3.3


def test_resolvent_step_interior_branch():
    g = heaviside_graph()
    expected = scan_resolvent(g.potential, 1.0, 2.0)
    assert expected == pytest.approx(1.0, abs=1e-3)   # scan oracle
    assert g.resolvent(1.0, 2.0) == pytest.approx(1.0, abs=1e-12)


def test_resolvent_matches_scan_on_canonical_graphs():
    rng = np.random.default_rng(5)
    for _, graph in CANONICAL_GRAPHS:
        for _ in range(15):
            lam = float(rng.uniform(0.2, 5.0))
            y = float(rng.uniform(-6.0, 6.0))
            expected = scan_resolvent(graph.potential, lam, y)
            assert graph.resolvent(lam, y) == pytest.approx(expected, abs=1e-3)


def test_resolvent_certificate():
    rng = np.random.default_rng(6)
    for _, graph in CANONICAL_GRAPHS:
        lam = rng.uniform(0.05, 10.0, 200)
        y = rng.uniform(-8.0, 8.0, 200)
        x = graph.resolvent(lam, y)
        dist = graph.membership_distance(x, (y - x) / lam)
        assert np.max(dist) <= 1e-12


def test_resolvent_nonexpansive():
    rng = np.random.default_rng(7)
    for _, graph in CANONICAL_GRAPHS:
        lam = rng.uniform(0.05, 10.0, 200)
        y1 = rng.uniform(-8.0, 8.0, 200)
        y2 = rng.uniform(-8.0, 8.0, 200)
        x1 = graph.resolvent(lam, y1)
        x2 = graph.resolvent(lam, y2)
        assert np.all(np.abs(x1 - x2) <= np.abs(y1 - y2) + 1e-14)


def test_resolvent_rejects_nonpositive_parameter():
    g = heaviside_graph()
    with pytest.raises(ValueError):
        g.resolvent(0.0, 1.0)
    with pytest.raises(ValueError):
        g.resolvent(-1.0, 1.0)


# -- membership ---------------------------------------------------------------

def test_member_inside_jump():
    g = heaviside_graph()
    assert g.member(0.0, 0.7, 0.0)


def test_member_off_graph():
    g = heaviside_graph()
    assert not g.member(1.0, 0.5, 0.0)


def test_member_tolerance_band():
    g = heaviside_graph()
    assert g.member(0.0, 1.0 + 1e-12, 1e-10)
    with pytest.raises(ValueError):
        g.member(0.0, 1.0, -1.0)


# -- construction and normalization ------------------------------------------

def test_invalid_representations_rejected():
    with pytest.raises(gr.GraphError):
        gr.PiecewiseMonotone(breakpoints=(1.0, 0.5), slopes=(0, 0, 0))
    with pytest.raises(gr.GraphError):
        gr.PiecewiseMonotone(slopes=(-1.0,))
    with pytest.raises(gr.GraphError):
        gr.PiecewiseMonotone(jumps=((0.0, -2.0),))
    with pytest.raises(gr.GraphError):
        gr.PiecewiseMonotone(jumps=((0.0, 1.0), (0.0, 2.0)))
    with pytest.raises(gr.GraphError):
        gr.PiecewiseMonotone(breakpoints=(0.0,), slopes=(1.0,))


def test_normalization_shift_restores_zero_membership():
    # constant 2 must be shifted so that the graph contains 0 at 0
    g = gr.MonotoneGraph(gr.constant(2.0))
    assert g.shift == 2.0
    assert g.member(0.0, 0.0, 0.0)
    g2 = gr.MonotoneGraph(gr.constant(-3.5))
    assert g2.shift == -3.5
    assert g2.member(0.0, 0.0, 0.0)
    # a jump straddling zero needs no shift
    g3 = heaviside_graph()
    assert g3.shift == 0.0


# -- property-based checks ----------------------------------------------------

@settings(max_examples=200, deadline=None)
@given(s1=st.floats(-50, 50), s2=st.floats(-50, 50))
def test_monotone_order_property(s1, s2):
    if s1 == s2:
        return
    lo, hi = min(s1, s2), max(s1, s2)
    for _, graph in CANONICAL_GRAPHS:
        assert graph.h.limits(lo)[1] <= graph.h.limits(hi)[0] + 1e-12


@settings(max_examples=100, deadline=None)
@given(s=st.floats(-30, 30), eps=st.floats(1e-9, 1e-3))
def test_difference_quotient_within_graph_band(s, eps):
    for _, graph in CANONICAL_GRAPHS:
        q = (graph.potential(s + eps) - graph.potential(s)) / eps
        lo = graph.h.limits(s)[0]
        hi = graph.h.limits(s + eps)[1]
        # slack covers the cancellation in the difference of O(|j|) values
        slack = 1e-9 + 8e-16 * (1.0 + abs(graph.potential(s))) / eps
        assert lo - slack <= q <= hi + slack


@settings(max_examples=150, deadline=None)
@given(lam=st.floats(0.01, 20.0), y=st.floats(-40, 40))
def test_resolvent_membership_property(lam, y):
    for _, graph in CANONICAL_GRAPHS:
        x = graph.resolvent(lam, y)
        assert graph.membership_distance(x, (y - x) / lam) <= 1e-11
