import numpy as np
import pytest

from monovi import graphs as gr
from monovi.nonlinearity import (Decomposition, DecompositionError, NemitskiiG,
                                 apply_G, eval_g, validate_decomposition)


def test_eval_g_identity():
    d = Decomposition(gr.identity(), gr.zero())
    assert eval_g(d, 1.5) == 1.5


def test_eval_g_right_side_at_jump():
    d = Decomposition(gr.heaviside(0.0, 1.0), gr.zero(), g_side="right")
    assert eval_g(d, 0.0) == 1.0


def test_eval_g_left_side_at_jump():
    d = Decomposition(gr.heaviside(0.0, 1.0), gr.zero(), g_side="left")
    assert eval_g(d, 0.0) == 0.0


def test_bad_side_rejected():
    with pytest.raises(DecompositionError):
        Decomposition(gr.identity(), gr.zero(), g_side="middle")


def test_apply_G_identity():
    d = Decomposition(gr.identity(), gr.zero())
    G = NemitskiiG(d)
    u = np.array([0.0, 1.0, -2.0])
    assert np.array_equal(apply_G(G, u), u)


def test_apply_G_constant():
    d = Decomposition(gr.constant(4.5), gr.constant(0.0))
    G = NemitskiiG(d)
    assert np.allclose(apply_G(G, np.array([3.0, -7.0, 0.1])), 4.5)


def test_apply_G_saturating_ramp():
    # g(s) = min(s, 1): slope 1 then 0 past the breakpoint
    g = gr.PiecewiseMonotone(breakpoints=(1.0,), slopes=(1.0, 0.0))
    d = Decomposition(g, gr.zero())
    G = NemitskiiG(d)
    u = np.array([0.5, 3.0])
    expected = np.minimum(u, 1.0)    # pointwise oracle
    assert np.allclose(apply_G(G, u), expected)


def test_apply_G_rejects_nonfinite():
    d = Decomposition(gr.identity(), gr.zero())
    G = NemitskiiG(d)
    with pytest.raises(ValueError):
        G(np.array([1.0, np.nan]))


def test_G_order_preserving():
    rng = np.random.default_rng(0)
    g = gr.PiecewiseMonotone(breakpoints=(0.0, 1.0), slopes=(0.5, 2.0, 0.0),
                             jumps=((0.3, 1.0),))
    for side in ("right", "left"):
        G = NemitskiiG(Decomposition(g, gr.zero(), g_side=side))
        for _ in range(200):
            u = rng.uniform(-4, 4, 40)
            w = u + rng.uniform(0, 3, 40)
            assert np.all(G(u) <= G(w) + 1e-14)


def test_one_sided_limits_from_representation():
    g = gr.PiecewiseMonotone(slopes=(1.0,), jumps=((0.5, 2.0),))
    d = Decomposition(g, gr.zero(), g_side="right")
    for eps in (1e-4, 1e-8):
        assert d.eval_g(0.5) == pytest.approx(g.limits(0.5 + eps)[1], abs=2 * eps)


def test_validate_decomposition_passes_monotone_pair():
    d = Decomposition(gr.identity(), gr.heaviside(0.0, 1.0))
    rep = validate_decomposition(d, 1000, seed=1)
    assert rep["passed"]


def test_validate_decomposition_passes_step_difference():
    # f(s) = 1 - H(s - 0.2) via g = 1 and h = H(. - 0.2)
    d = Decomposition(gr.constant(1.0), gr.heaviside(0.2, 1.0))
    rep = validate_decomposition(d, 1000, seed=2)
    assert rep["passed"]
    assert d.f(0.0) == pytest.approx(1.0)
    assert d.f(1.0) == pytest.approx(0.0)


def test_validate_decomposition_locates_decreasing_part():
    broken = gr.PiecewiseMonotone(slopes=(-1.0,), validate=False)
    d = Decomposition(broken, gr.zero())
    rep = validate_decomposition(d, 500, seed=3)
    assert not rep["passed"]
    name, s1, s2, margin = rep["witness"]
    assert name == "g" and s1 < s2 and margin < 0


def test_normalization_shift_absorbed_into_g():
    # h = 2 (constant) forces a shift; f = g - h must be unchanged
    g = gr.identity()
    h = gr.constant(2.0)
    d = Decomposition(g, h)
    assert d.shift == 2.0
    for s in (-1.0, 0.0, 2.5):
        f_raw = g.limits(s)[1] - h.limits(s)[1]
        assert d.f(s) == pytest.approx(f_raw)
    # the normalized graph contains 0 at 0
    assert d.graph.member(0.0, 0.0, 0.0)


def test_finiteness_of_parts_on_bounded_fields():
    d = Decomposition(gr.identity(), gr.heaviside(0.0, 1.0))
    u = np.linspace(-100, 100, 1001)
    assert np.all(np.isfinite(d.eval_g_array(u)))
    assert np.all(np.isfinite(d.graph.h.limits(u)[0]))
