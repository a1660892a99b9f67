"""The splitting f = g - h into nondecreasing parts, and nodal application.

The user supplies both parts explicitly (the split is not unique, so it is
an input, not something inferred).  Construction normalizes the pair so
that the graph of h contains 0 at 0, absorbing the normalizing constant
into g; f itself is unchanged.  ``g_side`` selects which one-sided limit g
takes at its own jump points: "right" is the branch for maximal solutions,
"left" for minimal ones.
"""

from __future__ import annotations

import numpy as np

from .graphs import MonotoneGraph, PiecewiseMonotone

__all__ = ["Decomposition", "NemitskiiG", "eval_g", "apply_G",
           "validate_decomposition"]


class DecompositionError(ValueError):
    pass


class Decomposition:
    """f = g - h with g, h nondecreasing and a continuity side for g.

    Attributes
    ----------
    g : PiecewiseMonotone
        The continuous-side part, already shifted by the graph
        normalization constant.
    graph : MonotoneGraph
        The maximal monotone graph of the (normalized) h.
    g_side : str
        "right" or "left"; the limit g takes at its jumps.
    shift : float
        Constant subtracted from both raw g and raw h (f preserved).
    """

    __slots__ = ("g", "graph", "g_side", "shift")

    def __init__(self, g: PiecewiseMonotone, h: PiecewiseMonotone, g_side="right"):
        if g_side not in ("right", "left"):
            raise DecompositionError(f"g_side must be 'right' or 'left', got {g_side!r}")
        self.graph = MonotoneGraph(h)
        self.shift = self.graph.shift
        self.g = g.shifted(-self.shift) if self.shift != 0.0 else g
        self.g_side = g_side

    @property
    def h(self):
        return self.graph.h

    def eval_g(self, s):
        """g at s, taking the configured one-sided limit at jump points."""
        lo, hi = self.g.limits(s)
        return hi if self.g_side == "right" else lo

    def eval_g_array(self, s):
        lo, hi = self.g.limits(np.asarray(s, dtype=float))
        return hi if self.g_side == "right" else lo

    def f(self, s):
        """f = g - h at a continuity point of both (one-sided elsewhere)."""
        return self.eval_g(s) - (self.h.limits(s)[1] if self.g_side == "right"
                                 else self.h.limits(s)[0])


class NemitskiiG:
    """Nodal superposition u -> g(u), componentwise with the chosen side."""

    __slots__ = ("decomposition",)

    def __init__(self, decomposition: Decomposition):
        self.decomposition = decomposition

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        if not np.all(np.isfinite(u)):
            raise ValueError("nodal field must be finite")
        return self.decomposition.eval_g_array(u)


def eval_g(d: Decomposition, s):
    return d.eval_g(s)


def apply_G(G: NemitskiiG, u):
    return G(u)


def validate_decomposition(d: Decomposition, sample_count=1000, seed=0,
                           box=10.0, tol=1e-12):
    """Sampled monotonicity check of both parts.

    Draws ordered pairs s1 < s2 in [-box, box] and verifies
    ``part_plus(s1) <= part_minus(s2)`` for g and for h; jump locations are
    injected into the sample so violations at the jumps are not missed.
    Returns a dict with worst margins and, on failure, a located sample.
    """
    rng = np.random.default_rng(seed)
    report = {"samples": int(sample_count), "passed": True,
              "g_margin": np.inf, "h_margin": np.inf, "witness": None}
    for name, fn in (("g", d.g), ("h", d.h)):
        pts = rng.uniform(-box, box, size=(sample_count, 2))
        special = np.array([loc for loc, _ in fn.jumps] + list(fn.breakpoints))
        if special.size:
            extra = np.stack([special, special + rng.uniform(0, 1, special.size)], axis=1)
            pts = np.vstack([pts, extra])
        s1 = np.minimum(pts[:, 0], pts[:, 1])
        s2 = np.maximum(pts[:, 0], pts[:, 1])
        keep = s2 - s1 > 0
        s1, s2 = s1[keep], s2[keep]
        margin = fn.limits(s2)[0] - fn.limits(s1)[1]
        worst = float(np.min(margin)) if margin.size else np.inf
        report[f"{name}_margin"] = worst
        if worst < -tol:
            i = int(np.argmin(margin))
            report["passed"] = False
            if report["witness"] is None:
                report["witness"] = (name, float(s1[i]), float(s2[i]), worst)
    return report
