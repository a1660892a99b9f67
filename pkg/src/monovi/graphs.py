"""Nondecreasing scalar functions with jumps and their monotone graphs.

A function h is represented exactly as a continuous piecewise-linear part
(breakpoints + per-interval slopes, anchored by its left limit at 0) plus a
finite list of upward jumps.  From h we derive the set-valued interval map
beta(s) = [h_minus(s), h_plus(s)], its convex antiderivative j (piecewise
quadratic, j(0) = 0), and the resolvent x = (I + lam*beta)^{-1}(y).

All objects are immutable after construction and safe to share across
threads; every operation is a pure function of its inputs.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "PiecewiseMonotone",
    "MonotoneGraph",
    "ConvexPotential",
    "heaviside",
    "identity",
    "constant",
    "zero",
    "eval_limits",
    "graph_interval",
    "potential",
    "resolvent",
    "member",
]


class GraphError(ValueError):
    """Invalid monotone-function representation."""


def _as_float_tuple(xs):
    return tuple(float(x) for x in xs)


class PiecewiseMonotone:
    """A nondecreasing function on R with finitely many jumps.

    Parameters
    ----------
    breakpoints : sequence of float
        Strictly increasing locations where the slope of the continuous
        part may change.  May be empty.
    slopes : sequence of float
        Nonnegative slopes of the continuous part, one per interval:
        ``len(slopes) == len(breakpoints) + 1``, ordered left ray first.
    jumps : sequence of (float, float)
        ``(location, height)`` pairs with distinct locations and strictly
        positive heights.
    anchor : float
        The left limit of the function at 0 (fixes the additive constant).
    validate : bool
        Skip invariant checks when False (testing hook for the sampled
        validators, which must be able to see a broken object).
    """

    __slots__ = ("breakpoints", "slopes", "jumps", "anchor",
                 "knots", "hminus", "hplus", "seg_slopes")

    def __init__(self, breakpoints=(), slopes=(0.0,), jumps=(), anchor=0.0,
                 validate=True):
        bp = _as_float_tuple(breakpoints)
        sl = _as_float_tuple(slopes)
        jp = tuple((float(a), float(b)) for a, b in jumps)
        if len(sl) != len(bp) + 1:
            raise GraphError(
                f"need {len(bp) + 1} slopes for {len(bp)} breakpoints, got {len(sl)}")
        if validate:
            if any(b2 <= b1 for b1, b2 in zip(bp, bp[1:])):
                raise GraphError("breakpoints must be strictly increasing")
            if any(s < 0.0 for s in sl):
                raise GraphError("slopes must be nonnegative")
            if any(d <= 0.0 for _, d in jp):
                raise GraphError("jump heights must be strictly positive")
            locs = [a for a, _ in jp]
            if len(set(locs)) != len(locs):
                raise GraphError("jump locations must be distinct")
        self.breakpoints = bp
        self.slopes = sl
        self.jumps = tuple(sorted(jp))
        self.anchor = float(anchor)
        self._build_tables()

    def _build_tables(self):
        """Precompute the canonical knot table used by all evaluations."""
        bp = np.asarray(self.breakpoints, dtype=float)
        locs = np.asarray([a for a, _ in self.jumps], dtype=float)
        heights = {a: d for a, d in self.jumps}
        knots = np.unique(np.concatenate([bp, locs]))
        m = knots.size
        # slope of the continuous part on each canonical segment
        # (segment i lies between knots[i-1] and knots[i]; 0 and m are rays)
        seg = np.empty(m + 1)
        sl = np.asarray(self.slopes)
        if m == 0:
            seg[0] = sl[0]
        else:
            reps = np.empty(m + 1)
            reps[0] = knots[0] - 1.0
            reps[-1] = knots[-1] + 1.0
            reps[1:-1] = 0.5 * (knots[:-1] + knots[1:])
            seg[:] = sl[np.searchsorted(bp, reps, side="right")]
        # continuous part at the knots, anchored so base(0) = 0
        base = np.empty(m)
        for i, t in enumerate(knots):
            base[i] = self._pl_integral(0.0, t)
        # cumulative jump mass, normalized so that nothing is counted at 0-
        cum_before = np.zeros(m)   # total height of jumps strictly left of knot i
        total = 0.0
        jump_at = np.zeros(m)
        for i, t in enumerate(knots):
            cum_before[i] = total
            d = heights.get(float(t), 0.0)
            jump_at[i] = d
            total += d
        ref = sum(d for a, d in self.jumps if a < 0.0)
        hminus = self.anchor + base + cum_before - ref
        hplus = hminus + jump_at
        for a in (knots, hminus, hplus, seg):
            a.flags.writeable = False
        self.knots = knots
        self.hminus = hminus
        self.hplus = hplus
        self.seg_slopes = seg

    def _pl_integral(self, a, b):
        """Exact integral of the slope function over [a, b] (signed)."""
        if a == b:
            return 0.0
        sign = 1.0
        if b < a:
            a, b = b, a
            sign = -1.0
        pts = [a] + [t for t in self.breakpoints if a < t < b] + [b]
        bp = self.breakpoints
        total = 0.0
        for lo, hi in zip(pts, pts[1:]):
            mid = 0.5 * (lo + hi)
            k = int(np.searchsorted(bp, mid, side="right"))
            total += self.slopes[k] * (hi - lo)
        return sign * total

    def limits(self, s):
        """Left and right limits ``(h_minus(s), h_plus(s))``, vectorized."""
        s_arr = np.asarray(s, dtype=float)
        scalar = s_arr.ndim == 0
        s_arr = np.atleast_1d(s_arr)
        t = self.knots
        m = t.size
        if m == 0:
            val = self.anchor + self.seg_slopes[0] * s_arr
            lo = hi = val
        else:
            i = np.searchsorted(t, s_arr, side="left")
            at_knot = (i < m) & (t[np.minimum(i, m - 1)] == s_arr)
            # interior of segment i: continue from the right limit at the
            # left knot (or from the left limit at knots[0] on the left ray)
            i_left = np.clip(i - 1, 0, m - 1)
            seg_val = np.where(
                i == 0,
                self.hminus[0] + self.seg_slopes[0] * (s_arr - t[0]),
                self.hplus[i_left] + self.seg_slopes[np.clip(i, 0, m)] * (s_arr - t[i_left]),
            )
            ik = np.minimum(i, m - 1)
            lo = np.where(at_knot, self.hminus[ik], seg_val)
            hi = np.where(at_knot, self.hplus[ik], seg_val)
        if scalar:
            return float(lo[0]), float(hi[0])
        return lo, hi

    def left(self, s):
        return self.limits(s)[0]

    def right(self, s):
        return self.limits(s)[1]

    def shifted(self, delta):
        """The function h + delta (same breaks, slopes and jumps)."""
        return PiecewiseMonotone(self.breakpoints, self.slopes, self.jumps,
                                 self.anchor + float(delta), validate=False)

    @property
    def has_jumps(self):
        return len(self.jumps) > 0

    def __repr__(self):
        return (f"PiecewiseMonotone(breakpoints={self.breakpoints}, "
                f"slopes={self.slopes}, jumps={self.jumps}, anchor={self.anchor})")


def heaviside(location=0.0, height=1.0):
    """Step function: 0 left of ``location``, ``height`` right of it."""
    # the anchor is the left limit at 0; a jump left of 0 already happened there
    anchor = height if location < 0.0 else 0.0
    return PiecewiseMonotone(jumps=((location, height),), anchor=anchor)


def identity():
    return PiecewiseMonotone(slopes=(1.0,))


def constant(c):
    return PiecewiseMonotone(anchor=float(c))


def zero():
    return PiecewiseMonotone()


class ConvexPotential:
    """Exact antiderivative ``j(s) = integral_0^s h`` of a nondecreasing h.

    Stored as per-interval quadratic coefficients over the knot grid
    (knots of h plus the origin), so evaluation is exact up to rounding.
    j is convex, j(0) = 0, and its one-sided slopes at s are h_minus(s)
    and h_plus(s).
    """

    __slots__ = ("h", "knots", "values", "lin", "quad", "left_lin", "left_quad")

    def __init__(self, h: PiecewiseMonotone):
        self.h = h
        knots = np.unique(np.concatenate([h.knots, [0.0]]))
        m = knots.size
        i0 = int(np.searchsorted(knots, 0.0))
        lo_k, hi_k = h.limits(knots)
        seg_slope = np.empty(m + 1)
        if h.knots.size == 0:
            seg_slope[:] = h.seg_slopes[0]
        else:
            reps = np.empty(m + 1)
            reps[0] = knots[0] - 1.0
            reps[-1] = knots[-1] + 1.0
            reps[1:-1] = 0.5 * (knots[:-1] + knots[1:])
            # slope of h at representative points (limits agree off knots)
            seg_slope[:] = [self._slope_at(h, x) for x in reps]
        values = np.zeros(m)
        for i in range(i0, m - 1):
            d = knots[i + 1] - knots[i]
            values[i + 1] = values[i] + hi_k[i] * d + 0.5 * seg_slope[i + 1] * d * d
        for i in range(i0, 0, -1):
            d = knots[i] - knots[i - 1]
            values[i - 1] = values[i] - (lo_k[i] * d - 0.5 * seg_slope[i] * d * d)
        self.knots = knots
        self.values = values
        self.lin = hi_k.copy()          # right slope of j at each knot
        self.quad = 0.5 * seg_slope[1:]  # curvature on segment right of knot i
        self.left_lin = float(lo_k[0])
        self.left_quad = 0.5 * seg_slope[0]
        for a in (self.knots, self.values, self.lin, self.quad):
            a.flags.writeable = False

    @staticmethod
    def _slope_at(h, x):
        bp = h.breakpoints
        k = int(np.searchsorted(np.asarray(bp), x, side="right"))
        return h.slopes[k]

    def __call__(self, s):
        s_arr = np.asarray(s, dtype=float)
        scalar = s_arr.ndim == 0
        s_arr = np.atleast_1d(s_arr)
        k = self.knots
        i = np.searchsorted(k, s_arr, side="right") - 1
        ic = np.clip(i, 0, k.size - 1)
        d = s_arr - k[ic]
        val = np.where(
            i < 0,
            self.values[0] + self.left_lin * (s_arr - k[0])
            + self.left_quad * (s_arr - k[0]) ** 2,
            self.values[ic] + self.lin[ic] * d + self.quad[np.minimum(ic, self.quad.size - 1)] * d * d,
        )
        if scalar:
            return float(val[0])
        return val


class MonotoneGraph:
    """The interval map ``beta(s) = [h_minus(s), h_plus(s)]`` of a
    nondecreasing h, normalized so that 0 is in beta(0).

    The normalizing constant (subtracted from h, to be absorbed into the
    continuous part of the nonlinearity) is recorded as ``shift``.
    Carries the convex potential j with dj = beta and the resolvent
    ``(I + lam*beta)^{-1}``.
    """

    __slots__ = ("h", "shift", "potential")

    def __init__(self, h: PiecewiseMonotone):
        lo0, hi0 = h.limits(0.0)
        shift = min(max(lo0, 0.0), hi0)
        self.h = h.shifted(-shift) if shift != 0.0 else h
        self.shift = float(shift)
        self.potential = ConvexPotential(self.h)

    def interval(self, s):
        """The closed interval beta(s) as a ``(low, high)`` pair."""
        return self.h.limits(s)

    def membership_distance(self, s, v):
        """Distance of v to the interval beta(s) (0 when inside), vectorized."""
        lo, hi = self.h.limits(s)
        return np.maximum(np.maximum(lo - v, v - hi), 0.0)

    def member(self, s, v, tol=0.0):
        if tol < 0.0:
            raise ValueError("tol must be nonnegative")
        return bool(np.all(self.membership_distance(s, v) <= tol))

    def resolvent(self, lam, y):
        """Solve ``x + lam*beta(x) contains y`` for the unique x.

        ``lam`` may be a positive scalar or an array broadcastable against
        ``y``.  The monotone map x -> x + lam*h(x) is inverted by bisecting
        the precomputed knot table (the interleaved sequence of left/right
        images of the knots is increasing) and finishing with the exact
        affine solve on the located piece; when y lands inside the image
        of a jump, the jump location itself is returned.
        """
        lam_arr = np.asarray(lam, dtype=float)
        if np.any(lam_arr <= 0.0):
            raise ValueError("resolvent parameter must be positive")
        y_arr = np.asarray(y, dtype=float)
        scalar = y_arr.ndim == 0 and lam_arr.ndim == 0
        y_arr, lam_b = np.broadcast_arrays(np.atleast_1d(y_arr), lam_arr)
        h = self.h
        t = h.knots
        m = t.size
        if m == 0:
            x = (y_arr - lam_b * h.anchor) / (1.0 + lam_b * h.seg_slopes[0])
        else:
            lam_col = lam_b[..., None]
            phi_plus = t + lam_col * h.hplus    # (..., m), increasing in k
            phi_minus = t + lam_col * h.hminus
            pos = np.sum(phi_plus < y_arr[..., None], axis=-1)
            posc = np.minimum(pos, m - 1)
            take = np.take_along_axis
            pm = take(phi_minus, posc[..., None], axis=-1)[..., 0]
            pinned = (pos < m) & (pm <= y_arr)
            # affine piece: segment `pos` starts at knot pos-1 (left ray if 0)
            pl = np.maximum(pos - 1, 0)
            start = t[pl]
            img_at_start = np.where(
                pos == 0,
                t[0] + lam_b * h.hminus[0],
                take(phi_plus, pl[..., None], axis=-1)[..., 0],
            )
            sl = h.seg_slopes[pos]
            x_free = start + (y_arr - img_at_start) / (1.0 + lam_b * sl)
            x = np.where(pinned, t[posc], x_free)
        if scalar:
            return float(x[0])
        return x


# -- flat operation surface (thin wrappers over the classes) -----------------

def eval_limits(h: PiecewiseMonotone, s):
    """``(h_minus(s), h_plus(s))`` from the exact representation."""
    return h.limits(s)


def graph_interval(graph: MonotoneGraph, s):
    return graph.interval(s)


def potential(graph: MonotoneGraph, s):
    """Exact value of ``integral_0^s h`` for the graph's normalized h."""
    return graph.potential(s)


def resolvent(graph: MonotoneGraph, lam, y):
    return graph.resolvent(lam, y)


def member(graph: MonotoneGraph, s, v, tol=0.0):
    return graph.member(s, v, tol)
