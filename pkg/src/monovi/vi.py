"""Inner solver: one convex variational inequality with a frozen load.

Given a load field z, solve

    find u, zero on the boundary:
    <A u, w - u> + J(w) - J(u) >= <b, w - u>   for all admissible w,

with b the lumped load induced by g(z).  Equivalently, minimize
F(u) = Phi(u) + J(u) - <b, u>, which is what both solve paths do:

* ``active_set`` (linear fluxes): the flux stiffness is a fixed sparse
  matrix, and the scalar graph is piecewise affine with finitely many
  jumps, so each node is either on an affine piece or pinned at a jump
  location.  Over-relaxed exact nodal sweeps drive the iterate toward the
  right branch pattern; freezing that pattern and factorizing the
  resulting sparse system finishes the solve (often after the very first
  attempt).  A forward-backward fallback covers pathologies.

* ``forward_backward`` (any flux with a scalar potential): proximal
  gradient steps in the lumped-mass metric with backtracking line search
  and a monotone accelerated update, so the objective never increases.
  The backward step is the exact nodal resolvent (the lumped jump
  functional is separable).

Both paths stop on the nodal fixed-point residual of a unit-step proximal
map and certify the result by extracting the selection v from the
stationarity identity and measuring its distance to the graph.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .assembly import (DiscreteProblem, UnsupportedOperatorError, apply_A,
                       energy_Phi, functional_J, load_from)
from .meshing import gradients

__all__ = ["Tolerances", "ViSolution", "SolverError", "solve_vi",
           "prox_step", "check_T_monotone"]


@dataclass(frozen=True)
class Tolerances:
    """Solver tolerances; ``tied(dim, outer)`` derives the inner ones."""

    outer: float = 1e-8
    stat: float = 1e-9
    mono: float = 1e-8
    member: float = 1e-8
    prox: float = 1e-12
    unique: float = 1e-8
    max_outer: int = 200
    max_inner: int = 500_000

    @classmethod
    def defaults(cls, dim):
        stat = 1e-9 if dim == 1 else 1e-7
        return cls(outer=100 * stat, stat=stat, mono=10 * stat, member=10 * stat)

    @classmethod
    def tied(cls, dim, outer=None, max_outer=200, max_inner=500_000):
        """Outer sup-norm tolerance with inner tolerances tied to it."""
        if outer is None:
            outer = 1e-8 if dim == 1 else 1e-6
        stat = outer / 100.0
        return cls(outer=outer, stat=stat, mono=10 * stat, member=10 * stat,
                   max_outer=max_outer, max_inner=max_inner)


class SolverError(RuntimeError):
    def __init__(self, message, residual_history=None):
        super().__init__(message)
        self.residual_history = list(residual_history or [])


@dataclass
class ViSolution:
    """Solution of one inner variational inequality with its certificate."""

    u: np.ndarray
    v: np.ndarray
    residual: float
    inner_iterations: int
    method: str
    energy_trace: list = field(default_factory=list)
    residual_trace: list = field(default_factory=list)
    membership_max: float = 0.0
    energy_gap: float = 0.0       # <b,u> - <Au,u>, nonnegative up to slack
    seminorm_p: float = 0.0       # sum_e |grad u|^p |e|
    converged: bool = True


def _reference_scale(mesh):
    """Power-iteration estimate of the largest eigenvalue of the
    mass-scaled linear stiffness (step-size heuristic only)."""
    n = mesh.n_nodes
    v = np.zeros(n)
    idx = mesh.interior
    v[idx] = np.where(np.arange(idx.size) % 2 == 0, 1.0, -1.0)
    lam = 1.0
    for _ in range(40):
        g = gradients(mesh, v)
        contrib = np.einsum("ed,eld->el", g * mesh.measures[:, None], mesh.grads)
        kv = np.zeros(n)
        np.add.at(kv, mesh.elements, contrib)
        w = np.zeros(n)
        w[idx] = kv[idx] / mesh.lumped_mass[idx]
        nrm = math.sqrt(float(np.dot(w * mesh.lumped_mass, w)))
        if nrm == 0.0:
            break
        lam = nrm
        v = w / nrm
    return max(lam, 1e-12)


def prox_step(problem: DiscreteProblem, u, tau, b):
    """One forward-backward step: gradient step in the lumped-mass metric,
    then the exact nodal resolvent; Dirichlet nodes stay zero."""
    if tau <= 0.0:
        raise ValueError("step size must be positive")
    mesh = problem.mesh
    Au = apply_A(problem, u)
    return _prox_from_residual(problem, u, tau, Au - b)


def _prox_from_residual(problem, u, tau, grad_full):
    mesh = problem.mesh
    idx = mesh.interior
    y = u[idx] - tau * grad_full[idx] / mesh.lumped_mass[idx]
    out = np.zeros(mesh.n_nodes)
    out[idx] = problem.graph.resolvent(tau, y)
    return out


def _fixed_point_residual(problem, u, b, Au=None):
    if Au is None:
        Au = apply_A(problem, u)
    return float(np.max(np.abs(u - _prox_from_residual(problem, u, 1.0, Au - b))))


def _objective(problem, u, b):
    return energy_Phi(problem, u) + functional_J(problem, u) - float(np.dot(b, u))


# ---------------------------------------------------------------------------
# direct path for linear fluxes

def assemble_stiffness(problem: DiscreteProblem):
    """Sparse stiffness of a linear flux: K[i,j] = sum_e |e| a(x_e, grad
    phi_j) . grad phi_i.  Exact for fluxes linear in the gradient."""
    mesh = problem.mesh
    ne, nl, d = mesh.grads.shape
    local = np.empty((ne, nl, nl))
    for k in range(nl):
        a_k = problem.op.flux(mesh.centers, mesh.grads[:, k, :])
        local[:, :, k] = np.einsum("ed,eld->el", a_k * mesh.measures[:, None],
                                   mesh.grads)
    rows = np.repeat(mesh.elements, nl, axis=1).ravel()
    cols = np.tile(mesh.elements, (1, nl)).ravel()
    K = sp.coo_matrix((local.ravel(), (rows, cols)),
                      shape=(mesh.n_nodes, mesh.n_nodes))
    return K.tocsr()


def _solve_active_set(problem, b, u_init, tols, max_sweeps=40000):
    """Direct path for linear fluxes: over-relaxed exact nodal sweeps with a
    sparse branch solve as finisher.

    Each interior node lives on a branch of the scalar graph (an affine
    piece of h, or pinned at a jump location).  Relaxation sweeps minimize
    the convex objective coordinate-wise through the exact scalar
    resolvent (over-relaxed for speed, with a descent safeguard that drops
    the relaxation factor back to plain sweeps).  Periodically the branch
    pattern read off the current iterate is frozen and the resulting
    linear system is solved by sparse factorization; the candidate is
    accepted as soon as its own fixed-point residual meets the target, so
    easy patterns finish after a single factorization.
    """
    mesh = problem.mesh
    h = problem.graph.h
    idx = mesh.interior
    mass = mesh.lumped_mass
    K = assemble_stiffness(problem)
    t = h.knots
    m = t.size
    hminus, hplus, seg = h.hminus, h.hplus, h.seg_slopes
    jump_height = hplus - hminus if m else np.zeros(0)
    # affine piece j: h(s) = alpha[j] + seg[j]*s on segment j
    alpha = np.empty(m + 1)
    if m == 0:
        alpha[0] = h.anchor
    else:
        alpha[0] = hminus[0] - seg[0] * t[0]
        alpha[1:] = hplus - seg[1:] * t

    def objective(u):
        # symmetric linear flux: the flux energy is the stiffness quadratic
        return (0.5 * float(u @ (K @ u)) + functional_J(problem, u)
                - float(np.dot(b, u)))

    def branch_pattern(u):
        """Branch of each interior node containing its current value
        (relaxation pins nodes exactly onto jump locations, so equality
        against a knot is meaningful)."""
        if m == 0:
            return np.zeros(idx.size, dtype=np.int64)
        ui = u[idx]
        i = np.searchsorted(t, ui, side="left")
        ic = np.minimum(i, m - 1)
        pinned = (i < m) & (t[ic] == ui) & (jump_height[ic] > 0.0)
        return np.where(pinned, 2 * ic + 1, 2 * i)

    def branch_solve(state):
        pinned = state % 2 == 1
        piece = state // 2
        free = ~pinned
        u_new = np.zeros(mesh.n_nodes)
        if m:
            u_new[idx[pinned]] = t[piece[pinned]]
        free_nodes = idx[free]
        if free_nodes.size:
            sigma = seg[piece[free]]
            al = alpha[piece[free]]
            rhs = (b[free_nodes] - mass[free_nodes] * al
                   - K[free_nodes, :] @ u_new)
            A_ff = (K[free_nodes, :][:, free_nodes]
                    + sp.diags(mass[free_nodes] * sigma)).tocsc()
            u_new[free_nodes] = spla.splu(A_ff).solve(rhs)
        return u_new

    relax = _NodalGaussSeidel(problem, K, b)
    trace = []
    residual_log = []
    n_sweeps = 0

    def acceptable(cand):
        """Candidate passes both the fixed-point residual and the nodal
        membership certificate (the latter is discontinuous at jump
        locations, so residual alone is not enough)."""
        Au = apply_A(problem, cand)
        res = _fixed_point_residual(problem, cand, b, Au)
        residual_log.append(res)
        if res > tols.stat:
            return False
        v = (b[idx] - Au[idx]) / mass[idx]
        dist = problem.graph.membership_distance(cand[idx], v)
        return bool(np.max(dist) <= tols.member) if dist.size else True

    def finish_attempt(u):
        nonlocal n_sweeps
        cand = branch_solve(branch_pattern(u))
        n_sweeps += 1
        if acceptable(cand):
            return cand
        if m:
            # a free node can land within rounding of a jump location,
            # which poisons the membership check; snap and retry
            snapped = cand.copy()
            ci = snapped[idx]
            k = np.searchsorted(t, ci)
            kc = np.minimum(k, m - 1)
            for kk in (kc, np.maximum(kc - 1, 0)):
                near = np.abs(ci - t[kk]) <= 1e-12 * (1.0 + np.abs(t[kk]))
                ci = np.where(near & (jump_height[kk] > 0.0), t[kk], ci)
            snapped[idx] = ci
            if not np.array_equal(snapped, cand) and acceptable(snapped):
                return snapped
        return None

    u = u_init.copy()
    cand = finish_attempt(u)
    if cand is not None:
        if problem.op.potential is not None:
            trace.append(_objective(problem, cand, b))
        return cand, n_sweeps, trace, residual_log, True

    omega = 1.0
    F_u = objective(u)
    check = 8
    since = 0
    while n_sweeps < max_sweeps:
        relax.sweep(u, omega)
        n_sweeps += 1
        since += 1
        if since >= check:
            since = 0
            F_new = objective(u)
            if problem.op.potential is not None:
                trace.append(F_new)
            if F_new > F_u + 1e-14 * (1.0 + abs(F_u)):
                omega = 1.0          # safeguard: plain sweeps always descend
            elif omega < 1.9:
                omega = min(1.9, omega + 0.15)
            F_u = F_new
            cand = finish_attempt(u)
            if cand is None and acceptable(u):
                cand = u.copy()
            if cand is not None:
                if problem.op.potential is not None:
                    trace.append(_objective(problem, cand, b))
                return cand, n_sweeps, trace, residual_log, True
    return u, n_sweeps, trace, residual_log, False


class _NodalGaussSeidel:
    """Exact nodal relaxation for a fixed sparse stiffness and graph: each
    visit minimizes the objective in that coordinate via the scalar
    resolvent.  Per-node resolvent tables are precomputed as plain floats,
    so one sweep is a cheap pure-Python loop."""

    def __init__(self, problem, K, b):
        mesh = problem.mesh
        self.idx = mesh.interior.tolist()
        self.b = b
        Kc = K.tocsr()
        self.indptr = Kc.indptr
        self.indices = Kc.indices
        self.data = Kc.data
        diag = Kc.diagonal()
        h = problem.graph.h
        t = h.knots
        self.m = t.size
        self.t = t.tolist()
        self.seg = h.seg_slopes.tolist()
        self.anchor = h.anchor
        mass = mesh.lumped_mass
        # per-node resolvent parameter and knot images under s + lam*h(s)
        self.lam = {}
        self.phi_lo = {}
        self.phi_hi = {}
        for i in self.idx:
            lam = float(mass[i] / diag[i])
            self.lam[i] = lam
            self.phi_lo[i] = [float(t[k] + lam * h.hminus[k]) for k in range(self.m)]
            self.phi_hi[i] = [float(t[k] + lam * h.hplus[k]) for k in range(self.m)]
        self.diag = diag

    def _resolve(self, i, y):
        m = self.m
        if m == 0:
            lam = self.lam[i]
            return (y - lam * self.anchor) / (1.0 + lam * self.seg[0])
        lo = self.phi_lo[i]
        hi = self.phi_hi[i]
        lam = self.lam[i]
        for k in range(m):
            if y <= hi[k]:
                if y >= lo[k]:
                    return self.t[k]
                start_img = hi[k - 1] if k > 0 else lo[0]
                start = self.t[k - 1] if k > 0 else self.t[0]
                if k == 0:
                    return start + (y - lo[0]) / (1.0 + lam * self.seg[0])
                return start + (y - start_img) / (1.0 + lam * self.seg[k])
        return self.t[m - 1] + (y - hi[m - 1]) / (1.0 + lam * self.seg[m])

    def sweep(self, u, omega=1.0):
        """One in-place sweep; ``omega`` over-relaxes the exact nodal
        minimizer (1 = plain sweep, guaranteed descent).

        Relaxation never moves a node onto or across a jump location with
        anything but the exact knot value: pinning must stay bit-exact for
        the branch pattern and the membership certificate to make sense.
        """
        b = self.b
        knots = self.t
        indptr, indices, data = self.indptr, self.indices, self.data
        for i in self.idx:
            lo, hi = indptr[i], indptr[i + 1]
            row = data[lo:hi]
            cols = indices[lo:hi]
            ui = u[i]
            s = b[i] - float(row @ u[cols]) + self.diag[i] * ui
            target = self._resolve(i, s / self.diag[i])
            if omega == 1.0 or target in knots:
                u[i] = target
                continue
            relaxed = ui + omega * (target - ui)
            if relaxed >= ui:
                for tk in knots:                 # first knot crossed upward
                    if ui < tk < relaxed:
                        relaxed = tk
                        break
            else:
                for tk in reversed(knots):       # first knot crossed downward
                    if relaxed < tk < ui:
                        relaxed = tk
                        break
            u[i] = relaxed
        return u


# ---------------------------------------------------------------------------
# forward-backward path

def _solve_forward_backward(problem, b, u_init, tols):
    mesh = problem.mesh
    mass = mesh.lumped_mass
    L = _reference_scale(mesh)
    tau = 1.0 / L
    tau_max = 1e4 / L

    x = u_init.copy()
    Ax = apply_A(problem, x)
    F_x = _objective(problem, x, b)
    trace = [F_x]
    residuals = []
    y = x.copy()
    t_k = 1.0
    check_period = 4
    # momentum restarts on a doubling schedule: frequent early restarts give
    # near-linear convergence on locally quadratic problems, while the
    # growing period leaves degenerate (non-strongly-convex) problems with
    # the plain accelerated behaviour
    restart_period = 64
    since_restart = 0

    for it in range(tols.max_inner):
        if it % check_period == 0:
            res = _fixed_point_residual(problem, x, b, Ax)
            residuals.append(res)
            if res <= tols.stat:
                return x, it, trace, residuals, True
        if since_restart >= restart_period:
            t_k = 1.0
            y = x.copy()
            restart_period *= 2
            since_restart = 0
        since_restart += 1
        Ay = apply_A(problem, y)
        Phi_y = energy_Phi(problem, y)
        grad = Ay - b
        while True:
            z = _prox_from_residual(problem, y, tau, grad)
            diff = z - y
            Phi_z = energy_Phi(problem, z)
            quad = (Phi_y + float(np.dot(Ay, diff))
                    + float(np.dot(mass * diff, diff)) / (2.0 * tau))
            if Phi_z <= quad + 1e-14 * (1.0 + abs(Phi_y)):
                break
            tau *= 0.5
            if tau < 1e-18 / L:
                raise SolverError(
                    "backtracking step size underflow in forward-backward solve",
                    residual_history=residuals)
        F_z = Phi_z + functional_J(problem, z) - float(np.dot(b, z))
        t_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t_k * t_k))
        x_prev = x
        if F_z <= F_x:
            x = z
            F_x = F_z
            Ax = apply_A(problem, x)
        # else keep x: the objective never increases along accepted iterates
        y = x + (t_k / t_next) * (z - x) + ((t_k - 1.0) / t_next) * (x - x_prev)
        y[mesh.boundary] = 0.0
        trace.append(F_x)
        t_k = t_next
        tau = min(tau * 1.2, tau_max)
    return x, tols.max_inner, trace, residuals, False


# ---------------------------------------------------------------------------

def solve_vi(problem: DiscreteProblem, z, u_init=None, tols=None):
    """Solve the inner variational inequality for the load induced by z.

    Returns a :class:`ViSolution` whose selection v is extracted from the
    stationarity identity v = (b - A u)/m on interior nodes and certified
    against the graph.  The result does not depend on ``u_init`` beyond
    the solver tolerance (the flux is strictly monotone).

    Raises
    ------
    UnsupportedOperatorError
        If the operator is neither linear nor equipped with a potential.
    SolverError
        On iteration-budget exhaustion or a failed certificate.
    """
    mesh = problem.mesh
    if tols is None:
        tols = Tolerances.defaults(mesh.dim)
    z = np.asarray(z, dtype=float)
    if not np.all(np.isfinite(z)):
        raise ValueError("load field z must be finite")
    b = load_from(problem, z)
    if u_init is None:
        u0 = np.zeros(mesh.n_nodes)
    else:
        u0 = np.asarray(u_init, dtype=float).copy()
        u0[mesh.boundary] = 0.0

    if problem.op.linear:
        u, iters, trace, residuals, ok = _solve_active_set(problem, b, u0, tols)
        method = "active_set"
        if not ok:
            u, extra, trace, fb_res, ok = _solve_forward_backward(
                problem, b, u, tols)
            iters += extra
            residuals = residuals + fb_res
            method = "active_set+forward_backward"
    elif problem.op.potential is not None:
        u, iters, trace, residuals, ok = _solve_forward_backward(
            problem, b, u0, tols)
        method = "forward_backward"
    else:
        raise UnsupportedOperatorError(
            f"operator {problem.op.name!r} is neither linear nor variational; "
            "no solve path is available for it")

    Au = apply_A(problem, u)
    res = _fixed_point_residual(problem, u, b, Au)
    if not ok and res > tols.stat:
        raise SolverError(
            f"inner solve did not reach residual {tols.stat:g} "
            f"(reached {res:g} after {iters} iterations)",
            residual_history=residuals)

    idx = mesh.interior
    v = np.zeros(mesh.n_nodes)
    v[idx] = (b[idx] - Au[idx]) / mesh.lumped_mass[idx]
    member_dist = float(np.max(problem.graph.membership_distance(u[idx], v[idx])))
    bu = float(np.dot(b, u))
    gap = bu - float(np.dot(Au, u))
    g = gradients(mesh, u)
    seminorm = float(np.dot(np.linalg.norm(g, axis=1) ** problem.op.p,
                            mesh.measures))
    scale = 1.0 + abs(bu)
    if member_dist > tols.member:
        raise SolverError(
            f"selection certificate failed: membership distance {member_dist:g} "
            f"exceeds {tols.member:g}")
    if gap < -(1e-10 + 10.0 * tols.stat) * scale:
        raise SolverError(f"energy bound violated: <Au,u> - <b,u> = {-gap:g}")
    if problem.op.lambda_coerc * seminorm > bu + (1e-10 + 10.0 * tols.stat) * scale:
        raise SolverError("coercivity bound violated on returned solution")
    return ViSolution(
        u=u, v=v, residual=res, inner_iterations=iters, method=method,
        energy_trace=trace, residual_trace=residuals,
        membership_max=member_dist, energy_gap=gap,
        seminorm_p=seminorm, converged=True)


def check_T_monotone(problem: DiscreteProblem, z1, z2, tol=1e-8, tols=None):
    """True iff the inner map preserves the nodal order of z1 <= z2."""
    z1 = np.asarray(z1, dtype=float)
    z2 = np.asarray(z2, dtype=float)
    if not np.all(z1 <= z2 + 1e-15):
        raise ValueError("check_T_monotone requires z1 <= z2 nodally")
    u1 = solve_vi(problem, z1, tols=tols).u
    u2 = solve_vi(problem, z2, tols=tols).u
    return bool(np.all(u1 <= u2 + tol))
