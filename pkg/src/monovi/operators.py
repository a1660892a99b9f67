"""Divergence-form flux functions a(x, xi) with sampled hypothesis checks.

An operator is described by its flux, the exponent p, a coercivity constant
(lower bound of a.xi against |xi|^p), a growth constant, and an optional
scalar potential whose xi-gradient is the flux.  The structural hypotheses
are universally quantified, so shipped operators are certified by randomized
sampling with reported worst-case margins rather than symbolically.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

__all__ = ["OperatorSpec", "ValidationReport", "plaplacian", "validate"]


class OperatorError(ValueError):
    """Invalid operator parameters."""


@dataclass(frozen=True)
class OperatorSpec:
    """A flux a(x, xi) together with its structural constants.

    ``flux`` and ``potential`` are vectorized over leading axes: they take
    points ``x`` of shape (n, dim) and gradients ``xi`` of shape (n, dim)
    and return (n, dim) respectively (n,).  ``k`` is the spatial offset in
    the growth bound (None means identically zero).  ``linear`` marks
    fluxes of the form c(x)*xi, which admit a direct sparse solve.
    """

    name: str
    p: float
    lambda_coerc: float
    alpha_growth: float
    flux: Callable[[np.ndarray, np.ndarray], np.ndarray]
    potential: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None
    k: Optional[Callable[[np.ndarray], np.ndarray]] = None
    weight: Optional[Callable[[np.ndarray], np.ndarray]] = None
    linear: bool = field(default=False)

    @property
    def p_conj(self):
        return self.p / (self.p - 1.0)

    def k_values(self, x):
        if self.k is None:
            return np.zeros(x.shape[0])
        return np.asarray(self.k(x), dtype=float)


@dataclass(frozen=True)
class ValidationReport:
    """Worst-case margins of the sampled structural checks.

    Margins are signed slack: nonnegative means the hypothesis held on
    every sample.  ``potential_rel_err`` is the worst relative mismatch of
    a central finite difference of the potential against the flux (NaN if
    no potential is attached).
    """

    samples: int
    coercivity_margin: float
    monotonicity_margin: float
    growth_margin: float
    potential_rel_err: float
    passed: bool

    def __str__(self):
        status = "pass" if self.passed else "FAIL"
        return (f"operator validation [{status}] over {self.samples} samples: "
                f"coercivity {self.coercivity_margin:.3e}, "
                f"monotonicity {self.monotonicity_margin:.3e}, "
                f"growth {self.growth_margin:.3e}, "
                f"potential FD err {self.potential_rel_err:.3e}")


def plaplacian(p, weight=None, weight_bounds=None):
    """The p-Laplacian flux ``c(x) |xi|^{p-2} xi`` (c = 1 if no weight).

    Parameters
    ----------
    p : float
        Exponent, must exceed 1.
    weight : callable, optional
        c(x) evaluated on points of shape (n, dim); must be bounded between
        positive constants.
    weight_bounds : (float, float), optional
        Known (inf c, sup c); required together with ``weight``.

    The degenerate point xi = 0 is assigned flux 0 (continuous extension,
    relevant for p < 2).
    """
    p = float(p)
    if p <= 1.0:
        raise OperatorError(f"exponent p must exceed 1, got {p}")
    if weight is not None:
        if weight_bounds is None:
            raise OperatorError("weight_bounds (inf c, sup c) required with a weight")
        c_lo, c_hi = map(float, weight_bounds)
        if not (0.0 < c_lo <= c_hi):
            raise OperatorError("weight bounds must satisfy 0 < inf c <= sup c")
    else:
        c_lo = c_hi = 1.0

    def _c(x):
        if weight is None:
            return np.ones(x.shape[0])
        return np.asarray(weight(x), dtype=float)

    def flux(x, xi):
        xi = np.atleast_2d(np.asarray(xi, dtype=float))
        norms = np.linalg.norm(xi, axis=-1)
        if p == 2.0:
            scale = np.ones_like(norms)
        else:
            safe = np.where(norms > 0.0, norms, 1.0)
            scale = np.where(norms > 0.0, safe ** (p - 2.0), 0.0)
        return (_c(x) * scale)[:, None] * xi

    def pot(x, xi):
        xi = np.atleast_2d(np.asarray(xi, dtype=float))
        norms = np.linalg.norm(xi, axis=-1)
        return _c(x) * norms ** p / p

    name = "p_laplacian" if weight is None else "weighted_p_laplacian"
    return OperatorSpec(
        name=name, p=p, lambda_coerc=c_lo, alpha_growth=c_hi,
        flux=flux, potential=pot, k=None,
        weight=None if weight is None else _c,
        linear=(p == 2.0),
    )


def validate(spec: OperatorSpec, sample_count, seed, dim=2, box=2.0, tol=1e-10):
    """Sampled certification of coercivity, strict monotonicity and growth.

    Draws ``sample_count`` random (x, xi, eta) triples with x in the unit
    cube and gradients in [-box, box]^dim, and reports the worst-case
    margin of each hypothesis.  Monotonicity samples with
    ``|xi - eta| < 1e-12`` are skipped (the strict inequality is vacuous
    there).  When a potential is attached, central finite differences of it
    are compared against the flux at non-degenerate points.
    """
    if sample_count < 1:
        raise ValueError("sample_count must be at least 1")
    rng = np.random.default_rng(seed)
    n = int(sample_count)
    x = rng.uniform(0.0, 1.0, size=(n, dim))
    xi = rng.uniform(-box, box, size=(n, dim))
    eta = rng.uniform(-box, box, size=(n, dim))

    a_xi = spec.flux(x, xi)
    norms = np.linalg.norm(xi, axis=-1)
    coerc = np.min(np.sum(a_xi * xi, axis=-1) - spec.lambda_coerc * norms ** spec.p)

    a_eta = spec.flux(x, eta)
    diff = np.sum((a_xi - a_eta) * (xi - eta), axis=-1)
    keep = np.linalg.norm(xi - eta, axis=-1) >= 1e-12
    mono = float(np.min(diff[keep])) if np.any(keep) else np.inf

    growth = np.min(
        spec.alpha_growth * (spec.k_values(x) + norms ** (spec.p - 1.0))
        - np.linalg.norm(a_xi, axis=-1))

    pot_err = float("nan")
    if spec.potential is not None:
        nd = min(n, 64)
        xs, xis = x[:nd], xi[:nd]
        # keep clear of the degenerate origin where the flux is not smooth
        small = np.linalg.norm(xis, axis=-1) < 0.1
        xis = np.where(small[:, None], xis + 0.5, xis)
        ref = np.linalg.norm(spec.flux(xs, xis), axis=-1)
        delta = 1e-6
        worst = 0.0
        for d in range(dim):
            step = np.zeros((1, dim))
            step[0, d] = delta
            fd = (spec.potential(xs, xis + step) - spec.potential(xs, xis - step)) / (2 * delta)
            err = np.abs(fd - spec.flux(xs, xis)[:, d]) / np.maximum(ref, 1e-12)
            worst = max(worst, float(np.max(err)))
        pot_err = worst

    passed = (coerc >= -tol and mono > 0.0 and growth >= -tol
              and (np.isnan(pot_err) or pot_err <= 1e-5))
    return ValidationReport(
        samples=n,
        coercivity_margin=float(coerc),
        monotonicity_margin=float(mono),
        growth_margin=float(growth),
        potential_rel_err=pot_err,
        passed=bool(passed),
    )
