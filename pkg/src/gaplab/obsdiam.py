"""Separation distance, observable diameter, and Gaussian comparison checks.

On the line, with the piecewise-linear CDF semantics used throughout:

* the separation distance at mass level ``kappa`` is attained by opposing
  half-lines, so ``Sep = max(q(1-kappa) - q(kappa), 0)``;
* the observable diameter at ``kappa`` equals the length of the smallest
  window carrying mass ``1-kappa``, because a 1-Lipschitz image can only
  shrink windows while preserving mass.

Both facts are guarded by brute-force oracles in the test suite.  The
window minimum is computed exactly: between consecutive knot events the
window length is linear in the left mass level, so scanning the events
suffices.

The converse diagnostics quantify how close a measure with almost maximal
separation is to the Gaussian: uniform potential closeness on the witness
interval and on a larger window, the variance deficit, and the spectral
gap deficit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    InvalidArgumentError,
    NumericalFailureError,
    ResolutionError,
)
from .measures import (
    Measure1D,
    SetOnGrid,
    SQRT_2PI,
    center_median,
    gaussian_cdf,
    sigma_inverse,
)
from .spectrum import decompose
from .transport import Distribution1D, _as_distribution


@dataclass(frozen=True)
class SepReport:
    """Separation distance next to its Gaussian ceiling."""

    kappa: float
    sep: float
    gaussian_sep: float

    @property
    def eta(self) -> float:
        return self.gaussian_sep - self.sep


def separation(m, kappa: float) -> SepReport:
    """Largest distance between two sets of mass >= kappa each."""
    if not (0.0 < kappa < 0.5):
        raise InvalidArgumentError(f"kappa must lie in (0, 1/2), got {kappa}")
    dist = _as_distribution(m)
    sep = max(float(dist.quantile(1.0 - kappa) - dist.quantile(kappa)), 0.0)
    return SepReport(kappa, sep, 2.0 * abs(sigma_inverse(kappa)))


def minimal_mass_window(dist: Distribution1D, kappa: float) -> float:
    """Exact minimal length of an interval with mass >= 1 - kappa."""
    if not (0.0 < kappa < 1.0):
        raise InvalidArgumentError(f"kappa must lie in (0, 1), got {kappa}")
    target = 1.0 - kappa
    P = dist.levels
    events = np.concatenate([P[P <= kappa], P[P >= target] - target, [0.0, kappa]])
    events = np.clip(np.unique(events), 0.0, kappa)
    lengths = dist.quantile(events + target) - dist.quantile(events)
    return float(lengths.min())


def observable_diameter(m, kappa: float, grid_tolerance: float = 1e-9,
                        strict: bool = True) -> dict:
    """Observable diameter and its separation upper bound.

    ``dobs`` is the minimal mass-(1-kappa) window length; ``sep_upper`` the
    separation distance at level ``kappa/2``, which dominates it.
    """
    if not (0.0 < kappa < 1.0):
        raise InvalidArgumentError(f"kappa must lie in (0, 1), got {kappa}")
    dist = _as_distribution(m)
    dobs = minimal_mass_window(dist, kappa)
    sep_upper = max(float(dist.quantile(1.0 - kappa / 2.0)
                          - dist.quantile(kappa / 2.0)), 0.0)
    ok = dobs <= sep_upper + grid_tolerance
    if strict and not ok:
        raise NumericalFailureError(
            f"window length {dobs:.6g} exceeds separation bound {sep_upper:.6g}"
        )
    return {"dobs": dobs, "sep_upper": sep_upper, "pass": bool(ok)}


def isoperimetric_check(m: Measure1D, tolerance: float = 1e-3,
                        strict: bool = True) -> dict:
    """Half-line isoperimetric profile against the Gaussian profile.

    For ``E = (-inf, x]`` the boundary density must dominate
    ``exp(-a_E^2/2)/sqrt(2 pi)`` with ``a_E`` the Gaussian quantile of the
    mass of E; the minimum profile ratio over interior mass levels is
    reported and must stay above ``1 - tolerance``.

    The quantile composition amplifies the O(h^2) interior-endpoint bias
    of the cumulative trapezoid rule, so the mass levels are refined with
    the Euler-Maclaurin endpoint correction before inverting.
    """
    h = m.grid.h
    rho_prime = np.gradient(m.density, h)
    cdf = m.cdf - (h * h / 12.0) * (rho_prime - rho_prime[0])
    sel = (cdf >= 1e-6) & (cdf <= 1.0 - 1e-6)
    a_e = np.array([sigma_inverse(p) for p in cdf[sel]])
    gaussian_profile = np.exp(-0.5 * a_e * a_e) / SQRT_2PI
    ratio = m.density[sel] / gaussian_profile
    worst = float(ratio.min())
    ok = worst >= 1.0 - tolerance
    if strict and not ok:
        raise NumericalFailureError(f"profile ratio dipped to {worst:.6g}")
    return {"min_profile_ratio": worst, "pass": bool(ok)}


def neighborhood_growth_check(m: Measure1D, region: SetOnGrid, t: float,
                              tolerance: float = 1e-9,
                              strict: bool = True) -> dict:
    """Integrated isoperimetry: mass of the t-neighborhood vs the Gaussian law.

    ``lhs = m(V_t(A))`` with the neighborhood widened to whole cells (so the
    computed mass only overshoots, never fakes a pass of the reverse kind);
    ``rhs = sigma(sigma^{-1}(m(A)) + t)``.
    """
    if t < 0:
        raise InvalidArgumentError("t must be >= 0")
    if region.is_empty() or region.covers_grid():
        raise InvalidArgumentError("region must have mass strictly inside (0, 1)")
    mass = region.mass(m)
    if not (0.0 < mass < 1.0):
        raise InvalidArgumentError(f"region mass {mass:.3g} must lie in (0, 1)")
    lhs = region.dilate(t).mass(m)
    rhs = float(gaussian_cdf(sigma_inverse(mass) + t))
    ok = lhs >= rhs - tolerance
    if strict and not ok:
        raise NumericalFailureError(
            f"neighborhood mass {lhs:.9g} fell below the Gaussian floor {rhs:.9g}"
        )
    return {"lhs": lhs, "rhs": rhs, "pass": bool(ok)}


@dataclass(frozen=True)
class ConverseDiagnostics:
    """Closeness-to-Gaussian diagnostics driven by the separation deficit."""

    kappa: float
    eta: float
    sep: float
    gaussian_sep: float
    a_minus: float
    a_plus: float
    alpha_minus: float
    alpha_plus: float
    sup_phi_dev_core: float
    sup_phi_dev_extended: float
    a_eta: float
    b_eta: float
    var_deficit: float
    gap_deficit: float
    uppboundmass_checks: tuple = field(repr=False, default=())

    @property
    def witness_intervals(self) -> tuple:
        return ((-math.inf, self.a_minus), (self.a_plus, math.inf))


def converse_diagnostics(m: Measure1D, kappa: float,
                         eta_floor: float = 1e-12) -> ConverseDiagnostics:
    """Potential, variance, and spectral-gap deficits after median centering.

    Witness sets are the half-lines through the ``kappa/2`` quantiles.  The
    extended window ``[-b_eta, b_eta]`` is the largest symmetric interval,
    capped at ``a_eta = |sigma^{-1}(sqrt(eta))|``, on which the potential
    deviation stays below ``eta^{1/10}``.
    """
    if not (0.0 < kappa < 0.5):
        raise InvalidArgumentError(f"kappa must lie in (0, 1/2), got {kappa}")
    mc = center_median(m)
    grid = mc.grid
    dist = Distribution1D.from_measure(mc)
    level = kappa / 2.0
    a_minus = float(dist.quantile(level))
    a_plus = float(dist.quantile(1.0 - level))
    if a_minus <= grid.nodes[1] or a_plus >= grid.nodes[-2]:
        raise ResolutionError(
            f"kappa={kappa} puts a witness quantile in the outermost cell"
        )
    sep = a_plus - a_minus
    gaussian_sep = 2.0 * abs(sigma_inverse(level))
    eta = max(gaussian_sep - sep, 0.0)

    mass_a1 = float(mc.cdf_at(a_minus))
    mass_a2 = 1.0 - float(mc.cdf_at(a_plus))
    alpha_minus = sigma_inverse(mass_a1)
    alpha_plus = -sigma_inverse(mass_a2)

    phi = mc.log_density()
    phi_gamma = 0.5 * grid.nodes ** 2 + 0.5 * math.log(2.0 * math.pi)
    dev = np.abs(phi - phi_gamma)
    core_sel = (grid.nodes >= a_minus) & (grid.nodes <= a_plus)
    sup_core = float(dev[core_sel].max())

    center = grid.n_points // 2
    sym = np.maximum(dev[center:], dev[center::-1])
    run = np.maximum.accumulate(sym)
    radii = grid.nodes[center:]
    if eta <= eta_floor:
        a_eta = b_eta = grid.half_width
        sup_ext = float(run[-1])
    else:
        a_eta = min(abs(sigma_inverse(math.sqrt(eta))), grid.half_width)
        tau = eta ** 0.1
        admissible = (radii <= a_eta) & (run <= tau)
        j = int(np.max(np.flatnonzero(admissible))) if admissible.any() else 0
        b_eta = float(radii[j])
        sup_ext = float(run[j])

    gap = decompose(mc, 2).spectral_gap
    checks = []
    for s in (0.0, sep / 2.0, sep):
        lhs1 = float(mc.cdf_at(a_minus + s))
        lhs2 = 1.0 - float(mc.cdf_at(a_plus - s))
        for side, (lhs, mass) in enumerate(((lhs1, mass_a1), (lhs2, mass_a2)), 1):
            rhs = float(gaussian_cdf(sigma_inverse(mass) + s)) \
                + math.sqrt(2.0 / math.pi) * eta
            checks.append({
                "side": side, "s": s, "lhs": lhs, "rhs": rhs,
                "pass": bool(lhs <= rhs + 1e-9),
            })
    return ConverseDiagnostics(
        kappa=kappa, eta=eta, sep=sep, gaussian_sep=gaussian_sep,
        a_minus=a_minus, a_plus=a_plus,
        alpha_minus=alpha_minus, alpha_plus=alpha_plus,
        sup_phi_dev_core=sup_core, sup_phi_dev_extended=sup_ext,
        a_eta=a_eta, b_eta=b_eta,
        var_deficit=1.0 - mc.variance, gap_deficit=gap - 1.0,
        uppboundmass_checks=tuple(checks),
    )


def gaussian_window_curvature(window_length: float = 1.349,
                              s_max: float = 0.2, n_samples: int = 40) -> dict:
    """Quadratic mass loss of off-center Gaussian windows of fixed length.

    The centered window of length R is the unique maximizer of Gaussian
    mass among intervals of that length; sliding it by s loses at least
    ``C(R) s^2``.  Reports the fitted constant (the worst observed ratio)
    next to the analytic small-s value ``(R/2) phi(R/2)``.
    """
    if window_length <= 0:
        raise InvalidArgumentError("window_length must be positive")
    half = 0.5 * window_length
    s = np.linspace(0.0, s_max, n_samples + 1)[1:]
    mass = gaussian_cdf(s + half) - gaussian_cdf(s - half)
    mass0 = float(gaussian_cdf(half) - gaussian_cdf(-half))
    ratios = (mass0 - mass) / (s * s)
    analytic = half * math.exp(-0.5 * half * half) / SQRT_2PI
    return {
        "window_length": window_length,
        "fitted_c": float(ratios.min()),
        "analytic_c": analytic,
        "max_mass": mass0,
    }
