"""One-dimensional optimal transport: monotone maps, W1, W2, TV, pushforwards.

All distances come from the exact 1D closed forms.  Distributions are
represented by piecewise-linear quantile functions: a grid measure
contributes the knots ``(F_i, x_i)`` of its CDF table, a weighted atom
list the midpoint knots ``(C_i - w_i/2, t_i)``.  For a grid measure and
its own atomized view these knots coincide, so pushing forward by the
identity is exact.  W1 and W2 integrate the quantile difference exactly
piece by piece (with sign splitting for W1), which makes the triangle
inequality and the W1 <= W2 comparison hold to rounding error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgumentError, NumericalFailureError, ResolutionError
from .measures import Measure1D, gaussian_measure
from .spectrum import SpectralDecomposition, lp_norm


@dataclass(frozen=True)
class Distribution1D:
    """Piecewise-linear quantile representation of a 1D distribution.

    ``levels`` are strictly increasing mass levels in [0, 1], ``positions``
    the matching locations; the quantile function interpolates linearly and
    clamps at the extreme positions.
    """

    levels: np.ndarray = field(repr=False)
    positions: np.ndarray = field(repr=False)
    atoms: tuple = None  # (positions, weights) when built from an atom list

    @classmethod
    def from_measure(cls, m: Measure1D) -> "Distribution1D":
        levels, idx = np.unique(m.cdf, return_index=True)
        return cls(levels, m.grid.nodes[idx])

    @classmethod
    def from_atoms(cls, positions, weights) -> "Distribution1D":
        positions = np.asarray(positions, dtype=float)
        weights = np.asarray(weights, dtype=float)
        if positions.shape != weights.shape or positions.ndim != 1:
            raise InvalidArgumentError("atom positions/weights must be 1D and match")
        if not np.all(np.isfinite(positions)):
            raise InvalidArgumentError("atom positions must be finite")
        total = weights.sum()
        if total <= 0:
            raise InvalidArgumentError("atom weights must have positive total")
        weights = weights / total
        uniq, inverse = np.unique(positions, return_inverse=True)
        merged = np.zeros_like(uniq)
        np.add.at(merged, inverse, weights)
        cum = np.cumsum(merged)
        return cls(cum - 0.5 * merged, uniq, atoms=(uniq, merged))

    def quantile(self, p) -> np.ndarray:
        return np.interp(p, self.levels, self.positions)

    def cdf_at(self, x) -> np.ndarray:
        return np.interp(x, self.positions, self.levels,
                         left=0.0, right=1.0)


def _as_distribution(obj) -> Distribution1D:
    if isinstance(obj, Distribution1D):
        return obj
    if isinstance(obj, Measure1D):
        return Distribution1D.from_measure(obj)
    raise InvalidArgumentError(f"cannot interpret {type(obj).__name__} as a distribution")


@dataclass(frozen=True)
class DistanceReport:
    w1: float
    w2: float
    tv: float


@dataclass(frozen=True)
class TransportMap1D:
    """Monotone map between two grid measures, tabulated at source nodes."""

    source: Measure1D
    target: Measure1D
    values: np.ndarray = field(repr=False)
    max_slope: float = 0.0

    def pushforward_defect(self) -> float:
        """max_i |F_target(T(x_i)) - F_source(x_i)|."""
        return float(np.max(np.abs(
            self.target.cdf_at(self.values) - self.source.cdf)))


def monotone_map(src: Measure1D, dst: Measure1D) -> TransportMap1D:
    """The nondecreasing map ``T = quantile_dst o CDF_src`` at source nodes."""
    ddst = Distribution1D.from_measure(dst)
    width = float(ddst.quantile(0.9) - ddst.quantile(0.1))
    if width < 5.0 * src.grid.h:
        raise ResolutionError(
            f"target inter-decile width {width:.3g} under 5 source cells"
        )
    T = np.maximum.accumulate(ddst.quantile(src.cdf))
    max_slope = float(np.max(np.diff(T)) / src.grid.h)
    return TransportMap1D(src, dst, T, max_slope)


# ---------------------------------------------------------------------------
# Distances
# ---------------------------------------------------------------------------


def _merged_levels(a: Distribution1D, b: Distribution1D) -> np.ndarray:
    p = np.union1d(a.levels, b.levels)
    p = np.union1d(p, (0.0, 1.0))
    return p[(p >= 0.0) & (p <= 1.0)]


def wasserstein1(a, b) -> float:
    """W1 as the exact integral of |q_a - q_b| over mass levels."""
    da, db = _as_distribution(a), _as_distribution(b)
    p = _merged_levels(da, db)
    diff = da.quantile(p) - db.quantile(p)
    d0, d1 = diff[:-1], diff[1:]
    dp = np.diff(p)
    crossing = d0 * d1 < 0
    areas = 0.5 * np.abs(d0 + d1) * dp
    if crossing.any():
        c0, c1, cdp = d0[crossing], d1[crossing], dp[crossing]
        areas[crossing] = 0.5 * cdp * (c0 * c0 + c1 * c1) / np.abs(c0 - c1)
    return float(areas.sum())


def wasserstein2(a, b) -> float:
    """W2 from the exact per-piece integral of (q_a - q_b)^2."""
    da, db = _as_distribution(a), _as_distribution(b)
    p = _merged_levels(da, db)
    diff = da.quantile(p) - db.quantile(p)
    d0, d1 = diff[:-1], diff[1:]
    sq = np.sum(np.diff(p) * (d0 * d0 + d0 * d1 + d1 * d1) / 3.0)
    return float(math.sqrt(max(sq, 0.0)))


def _density_on(nodes: np.ndarray, h: float, obj) -> np.ndarray:
    if isinstance(obj, Measure1D):
        if obj.grid.nodes.shape == nodes.shape and np.allclose(obj.grid.nodes, nodes):
            return obj.density
        # resample through the quantile representation
        return np.interp(nodes, obj.grid.nodes, obj.density, left=0.0, right=0.0)
    dist = _as_distribution(obj)
    if dist.atoms is None:
        raise InvalidArgumentError("cannot reconstruct a density for this input")
    t, w = dist.atoms
    idx = np.clip(np.round((t - nodes[0]) / h).astype(int), 0, len(nodes) - 1)
    binned = np.zeros(len(nodes))
    np.add.at(binned, idx, w)
    cell_widths = np.full(len(nodes), h)
    cell_widths[0] = cell_widths[-1] = 0.5 * h
    return binned / cell_widths


def total_variation(a, b, reference: Measure1D = None) -> float:
    """TV distance; atom lists are binned onto the reference grid.

    Binned comparisons are resolution-limited: they are reported, not held
    to tight tolerances.
    """
    ref = reference
    if ref is None:
        ref = a if isinstance(a, Measure1D) else b
    if not isinstance(ref, Measure1D):
        raise InvalidArgumentError("total variation needs a grid measure reference")
    nodes, h = ref.grid.nodes, ref.grid.h
    rho_a = _density_on(nodes, h, a)
    rho_b = _density_on(nodes, h, b)
    diff = rho_a - rho_b
    d0, d1 = diff[:-1], diff[1:]
    areas = 0.5 * np.abs(d0 + d1) * h
    crossing = d0 * d1 < 0
    if crossing.any():
        c0, c1 = d0[crossing], d1[crossing]
        areas[crossing] = 0.5 * h * (c0 * c0 + c1 * c1) / np.abs(c0 - c1)
    return min(float(0.5 * areas.sum()), 1.0)


def wasserstein_tv(a, b) -> DistanceReport:
    """The (W1, W2, TV) report for two distributions."""
    return DistanceReport(wasserstein1(a, b), wasserstein2(a, b),
                          total_variation(a, b))


def pushforward(m: Measure1D, f) -> Distribution1D:
    """The distribution of the grid function's values under the measure."""
    values = np.asarray(getattr(f, "values", f), dtype=float)
    if not np.all(np.isfinite(values)):
        raise InvalidArgumentError("pushforward needs finite values")
    return Distribution1D.from_atoms(values, m.cell_masses)


# ---------------------------------------------------------------------------
# Gaussian proximity of eigenfunction pushforwards
# ---------------------------------------------------------------------------


def stein_report(d: SpectralDecomposition, grid_tolerance: float = 1e-3,
                 strict: bool = True) -> dict:
    """Gradient deficit, the explicit W1 bound, and the actual distances.

    ``gamma_deficit`` is ``lambda^{-1} integral |Gamma(f) - lambda| d mu``;
    the integral duality chain bounds W1 of the pushforward against the
    Gaussian by four times it, and the closed-form bound is
    ``4 * 2^{lambda/2} sqrt(lambda - 1)``.  Both inequalities are checked
    (up to ``grid_tolerance``); the deficit-vs-bound comparison is reported
    but never asserted.
    """
    m = d.measure
    f = d.eigenfunctions[:, 1]
    norm = lp_norm(f, 2.0, m)
    mean = float(np.sum(f * m.cell_masses))
    if abs(norm - 1.0) > 1e-8 or abs(mean) > 1e-8:
        raise InvalidArgumentError(
            f"eigenfunction must be normalized and centered; "
            f"got norm {norm:.12g}, mean {mean:.3e}"
        )
    lam = float(d.eigenvalues[1])
    gam = d.operator.carre_du_champ(f)
    gamma_deficit = float(np.sum(np.abs(gam - lam) * m.cell_masses)) / lam
    paper_bound = 4.0 * 2.0 ** (lam / 2.0) * math.sqrt(max(lam - 1.0, 0.0))
    gamma_ref = gaussian_measure(m.grid)
    nu = pushforward(m, f)
    w1_actual = wasserstein1(nu, gamma_ref)
    tv_actual = total_variation(nu, gamma_ref, reference=gamma_ref)
    ok_chain = w1_actual <= 4.0 * gamma_deficit + grid_tolerance
    ok_bound = w1_actual <= paper_bound + grid_tolerance
    if strict and not (ok_chain and ok_bound):
        raise NumericalFailureError(
            f"W1 {w1_actual:.6g} exceeds "
            + (f"4*deficit {4 * gamma_deficit:.6g}" if not ok_chain
               else f"bound {paper_bound:.6g}")
        )
    return {
        "lambda1": lam,
        "gamma_deficit": gamma_deficit,
        "paper_bound": paper_bound,
        "w1_actual": w1_actual,
        "tv_actual": tv_actual,
        "pass_chain": bool(ok_chain),
        "pass_bound": bool(ok_bound),
    }
