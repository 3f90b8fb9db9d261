"""1D model measures e^{-psi}/Z with 1-convex potentials, and the Gaussian.

The truncated line [-R, R] carries a uniform grid with an odd number of
nodes (so the origin is a node).  A measure is represented by its density
at the nodes and at the half-cell midpoints, a trapezoid CDF table, and
moments.  Everything downstream (spectra, transport, diameters) works off
these tables.

Conventions
-----------
* Quadrature is the trapezoid rule: node weights ``h`` inside, ``h/2`` at
  the two ends.  For the rapidly decaying densities handled here the
  trapezoid rule is accurate far beyond every test tolerance.
* The CDF table stores ``F_i = mass of [-R, x_i]`` (cumulative trapezoid),
  so ``F_0 = 0`` and ``F_{n-1} = 1`` exactly; quantiles interpolate the
  table linearly, hence ``quantile(F_i) = x_i`` exactly.
* Discrete 1-convexity means all second-difference quotients
  ``(psi_{i+1} - 2 psi_i + psi_{i-1})/h^2`` are at least ``1 - 1e-8``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ConvexityError,
    DegenerateMeasureError,
    InvalidArgumentError,
    TruncationError,
)

TOL_CONVEXITY = 1e-8
TOL_MASS = 1e-12
DEFAULT_HALF_WIDTH = 10.0
DEFAULT_NODES = 4001

SQRT_2PI = math.sqrt(2.0 * math.pi)


# ---------------------------------------------------------------------------
# Grid
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Grid1D:
    """Uniform nodes ``x_i = -R + i h`` on ``[-R, R]`` with odd node count."""

    half_width: float
    n_points: int
    nodes: np.ndarray = field(repr=False)

    @property
    def h(self) -> float:
        return 2.0 * self.half_width / (self.n_points - 1)

    @property
    def midpoints(self) -> np.ndarray:
        return 0.5 * (self.nodes[:-1] + self.nodes[1:])

    def trapezoid_weights(self) -> np.ndarray:
        w = np.full(self.n_points, self.h)
        w[0] = w[-1] = 0.5 * self.h
        return w

    def halve(self) -> "Grid1D":
        """The coarse grid sharing every other node (for convergence runs)."""
        if self.n_points < 5:
            raise InvalidArgumentError("grid too small to halve")
        return Grid1D(self.half_width, (self.n_points + 1) // 2, self.nodes[::2])

    def double(self) -> "Grid1D":
        """The refined grid whose even-index nodes are this grid's nodes."""
        n = 2 * self.n_points - 1
        return build_grid(self.half_width, n)


def build_grid(half_width: float, n_points: int) -> Grid1D:
    """Build the uniform grid on ``[-R, R]``.

    ``n_points`` must be an odd integer >= 3 so the origin is a node.
    """
    if not np.isfinite(half_width) or half_width <= 0:
        raise InvalidArgumentError(f"half_width must be positive, got {half_width}")
    if int(n_points) != n_points or n_points < 3:
        raise InvalidArgumentError(f"n_points must be an integer >= 3, got {n_points}")
    n_points = int(n_points)
    if n_points % 2 == 0:
        raise InvalidArgumentError(f"n_points must be odd, got {n_points}")
    nodes = np.linspace(-half_width, half_width, n_points)
    return Grid1D(float(half_width), n_points, nodes)


# ---------------------------------------------------------------------------
# Potentials
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Potential1D:
    """A tabulated potential psi with discrete curvature at least 1.

    ``midpoint_values`` hold psi at half-cell midpoints: exact evaluations
    for analytic presets, averaged node values for table input.  They feed
    the half-cell quadrature of the Dirichlet form.
    """

    grid: Grid1D
    values: np.ndarray = field(repr=False)
    midpoint_values: np.ndarray = field(repr=False)
    convexity_modulus: float = 0.0

    @property
    def first_differences(self) -> np.ndarray:
        return np.diff(self.values) / self.grid.h

    @property
    def second_differences(self) -> np.ndarray:
        v, h = self.values, self.grid.h
        return (v[2:] - 2.0 * v[1:-1] + v[:-2]) / (h * h)


def _validated_potential(grid: Grid1D, values: np.ndarray,
                         midpoint_values: np.ndarray) -> Potential1D:
    values = np.asarray(values, dtype=float)
    midpoint_values = np.asarray(midpoint_values, dtype=float)
    if values.shape != grid.nodes.shape:
        raise InvalidArgumentError("potential table does not match the grid")
    if not (np.all(np.isfinite(values)) and np.all(np.isfinite(midpoint_values))):
        raise InvalidArgumentError("potential values must be finite")
    h = grid.h
    quot = (values[2:] - 2.0 * values[1:-1] + values[:-2]) / (h * h)
    modulus = float(quot.min())
    if modulus < 1.0 - TOL_CONVEXITY:
        j = int(np.argmin(quot)) + 1
        raise ConvexityError(j, float(grid.nodes[j]), modulus, 1.0 - TOL_CONVEXITY)
    return Potential1D(grid, values, midpoint_values, modulus)


_PRESETS = {
    "gaussian": (lambda x: 0.5 * x * x, ()),
    "scaled_gaussian": (lambda x, a: 0.5 * (1.0 + a) * x * x, ("a",)),
    "cosine_perturbed": (
        lambda x, eps: 0.5 * x * x + eps * (0.5 * x * x + np.cos(x)),
        ("eps",),
    ),
}


def preset_names() -> tuple:
    return tuple(_PRESETS) + ("table",)


def make_potential(preset: str, grid: Grid1D, **params) -> Potential1D:
    """Construct a potential from a named preset or a value table.

    Presets: ``gaussian`` (x^2/2), ``scaled_gaussian`` with ``a >= 0``
    ((1+a) x^2/2), ``cosine_perturbed`` with ``eps >= 0``
    (x^2/2 + eps (x^2/2 + cos x)), and ``table`` with ``values`` given at
    the grid nodes.  Any input failing the discrete 1-convexity check is
    rejected with the worst node named.
    """
    if preset == "table":
        values = params.pop("values", None)
        if values is None:
            raise InvalidArgumentError("table preset requires values=")
        if params:
            raise InvalidArgumentError(f"unknown parameters {sorted(params)}")
        values = np.asarray(values, dtype=float)
        mid = 0.5 * (values[:-1] + values[1:])
        return _validated_potential(grid, values, mid)
    if preset not in _PRESETS:
        raise InvalidArgumentError(
            f"unknown preset {preset!r}; expected one of {preset_names()}"
        )
    func, names = _PRESETS[preset]
    missing = [p for p in names if p not in params]
    if missing:
        raise InvalidArgumentError(f"preset {preset!r} requires {missing}")
    extra = [p for p in params if p not in names]
    if extra:
        raise InvalidArgumentError(f"unknown parameters {extra} for preset {preset!r}")
    args = [float(params[p]) for p in names]
    for name, val in zip(names, args):
        if val < 0:
            raise ConvexityError(0, float(grid.nodes[0]), 1.0 + val, 1.0)
    return _validated_potential(grid, func(grid.nodes, *args),
                                func(grid.midpoints, *args))


def read_table_potential(text: str, grid: Grid1D) -> Potential1D:
    """Parse a two-column ``node  psi`` text table matching the grid."""
    rows = []
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise InvalidArgumentError(f"expected two columns, got {line!r}")
        rows.append((float(parts[0]), float(parts[1])))
    if len(rows) != grid.n_points:
        raise InvalidArgumentError(
            f"table has {len(rows)} rows, grid has {grid.n_points} nodes"
        )
    arr = np.array(rows)
    scale = max(1.0, grid.half_width)
    if np.max(np.abs(arr[:, 0] - grid.nodes)) > 1e-9 * scale:
        raise InvalidArgumentError("table nodes do not match the grid")
    return make_potential("table", grid, values=arr[:, 1])


# ---------------------------------------------------------------------------
# Measures
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Measure1D:
    """Normalized measure ``e^{-psi}/Z`` on the grid.

    ``density`` and ``density_mid`` are the normalized density at nodes and
    half-cell midpoints; ``cdf`` is the cumulative trapezoid table with
    ``cdf[0] = 0`` and ``cdf[-1] = 1`` exactly.
    """

    potential: Potential1D
    normalization: float
    density: np.ndarray = field(repr=False)
    density_mid: np.ndarray = field(repr=False)
    cdf: np.ndarray = field(repr=False)
    mean: float = 0.0
    variance: float = 0.0
    median: float = 0.0
    log_normalization: float = 0.0

    @property
    def grid(self) -> Grid1D:
        return self.potential.grid

    @property
    def cell_masses(self) -> np.ndarray:
        """Trapezoid node masses ``rho_i w_i`` (half cells at the ends)."""
        return self.density * self.grid.trapezoid_weights()

    def log_density(self) -> np.ndarray:
        """The normalized potential ``phi = psi + log Z`` (density e^{-phi})."""
        return self.potential.values + self.log_normalization

    def cdf_at(self, x) -> np.ndarray:
        return np.interp(x, self.grid.nodes, self.cdf)

    def quantile(self, p):
        return quantile(self, p)

    def total_mass(self) -> float:
        return float(self.cell_masses.sum())


def normalize(potential: Potential1D) -> Measure1D:
    """Normalize ``e^{-psi}`` into a probability measure.

    Trapezoid quadrature gives the normalization constant; the density,
    CDF table, moments and median are populated.  The potential minimum is
    subtracted before exponentiating, so additive constants never underflow
    the computation.
    """
    grid = potential.grid
    w = grid.trapezoid_weights()
    shift = float(potential.values.min())
    dens_un = np.exp(-(potential.values - shift))
    raw = float(np.sum(dens_un * w))
    if raw <= 0.0 or not np.isfinite(raw):
        raise DegenerateMeasureError("normalization constant underflowed to zero")
    density = dens_un / raw
    density_mid = np.exp(-(potential.midpoint_values - shift)) / raw
    log_z = math.log(raw) - shift
    normalization = math.exp(log_z) if abs(log_z) < 700 else math.inf
    # cumulative trapezoid: F_0 = 0, F_{n-1} = 1 exactly
    increments = 0.5 * grid.h * (density[:-1] + density[1:])
    cdf = np.concatenate([[0.0], np.cumsum(increments)])
    cdf /= cdf[-1]
    masses = density * w
    mean = float(np.sum(grid.nodes * masses))
    variance = float(np.sum((grid.nodes - mean) ** 2 * masses))
    m = Measure1D(potential, normalization, density, density_mid, cdf,
                  mean, variance, 0.0, log_z)
    object.__setattr__(m, "median", float(quantile(m, 0.5)))
    return m


def make_measure(preset: str, grid: Grid1D = None, **params) -> Measure1D:
    """Convenience: preset potential on the default grid, normalized."""
    if grid is None:
        grid = build_grid(DEFAULT_HALF_WIDTH, DEFAULT_NODES)
    return normalize(make_potential(preset, grid, **params))


def quantile(m: Measure1D, p) -> np.ndarray:
    """Piecewise-linear inverse of the CDF table.

    Exact at the table values: ``quantile(m, F_i) = x_i``.
    """
    p_arr = np.asarray(p, dtype=float)
    if np.any(p_arr <= 0.0) or np.any(p_arr >= 1.0):
        raise InvalidArgumentError("quantile level must lie in (0, 1)")
    ps, idx = np.unique(m.cdf, return_index=True)  # drop flat tail duplicates
    out = np.interp(p_arr, ps, m.grid.nodes[idx])
    return out if out.shape else float(out)


def center_median(m: Measure1D) -> Measure1D:
    """Translate the potential so the median sits at the origin.

    The shift is snapped to a whole number of cells, so node values move by
    table lookup; the vacated end is extended quadratically with the
    boundary curvature.  If more than 1e-10 of mass would slide off the
    grid, the operation refuses (use a wider grid).
    """
    grid = m.grid
    k = int(round(m.median / grid.h))
    if k == 0:
        return m
    off_mass = m.cdf_at(-grid.half_width + k * grid.h) if k > 0 else (
        1.0 - m.cdf_at(grid.half_width + k * grid.h))
    if off_mass > 1e-10:
        raise TruncationError(
            f"centering sheds {off_mass:.3e} mass; re-grid with a larger half-width"
        )
    n = grid.n_points
    vals = np.empty(n)
    mids = np.empty(n - 1)
    if k > 0:
        vals[: n - k] = m.potential.values[k:]
        mids[: n - 1 - k] = m.potential.midpoint_values[k:]
        curv = m.potential.values[-1] - 2 * m.potential.values[-2] + m.potential.values[-3]
        slope = vals[n - k - 1] - vals[n - k - 2]
        for j in range(n - k, n):
            slope += curv
            vals[j] = vals[j - 1] + slope
        mids[n - 1 - k:] = 0.5 * (vals[n - 1 - k:-1] + vals[n - k:])
    else:
        kk = -k
        vals[kk:] = m.potential.values[: n - kk]
        mids[kk:] = m.potential.midpoint_values[: n - 1 - kk]
        curv = m.potential.values[2] - 2 * m.potential.values[1] + m.potential.values[0]
        slope = vals[kk + 1] - vals[kk]
        for j in range(kk - 1, -1, -1):
            slope -= curv
            vals[j] = vals[j + 1] - slope
        mids[:kk] = 0.5 * (vals[:kk] + vals[1 : kk + 1])
    return normalize(_validated_potential(grid, vals, mids))


# ---------------------------------------------------------------------------
# Standard Gaussian CDF and quantile
# ---------------------------------------------------------------------------


def gaussian_cdf(x):
    """Standard normal CDF via the complementary error function.

    Accurate to full double precision on the whole line; deep-tail values
    below ~1e-308 flush to zero gracefully.
    """
    from scipy.special import erfc

    return 0.5 * erfc(-np.asarray(x, dtype=float) / math.sqrt(2.0))


def gaussian_pdf(x):
    x = np.asarray(x, dtype=float)
    return np.exp(-0.5 * x * x) / SQRT_2PI


# Beasley-Springer-Moro style rational initial guess for the Newton polish.
_A = (-3.969683028665376e1, 2.209460984245205e2, -2.759285104469687e2,
      1.383577518672690e2, -3.066479806614716e1, 2.506628277459239)
_B = (-5.447609879822406e1, 1.615858368580409e2, -1.556989798598866e2,
      6.680131188771972e1, -1.328068155288572e1, 1.0)
_C = (-7.784894002430293e-3, -3.223964580411365e-1, -2.400758277161838,
      -2.549732539343734, 4.374664141464968, 2.938163982698783)
_D = (7.784695709041462e-3, 3.224671290700398e-1, 2.445134137142996,
      3.754408661907416, 1.0)


def _sigma_inverse_guess(p: float) -> float:
    if p < 0.02425:
        q = math.sqrt(-2.0 * math.log(p))
        return (((((_C[0] * q + _C[1]) * q + _C[2]) * q + _C[3]) * q + _C[4]) * q
                + _C[5]) / ((((_D[0] * q + _D[1]) * q + _D[2]) * q + _D[3]) * q + _D[4])
    if p > 0.97575:
        return -_sigma_inverse_guess(1.0 - p)
    q = p - 0.5
    r = q * q
    num = ((((_A[0] * r + _A[1]) * r + _A[2]) * r + _A[3]) * r + _A[4]) * r + _A[5]
    den = ((((_B[0] * r + _B[1]) * r + _B[2]) * r + _B[3]) * r + _B[4]) * r + _B[5]
    return q * num / den


def sigma_inverse(p: float) -> float:
    """Standard normal quantile by safeguarded Newton iteration.

    A rational approximation seeds the iterate; Newton steps on the
    erfc-based CDF refine it, falling back to bisection whenever a step
    leaves the current bracket.  Accuracy is ~1e-15, comfortably below the
    1e-12 contract.
    """
    p = float(p)
    if not (0.0 < p < 1.0) or not np.isfinite(p):
        raise InvalidArgumentError(f"quantile level must lie in (0, 1), got {p}")
    lo, hi = -40.0, 40.0
    x = _sigma_inverse_guess(p)
    for _ in range(60):
        f = float(gaussian_cdf(x)) - p
        if f > 0:
            hi = x
        elif f < 0:
            lo = x
        else:
            return x
        d = float(gaussian_pdf(x))
        step = f / d if d > 0 else math.inf
        x_new = x - step
        if not (lo < x_new < hi):
            x_new = 0.5 * (lo + hi)  # safeguard: bisect
        if abs(x_new - x) <= 1e-15 * (1.0 + abs(x_new)):
            return x_new
        x = x_new
    return x


def gaussian_measure(grid: Grid1D = None) -> Measure1D:
    if grid is None:
        grid = build_grid(DEFAULT_HALF_WIDTH, DEFAULT_NODES)
    return make_measure("gaussian", grid)


# ---------------------------------------------------------------------------
# Grid functions and sets
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GridFunction:
    """Real values attached to the nodes of a grid."""

    grid: Grid1D
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != self.grid.nodes.shape:
            raise InvalidArgumentError("values do not match the grid")
        object.__setattr__(self, "values", values)

    def gradient(self) -> np.ndarray:
        """Central differences inside, one-sided at the two ends."""
        return np.gradient(self.values, self.grid.h)


@dataclass(frozen=True)
class SetOnGrid:
    """A finite union of closed intervals with node endpoints.

    ``intervals`` is an (k, 2) array of endpoint pairs; mass under a
    measure is evaluated through the piecewise-linear CDF, so interval
    endpoints at nodes carry no half-cell bias.
    """

    grid: Grid1D
    intervals: np.ndarray = field(repr=False)

    def __post_init__(self):
        iv = np.atleast_2d(np.asarray(self.intervals, dtype=float))
        if iv.size == 0:
            iv = iv.reshape(0, 2)
        if iv.shape[1] != 2 or np.any(iv[:, 0] > iv[:, 1]):
            raise InvalidArgumentError("intervals must be (k, 2) with a <= b")
        iv = iv[np.argsort(iv[:, 0])]
        object.__setattr__(self, "intervals", _merge_intervals(iv))

    @classmethod
    def from_mask(cls, grid: Grid1D, mask) -> "SetOnGrid":
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != grid.nodes.shape:
            raise InvalidArgumentError("mask does not match the grid")
        idx = np.flatnonzero(mask)
        if idx.size == 0:
            return cls(grid, np.empty((0, 2)))
        splits = np.flatnonzero(np.diff(idx) > 1)
        starts = np.concatenate([[idx[0]], idx[splits + 1]])
        ends = np.concatenate([idx[splits], [idx[-1]]])
        return cls(grid, np.column_stack([grid.nodes[starts], grid.nodes[ends]]))

    def mass(self, m: Measure1D) -> float:
        if self.intervals.shape[0] == 0:
            return 0.0
        lo = m.cdf_at(self.intervals[:, 0])
        hi = m.cdf_at(self.intervals[:, 1])
        return float(np.sum(hi - lo))

    def dilate(self, t: float) -> "SetOnGrid":
        """Open t-neighborhood, widened to a whole number of cells (ceil)."""
        if t < 0:
            raise InvalidArgumentError("dilation distance must be >= 0")
        h = self.grid.h
        r = math.ceil(t / h - 1e-12) * h
        R = self.grid.half_width
        iv = np.column_stack([
            np.maximum(self.intervals[:, 0] - r, -R),
            np.minimum(self.intervals[:, 1] + r, R),
        ])
        return SetOnGrid(self.grid, iv)

    def is_empty(self) -> bool:
        return self.intervals.shape[0] == 0

    def covers_grid(self) -> bool:
        R = self.grid.half_width
        return (self.intervals.shape[0] == 1
                and self.intervals[0, 0] <= -R and self.intervals[0, 1] >= R)


def _merge_intervals(iv: np.ndarray) -> np.ndarray:
    if iv.shape[0] <= 1:
        return iv
    out = [iv[0].copy()]
    for a, b in iv[1:]:
        if a <= out[-1][1]:
            out[-1][1] = max(out[-1][1], b)
        else:
            out.append(np.array([a, b]))
    return np.array(out)
