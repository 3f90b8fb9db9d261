"""Shared oracles and generators for the test suite.

Everything here is deliberately independent of the code paths it checks:
quadrature oracles use scipy.integrate, transport oracles use linear
programming or exhaustive enumeration, eigenvalue oracles use full
diagonalization.
"""

import math

import numpy as np
from scipy.integrate import quad
from scipy.linalg import eigh_tridiagonal

import gaplab as gl


# ---------------------------------------------------------------------------
# quadrature oracles
# ---------------------------------------------------------------------------


def quad_moment(psi, k: int, lo: float = -12.0, hi: float = 12.0) -> float:
    """k-th moment of e^{-psi}/Z by adaptive quadrature."""
    z = quad(lambda t: math.exp(-psi(t)), lo, hi, limit=200)[0]
    return quad(lambda t: t ** k * math.exp(-psi(t)), lo, hi, limit=200)[0] / z


def sigma_inverse_bisect(p: float, iters: int = 80) -> float:
    """Pure bisection of the erfc-based Gaussian CDF (independent of Newton)."""
    lo, hi = -40.0, 40.0
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if float(gl.gaussian_cdf(mid)) < p:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# transport oracles
# ---------------------------------------------------------------------------


def w1_atoms_closed_form(xa, wa, xb, wb) -> float:
    """W1 between atom lists as the step-CDF area (the textbook formula)."""
    xs = np.unique(np.concatenate([xa, xb]))
    Fa = np.array([wa[xa <= x].sum() for x in xs])
    Fb = np.array([wb[xb <= x].sum() for x in xs])
    return float(np.sum(np.abs(Fa - Fb)[:-1] * np.diff(xs)))


def w1_atoms_lp(xa, wa, xb, wb) -> float:
    """W1 between atom lists by linear programming (independent optimizer)."""
    from scipy.optimize import linprog

    na, nb = len(xa), len(xb)
    cost = np.abs(xa[:, None] - xb[None, :]).ravel()
    a_eq = []
    for i in range(na):
        row = np.zeros((na, nb))
        row[i, :] = 1.0
        a_eq.append(row.ravel())
    for j in range(nb):
        row = np.zeros((na, nb))
        row[:, j] = 1.0
        a_eq.append(row.ravel())
    b_eq = np.concatenate([wa, wb])
    res = linprog(cost, A_eq=np.array(a_eq), b_eq=b_eq, method="highs")
    assert res.status == 0, res.message
    return float(res.fun)


def refine_quantile_atoms(dist, per_segment: int = 200):
    """Approximate a piecewise-linear quantile by many equal-spirit atoms.

    Each knot segment is subdivided and sampled at mass midpoints, so the
    step-CDF W1 of the output converges quadratically to the PL value.
    """
    levels, positions = dist.levels, dist.positions
    ps = [np.array([0.5 * levels[0]])] if levels[0] > 0 else []
    for p0, p1 in zip(levels[:-1], levels[1:]):
        if p1 > p0:
            ps.append(p0 + (p1 - p0) * (np.arange(per_segment) + 0.5) / per_segment)
    if levels[-1] < 1.0:
        ps.append(np.array([0.5 * (1.0 + levels[-1])]))
    grid = np.concatenate(ps)
    atoms = dist.quantile(grid)
    bounds = np.concatenate([[0.0],
                             0.5 * (grid[1:] + grid[:-1]),
                             [1.0]])
    weights = np.diff(bounds)
    return atoms, weights


# ---------------------------------------------------------------------------
# separation / observable-diameter oracles
# ---------------------------------------------------------------------------


def separation_exhaustive_masks(m, kappa: float, n_nodes: int):
    """Max distance over ALL pairs of disjoint node-mask interval unions.

    Masks turn into unions of node-bounded intervals (runs of consecutive
    nodes); masses come from the measure's piecewise-linear CDF, distances
    from the closest pair of run endpoints.  Exponential: keep n_nodes <= 9.
    """
    nodes = m.grid.nodes
    cdf = m.cdf
    assert len(nodes) == n_nodes

    def runs(mask):
        iv = []
        i = 0
        while i < n_nodes:
            if mask >> i & 1:
                j = i
                while j + 1 < n_nodes and mask >> (j + 1) & 1:
                    j += 1
                iv.append((i, j))
                i = j + 1
            else:
                i += 1
        return iv

    infos = []
    for mask in range(1, 1 << n_nodes):
        iv = runs(mask)
        mass = sum(cdf[j] - cdf[i] for i, j in iv)
        infos.append((mask, iv, mass))
    best = 0.0
    for mask_a, iv_a, mass_a in infos:
        if mass_a < kappa:
            continue
        for mask_b, iv_b, mass_b in infos:
            if mass_b < kappa or (mask_a & mask_b):
                continue
            dist = min(
                abs(nodes[p] - nodes[q])
                for ia, ja in iv_a for ib, jb in iv_b
                for p in (ia, ja) for q in (ib, jb)
            )
            # distance between interval unions: closest endpoints of
            # non-overlapping runs
            gap = min(
                max(nodes[ib] - nodes[ja], nodes[ia] - nodes[jb], 0.0)
                for ia, ja in iv_a for ib, jb in iv_b
            )
            best = max(best, gap if gap > 0 else dist * 0.0)
    return best


def separation_prefix_suffix(m, kappa: float) -> float:
    """Reduced brute force: distances between mass-feasible prefix/suffix."""
    nodes, cdf = m.grid.nodes, m.cdf
    best = 0.0
    for i in range(len(nodes)):
        if cdf[i] < kappa:
            continue
        for j in range(i, len(nodes)):
            if 1.0 - cdf[j] >= kappa:
                best = max(best, nodes[j] - nodes[i])
    return best


def dobs_enumeration_oracle(m, kappa: float):
    """Max over slope-{-1,0,1} grid functions of the pushforward window.

    Returns (oracle_value, identity_value); window lengths are computed
    with the same atom-list semantics as the package pushforward, so the
    check isolates the 1-Lipschitz-extremality claim.
    """
    nodes, h = m.grid.nodes, m.grid.h
    masses = m.cell_masses
    n_cells = len(nodes) - 1
    best = -np.inf
    ident = gl.minimal_mass_window(gl.pushforward(m, nodes), kappa)
    for code in range(3 ** n_cells):
        slopes = np.empty(n_cells)
        c = code
        for a in range(n_cells):
            slopes[a] = (c % 3) - 1
            c //= 3
        values = np.concatenate([[0.0], np.cumsum(slopes * h)])
        win = gl.minimal_mass_window(gl.pushforward(m, values), kappa)
        if win > best:
            best = win
    return best, ident


# ---------------------------------------------------------------------------
# spectral oracles and random instances
# ---------------------------------------------------------------------------


def full_diagonalization(op):
    """All eigenpairs of the discrete operator (small grids only)."""
    d, e = op.tridiagonal()
    lam, U = eigh_tridiagonal(d, e)
    return lam, U / np.sqrt(op.masses)[:, None]


def random_convex_table(grid, rng):
    """x^2/2 plus random softplus pieces and extra quadratic: psi'' >= 1."""
    x = grid.nodes
    vals = 0.5 * x * x * (1.0 + rng.uniform(0.0, 0.5))
    for _ in range(rng.integers(1, 6)):
        c = rng.uniform(0.0, 0.6)
        t0 = rng.uniform(-3.0, 3.0)
        s = rng.uniform(0.5, 2.0)
        vals = vals + c * np.logaddexp(0.0, s * (x - t0)) / s
    return gl.make_potential("table", grid, values=vals)


def random_smooth_centered(m, rng):
    """Centered low-order polynomial-plus-trig grid function."""
    x = m.grid.nodes
    coef = rng.normal(size=4)
    vals = (coef[0] * x + coef[1] * (x ** 2 - 1.0) + coef[2] * np.sin(x)
            + coef[3] * np.cos(2.0 * x))
    vals = vals - np.sum(vals * m.cell_masses)
    return vals


def loglog_slope(xs, ys) -> float:
    xs, ys = np.asarray(xs, dtype=float), np.asarray(ys, dtype=float)
    ok = (xs > 0) & (ys > 0)
    return float(np.polyfit(np.log(xs[ok]), np.log(ys[ok]), 1)[0])
