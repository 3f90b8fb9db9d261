"""Probabilists' Hermite polynomials and the near-integer eigenvalue locator.

``H_0 = 1``, ``H_1 = x``, ``H_{n+1} = x H_n - n H_{n-1}``; these satisfy
``H_n'' - x H_n' = -n H_n`` and are the eigenfunctions of the Gaussian
weighted Laplacian.  Composing an eigenfunction ``f`` (eigenvalue
``lambda``) with ``H_n`` gives, by the chain rule for the diffusion
operator,

    Delta H_n(f) = -lambda n H_n(f) + H_n''(f) (|grad f|^2 - lambda),

so the residual ``Delta H_n(f) + lambda n H_n(f)`` is small whenever the
gradient deficit is, and a spectral projection argument places an
eigenvalue within the normalized residual of ``n lambda``.

The degree cap is 8: composed polynomials grow like ``f^n`` and the
quadrature on the default window only supports moderate degrees.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegenerateCompositionError,
    InvalidArgumentError,
    NumericalFailureError,
)
from .spectrum import SpectralDecomposition, lp_norm

MAX_DEGREE = 8


@dataclass(frozen=True)
class HermiteBasis:
    """Exact integer coefficient tables of H_0 .. H_N."""

    max_degree: int
    coefficients: tuple = field(repr=False)  # tuple of int tuples, low power first

    @classmethod
    def build(cls, max_degree: int = MAX_DEGREE) -> "HermiteBasis":
        if max_degree < 1:
            raise InvalidArgumentError("max_degree must be >= 1")
        coeffs = [(1,), (0, 1)]
        for n in range(1, max_degree):
            prev, cur = coeffs[n - 1], coeffs[n]
            nxt = [0] * (n + 2)
            for k, c in enumerate(cur):      # x * H_n
                nxt[k + 1] += c
            for k, c in enumerate(prev):     # - n * H_{n-1}
                nxt[k] -= n * c
            coeffs.append(tuple(nxt))
        return cls(max_degree, tuple(coeffs))


_BASIS = HermiteBasis.build()


def _check_degree(n: int):
    if int(n) != n or n < 0 or n > MAX_DEGREE:
        raise InvalidArgumentError(
            f"degree must be an integer in [0, {MAX_DEGREE}], got {n}"
        )


def hermite_eval(n: int, x):
    """H_n(x) by the upward recurrence (numerically stable at these degrees)."""
    _check_degree(n)
    x = np.asarray(x, dtype=float)
    if n == 0:
        return np.ones_like(x) if x.shape else 1.0
    prev = np.ones_like(x)
    cur = x.copy()
    for k in range(1, n):
        prev, cur = cur, x * cur - k * prev
    return cur if cur.shape else float(cur)


def hermite_derivative(n: int, x):
    """H_n'(x) = n H_{n-1}(x)."""
    _check_degree(n)
    if n == 0:
        x = np.asarray(x, dtype=float)
        return np.zeros_like(x) if x.shape else 0.0
    return n * hermite_eval(n - 1, x)


def hermite_second_derivative(n: int, x):
    """H_n''(x) = n (n-1) H_{n-2}(x)."""
    _check_degree(n)
    if n < 2:
        x = np.asarray(x, dtype=float)
        return np.zeros_like(x) if x.shape else 0.0
    return n * (n - 1) * hermite_eval(n - 2, x)


def ou_identity_residual(n: int, x):
    """H_n''(x) - x H_n'(x) + n H_n(x); identically zero as a polynomial."""
    return (hermite_second_derivative(n, x) - np.asarray(x, dtype=float)
            * hermite_derivative(n, x) + n * hermite_eval(n, x))


def hermite_residual_report(d: SpectralDecomposition, n: int,
                            grid_tolerance: float = 1e-3,
                            strict: bool = True) -> dict:
    """Residual of the composed eigenfunction and the nearest eigenvalue.

    Computes ``r = Delta H_n(f) + lambda_1 n H_n(f)`` with the discrete
    operator (so discretization error is reported honestly), its L^2 norm,
    the norm divided by ``||H_n(f)||_2``, and the computed eigenvalue
    closest to ``n lambda_1``.  The located eigenvalue must lie within
    ``normalized_distance + grid_tolerance`` of the target; with
    ``strict=True`` a violation raises.
    """
    _check_degree(n)
    if n < 1:
        raise InvalidArgumentError("the residual report needs n >= 1")
    lam1 = float(d.eigenvalues[1])
    target = n * lam1
    if d.eigenvalues[-1] < target:
        raise InvalidArgumentError(
            f"need eigenvalues past {target:.4g} to bracket the target; "
            f"decompose with larger k"
        )
    f = d.eigenfunctions[:, 1]
    composed = hermite_eval(n, f)
    comp_norm = lp_norm(composed, 2.0, d.measure)
    if comp_norm < 1e-8:
        raise DegenerateCompositionError(
            f"||H_{n}(f)|| = {comp_norm:.3e}; composition is degenerate"
        )
    residual = -d.operator.apply(composed) + target * composed
    residual_norm = lp_norm(residual, 2.0, d.measure)
    normalized = residual_norm / comp_norm
    idx = int(np.argmin(np.abs(d.eigenvalues - target)))
    nearest = float(d.eigenvalues[idx])
    ok = abs(nearest - target) <= normalized + grid_tolerance
    if strict and not ok:
        raise NumericalFailureError(
            f"no eigenvalue within {normalized + grid_tolerance:.3e} of "
            f"{target:.6g}; nearest is {nearest:.6g}"
        )
    return {
        "n": n,
        "target": target,
        "residual_norm": residual_norm,
        "normalized_distance": normalized,
        "nearest_eigenvalue": nearest,
        "pass": bool(ok),
    }


def normalized_hermite_values(n: int, x):
    """H_n / sqrt(n!) — unit L^2(gamma) norm, for eigenfunction comparisons."""
    return hermite_eval(n, x) / math.sqrt(math.factorial(n))
