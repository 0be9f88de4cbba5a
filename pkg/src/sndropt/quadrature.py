"""Adaptive Gauss-Legendre quadrature for smooth one-dimensional integrands.

The moment integrals used throughout this package have closed forms for
the built-in input densities, so this integrator is deliberately small.
It is the workhorse for the few places where a genuinely non-polynomial
integrand shows up (smooth perturbation bumps, cross-checks in the test
suite).  Integrands must accept numpy arrays.
"""

from __future__ import annotations

from functools import lru_cache
from typing import Callable

import numpy as np

__all__ = ["fixed_gauss_legendre", "adaptive_gauss_legendre"]

#: hard cap on interval bisections before giving up
MAX_BISECTIONS = 52


@lru_cache(maxsize=None)
def _nodes(order: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(order)
    return x, w


def fixed_gauss_legendre(f: Callable, a: float, b: float, order: int = 24) -> float:
    """Gauss-Legendre rule of fixed order on [a, b]."""
    x, w = _nodes(order)
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    return half * float(np.dot(w, f(mid + half * x)))


def adaptive_gauss_legendre(
    f: Callable,
    a: float,
    b: float,
    tol: float = 1e-12,
    order: int = 16,
) -> float:
    """Integrate ``f`` over the bounded interval [a, b] to absolute tolerance.

    Classic bisection scheme: on each subinterval the single-panel estimate
    is compared against the two-half estimate; the interval is split until
    the discrepancy falls below the locally allotted share of ``tol``.

    Raises
    ------
    ValueError
        If the interval is unbounded or reversed.
    RuntimeError
        If the tolerance cannot be met within ``MAX_BISECTIONS`` levels,
        which in practice means the integrand is not smooth enough.
    """
    if not (np.isfinite(a) and np.isfinite(b)):
        raise ValueError("adaptive quadrature needs a bounded interval")
    if b < a:
        raise ValueError(f"reversed interval [{a}, {b}]")
    if b == a:
        return 0.0

    total = 0.0
    # stack entries: (lo, hi, coarse estimate, local tolerance, depth)
    stack = [(a, b, fixed_gauss_legendre(f, a, b, order), tol, 0)]
    while stack:
        lo, hi, coarse, loc_tol, depth = stack.pop()
        mid = 0.5 * (lo + hi)
        left = fixed_gauss_legendre(f, lo, mid, order)
        right = fixed_gauss_legendre(f, mid, hi, order)
        fine = left + right
        if abs(fine - coarse) <= loc_tol:
            total += fine
            continue
        if depth >= MAX_BISECTIONS:
            raise RuntimeError(
                f"quadrature failed to converge on [{lo}, {hi}] "
                f"(discrepancy {abs(fine - coarse):.3e}, tol {loc_tol:.3e})"
            )
        stack.append((lo, mid, left, 0.5 * loc_tol, depth + 1))
        stack.append((mid, hi, right, 0.5 * loc_tol, depth + 1))
    return total
