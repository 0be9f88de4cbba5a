"""Safeguarded scalar root finding: Newton steps inside a bisection bracket.

Small and boring on purpose.  The solver equations this package cares
about are smooth and come with analytic derivatives, so plain Newton is
the right tool; the bracket only exists to catch the occasional wild step.
"""

from __future__ import annotations

from typing import Callable


def newton_bisect(
    f: Callable[[float], float],
    fprime: Callable[[float], float],
    lo: float,
    hi: float,
    xtol: float = 1e-13,
    ftol: float = 0.0,
    max_iter: int = 200,
) -> tuple[float, int]:
    """Find the root of f bracketed by [lo, hi].

    Requires f(lo) and f(hi) to have opposite signs (either may be zero).
    Newton iterations start from the bracket midpoint; any step that
    leaves the current bracket, or fails to shrink it fast enough, is
    replaced by a bisection step.  Returns (root, iterations).
    """
    flo = f(lo)
    fhi = f(hi)
    if flo == 0.0:
        return lo, 0
    if fhi == 0.0:
        return hi, 0
    if flo * fhi > 0.0:
        raise ValueError(
            f"root not bracketed: f({lo}) = {flo:.6e}, f({hi}) = {fhi:.6e}"
        )

    x = 0.5 * (lo + hi)
    for iteration in range(1, max_iter + 1):
        fx = f(x)
        if fx == 0.0 or abs(fx) <= ftol:
            return x, iteration
        # maintain the bracket
        if (fx > 0.0) == (fhi > 0.0):
            hi, fhi = x, fx
        else:
            lo, flo = x, fx
        if hi - lo <= xtol:
            return 0.5 * (lo + hi), iteration
        dfx = fprime(x)
        if dfx != 0.0:
            x_new = x - fx / dfx
            if abs(x_new - x) <= xtol * (1.0 + abs(x)):
                # Newton step below resolution: converged
                return min(max(x_new, lo), hi), iteration
            if not lo < x_new < hi:
                x_new = 0.5 * (lo + hi)
        else:
            x_new = 0.5 * (lo + hi)
        x = x_new
    return x, max_iter
