"""Solvers for the SNDR-optimal double-sided limiter.

The mapping that maximizes SNDR over all measurable g: R -> [0, 1] is a
limiter: rail at 0, affine ramp gamma/eta + beta, rail at 1.  Its two free
parameters satisfy a coupled pair of transcendental equations in the
partial moments of the input density over the three induced regions

    L (rail 0),  S (ramp),  U (rail 1).

Writing c0/c1/c2 for order-0/1/2 partial moments over the region in the
superscript, the stationarity conditions are

    eta  = (c0U c1S + c1U - c0S c1U) / (c0U c0L + (1 - c0S) t)
    beta = (c0U c1S + c0U c1U + c1S t) / (c0U c1S + c1U - c0S c1U)

with t = sigma_v^2 / A^2.  Two solution branches exist, mirrored around
zero (rising ramp eta > 0 and falling ramp eta < 0); for even densities
they carry the same SNDR and beta = 1/2 exactly.

Solvers provided here:

* :func:`solve_general`      -- damped alternating fixed-point iteration on
  the pair above, multi-start, works for any standardized density.
* :func:`solve_symmetric`    -- scalar safeguarded Newton for even densities
  (beta pinned at 1/2).
* :func:`uniform_eta_closed_form` -- the uniform input admits a quadratic
  in eta and hence a closed form.
* :func:`gaussian_eta_solve` -- the Gaussian case as an explicit erf/exp
  equation, solved on a fixed bracket.

At a solution the achieved SNDR has the compact form R / (1 - R) with
R = c2S + eta c1U + eta beta c1S, which :func:`optimal_sndr` evaluates and
cross-checks against the direct Bussgang value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from ._roots import newton_bisect
from .distributions import (
    SQRT3,
    InputDistribution,
    StandardGaussian,
    UniformSymmetric,
)
from .mappings import NonlinearMapping, bussgang, optimal_limiter

__all__ = [
    "BRANCH_POSITIVE",
    "BRANCH_NEGATIVE",
    "ConvergenceError",
    "LimiterParams",
    "SolveOutcome",
    "solve_general",
    "solve_symmetric",
    "uniform_eta_closed_form",
    "gaussian_eta_solve",
    "optimal_sndr",
    "optimal_mapping",
]

BRANCH_POSITIVE = "positive"
BRANCH_NEGATIVE = "negative"

#: default convergence tolerance on the fixed-point residual
RESIDUAL_TOL = 1e-10

#: agreement required between the R-form SNDR and the Bussgang value
CONSISTENCY_TOL = 1e-8

#: two fixed points closer than this (in both coordinates) are the same
DEDUPE_TOL = 1e-6

_EVENNESS_TOL = 1e-8


class ConvergenceError(RuntimeError):
    """No start of the fixed-point iteration converged on the requested branch."""

    def __init__(self, message: str, fixed_points=None):
        super().__init__(message)
        self.fixed_points = list(fixed_points or [])


@dataclass(frozen=True)
class LimiterParams:
    """Parameters (eta, beta) of a double-sided limiter.

    The ramp is gamma/eta + beta.  ``lower_knee`` is where the ramp meets
    the 0 rail and ``upper_knee`` where it meets the 1 rail; for eta < 0
    the two swap numerical order.
    """

    eta: float
    beta: float

    def __post_init__(self) -> None:
        if self.eta == 0.0 or not math.isfinite(self.eta) or not math.isfinite(self.beta):
            raise ValueError(f"need finite eta != 0, got eta={self.eta}, beta={self.beta}")

    @property
    def lower_knee(self) -> float:
        return -self.beta * self.eta

    @property
    def upper_knee(self) -> float:
        return self.eta - self.beta * self.eta

    @property
    def branch(self) -> str:
        return BRANCH_POSITIVE if self.eta > 0.0 else BRANCH_NEGATIVE

    def ramp_interval(self) -> tuple[float, float]:
        """The region S where the mapping is strictly between the rails."""
        a, b = self.lower_knee, self.upper_knee
        return (a, b) if a <= b else (b, a)

    def mapping(self) -> NonlinearMapping:
        return optimal_limiter(self.eta, self.beta)


@dataclass
class SolveOutcome:
    """Result of a limiter optimization.

    ``fixed_points`` lists every distinct converged solution on the
    requested branch, so multiplicity is observable rather than silently
    collapsed; ``params`` is the one with the largest SNDR.
    """

    params: LimiterParams
    sndr_star: float
    iterations: int
    residual: float
    branch: str
    fixed_points: list[LimiterParams] = field(default_factory=list)


def _region_moments(dist: InputDistribution, eta: float, beta: float):
    """Partial moments over (L, S, U) induced by the current (eta, beta)."""
    lower = -beta * eta
    upper = eta - beta * eta
    inf = math.inf
    if eta > 0.0:
        c0l = dist.partial_moment(0, -inf, lower)
        c0s = dist.partial_moment(0, lower, upper)
        c1s = dist.partial_moment(1, lower, upper)
        c0u = dist.partial_moment(0, upper, inf)
        c1u = dist.partial_moment(1, upper, inf)
    else:
        c0u = dist.partial_moment(0, -inf, upper)
        c1u = dist.partial_moment(1, -inf, upper)
        c0s = dist.partial_moment(0, upper, lower)
        c1s = dist.partial_moment(1, upper, lower)
        c0l = dist.partial_moment(0, lower, inf)
    return c0l, c0s, c1s, c0u, c1u


def _stationarity_map(dist: InputDistribution, t: float, eta: float, beta: float):
    """One application of the coupled equations; None when degenerate."""
    c0l, c0s, c1s, c0u, c1u = _region_moments(dist, eta, beta)
    shared = c0u * c1s + c1u - c0s * c1u
    den_eta = c0u * c0l + (1.0 - c0s) * t
    if den_eta <= 0.0 or shared == 0.0:
        return None
    eta_next = shared / den_eta
    beta_next = (c0u * c1s + c0u * c1u + c1s * t) / shared
    if not (math.isfinite(eta_next) and math.isfinite(beta_next)) or eta_next == 0.0:
        return None
    return eta_next, beta_next


def _residual(dist: InputDistribution, t: float, eta: float, beta: float) -> float:
    out = _stationarity_map(dist, t, eta, beta)
    if out is None:
        return math.inf
    return max(abs(eta - out[0]), abs(beta - out[1]))


def _default_starts(dist: InputDistribution, t: float, branch: str):
    c1_half = dist.partial_moment(1, 0.0, math.inf)
    etas = [0.5, 1.0, 2.0, 4.0, 2.0 * c1_half / (0.5 + 2.0 * t)]
    if branch == BRANCH_NEGATIVE:
        etas = [-e for e in etas]
    return [(e, b) for e in etas for b in (0.25, 0.5, 0.75)]


def solve_general(
    dist: InputDistribution,
    t: float,
    branch: str = BRANCH_POSITIVE,
    tol: float = RESIDUAL_TOL,
    max_iter: int = 500,
    damping: float = 0.5,
    starts=None,
) -> SolveOutcome:
    """Optimal limiter parameters by damped alternating fixed-point iteration.

    Works for any standardized density, including asymmetric tabulated
    tables.  Each start iterates

        eta  <- eta  + damping * (eta_eq(eta, beta)  - eta)
        beta <- beta + damping * (beta_eq(eta, beta) - beta)

    until the undamped residual drops below ``tol``.  All converged fixed
    points on the requested branch are collected; the one with the largest
    SNDR wins.  t = 0 has no finite noise to trade against and is rejected
    (use the closed forms to study that limit).

    Raises
    ------
    ConvergenceError
        If no start converges on the requested branch.
    """
    _check_branch(branch)
    if t <= 0.0:
        raise ValueError(f"iterative solver needs t > 0, got {t}")

    if starts is None:
        starts = _default_starts(dist, t, branch)
    starts = list(starts)

    found: list[tuple[LimiterParams, float, int, float]] = []
    off_branch: list[LimiterParams] = []
    for eta0, beta0 in starts:
        eta, beta = float(eta0), float(beta0)
        if eta == 0.0:
            continue
        converged = False
        iterations = 0
        for iterations in range(1, max_iter + 1):
            out = _stationarity_map(dist, t, eta, beta)
            if out is None:
                break
            eta_next, beta_next = out
            res = max(abs(eta - eta_next), abs(beta - beta_next))
            eta += damping * (eta_next - eta)
            beta += damping * (beta_next - beta)
            if res < tol:
                converged = True
                break
        if not converged or eta == 0.0:
            continue
        params = LimiterParams(eta=eta, beta=beta)
        if params.branch != branch:
            off_branch.append(params)
            continue
        report = bussgang(params.mapping(), dist, t)
        found.append((params, report.sndr, iterations, _residual(dist, t, eta, beta)))

    if not found:
        raise ConvergenceError(
            f"no fixed point found on the {branch} branch after "
            f"{len(starts)} starts x {max_iter} iterations (t = {t}); "
            f"{len(off_branch)} converged on the other branch",
            fixed_points=off_branch,
        )

    distinct: list[tuple[LimiterParams, float, int, float]] = []
    for cand in found:
        if not any(
            abs(cand[0].eta - kept[0].eta) < DEDUPE_TOL
            and abs(cand[0].beta - kept[0].beta) < DEDUPE_TOL
            for kept in distinct
        ):
            distinct.append(cand)
    best = max(distinct, key=lambda item: item[1])
    return SolveOutcome(
        params=best[0],
        sndr_star=best[1],
        iterations=best[2],
        residual=best[3],
        branch=branch,
        fixed_points=[item[0] for item in distinct],
    )


def _check_even(dist: InputDistribution) -> None:
    plus = dist.partial_moment(1, 0.0, math.inf)
    minus = dist.partial_moment(1, -math.inf, 0.0)
    if abs(plus + minus) > _EVENNESS_TOL:
        raise ValueError(
            f"density is not even: half-line first moments {plus} vs {minus}"
        )
    half = dist.partial_moment(0, 0.0, math.inf)
    if abs(half - 0.5) > _EVENNESS_TOL:
        raise ValueError(f"density is not even: right half mass {half} != 0.5")


def solve_symmetric(
    dist: InputDistribution,
    t: float,
    branch: str = BRANCH_POSITIVE,
    xtol: float = 1e-13,
) -> SolveOutcome:
    """Optimal limiter for an even density; beta = 1/2 exactly.

    The coupled system collapses to one scalar equation,

        eta * (c0U(eta) + 2t) = 2 * c1U(eta),

    where U is the rail-1 region [eta/2, inf) on the positive branch and
    the mirrored tail on the negative branch.  Solved by safeguarded
    Newton; the derivative of the left-minus-right residual is simply
    c0U + 2t because the boundary terms cancel.
    """
    _check_branch(branch)
    if t <= 0.0:
        raise ValueError(f"iterative solver needs t > 0, got {t}")
    _check_even(dist)

    lo_supp, hi_supp = dist.effective_support()
    inf = math.inf

    if branch == BRANCH_POSITIVE:

        def f(eta: float) -> float:
            half = 0.5 * eta
            return eta * (dist.partial_moment(0, half, inf) + 2.0 * t) - 2.0 * dist.partial_moment(1, half, inf)

        def fp(eta: float) -> float:
            return dist.partial_moment(0, 0.5 * eta, inf) + 2.0 * t

        bracket = (1e-12, 2.0 * hi_supp)
    else:

        def f(eta: float) -> float:
            half = 0.5 * eta
            return eta * (dist.partial_moment(0, -inf, half) + 2.0 * t) - 2.0 * dist.partial_moment(1, -inf, half)

        def fp(eta: float) -> float:
            return dist.partial_moment(0, -inf, 0.5 * eta) + 2.0 * t

        bracket = (2.0 * lo_supp, -1e-12)

    eta_star, iterations = newton_bisect(f, fp, bracket[0], bracket[1], xtol=xtol)
    params = LimiterParams(eta=eta_star, beta=0.5)
    return SolveOutcome(
        params=params,
        sndr_star=optimal_sndr(params, dist, t),
        iterations=iterations,
        residual=_residual(dist, t, eta_star, 0.5),
        branch=branch,
        fixed_points=[params],
    )


def uniform_eta_closed_form(t: float, branch: str = BRANCH_POSITIVE) -> float:
    """Optimal eta for the uniform input, in closed form.

    For the uniform density the scalar symmetric equation becomes the
    quadratic eta^2 - (16 sqrt(3) t + 4 sqrt(3)) eta + 12 = 0, whose
    smaller root is the solution (the larger one would put the knees
    outside the support and is spurious).  Valid for t >= 0; at t = 0 it
    degenerates to the distortion-free ramp eta = 2 sqrt(3).
    """
    _check_branch(branch)
    if t < 0.0:
        raise ValueError(f"t must be nonnegative, got {t}")
    eta = 8.0 * SQRT3 * t + 2.0 * SQRT3 - 4.0 * math.sqrt(12.0 * t * t + 6.0 * t)
    return eta if branch == BRANCH_POSITIVE else -eta


def gaussian_eta_solve(t: float, branch: str = BRANCH_POSITIVE, xtol: float = 1e-13) -> float:
    """Optimal eta for the Gaussian input.

    Solves  eta * (erfc(eta / (2 sqrt(2))) / 2 + 2t) = 2 phi(eta / 2)
    on the bracket (0, 12] (mirrored for the negative branch).  A bracket
    failure reports the residuals at both endpoints.
    """
    _check_branch(branch)
    if t <= 0.0:
        raise ValueError(f"gaussian eta solve needs t > 0, got {t}")

    inv_sqrt_2pi = 1.0 / math.sqrt(2.0 * math.pi)
    sqrt2 = math.sqrt(2.0)

    def f(eta: float) -> float:
        half = 0.5 * eta
        tail = 0.5 * math.erfc(half / sqrt2)
        return eta * (tail + 2.0 * t) - 2.0 * inv_sqrt_2pi * math.exp(-0.125 * eta * eta)

    def fp(eta: float) -> float:
        return 0.5 * math.erfc(0.5 * eta / sqrt2) + 2.0 * t

    def f_neg(eta: float) -> float:
        half = 0.5 * eta
        mass = 0.5 * math.erfc(-half / sqrt2)
        return eta * (mass + 2.0 * t) + 2.0 * inv_sqrt_2pi * math.exp(-0.125 * eta * eta)

    def fp_neg(eta: float) -> float:
        return 0.5 * math.erfc(-0.5 * eta / sqrt2) + 2.0 * t

    if branch == BRANCH_POSITIVE:
        lo, hi, func, dfunc = 1e-12, 12.0, f, fp
    else:
        lo, hi, func, dfunc = -12.0, -1e-12, f_neg, fp_neg
    f_lo, f_hi = func(lo), func(hi)
    if f_lo * f_hi > 0.0:
        raise ValueError(
            f"no sign change on [{lo}, {hi}]: residuals {f_lo:.6e} and {f_hi:.6e}"
        )
    eta_star, _ = newton_bisect(func, dfunc, lo, hi, xtol=xtol)
    return eta_star


def optimal_sndr(params: LimiterParams, dist: InputDistribution, t: float) -> float:
    """SNDR at a converged solution via R / (1 - R).

    R = c2S + eta c1U + eta beta c1S depends on the noise only through the
    solved parameters, which makes this an independent arithmetic path from
    the Bussgang evaluation; the two are required to agree, and a mismatch
    means ``params`` is not actually a solution for this (dist, t) pair.

    Raises
    ------
    ValueError
        If R falls outside (0, 1), or the R-form disagrees with the direct
        Bussgang SNDR beyond tolerance.
    """
    if t < 0.0:
        raise ValueError(f"t must be nonnegative, got {t}")
    eta, beta = params.eta, params.beta
    lower, upper = params.lower_knee, params.upper_knee
    inf = math.inf
    if eta > 0.0:
        c1s = dist.partial_moment(1, lower, upper)
        c2s = dist.partial_moment(2, lower, upper)
        c1u = dist.partial_moment(1, upper, inf)
    else:
        c1s = dist.partial_moment(1, upper, lower)
        c2s = dist.partial_moment(2, upper, lower)
        c1u = dist.partial_moment(1, -inf, upper)
    r = c2s + eta * c1u + eta * beta * c1s
    if not 0.0 < r <= 1.0 + 1e-12:
        raise ValueError(f"R = {r} outside (0, 1]; parameters are not a solution")
    if r >= 1.0 - 1e-12:
        # distortion-free corner (only reachable as t -> 0)
        value = math.inf
    else:
        value = r / (1.0 - r)

    check = bussgang(params.mapping(), dist, t).sndr
    # compare on the bounded scale 1/(1 + SNDR) = 1 - R, which stays
    # meaningful when both values blow up near the distortion-free corner
    value_r = 0.0 if math.isinf(value) else 1.0 / (1.0 + value)
    check_r = 0.0 if math.isinf(check) else 1.0 / (1.0 + check)
    if abs(value_r - check_r) > CONSISTENCY_TOL:
        raise ValueError(
            f"R-form SNDR {value} disagrees with Bussgang value {check}; "
            f"parameters do not solve this (dist, t) instance"
        )
    return value


def optimal_mapping(
    dist: InputDistribution,
    t: float,
    branch: str = BRANCH_POSITIVE,
) -> tuple[SolveOutcome, NonlinearMapping]:
    """Solve for the optimal limiter and return it with its mapping.

    Uses the scalar symmetric path for the built-in even densities and the
    general fixed-point iteration otherwise.
    """
    if isinstance(dist, (UniformSymmetric, StandardGaussian)) or _is_even(dist):
        outcome = solve_symmetric(dist, t, branch=branch)
    else:
        outcome = solve_general(dist, t, branch=branch)
    return outcome, outcome.params.mapping()


def _is_even(dist: InputDistribution) -> bool:
    try:
        _check_even(dist)
    except ValueError:
        return False
    return True


def _check_branch(branch: str) -> None:
    if branch not in (BRANCH_POSITIVE, BRANCH_NEGATIVE):
        raise ValueError(
            f"branch must be {BRANCH_POSITIVE!r} or {BRANCH_NEGATIVE!r}, got {branch!r}"
        )
