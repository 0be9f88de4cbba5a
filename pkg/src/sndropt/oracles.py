"""Brute-force and perturbation oracles for the limiter optimum.

Nothing in this module trusts the solver equations.  Each oracle attacks
the claimed optimum from a different direction:

* exhaustive grid search over (eta, beta) within the limiter family,
* slivers of the ramp region forced onto a rail (the structural
  perturbations behind the optimality argument),
* smooth function-space bumps inside the ramp, whose SNDR loss must
  scale quadratically with bump size at a true stationary point,
* the best piecewise-constant mapping on an n-segment partition of the
  ramp region, optimized by coordinate ascent, which must approach the
  affine optimum from below as the partition refines,
* seeded Monte Carlo re-estimation of the SNDR integrals.

Every check emits a :class:`PerturbationReport`; the CSV schema is
``kind,magnitude,baseline,perturbed,delta``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple

import numpy as np

from .distributions import InputDistribution
from .mappings import (
    NonlinearMapping,
    bussgang,
    optimal_limiter,
    raw_output_moments,
    sndr_from_moments,
)
from .quadrature import adaptive_gauss_legendre
from .solvers import LimiterParams

__all__ = [
    "SLIVER_LOW",
    "SLIVER_HIGH",
    "MISPLACED_LOW",
    "OracleViolation",
    "PerturbationReport",
    "write_reports_csv",
    "GridResult",
    "grid_search",
    "notched_limiter",
    "perturb_sets",
    "sliver_suite",
    "bump_report",
    "perturb_function_space",
    "ScalingFit",
    "bump_scaling_fit",
    "PiecewiseConstantResult",
    "piecewise_constant_best",
    "MonteCarloResult",
    "monte_carlo_sndr",
]

#: a perturbation may "beat" the optimum by at most this much (numerics)
IMPROVEMENT_TOL = 1e-9

#: largest allowed bump magnitude; beyond this the quadratic regime is gone
MAX_BUMP_SCALE = 0.05

SLIVER_LOW = "sliver-to-low-rail"
SLIVER_HIGH = "sliver-to-high-rail"
MISPLACED_LOW = "low-rail-misplaced"

_SLIVER_KINDS = (SLIVER_LOW, SLIVER_HIGH, MISPLACED_LOW)


class OracleViolation(AssertionError):
    """An oracle check failed; ``reports`` holds the offending rows."""

    def __init__(self, message: str, reports=None):
        super().__init__(message)
        self.reports = list(reports or [])


@dataclass(frozen=True)
class PerturbationReport:
    """Outcome of a single oracle check.

    ``magnitude`` is the size of whatever was perturbed (sliver width,
    bump scale, grid points, Monte Carlo 3-sigma radius), so rows from
    different checks share one schema.
    """

    kind: str
    magnitude: float
    baseline_sndr: float
    perturbed_sndr: float

    @property
    def delta(self) -> float:
        return self.perturbed_sndr - self.baseline_sndr


def write_reports_csv(reports: Iterable[PerturbationReport], target) -> None:
    """Write reports as CSV rows ``kind,magnitude,baseline,perturbed,delta``."""

    def _write(fh):
        fh.write("kind,magnitude,baseline,perturbed,delta\n")
        for r in reports:
            fh.write(
                f"{r.kind},{r.magnitude:.12g},{r.baseline_sndr:.12g},"
                f"{r.perturbed_sndr:.12g},{r.delta:.12g}\n"
            )

    if hasattr(target, "write"):
        _write(target)
    else:
        with open(target, "w", encoding="utf-8", newline="") as fh:
            _write(fh)


# -- exhaustive search ------------------------------------------------------


class GridResult(NamedTuple):
    eta: float
    beta: float
    sndr: float


def grid_search(
    dist: InputDistribution,
    t: float,
    eta_grid,
    beta_grid,
) -> GridResult:
    """Best limiter on a rectangular (eta, beta) grid, by direct evaluation.

    Any grid is accepted (a 1 x 1 grid simply returns that point), but as
    an optimality witness the grid should have at least 64 points per
    axis so the winning cell brackets the solver's solution.
    """
    eta_grid = np.asarray(eta_grid, dtype=float)
    beta_grid = np.asarray(beta_grid, dtype=float)
    if eta_grid.size == 0 or beta_grid.size == 0:
        raise ValueError("grids must be non-empty")
    if np.any(eta_grid == 0.0):
        raise ValueError("eta grid must not contain 0")
    best = GridResult(eta=float(eta_grid[0]), beta=float(beta_grid[0]), sndr=-math.inf)
    for eta in eta_grid:
        for beta in beta_grid:
            report = bussgang(optimal_limiter(eta, beta), dist, t)
            if report.sndr > best.sndr:
                best = GridResult(eta=float(eta), beta=float(beta), sndr=report.sndr)
    return best


# -- structural (set) perturbations ----------------------------------------


def notched_limiter(params: LimiterParams, sliver: tuple[float, float], rail: float) -> NonlinearMapping:
    """Limiter with the interval ``sliver`` of its ramp forced to a rail."""
    if rail not in (0.0, 1.0):
        raise ValueError(f"rail must be 0 or 1, got {rail}")
    a, b = float(sliver[0]), float(sliver[1])
    s_lo, s_hi = params.ramp_interval()
    if not (s_lo <= a <= b <= s_hi):
        raise ValueError(
            f"sliver [{a}, {b}] not inside the ramp region [{s_lo}, {s_hi}]"
        )
    eta, beta = params.eta, params.beta
    ramp = (1.0 / eta, beta)
    if eta > 0.0:
        breaks = [s_lo, a, b, s_hi]
        slopes = [0.0, ramp[0], 0.0, ramp[0], 0.0]
        intercepts = [0.0, ramp[1], rail, ramp[1], 1.0]
    else:
        breaks = [s_lo, a, b, s_hi]
        slopes = [0.0, ramp[0], 0.0, ramp[0], 0.0]
        intercepts = [1.0, ramp[1], rail, ramp[1], 0.0]
    return NonlinearMapping(breaks, slopes, intercepts, form="notched-limiter")


def _default_sliver(params: LimiterParams, width: float, case: str) -> tuple[float, float]:
    s_lo, s_hi = params.ramp_interval()
    rising = params.eta > 0.0
    if case == SLIVER_LOW:
        # grow the low rail from its own knee
        return (s_lo, s_lo + width) if rising else (s_hi - width, s_hi)
    if case == SLIVER_HIGH:
        return (s_hi - width, s_hi) if rising else (s_lo, s_lo + width)
    # misplaced low rail: a zero-rail sliver on the side where the mapping
    # should be large
    if rising:
        start = max(s_lo, 0.0)
        return (start, start + width)
    end = min(s_hi, 0.0)
    return (end - width, end)


def perturb_sets(
    dist: InputDistribution,
    t: float,
    params: LimiterParams,
    width: float,
    case: str,
    position: float | None = None,
) -> PerturbationReport:
    """Force a sliver of the ramp region onto a rail and re-evaluate SNDR.

    ``case`` selects the structural perturbation:

    * ``sliver-to-low-rail``  -- sliver clipped to 0 (the low rail grows),
    * ``sliver-to-high-rail`` -- sliver clipped to 1 (the high rail grows),
    * ``low-rail-misplaced``  -- sliver clipped to 0 on the half-line where
      the ramp is heading toward the high rail, which a correctly oriented
      optimum never does.

    By default the sliver sits against the knee the case refers to;
    ``position`` places its left edge elsewhere inside the ramp.  At a
    true optimum the perturbed SNDR can never exceed the baseline.
    """
    if case not in _SLIVER_KINDS:
        raise ValueError(f"unknown case {case!r}; expected one of {_SLIVER_KINDS}")
    if width < 0.0:
        raise ValueError(f"sliver width must be nonnegative, got {width}")
    if position is None:
        sliver = _default_sliver(params, width, case)
    else:
        sliver = (position, position + width)
    if case == MISPLACED_LOW:
        half = (0.0, math.inf) if params.eta > 0.0 else (-math.inf, 0.0)
        if not (half[0] <= sliver[0] and sliver[1] <= half[1]):
            raise ValueError(
                f"misplaced-rail sliver {sliver} must lie in the half-line {half}"
            )
    rail = 1.0 if case == SLIVER_HIGH else 0.0
    baseline = bussgang(params.mapping(), dist, t).sndr
    perturbed = bussgang(notched_limiter(params, sliver, rail), dist, t).sndr
    return PerturbationReport(
        kind=case, magnitude=width, baseline_sndr=baseline, perturbed_sndr=perturbed
    )


def sliver_suite(
    dist: InputDistribution,
    t: float,
    params: LimiterParams,
    case: str,
    n_trials: int,
    seed: int = 0,
) -> list[PerturbationReport]:
    """Randomized slivers for one case; deterministic for a given seed."""
    if case not in _SLIVER_KINDS:
        raise ValueError(f"unknown case {case!r}; expected one of {_SLIVER_KINDS}")
    rng = np.random.default_rng(seed)
    s_lo, s_hi = params.ramp_interval()
    if case == MISPLACED_LOW:
        if params.eta > 0.0:
            s_lo = max(s_lo, 0.0)
        else:
            s_hi = min(s_hi, 0.0)
    span = s_hi - s_lo
    if span <= 0.0:
        raise ValueError("ramp region has no interior for this case")
    reports = []
    for _ in range(n_trials):
        width = span * rng.uniform(0.005, 0.15)
        start = s_lo + rng.uniform(0.0, span - width)
        reports.append(
            perturb_sets(dist, t, params, width, case, position=start)
        )
    return reports


# -- function-space perturbations -------------------------------------------


def _bump_profile(u: np.ndarray) -> np.ndarray:
    """cos^2 bump: 1 at the center, identically 0 outside |u| >= 1."""
    out = np.zeros_like(u)
    inside = np.abs(u) < 1.0
    out[inside] = np.cos(0.5 * np.pi * u[inside]) ** 2
    return out


def _bump_integrals(
    dist: InputDistribution, center: float, width: float
) -> tuple[float, float, float]:
    """(B0, B1, B2) = integrals of b, gamma*b, b^2 against the density."""

    def b_pdf(g):
        return _bump_profile((g - center) / width) * dist.pdf(g)

    def gb_pdf(g):
        return g * b_pdf(g)

    def b2_pdf(g):
        return _bump_profile((g - center) / width) ** 2 * dist.pdf(g)

    lo, hi = center - width, center + width
    # split at density knots so each piece is analytic
    points = [lo, hi]
    if hasattr(dist, "grid"):
        interior = [x for x in np.asarray(dist.grid) if lo < x < hi]
        points = [lo, *interior, hi]
    b0 = b1 = b2 = 0.0
    for a, b in zip(points[:-1], points[1:]):
        b0 += adaptive_gauss_legendre(b_pdf, a, b, tol=1e-14)
        b1 += adaptive_gauss_legendre(gb_pdf, a, b, tol=1e-14)
        b2 += adaptive_gauss_legendre(b2_pdf, a, b, tol=1e-14)
    return b0, b1, b2


def bump_report(
    dist: InputDistribution,
    t: float,
    params: LimiterParams,
    center: float,
    width: float,
    magnitude: float,
) -> PerturbationReport:
    """SNDR change from adding ``magnitude * bump`` to the ramp.

    The bump is the smooth cos^2 profile supported on
    [center - width, center + width], which must lie inside the ramp
    region, and the perturbed mapping must stay inside [0, 1]; violations
    raise rather than being clamped away, because a clamped bump is no
    longer the perturbation whose scaling we want to measure.

    The perturbed moments are the exact panel moments plus small bump
    correction integrals, so the SNDR difference is resolved far below
    the bump's own effect size.
    """
    if abs(magnitude) > MAX_BUMP_SCALE:
        raise ValueError(f"|magnitude| must be <= {MAX_BUMP_SCALE}, got {magnitude}")
    if width <= 0.0:
        raise ValueError(f"bump width must be positive, got {width}")
    s_lo, s_hi = params.ramp_interval()
    if not (s_lo <= center - width and center + width <= s_hi):
        raise ValueError(
            f"bump support [{center - width}, {center + width}] leaves the "
            f"ramp region [{s_lo}, {s_hi}]"
        )
    # range check on the exact profile: ramp value +/- bump at dense probes
    probes = np.linspace(center - width, center + width, 401)
    ramp_vals = probes / params.eta + params.beta
    bumped = ramp_vals + magnitude * _bump_profile((probes - center) / width)
    if bumped.min() < 0.0 or bumped.max() > 1.0:
        raise ValueError(
            f"bump of magnitude {magnitude} pushes the mapping outside [0, 1]"
        )

    mapping = params.mapping()
    e_g, e_yg, e_gg = raw_output_moments(mapping, dist)
    baseline = sndr_from_moments(e_g, e_yg, e_gg, t)

    b0, b1, b2 = _bump_integrals(dist, center, width)
    slope, icpt = 1.0 / params.eta, params.beta
    bg = slope * b1 + icpt * b0  # integral of g * bump * pdf
    m = magnitude
    perturbed = sndr_from_moments(
        e_g + m * b0,
        e_yg + m * b1,
        e_gg + 2.0 * m * bg + m * m * b2,
        t,
    )
    return PerturbationReport(
        kind="bump", magnitude=magnitude, baseline_sndr=baseline, perturbed_sndr=perturbed
    )


def _random_bumps(params: LimiterParams, n_trials: int, rng: np.random.Generator):
    """Random (center, width, sign) triples comfortably inside the ramp."""
    s_lo, s_hi = params.ramp_interval()
    span = s_hi - s_lo
    out = []
    for _ in range(n_trials):
        width = span * rng.uniform(0.03, 0.10)
        center = rng.uniform(s_lo + 0.2 * span, s_hi - 0.2 * span)
        sign = 1.0 if rng.random() < 0.5 else -1.0
        out.append((center, width, sign))
    return out


def perturb_function_space(
    dist: InputDistribution,
    t: float,
    params: LimiterParams,
    n_trials: int,
    bump_scale: float,
    seed: int = 0,
) -> list[PerturbationReport]:
    """Randomly placed smooth bumps of one scale; deterministic per seed."""
    if not 0.0 <= bump_scale <= MAX_BUMP_SCALE:
        raise ValueError(f"bump_scale must be in [0, {MAX_BUMP_SCALE}], got {bump_scale}")
    rng = np.random.default_rng(seed)
    reports = []
    for center, width, sign in _random_bumps(params, n_trials, rng):
        reports.append(
            bump_report(dist, t, params, center, width, sign * bump_scale)
        )
    return reports


@dataclass(frozen=True)
class ScalingFit:
    """Log-log fit of mean |SNDR change| against bump scale."""

    slope: float
    r_squared: float
    scales: tuple[float, ...]
    mean_abs_delta: tuple[float, ...]


def bump_scaling_fit(
    dist: InputDistribution,
    t: float,
    params: LimiterParams,
    scales,
    n_trials: int = 8,
    seed: int = 0,
) -> ScalingFit:
    """Measure how the bump-induced SNDR loss scales with bump magnitude.

    The same randomly drawn bump shapes are reused at every scale, so the
    fit sees a clean one-parameter family.  At a stationary optimum the
    log-log slope is 2 (first-order terms vanish); a slope near 1 would
    expose a point that merely pretends to be optimal.
    """
    scales = [float(s) for s in scales]
    if len(scales) < 2:
        raise ValueError("need at least two scales for a fit")
    rng = np.random.default_rng(seed)
    bumps = _random_bumps(params, n_trials, rng)
    means = []
    for scale in scales:
        deltas = []
        for center, width, sign in bumps:
            rep = bump_report(dist, t, params, center, width, sign * scale)
            deltas.append(abs(rep.delta))
        means.append(float(np.mean(deltas)))
    x = np.log(np.asarray(scales))
    y = np.log(np.asarray(means))
    slope, _ = np.polyfit(x, y, 1)
    corr = np.corrcoef(x, y)[0, 1]
    return ScalingFit(
        slope=float(slope),
        r_squared=float(corr * corr),
        scales=tuple(scales),
        mean_abs_delta=tuple(means),
    )


# -- best piecewise-constant mapping ----------------------------------------


@dataclass(frozen=True)
class PiecewiseConstantResult:
    """Best piecewise-constant mapping on an n-segment ramp partition."""

    sndr: float
    edges: np.ndarray
    values: np.ndarray


def piecewise_constant_best(
    dist: InputDistribution,
    t: float,
    params: LimiterParams,
    n_segments: int,
    sweeps: int = 100,
) -> PiecewiseConstantResult:
    """Coordinate-ascent optimum over piecewise-constant mappings.

    The ramp region is split into ``n_segments`` equal cells, the rails
    are kept, and each cell's level in [0, 1] is optimized in turn.  For
    a single level the SNDR is a ratio of quadratics whose stationarity
    condition is linear, so every coordinate update is closed-form (the
    candidate is compared against the endpoints 0 and 1, since the
    stationary point of a ratio can be a minimum).

    The achievable SNDR increases with refinement and approaches the
    affine optimum from below, which is the discretized way of seeing
    that the true optimizer is affine between the rails.
    """
    if n_segments < 1:
        raise ValueError("need at least one segment")
    if t <= 0.0:
        raise ValueError(f"piecewise-constant oracle needs t > 0, got {t}")
    s_lo, s_hi = params.ramp_interval()
    edges = np.linspace(s_lo, s_hi, n_segments + 1)
    c0 = np.array([dist.partial_moment(0, a, b) for a, b in zip(edges[:-1], edges[1:])])
    c1 = np.array([dist.partial_moment(1, a, b) for a, b in zip(edges[:-1], edges[1:])])
    inf = math.inf
    if params.eta > 0.0:
        rail_c0 = dist.partial_moment(0, s_hi, inf)
        rail_c1 = dist.partial_moment(1, s_hi, inf)
    else:
        rail_c0 = dist.partial_moment(0, -inf, s_lo)
        rail_c1 = dist.partial_moment(1, -inf, s_lo)

    v = np.full(n_segments, 0.5)
    # running sums of v*c1, v*c0, v^2*c0 over the cells
    q_sum = float(np.dot(v, c1))
    m_sum = float(np.dot(v, c0))
    g_sum = float(np.dot(v * v, c0))

    def sndr_at(vi, i, q0, m0, g0):
        a = c1[i] * vi + q0
        mean = c0[i] * vi + m0
        second = c0[i] * vi * vi + g0
        denom = second - a * a - mean * mean + t
        if denom <= 0.0:
            return -math.inf
        return a * a / denom

    for _ in range(sweeps):
        moved = 0.0
        for i in range(n_segments):
            q0 = q_sum - v[i] * c1[i] + rail_c1
            m0 = m_sum - v[i] * c0[i] + rail_c0
            g0 = g_sum - v[i] * v[i] * c0[i] + rail_c0
            candidates = [0.0, 1.0, v[i]]
            if c0[i] > 0.0:
                num = c1[i] * (g0 + t) - c1[i] * m0 * m0 + c0[i] * q0 * m0
                den = c0[i] * (c1[i] * m0 + q0 * (1.0 - c0[i]))
                if den != 0.0:
                    candidates.append(min(max(num / den, 0.0), 1.0))
            best_v = max(candidates, key=lambda vi: sndr_at(vi, i, q0, m0, g0))
            if best_v != v[i]:
                moved = max(moved, abs(best_v - v[i]))
                q_sum += (best_v - v[i]) * c1[i]
                m_sum += (best_v - v[i]) * c0[i]
                g_sum += (best_v * best_v - v[i] * v[i]) * c0[i]
                v[i] = best_v
        if moved < 1e-14:
            break

    denom = (g_sum + rail_c0) - (q_sum + rail_c1) ** 2 - (m_sum + rail_c0) ** 2 + t
    sndr = (q_sum + rail_c1) ** 2 / denom if denom > 0.0 else math.inf
    return PiecewiseConstantResult(sndr=float(sndr), edges=edges, values=v)


# -- Monte Carlo -------------------------------------------------------------


@dataclass(frozen=True)
class MonteCarloResult:
    """Sample estimate of SNDR with a delta-method standard error."""

    estimate: float
    std_error: float
    n_samples: int
    seed: int


def monte_carlo_sndr(
    mapping: NonlinearMapping,
    dist: InputDistribution,
    t: float,
    n_samples: int,
    seed: int,
) -> MonteCarloResult:
    """Estimate SNDR from i.i.d. draws of the input.

    The estimator plugs the sample means of (gamma*g, g, g^2) into the
    SNDR formula; its standard error comes from the delta method with the
    empirical covariance of those three observables.  Sampling uses
    ``numpy``'s seeded generator (inverse-CDF for tabulated densities),
    so a given seed always reproduces the same estimate bit for bit.
    """
    if n_samples < 2:
        raise ValueError("need at least two samples")
    if t < 0.0:
        raise ValueError(f"noise ratio t must be nonnegative, got {t}")
    if not hasattr(dist, "sample"):
        raise ValueError(f"distribution kind {dist.kind!r} does not support sampling")
    rng = np.random.default_rng(seed)
    gamma = dist.sample(n_samples, rng)
    g = mapping(gamma)
    if np.ptp(g) == 0.0:
        # constant output carries no signal; the plug-in estimate would
        # report a spurious O(1/n) correlation with the input
        return MonteCarloResult(0.0, 0.0, n_samples, seed)
    obs = np.stack([gamma * g, g, g * g])
    a, b, c = obs.mean(axis=1)
    denom = c - a * a - b * b + t
    if denom <= 0.0:
        return MonteCarloResult(
            estimate=math.inf if a != 0.0 else 0.0,
            std_error=math.nan,
            n_samples=n_samples,
            seed=seed,
        )
    estimate = a * a / denom
    if a == 0.0:
        return MonteCarloResult(0.0, 0.0, n_samples, seed)
    grad = np.array(
        [
            (2.0 * a * denom + 2.0 * a**3) / denom**2,
            2.0 * a * a * b / denom**2,
            -(a * a) / denom**2,
        ]
    )
    cov = np.cov(obs, ddof=1)
    variance = float(grad @ cov @ grad) / n_samples
    return MonteCarloResult(
        estimate=float(estimate),
        std_error=math.sqrt(max(variance, 0.0)),
        n_samples=n_samples,
        seed=seed,
    )
