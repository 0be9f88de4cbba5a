"""Standardized input distributions and their partial moments.

Everything downstream works on the normalized input gamma = (x - mu_x) / sigma_x,
so the densities handled here are zero mean and unit variance by contract.
Three kinds are supported:

* ``uniform-symmetric``  -- uniform on [-sqrt(3), sqrt(3)] (unit variance),
* ``standard-gaussian``  -- N(0, 1),
* ``tabulated``          -- piecewise-linear density loaded from a CSV table.

The quantities the limiter optimizer consumes are partial moments

    c_k(a, b) = integral_a^b gamma^k p(gamma) dgamma,   k in {0, 1, 2},

and for all three kinds these reduce to closed-form expressions (polynomial
antiderivatives, or erf/exp terms for the Gaussian), so they are computed
exactly rather than by generic quadrature.  The adaptive Gauss-Legendre
integrator in :mod:`sndropt.quadrature` remains available for integrands
that are not piecewise polynomial against the density.

All objects are immutable after construction and every operation is pure.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "SQRT3",
    "PartialMoments",
    "ChannelSpec",
    "Normalization",
    "normalize_channel",
    "InputDistribution",
    "UniformSymmetric",
    "StandardGaussian",
    "TabulatedPdf",
    "uniform_symmetric",
    "standard_gaussian",
    "partial_moment",
    "moments",
    "load_tabulated_pdf",
    "make_distribution",
]

logger = logging.getLogger(__name__)

SQRT3 = math.sqrt(3.0)

_SQRT2 = math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)

#: construction-time tolerances for a standardized density
MASS_TOL = 1e-9
MEAN_TOL = 1e-6
VAR_TOL = 1e-6

#: minimum number of knots for a tabulated density
MIN_KNOTS = 8


def _phi(x: float) -> float:
    """Standard normal density."""
    return _INV_SQRT_2PI * math.exp(-0.5 * x * x)


def _gauss_mass(a: float, b: float) -> float:
    """P(a <= gamma <= b) for standard normal, stable in both tails."""
    if a >= 0.0:
        return 0.5 * (math.erfc(a / _SQRT2) - math.erfc(b / _SQRT2))
    if b <= 0.0:
        return 0.5 * (math.erfc(-b / _SQRT2) - math.erfc(-a / _SQRT2))
    return 0.5 * (math.erf(b / _SQRT2) + math.erf(-a / _SQRT2))


@dataclass(frozen=True)
class PartialMoments:
    """Order-0/1/2 partial moments of gamma over one interval.

    Attributes
    ----------
    c0, c1, c2 : float
        Mass, first moment and second moment restricted to ``interval``.
    interval : tuple of float
        The (lo, hi) integration range, possibly infinite.
    """

    c0: float
    c1: float
    c2: float
    interval: tuple[float, float]

    def validate(self, tol: float = 1e-9) -> None:
        """Raise if the triple cannot come from a probability density."""
        if not (-tol <= self.c0 <= 1.0 + tol):
            raise ValueError(f"c0 = {self.c0} outside [0, 1]")
        if self.c2 < -tol:
            raise ValueError(f"c2 = {self.c2} negative")
        # Cauchy-Schwartz on the restriction of p to the interval
        if self.c1 * self.c1 > self.c0 * self.c2 + tol:
            raise ValueError(
                f"moments violate c1^2 <= c0*c2: "
                f"{self.c1**2} > {self.c0 * self.c2}"
            )


@dataclass(frozen=True)
class ChannelSpec:
    """Output range and noise level of the memoryless channel.

    The admissible output interval is [a1, a2]; the dynamic range is
    A = a2 - a1.  ``noise_var`` is the additive noise variance sigma_v^2.
    The two derived ratios used everywhere are t = sigma_v^2 / A^2 and
    DSNR = A^2 / sigma_v^2 = 1 / t.
    """

    a1: float
    a2: float
    noise_var: float = 0.0

    def __post_init__(self) -> None:
        if not self.a2 > self.a1:
            raise ValueError(f"need a2 > a1, got [{self.a1}, {self.a2}]")
        if self.noise_var < 0.0:
            raise ValueError("noise variance must be nonnegative")

    @property
    def dynamic_range(self) -> float:
        return self.a2 - self.a1

    @property
    def t(self) -> float:
        """Noise-to-range ratio sigma_v^2 / A^2."""
        return self.noise_var / self.dynamic_range**2

    @property
    def dsnr(self) -> float:
        """Dynamic-range-to-noise ratio A^2 / sigma_v^2."""
        if self.noise_var == 0.0:
            return math.inf
        return self.dynamic_range**2 / self.noise_var


@dataclass(frozen=True)
class Normalization:
    """Affine change of variables from physical input to gamma.

    gamma = (x_raw + shift) * scale, i.e. shift = -mu_x and
    scale = 1 / sigma_x.  ``offset`` is the lower output rail a1 that
    must be added back when mapping normalized outputs to the channel.
    """

    shift: float
    scale: float
    offset: float


def normalize_channel(
    mu_x: float,
    sigma_x: float,
    a1: float,
    a2: float,
    noise_var: float = 0.0,
) -> tuple[ChannelSpec, Normalization]:
    """Center the input and reduce the output range to [0, 1].

    Parameters
    ----------
    mu_x, sigma_x : float
        Mean and standard deviation of the physical input signal.
    a1, a2 : float
        Lower and upper admissible output levels, a2 > a1.
    noise_var : float, optional
        Additive noise variance at the channel output.

    Returns
    -------
    (ChannelSpec, Normalization)
        Channel description plus the recorded input shift/scale.
    """
    if sigma_x <= 0.0:
        raise ValueError(f"sigma_x must be positive, got {sigma_x}")
    spec = ChannelSpec(a1=a1, a2=a2, noise_var=noise_var)
    norm = Normalization(shift=-mu_x, scale=1.0 / sigma_x, offset=a1)
    return spec, norm


class InputDistribution:
    """Base class for standardized (zero-mean, unit-variance) densities."""

    kind: str = "abstract"

    def __init__(self, support: tuple[float, float], tail_epsilon: float = 1e-14):
        self.support = (float(support[0]), float(support[1]))
        self.tail_epsilon = float(tail_epsilon)

    # -- interface -------------------------------------------------------

    def pdf(self, gamma):
        raise NotImplementedError

    def partial_moment(self, order: int, lo: float, hi: float) -> float:
        """Exact integral of gamma^order * p(gamma) over [lo, hi]."""
        raise NotImplementedError

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError

    # -- shared helpers ---------------------------------------------------

    def moments(self, lo: float, hi: float) -> PartialMoments:
        return PartialMoments(
            c0=self.partial_moment(0, lo, hi),
            c1=self.partial_moment(1, lo, hi),
            c2=self.partial_moment(2, lo, hi),
            interval=(lo, hi),
        )

    def effective_support(self) -> tuple[float, float]:
        """Bounded interval outside which the residual mass is < tail_epsilon."""
        return self.support

    @staticmethod
    def _check_interval(order: int, lo: float, hi: float) -> None:
        if order not in (0, 1, 2):
            raise ValueError(f"moment order must be 0, 1 or 2, got {order}")
        if math.isnan(lo) or math.isnan(hi):
            raise ValueError("interval endpoints must not be NaN")
        if lo > hi:
            raise ValueError(f"malformed interval [{lo}, {hi}]")

    def __repr__(self) -> str:  # pragma: no cover - cosmetic
        return f"{type(self).__name__}(support={self.support})"


class UniformSymmetric(InputDistribution):
    """Uniform density on [-sqrt(3), sqrt(3)], unit variance by construction."""

    kind = "uniform-symmetric"

    def __init__(self, tail_epsilon: float = 1e-14):
        super().__init__((-SQRT3, SQRT3), tail_epsilon)
        self._density = 1.0 / (2.0 * SQRT3)

    def pdf(self, gamma):
        g = np.asarray(gamma, dtype=float)
        out = np.where((g >= -SQRT3) & (g <= SQRT3), self._density, 0.0)
        return out if out.ndim else float(out)

    def partial_moment(self, order: int, lo: float, hi: float) -> float:
        self._check_interval(order, lo, hi)
        a = max(lo, -SQRT3)
        b = min(hi, SQRT3)
        if b <= a:
            return 0.0
        n = order + 1
        return (b**n - a**n) / n * self._density

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return rng.uniform(-SQRT3, SQRT3, size=n)


class StandardGaussian(InputDistribution):
    """Standard normal density on the whole line."""

    kind = "standard-gaussian"

    def __init__(self, tail_epsilon: float = 1e-14):
        super().__init__((-math.inf, math.inf), tail_epsilon)

    def pdf(self, gamma):
        g = np.asarray(gamma, dtype=float)
        out = _INV_SQRT_2PI * np.exp(-0.5 * g * g)
        return out if out.ndim else float(out)

    def partial_moment(self, order: int, lo: float, hi: float) -> float:
        self._check_interval(order, lo, hi)
        if hi <= lo:
            return 0.0
        # antiderivatives: d/dx Phi = phi, d/dx (-phi) = x phi,
        # d/dx (Phi - x phi) = x^2 phi
        phi_lo = _phi(lo) if math.isfinite(lo) else 0.0
        phi_hi = _phi(hi) if math.isfinite(hi) else 0.0
        if order == 0:
            return _gauss_mass(lo, hi)
        if order == 1:
            return phi_lo - phi_hi
        mass = _gauss_mass(lo, hi)
        lo_term = lo * phi_lo if math.isfinite(lo) else 0.0
        hi_term = hi * phi_hi if math.isfinite(hi) else 0.0
        return mass + lo_term - hi_term

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return rng.standard_normal(n)

    def effective_support(self) -> tuple[float, float]:
        # largest x with tail mass Q(x) >= tail_epsilon
        from scipy.special import erfcinv

        x = _SQRT2 * float(erfcinv(2.0 * self.tail_epsilon))
        return (-x, x)


class TabulatedPdf(InputDistribution):
    """Piecewise-linear density given by knots (gamma_i, density_i).

    Parameters
    ----------
    grid : array-like
        Strictly increasing knot abscissae.
    density : array-like
        Nonnegative density values at the knots.
    renormalize : bool, optional
        If True, scale to unit mass and then apply the affine change of
        variables that makes the density zero-mean / unit-variance.  The
        applied (shift, scale) pair is stored in ``standardization`` and
        logged.  If False the table must already satisfy the standardized
        invariants, otherwise construction fails.

    Moments are integrated segment by segment; the density is linear on
    each segment so every partial moment is an exact polynomial expression.
    Cumulative moments at the knots are precomputed, which makes interval
    queries O(log n).
    """

    kind = "tabulated"

    def __init__(self, grid, density, renormalize: bool = False):
        grid = np.array(grid, dtype=float)
        density = np.array(density, dtype=float)
        if grid.ndim != 1 or grid.shape != density.shape:
            raise ValueError("grid and density must be 1-d arrays of equal length")
        if grid.size < MIN_KNOTS:
            raise ValueError(f"need at least {MIN_KNOTS} knots, got {grid.size}")
        if not np.all(np.diff(grid) > 0.0):
            raise ValueError("grid must be strictly increasing")
        if np.any(density < 0.0):
            raise ValueError("density values must be nonnegative")
        if not np.all(np.isfinite(grid)) or not np.all(np.isfinite(density)):
            raise ValueError("grid and density must be finite")

        shift, scale = 0.0, 1.0
        if renormalize:
            mass = _pl_moment(grid, density, 0)
            if mass <= 0.0:
                raise ValueError("table has zero total mass")
            density = density / mass
            mean = _pl_moment(grid, density, 1)
            var = _pl_moment(grid, density, 2) - mean**2
            if var <= 0.0:
                raise ValueError("table has zero variance, cannot standardize")
            sigma = math.sqrt(var)
            grid = (grid - mean) / sigma
            density = density * sigma
            shift, scale = -mean, 1.0 / sigma

        super().__init__((float(grid[0]), float(grid[-1])))
        self.grid = grid
        self.density = density
        self.standardization = (shift, scale)
        self.grid.flags.writeable = False
        self.density.flags.writeable = False

        self._validate_standardized()
        # cumulative moments from the left support edge to each knot
        self._cum = [self._cumulative(order) for order in range(3)]
        self._cdf = self._cum[0]

    def _validate_standardized(self) -> None:
        mass = _pl_moment(self.grid, self.density, 0)
        if abs(mass - 1.0) > MASS_TOL:
            raise ValueError(f"total mass {mass} differs from 1 by more than {MASS_TOL}")
        mean = _pl_moment(self.grid, self.density, 1)
        if abs(mean) > MEAN_TOL:
            raise ValueError(f"mean {mean} differs from 0 by more than {MEAN_TOL}")
        var = _pl_moment(self.grid, self.density, 2) - mean**2
        if abs(var - 1.0) > VAR_TOL:
            raise ValueError(f"variance {var} differs from 1 by more than {VAR_TOL}")

    def _cumulative(self, order: int) -> np.ndarray:
        out = np.zeros_like(self.grid)
        for i in range(self.grid.size - 1):
            out[i + 1] = out[i] + _segment_moment(
                self.grid[i], self.grid[i + 1],
                self.density[i], self.density[i + 1],
                order, self.grid[i], self.grid[i + 1],
            )
        return out

    def pdf(self, gamma):
        g = np.asarray(gamma, dtype=float)
        out = np.interp(g, self.grid, self.density, left=0.0, right=0.0)
        return out if out.ndim else float(out)

    def partial_moment(self, order: int, lo: float, hi: float) -> float:
        self._check_interval(order, lo, hi)
        a = max(lo, self.support[0])
        b = min(hi, self.support[1])
        if b <= a:
            return 0.0
        return self._cum_at(order, b) - self._cum_at(order, a)

    def _cum_at(self, order: int, x: float) -> float:
        """Cumulative order-th moment from the left edge up to x."""
        i = int(np.searchsorted(self.grid, x, side="right")) - 1
        i = min(max(i, 0), self.grid.size - 2)
        base = self._cum[order][i]
        return base + _segment_moment(
            self.grid[i], self.grid[i + 1],
            self.density[i], self.density[i + 1],
            order, self.grid[i], x,
        )

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """Inverse-CDF sampling; the CDF is piecewise quadratic."""
        u = rng.random(n)
        cdf = self._cdf / self._cdf[-1]
        idx = np.searchsorted(cdf, u, side="right") - 1
        idx = np.clip(idx, 0, self.grid.size - 2)
        x0 = self.grid[idx]
        x1 = self.grid[idx + 1]
        p0 = self.density[idx]
        p1 = self.density[idx + 1]
        r = u - cdf[idx]
        slope = (p1 - p0) / (x1 - x0)
        # solve (slope/2) d^2 + p0 d = r for the in-segment offset d,
        # written in the cancellation-free form
        disc = np.sqrt(np.maximum(p0 * p0 + 2.0 * slope * r, 0.0))
        denom = p0 + disc
        with np.errstate(divide="ignore", invalid="ignore"):
            d = np.where(denom > 0.0, 2.0 * r / denom, 0.0)
        return x0 + np.minimum(d, x1 - x0)


def _segment_moment(x0, x1, p0, p1, order, a, b) -> float:
    """Exact integral of gamma^order * p over [a, b] within one linear segment."""
    if b <= a:
        return 0.0
    slope = (p1 - p0) / (x1 - x0)
    const = p0 - slope * x0
    n = order + 1
    poly = const * (b**n - a**n) / n + slope * (b ** (n + 1) - a ** (n + 1)) / (n + 1)
    return float(poly)


def _pl_moment(grid: np.ndarray, density: np.ndarray, order: int) -> float:
    total = 0.0
    for i in range(grid.size - 1):
        total += _segment_moment(
            grid[i], grid[i + 1], density[i], density[i + 1],
            order, grid[i], grid[i + 1],
        )
    return total


# -- module-level convenience ---------------------------------------------

def uniform_symmetric() -> UniformSymmetric:
    return UniformSymmetric()


def standard_gaussian() -> StandardGaussian:
    return StandardGaussian()


def partial_moment(dist: InputDistribution, order: int, interval) -> float:
    """Partial moment E[gamma^order ; interval] of a standardized density."""
    lo, hi = interval
    return dist.partial_moment(order, lo, hi)


def moments(dist: InputDistribution, interval) -> PartialMoments:
    lo, hi = interval
    return dist.moments(lo, hi)


def load_tabulated_pdf(source, renormalize: bool = False) -> TabulatedPdf:
    """Load a piecewise-linear density from CSV with header ``gamma,density``.

    Parameters
    ----------
    source : str, path-like or file-like
        CSV location or an open text stream.
    renormalize : bool, optional
        Scale to unit mass and standardize to zero mean / unit variance.
        Off by default: a table that is not already standardized is an error,
        so silent rescaling can never happen.
    """
    if hasattr(source, "read"):
        stream = source
        close = False
    else:
        stream = open(source, "r", encoding="utf-8", newline="")
        close = True
    try:
        reader = csv.reader(stream)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError("empty density table") from None
        if [h.strip() for h in header] != ["gamma", "density"]:
            raise ValueError(f"expected header 'gamma,density', got {header!r}")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 2:
                raise ValueError(f"line {lineno}: expected 2 columns, got {len(row)}")
            try:
                rows.append((float(row[0]), float(row[1])))
            except ValueError:
                raise ValueError(f"line {lineno}: non-numeric entry {row!r}") from None
    finally:
        if close:
            stream.close()

    if len(rows) < MIN_KNOTS:
        raise ValueError(f"need at least {MIN_KNOTS} knots, got {len(rows)}")
    grid = np.array([r[0] for r in rows])
    density = np.array([r[1] for r in rows])
    dist = TabulatedPdf(grid, density, renormalize=renormalize)
    shift, scale = dist.standardization
    if renormalize:
        logger.info(
            "standardized tabulated density: shift=%.12g scale=%.12g", shift, scale
        )
    return dist


def make_distribution(spec: str, renormalize: bool = False) -> InputDistribution:
    """Resolve a CLI-style distribution spec.

    ``"uniform"`` and ``"gaussian"`` name the built-ins; ``"file:<path>"``
    loads a tabulated density table.
    """
    if spec == "uniform":
        return UniformSymmetric()
    if spec == "gaussian":
        return StandardGaussian()
    if spec.startswith("file:"):
        path = spec[len("file:"):]
        if not path:
            raise ValueError("empty path in 'file:' distribution spec")
        return load_tabulated_pdf(path, renormalize=renormalize)
    raise ValueError(
        f"unknown distribution {spec!r}; expected 'uniform', 'gaussian' or 'file:<path>'"
    )
