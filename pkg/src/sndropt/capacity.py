"""Capacity bounds for the range-constrained noisy channel.

With Gaussian input, treating the Bussgang distortion as worst-case
additional Gaussian noise gives the achievable-rate lower bound

    C >= 1/2 log(1 + SNDR),

while conditioning on the bounded output and maximizing output variance
gives

    C <= 1/2 log(1 + DSNR / 4),      DSNR = A^2 / sigma_v^2.

The same variance argument caps every mapping's SNDR at DSNR / 4, which
is the universal ceiling enforced throughout the test suite.  Rates are
in nats by default; pass ``log_base='bits'`` to divide by ln 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .distributions import InputDistribution, StandardGaussian
from .mappings import NonlinearMapping, bussgang

__all__ = [
    "LOG_NATS",
    "LOG_BITS",
    "CapacityBounds",
    "lower_bound",
    "upper_bound",
    "sndr_cap",
    "capacity_bounds",
]

LOG_NATS = "nats"
LOG_BITS = "bits"
_LN2 = math.log(2.0)


def _check_log_base(log_base: str) -> None:
    if log_base not in (LOG_NATS, LOG_BITS):
        raise ValueError(f"log_base must be 'nats' or 'bits', got {log_base!r}")


def _rate(snr: float, log_base: str) -> float:
    value = 0.5 * math.log1p(snr)
    return value / _LN2 if log_base == LOG_BITS else value


@dataclass(frozen=True)
class CapacityBounds:
    """Lower and upper capacity bounds at one operating point.

    ``lower`` and ``upper`` are expressed in ``log_base`` units; ``dsnr``
    is the linear dynamic-range-to-noise ratio they were computed at.
    """

    lower: float
    upper: float
    dsnr: float
    log_base: str

    def __post_init__(self) -> None:
        _check_log_base(self.log_base)


def lower_bound(
    t: float,
    mapping: NonlinearMapping | None = None,
    dist: InputDistribution | None = None,
    log_base: str = LOG_NATS,
) -> float:
    """Achievable rate 1/2 log(1 + SNDR) for a Gaussian input.

    Parameters
    ----------
    t : float
        Noise-to-range ratio sigma_v^2 / A^2, positive.
    mapping : NonlinearMapping, optional
        Mapping to evaluate.  Defaults to the SNDR-optimal limiter for
        this t, which is the tightest instance of the bound.
    dist : InputDistribution, optional
        Input density; the bound's derivation assumes the standard
        Gaussian, which is the default.
    log_base : {'nats', 'bits'}
    """
    _check_log_base(log_base)
    if t <= 0.0:
        raise ValueError(f"lower bound needs t > 0, got {t}")
    if dist is None:
        dist = StandardGaussian()
    if mapping is None:
        from .solvers import optimal_mapping

        _, mapping = optimal_mapping(dist, t)
    return _rate(bussgang(mapping, dist, t).sndr, log_base)


def upper_bound(dsnr: float, log_base: str = LOG_NATS) -> float:
    """Converse bound 1/2 log(1 + DSNR / 4)."""
    _check_log_base(log_base)
    if dsnr <= 0.0:
        raise ValueError(f"upper bound needs dsnr > 0, got {dsnr}")
    return _rate(0.25 * dsnr, log_base)


def sndr_cap(t: float) -> float:
    """Universal SNDR ceiling DSNR / 4 = 1 / (4t) for any mapping."""
    if t <= 0.0:
        raise ValueError(f"sndr cap needs t > 0, got {t}")
    return 0.25 / t


def capacity_bounds(
    t: float,
    mapping: NonlinearMapping | None = None,
    log_base: str = LOG_NATS,
) -> CapacityBounds:
    """Both bounds at noise ratio t, as one record."""
    dsnr = 1.0 / t
    return CapacityBounds(
        lower=lower_bound(t, mapping=mapping, log_base=log_base),
        upper=upper_bound(dsnr, log_base=log_base),
        dsnr=dsnr,
        log_base=log_base,
    )
