"""Memoryless nonlinear mappings and their Bussgang decomposition.

A mapping is a function g: R -> [0, 1] applied to the standardized input
gamma.  The physical nonlinearity is recovered as h(x) = A * g(x / sigma_x)
plus the lower rail offset.  Every mapping form used here (double-sided
limiter, clipped affine law, tabulated piecewise-linear curve) is piecewise
affine, so all the expectations needed for the Bussgang split

    g(gamma) = alpha * gamma + d,   E[gamma * d] = 0

reduce to exact partial moments of the input density on the panels between
knee points.  No sampling or generic quadrature is involved; the integral
is split at the knees and evaluated in closed form panel by panel.

The SNDR convention counts everything that is neither the linear part nor
the DC offset as distortion:

    SNDR = E[gamma g]^2 / (var[g] - E[gamma g]^2 + t),   t = sigma_v^2 / A^2.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy.interpolate import PchipInterpolator

from .distributions import InputDistribution

__all__ = [
    "NonlinearMapping",
    "optimal_limiter",
    "affine_clipped",
    "tabulated_mapping",
    "reference_limiter",
    "eval_mapping",
    "BussgangReport",
    "bussgang",
    "sndr_physical",
    "sndr_db",
    "linear_to_db",
    "db_to_linear",
    "DeviceCurve",
    "load_device_curve",
    "PredistortionTable",
    "predistort_curve",
]

#: a denominator at or below this is treated as distortion-free
DISTORTIONLESS_TOL = 1e-12

#: clipped-output values may stray this far outside [0, 1] before we complain
RANGE_TOL = 1e-9

#: minimum increase between consecutive normalized device outputs
DEVICE_STEP_TOL = 1e-9


class NonlinearMapping:
    """Piecewise-affine mapping of the standardized input into [0, 1].

    Panels are the open intervals between consecutive ``breaks`` (with
    -inf and +inf as outer edges); panel i applies
    ``slopes[i] * gamma + intercepts[i]``.  Construction rejects panels
    whose closure leaves [0, 1].  Continuity across breaks is *not*
    required; the perturbation oracles rely on that freedom.
    """

    __slots__ = ("breaks", "slopes", "intercepts", "form", "params")

    def __init__(self, breaks, slopes, intercepts, form="custom", params=None):
        breaks = np.asarray(breaks, dtype=float)
        slopes = np.asarray(slopes, dtype=float)
        intercepts = np.asarray(intercepts, dtype=float)
        if breaks.ndim != 1 or np.any(np.diff(breaks) < 0.0):
            raise ValueError("breaks must be a sorted 1-d array")
        if slopes.shape != intercepts.shape or slopes.size != breaks.size + 1:
            raise ValueError(
                f"{breaks.size} breaks need {breaks.size + 1} panels, "
                f"got {slopes.size}"
            )
        edges = np.concatenate(([-np.inf], breaks, [np.inf]))
        for i in range(slopes.size):
            lo, hi = edges[i], edges[i + 1]
            for edge in (lo, hi):
                if not math.isfinite(edge):
                    # unbounded panel must be flat to stay inside [0, 1]
                    if slopes[i] != 0.0:
                        raise ValueError("unbounded panels must have zero slope")
                    val = intercepts[i]
                else:
                    val = slopes[i] * edge + intercepts[i]
                if not (-RANGE_TOL <= val <= 1.0 + RANGE_TOL):
                    raise ValueError(
                        f"panel {i} leaves [0, 1]: value {val} at gamma={edge}"
                    )
        self.breaks = breaks
        self.slopes = slopes
        self.intercepts = intercepts
        self.form = form
        self.params = params
        for arr in (self.breaks, self.slopes, self.intercepts):
            arr.flags.writeable = False

    def __call__(self, gamma):
        g = np.asarray(gamma, dtype=float)
        idx = np.searchsorted(self.breaks, g, side="right")
        out = self.slopes[idx] * g + self.intercepts[idx]
        out = np.clip(out, 0.0, 1.0)
        return out if out.ndim else float(out)

    def panels(self):
        """Yield (lo, hi, slope, intercept) for every panel."""
        edges = np.concatenate(([-np.inf], self.breaks, [np.inf]))
        for i in range(self.slopes.size):
            yield float(edges[i]), float(edges[i + 1]), float(self.slopes[i]), float(
                self.intercepts[i]
            )

    def knees(self) -> np.ndarray:
        return self.breaks.copy()

    def __repr__(self) -> str:  # pragma: no cover - cosmetic
        return f"NonlinearMapping(form={self.form!r}, breaks={self.breaks!r})"


def optimal_limiter(eta: float, beta: float) -> NonlinearMapping:
    """Double-sided limiter: rail, affine ramp gamma/eta + beta, rail.

    For eta > 0 the mapping rises from 0 at gamma = -beta*eta to 1 at
    gamma = (1 - beta)*eta; for eta < 0 it falls from 1 to 0 across the
    mirrored knees.  eta = 0 is not a function and is rejected.
    """
    if eta == 0.0 or not math.isfinite(eta) or not math.isfinite(beta):
        raise ValueError(f"need finite eta != 0 and beta, got eta={eta}, beta={beta}")
    lower = -beta * eta
    upper = eta - beta * eta
    if eta > 0.0:
        breaks = [lower, upper]
        slopes = [0.0, 1.0 / eta, 0.0]
        intercepts = [0.0, beta, 1.0]
    else:
        breaks = [upper, lower]
        slopes = [0.0, 1.0 / eta, 0.0]
        intercepts = [1.0, beta, 0.0]
    return NonlinearMapping(
        breaks, slopes, intercepts, form="optimal-limiter",
        params={"eta": float(eta), "beta": float(beta)},
    )


def affine_clipped(
    slope: float,
    intercept: float,
    lo_clip: float = 0.0,
    hi_clip: float = 1.0,
) -> NonlinearMapping:
    """Affine law slope*gamma + intercept clipped to [lo_clip, hi_clip]."""
    if not (0.0 <= lo_clip < hi_clip <= 1.0):
        raise ValueError(f"need 0 <= lo_clip < hi_clip <= 1, got [{lo_clip}, {hi_clip}]")
    if not math.isfinite(slope) or not math.isfinite(intercept):
        raise ValueError("slope and intercept must be finite")
    params = {
        "slope": float(slope), "intercept": float(intercept),
        "lo_clip": float(lo_clip), "hi_clip": float(hi_clip),
    }
    if slope == 0.0:
        value = min(max(intercept, lo_clip), hi_clip)
        return NonlinearMapping([], [0.0], [value], form="affine-clipped", params=params)
    at_lo = (lo_clip - intercept) / slope
    at_hi = (hi_clip - intercept) / slope
    if slope > 0.0:
        breaks = [at_lo, at_hi]
        slopes = [0.0, slope, 0.0]
        intercepts = [lo_clip, intercept, hi_clip]
    else:
        breaks = [at_hi, at_lo]
        slopes = [0.0, slope, 0.0]
        intercepts = [hi_clip, intercept, lo_clip]
    return NonlinearMapping(breaks, slopes, intercepts, form="affine-clipped", params=params)


def tabulated_mapping(knots) -> NonlinearMapping:
    """Piecewise-linear mapping through (gamma_i, value_i) knots.

    Values are clamped into [0, 1]; outside the knot span the mapping
    continues flat at the edge values.
    """
    knots = np.asarray(knots, dtype=float)
    if knots.ndim != 2 or knots.shape[1] != 2 or knots.shape[0] < 2:
        raise ValueError("knots must be an (n, 2) array with n >= 2")
    x = knots[:, 0]
    y = np.clip(knots[:, 1], 0.0, 1.0)
    if np.any(np.diff(x) <= 0.0):
        raise ValueError("knot abscissae must be strictly increasing")
    slopes = [0.0]
    intercepts = [float(y[0])]
    for i in range(x.size - 1):
        s = (y[i + 1] - y[i]) / (x[i + 1] - x[i])
        slopes.append(float(s))
        intercepts.append(float(y[i] - s * x[i]))
    slopes.append(0.0)
    intercepts.append(float(y[-1]))
    return NonlinearMapping(x, slopes, intercepts, form="tabulated", params={"knots": knots})


def reference_limiter() -> NonlinearMapping:
    """Fixed comparison limiter: unit slope, knees at -0.4 and 0.6.

    This is the non-optimized baseline (g2 in the CLI and sweep outputs)
    against which the optimized limiter is benchmarked.
    """
    return affine_clipped(1.0, 0.4)


def eval_mapping(mapping: NonlinearMapping, gamma):
    """Evaluate a mapping at scalar or array gamma."""
    return mapping(gamma)


@dataclass(frozen=True)
class BussgangReport:
    """Bussgang decomposition of a mapping against one input density.

    Attributes
    ----------
    alpha : float
        Linear gain E[gamma * g(gamma)] in normalized units (unit input
        variance, unit dynamic range).
    mean_out : float
        DC component E[g(gamma)].
    second_moment : float
        E[g(gamma)^2].
    distortion_power : float
        Residual power var[g] - alpha^2, nonnegative.
    noise_ratio : float
        The ratio t = sigma_v^2 / A^2 the report was evaluated at.
    sndr : float
        alpha^2 / (distortion_power + t); math.inf when the mapping is
        distortion-free and t = 0.
    """

    alpha: float
    mean_out: float
    second_moment: float
    distortion_power: float
    noise_ratio: float
    sndr: float


def raw_output_moments(
    mapping: NonlinearMapping, dist: InputDistribution
) -> tuple[float, float, float]:
    """Exact (E[g], E[gamma g], E[g^2]) via panel-wise partial moments."""
    e_g = 0.0
    e_yg = 0.0
    e_gg = 0.0
    for lo, hi, s, c in mapping.panels():
        c0 = dist.partial_moment(0, lo, hi)
        c1 = dist.partial_moment(1, lo, hi)
        if c0 == 0.0 and c1 == 0.0:
            continue
        if s == 0.0:
            e_g += c * c0
            e_yg += c * c1
            e_gg += c * c * c0
            continue
        c2 = dist.partial_moment(2, lo, hi)
        e_g += s * c1 + c * c0
        e_yg += s * c2 + c * c1
        e_gg += s * s * c2 + 2.0 * s * c * c1 + c * c * c0
    return e_g, e_yg, e_gg


def sndr_from_moments(e_g: float, e_yg: float, e_gg: float, t: float) -> float:
    """SNDR from the three output moments at noise ratio t."""
    alpha2 = e_yg * e_yg
    denom = e_gg - e_g * e_g - alpha2 + t
    if denom <= DISTORTIONLESS_TOL:
        if alpha2 <= DISTORTIONLESS_TOL**2:
            return 0.0
        return math.inf
    return alpha2 / denom


def bussgang(mapping: NonlinearMapping, dist: InputDistribution, t: float) -> BussgangReport:
    """Bussgang decomposition and SNDR of a mapping.

    Parameters
    ----------
    mapping : NonlinearMapping
    dist : InputDistribution
        Standardized input density.
    t : float
        Noise-to-range ratio sigma_v^2 / A^2, nonnegative.
    """
    if t < 0.0:
        raise ValueError(f"noise ratio t must be nonnegative, got {t}")
    e_g, e_yg, e_gg = raw_output_moments(mapping, dist)
    var_g = max(e_gg - e_g * e_g, 0.0)
    eps_d = var_g - e_yg * e_yg
    if eps_d < -1e-9:
        raise ValueError(f"negative distortion power {eps_d}; inputs are inconsistent")
    eps_d = max(eps_d, 0.0)
    return BussgangReport(
        alpha=e_yg,
        mean_out=e_g,
        second_moment=e_gg,
        distortion_power=eps_d,
        noise_ratio=t,
        sndr=sndr_from_moments(e_g, e_yg, e_gg, t),
    )


def sndr_physical(
    mapping: NonlinearMapping,
    dist: InputDistribution,
    dyn_range: float,
    sigma_x: float,
    noise_var: float,
) -> float:
    """SNDR computed in physical units, h(x) = A * g(x / sigma_x).

    Arithmetically this must coincide with the normalized form evaluated
    at t = noise_var / A^2; it exists so that scale consistency is an
    observable property rather than an article of faith.
    """
    if dyn_range <= 0.0 or sigma_x <= 0.0:
        raise ValueError("dynamic range and sigma_x must be positive")
    e_g, e_yg, e_gg = raw_output_moments(mapping, dist)
    # E[x h] = A sigma_x E[gamma g], E[h] = A E[g], E[h^2] = A^2 E[g^2]
    alpha = dyn_range * e_yg / sigma_x
    signal = alpha * alpha * sigma_x * sigma_x
    mean_h = dyn_range * e_g
    eps_d = dyn_range * dyn_range * e_gg - signal - mean_h * mean_h
    eps_d = max(eps_d, 0.0)
    denom = eps_d + noise_var
    if denom <= DISTORTIONLESS_TOL * dyn_range * dyn_range:
        return 0.0 if signal == 0.0 else math.inf
    return signal / denom


def linear_to_db(value: float) -> float:
    """Power ratio to decibels; 0 maps to -inf, inf maps to +inf."""
    if value < 0.0:
        raise ValueError(f"cannot express negative ratio {value} in dB")
    if value == 0.0:
        return -math.inf
    if math.isinf(value):
        return math.inf
    return 10.0 * math.log10(value)


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def sndr_db(report: BussgangReport | float) -> float:
    """SNDR of a report (or bare ratio) in dB."""
    value = report.sndr if isinstance(report, BussgangReport) else float(report)
    return linear_to_db(value)


# -- device curves and predistortion ---------------------------------------


class DeviceCurve:
    """Monotone drive-to-output characteristic of a physical device.

    The raw output values are affinely normalized onto [0, 1] (the device's
    own swing defines the rails).  Forward and inverse evaluations both use
    monotone piecewise-cubic (PCHIP) interpolation, which cannot overshoot
    and therefore preserves monotonicity between the measured knots.
    """

    def __init__(self, drive, output, normalize: bool = True):
        drive = np.asarray(drive, dtype=float)
        output = np.asarray(output, dtype=float)
        if drive.ndim != 1 or drive.shape != output.shape or drive.size < 2:
            raise ValueError("drive and output must be equal-length 1-d arrays, n >= 2")
        if np.any(np.diff(drive) <= 0.0):
            raise ValueError("drive values must be strictly increasing")
        if normalize:
            lo = float(output.min())
            hi = float(output.max())
            if hi - lo <= 0.0:
                raise ValueError("device output has no swing, cannot normalize")
            normalized = (output - lo) / (hi - lo)
        else:
            normalized = output
            if normalized.min() > DEVICE_STEP_TOL or normalized.max() < 1.0 - DEVICE_STEP_TOL:
                raise ValueError(
                    "device output range does not cover [0, 1]; "
                    "pass normalize=True to rescale"
                )
        if np.any(np.diff(normalized) < DEVICE_STEP_TOL):
            raise ValueError(
                f"device curve is not strictly increasing "
                f"(output steps must exceed {DEVICE_STEP_TOL})"
            )
        self.drive = drive
        self.output = normalized
        self._forward = PchipInterpolator(drive, normalized, extrapolate=False)
        self._inverse = PchipInterpolator(normalized, drive, extrapolate=False)

    def forward(self, drive):
        """Normalized output at the given drive level(s)."""
        d = np.clip(np.asarray(drive, dtype=float), self.drive[0], self.drive[-1])
        out = self._forward(d)
        return out if out.ndim else float(out)

    def invert(self, target):
        """Drive level(s) producing the given normalized output in [0, 1]."""
        y = np.clip(np.asarray(target, dtype=float), 0.0, 1.0)
        out = self._inverse(y)
        return out if out.ndim else float(out)


def load_device_curve(source, normalize: bool = True) -> DeviceCurve:
    """Load a device characteristic from CSV with header ``drive,output``."""
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
            raise ValueError("empty device curve") from None
        if [h.strip() for h in header] != ["drive", "output"]:
            raise ValueError(f"expected header 'drive,output', got {header!r}")
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
    if len(rows) < 2:
        raise ValueError("device curve needs at least two knots")
    drive = np.array([r[0] for r in rows])
    output = np.array([r[1] for r in rows])
    return DeviceCurve(drive, output, normalize=normalize)


@dataclass(frozen=True)
class PredistortionTable:
    """Lookup table gamma -> drive realizing u(f(gamma)) = g(gamma).

    ``sup_error`` is the measured sup-norm of the composition error over
    the probe grid used at construction.
    """

    gamma: np.ndarray
    drive: np.ndarray
    sup_error: float

    def write_csv(self, target) -> None:
        """Write the table as CSV with header ``gamma,drive``."""
        if hasattr(target, "write"):
            _write_lut(target, self.gamma, self.drive)
        else:
            with open(target, "w", encoding="utf-8", newline="") as fh:
                _write_lut(fh, self.gamma, self.drive)


def _write_lut(fh, gamma, drive) -> None:
    fh.write("gamma,drive\n")
    for g, d in zip(gamma, drive):
        fh.write(f"{g:.12g},{d:.12g}\n")


def predistort_curve(
    device: DeviceCurve,
    mapping: NonlinearMapping,
    n_points: int = 256,
    probe_points: int = 10000,
) -> PredistortionTable:
    """Predistorter f with u(f(gamma)) = g(gamma) through a device u.

    The table spans the region where the mapping is strictly inside (0, 1)
    (between the outermost knees); beyond it the drive sits on the rails,
    so tabulating more of the axis would add no information.

    Parameters
    ----------
    device : DeviceCurve
    mapping : NonlinearMapping
        Target mapping, normally the optimized limiter.
    n_points : int
        Number of table rows.
    probe_points : int
        Size of the dense grid on which the composition error is measured.
    """
    if n_points < 2:
        raise ValueError("n_points must be at least 2")
    knees = mapping.knees()
    if knees.size == 0:
        raise ValueError("constant mapping has no active region to predistort")
    lo, hi = float(knees[0]), float(knees[-1])
    if not hi > lo:
        raise ValueError("mapping has no interior ramp")
    gamma = np.linspace(lo, hi, n_points)
    drive = device.invert(mapping(gamma))
    probes = np.linspace(lo, hi, probe_points)
    achieved = device.forward(device.invert(mapping(probes)))
    sup_error = float(np.max(np.abs(achieved - mapping(probes))))
    return PredistortionTable(gamma=gamma, drive=drive, sup_error=sup_error)
