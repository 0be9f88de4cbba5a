"""Scikit-learn style transformer wrapping the limiter optimizer.

The functional core works in normalized coordinates; this wrapper owns
the bookkeeping for raw signals: ``fit`` estimates the signal's mean and
scale, solves for the SNDR-optimal limiter under the declared input
family and noise level, and ``transform`` drives samples through the
fitted limiter onto the physical output range [out_low, out_high].
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .distributions import InputDistribution, StandardGaussian, UniformSymmetric
from .mappings import db_to_linear
from .solvers import BRANCH_POSITIVE, optimal_mapping

__all__ = ["OptimalLimiter"]


class OptimalLimiter(TransformerMixin, BaseEstimator):
    """SNDR-optimal double-sided limiter as a transformer.

    Parameters
    ----------
    dist : {'gaussian', 'uniform'} or InputDistribution, default='gaussian'
        Standardized family assumed for the input signal.  Densities are
        never estimated from the data; pass a TabulatedPdf instance for a
        measured density.
    dsnr_db : float, default=20.0
        Dynamic-range-to-noise ratio A^2 / sigma_v^2 in dB.
    branch : {'positive', 'negative'}, default='positive'
        Rising or falling ramp.
    out_low, out_high : float, default=(0.0, 1.0)
        Physical output rails [a1, a2].
    standardize : bool, default=True
        Estimate mean and scale from the data in ``fit``.  With False the
        data is assumed already standardized.

    Attributes
    ----------
    mu_, sigma_ : float
        Estimated input location and scale.
    eta_, beta_ : float
        Optimal limiter parameters in normalized coordinates.
    sndr_ : float
        SNDR achieved at the fitted parameters (linear scale).
    lower_knee_, upper_knee_ : float
        Ramp endpoints in normalized coordinates.
    mapping_ : NonlinearMapping
        The fitted normalized mapping.
    outcome_ : SolveOutcome
        Full solver diagnostics.

    Examples
    --------
    >>> import numpy as np
    >>> from sndropt.estimator import OptimalLimiter
    >>> rng = np.random.default_rng(0)
    >>> x = 3.0 + 0.5 * rng.standard_normal(10000)
    >>> lim = OptimalLimiter(dist="gaussian", dsnr_db=20.0).fit(x)
    >>> drive = lim.transform(x)
    >>> float(drive.min()) >= 0.0 and float(drive.max()) <= 1.0
    True
    """

    def __init__(
        self,
        dist="gaussian",
        dsnr_db: float = 20.0,
        branch: str = BRANCH_POSITIVE,
        out_low: float = 0.0,
        out_high: float = 1.0,
        standardize: bool = True,
    ):
        self.dist = dist
        self.dsnr_db = dsnr_db
        self.branch = branch
        self.out_low = out_low
        self.out_high = out_high
        self.standardize = standardize

    def _resolve_dist(self) -> InputDistribution:
        if isinstance(self.dist, InputDistribution):
            return self.dist
        if self.dist == "gaussian":
            return StandardGaussian()
        if self.dist == "uniform":
            return UniformSymmetric()
        raise ValueError(
            f"dist must be 'gaussian', 'uniform' or an InputDistribution, "
            f"got {self.dist!r}"
        )

    def _validate_signal(self, X) -> np.ndarray:
        X = check_array(X, ensure_2d=False, dtype=np.float64)
        if X.ndim == 2 and X.shape[1] != 1:
            raise ValueError(
                f"expected a single signal (1-d array or single column), "
                f"got shape {X.shape}"
            )
        return X

    def fit(self, X, y=None):
        """Estimate signal statistics and solve for the optimal limiter."""
        X = self._validate_signal(X)
        flat = X.ravel()
        if flat.size < 2:
            raise ValueError("need at least two samples to estimate the scale")
        if not self.out_high > self.out_low:
            raise ValueError(
                f"need out_high > out_low, got [{self.out_low}, {self.out_high}]"
            )
        if self.standardize:
            self.mu_ = float(flat.mean())
            self.sigma_ = float(flat.std())
            if self.sigma_ <= 0.0:
                raise ValueError("signal has zero variance, cannot standardize")
        else:
            self.mu_, self.sigma_ = 0.0, 1.0

        dist = self._resolve_dist()
        t = db_to_linear(-float(self.dsnr_db))
        outcome, mapping = optimal_mapping(dist, t, branch=self.branch)
        self.outcome_ = outcome
        self.mapping_ = mapping
        self.eta_ = outcome.params.eta
        self.beta_ = outcome.params.beta
        self.sndr_ = outcome.sndr_star
        self.lower_knee_ = outcome.params.lower_knee
        self.upper_knee_ = outcome.params.upper_knee
        self.n_features_in_ = 1 if X.ndim == 1 else X.shape[1]
        return self

    def transform(self, X) -> np.ndarray:
        """Drive samples through the fitted limiter onto the output range."""
        check_is_fitted(self, "mapping_")
        X = self._validate_signal(X)
        gamma = (X - self.mu_) / self.sigma_
        g = self.mapping_(gamma.ravel()).reshape(X.shape)
        return self.out_low + (self.out_high - self.out_low) * g
