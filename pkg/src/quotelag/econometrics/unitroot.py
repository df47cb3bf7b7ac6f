"""Augmented Dickey-Fuller test with MacKinnon (2010) response-surface critical values."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import DegenerateInputError, InsufficientDataError
from .ols import nested_ssr, ols

LEVELS = ("1%", "5%", "10%")

# Response surfaces cv(T) = b0 + b1/T + b2/T^2 + b3/T^3 (MacKinnon 2010, Table 2).
# Keys: (number of I(1) variables, deterministic case).
MACKINNON_2010 = {
    (1, "none"): {
        "1%": (-2.56574, -2.2358, -3.627, 0.0),
        "5%": (-1.94100, -0.2686, -3.365, 31.223),
        "10%": (-1.61682, 0.2656, -2.714, 25.364),
    },
    (1, "constant"): {
        "1%": (-3.43035, -6.5393, -16.786, -79.433),
        "5%": (-2.86154, -2.8903, -4.234, -40.040),
        "10%": (-2.56677, -1.5384, -2.809, 0.0),
    },
    (1, "constant_trend"): {
        "1%": (-3.95877, -9.0531, -28.428, -134.155),
        "5%": (-3.41049, -4.3904, -9.036, -45.374),
        "10%": (-3.12705, -2.5856, -3.925, -22.380),
    },
    # Engle-Granger residual test, two variables, constant in the cointegrating regression.
    (2, "constant"): {
        "1%": (-3.89644, -10.9519, -33.527, 0.0),
        "5%": (-3.33613, -6.1101, -6.823, 0.0),
        "10%": (-3.04445, -4.2412, -2.720, 0.0),
    },
}

VARIANTS = ("none", "constant", "constant_trend")


def critical_values(n_obs: int, variant: str = "constant", n_vars: int = 1) -> dict[str, float]:
    table = MACKINNON_2010[(n_vars, variant)]
    return {lvl: b0 + b1 / n_obs + b2 / n_obs**2 + b3 / n_obs**3
            for lvl, (b0, b1, b2, b3) in table.items()}


@dataclass(frozen=True)
class AdfResult:
    statistic: float
    lags_used: int
    n_obs: int
    critical_values: dict[str, float]
    reject_unit_root: dict[str, bool] = field(default_factory=dict)
    variant: str = "constant"

    def rejects(self, level: str = "5%") -> bool:
        return self.reject_unit_root[level]


def max_lag(n: int) -> int:
    """Schwert's rule, floor(12 (n/100)^(1/4))."""
    return int(np.floor(12.0 * (n / 100.0) ** 0.25))


def _design(y: np.ndarray, lags: int, first: int, variant: str):
    """ADF regression rows t = first..n-1 with columns [y_{t-1}, deterministics, dy lags]."""
    dy = np.diff(y)
    n = y.shape[0]
    t = np.arange(first, n)
    cols = [y[t - 1]]
    if variant in ("constant", "constant_trend"):
        cols.append(np.ones(t.shape[0]))
    if variant == "constant_trend":
        cols.append(t.astype(float))
    for j in range(1, lags + 1):
        cols.append(dy[t - 1 - j])
    return dy[t - 1], np.column_stack(cols)


def adf_test(series, lags: int | str = "auto", variant: str = "constant",
             n_vars: int = 1, crit_variant: str | None = None) -> AdfResult:
    """Augmented Dickey-Fuller t-test on the lagged level.

    With ``lags="auto"`` the lag order minimises BIC over
    ``0..floor(12 (n/100)^(1/4))`` on a common sample, then the chosen model is
    refit on all available observations. ``n_vars``/``crit_variant`` select a
    different critical-value surface, as needed for residual-based
    cointegration tests.
    """
    y = np.asarray(series, float)
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    n = y.shape[0]
    if n < 2 or np.ptp(y) == 0:
        raise DegenerateInputError("constant series has no unit-root test")
    n_det = VARIANTS.index(variant)

    if lags == "auto":
        top = max_lag(n)
        # keep at least 10 residual degrees of freedom on the common sample
        top = max(0, min(top, (n - 12 - n_det) // 2))
        yy, X = _design(y, top, top + 1, variant)
        ssr = nested_ssr(yy, X)
        m = yy.shape[0]
        ks = np.arange(1 + n_det, 1 + n_det + top + 1)
        bic = m * np.log(np.maximum(ssr[ks - 1], 1e-300) / m) + ks * np.log(m)
        lags = int(np.argmin(bic))
    lags = int(lags)
    if lags < 0:
        raise ValueError("lags must be >= 0")
    if n <= lags + 10:
        raise InsufficientDataError(f"series of length {n} too short for {lags} lags")

    yy, X = _design(y, lags, lags + 1, variant)
    if np.ptp(yy) == 0:
        raise DegenerateInputError("differenced series has zero variance")
    fit = ols(yy, X)
    stat = float(fit.tvalues[0])
    cv = critical_values(fit.n_obs, crit_variant or variant, n_vars)
    return AdfResult(stat, lags, fit.n_obs, cv, {k: stat < v for k, v in cv.items()}, variant)
