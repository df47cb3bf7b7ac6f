"""Cross-week regressions of RQV on market returns or the share of accounts in gain, and the bias map."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..econometrics.ols import OlsFit, ols
from ..errors import ConfigurationError, InsufficientDataError
from ..impulse import horizon_label, parse_horizon
from .panel import WeeklyPanelRow

CONDITIONING = {"market_returns": "weekly_return", "pct_gain": "pct_accounts_in_gain"}
LABELS = ("disposition_effect", "house_money_or_self_attribution", "rational_or_symmetric", "inconclusive")
MIN_ROWS = 30

_ROW_LABELS = {"market_returns": "Weekly returns", "pct_gain": "% accounts in gain"}


@dataclass(frozen=True, eq=False)
class RqvRegressionReport:
    conditioning: str
    side: str
    horizon: int
    names: tuple[str, ...]
    coefficients: tuple[float, ...]
    standard_errors: tuple[float, ...]
    pvalues: tuple[float, ...]
    r_squared: float
    n_obs: int
    mean_rqv: float
    fit: OlsFit | None = None

    def _get(self, seq, name):
        return seq[self.names.index(name)]

    @property
    def slope(self) -> float:
        return self._get(self.coefficients, self.names[1])

    @property
    def slope_se(self) -> float:
        return self._get(self.standard_errors, self.names[1])

    @property
    def slope_p(self) -> float:
        return self._get(self.pvalues, self.names[1])

    def to_dict(self) -> dict:
        labels = {"constant": "Constant", self.names[1]: _ROW_LABELS[self.conditioning],
                  "ln_traded_value": "Ln of trading value", "weekly_volatility": "Volatility"}
        order = [self.names[1], "ln_traded_value", "weekly_volatility", "constant"]
        return {
            "conditioning": self.conditioning,
            "side": self.side,
            "horizon": horizon_label(self.horizon),
            "rows": {labels[n]: {"coefficient": self._get(self.coefficients, n),
                                 "standard_error": self._get(self.standard_errors, n),
                                 "p_value": self._get(self.pvalues, n)} for n in order},
            "R-squared": self.r_squared,
            "n_obs": self.n_obs,
            "mean_rqv": self.mean_rqv,
            "standard_errors": "classical",
        }


def usable_rows(panel: Sequence[WeeklyPanelRow], conditioning: str, side: str, horizon: int) -> list[WeeklyPanelRow]:
    attr = CONDITIONING[conditioning]
    out = []
    for r in panel:
        if r.side != side or not r.estimation_ok:
            continue
        cond = getattr(r, attr)
        vals = (r.rqv[horizon], cond, r.ln_traded_value, r.weekly_volatility)
        if cond is None or not all(math.isfinite(v) for v in vals):
            continue
        out.append(r)
    return out


def rqv_regression(panel: Sequence[WeeklyPanelRow], conditioning: str = "market_returns", side: str = "bid",
                   horizon=30, min_rows: int = MIN_ROWS) -> RqvRegressionReport:
    """OLS of RQV at ``horizon`` on a constant, the conditioning variable, ln traded value and volatility."""
    if conditioning not in CONDITIONING:
        raise ConfigurationError(f"conditioning must be one of {sorted(CONDITIONING)}")
    h = parse_horizon(horizon)
    rows = usable_rows(panel, conditioning, side, h)
    if len(rows) < min_rows:
        raise InsufficientDataError(f"{len(rows)} usable {side} weeks for {conditioning}; need at least {min_rows}")
    attr = CONDITIONING[conditioning]
    y = np.array([r.rqv[h] for r in rows])
    X = np.column_stack([np.ones(len(rows)),
                         [getattr(r, attr) for r in rows],
                         [r.ln_traded_value for r in rows],
                         [r.weekly_volatility for r in rows]])
    names = ("constant", attr, "ln_traded_value", "weekly_volatility")
    fit = ols(y, X, "classical", names)
    return RqvRegressionReport(conditioning, side, h, names, tuple(map(float, fit.coefficients)),
                               tuple(map(float, fit.standard_errors)), tuple(map(float, fit.pvalues)),
                               fit.r_squared, fit.n_obs, float(y.mean()), fit)


@dataclass(frozen=True)
class ClassifierConfig:
    significance: float = 0.05
    fast_floor: float = 0.97

    def __post_init__(self):
        if not 0 < self.significance < 1:
            raise ConfigurationError("significance must lie in (0, 1)")


@dataclass(frozen=True)
class BiasVerdict:
    conditioning: str
    side: str
    horizon: int
    slope: float
    standard_error: float
    p_value: float
    label: str

    def to_dict(self) -> dict:
        return {"conditioning": self.conditioning, "side": self.side, "horizon": horizon_label(self.horizon),
                "slope": self.slope, "se": self.standard_error, "p": self.p_value, "label": self.label}


def bias_label(slope: float, p_value: float, mean_rqv: float, cfg: ClassifierConfig | None = None) -> str:
    cfg = cfg or ClassifierConfig()
    significant = p_value < cfg.significance
    if significant and slope < 0:
        return "disposition_effect"
    if significant and slope > 0:
        return "house_money_or_self_attribution"
    if not significant and mean_rqv >= cfg.fast_floor:
        return "rational_or_symmetric"
    return "inconclusive"


def classify_bias(report: RqvRegressionReport, cfg: ClassifierConfig | None = None) -> BiasVerdict:
    label = bias_label(report.slope, report.slope_p, report.mean_rqv, cfg)
    return BiasVerdict(report.conditioning, report.side, report.horizon, report.slope,
                       report.slope_se, report.slope_p, label)
