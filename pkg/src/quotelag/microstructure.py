"""Spread and range-volatility measures, intraday spread profiles, spread regression."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Sequence, TextIO

import numpy as np
from scipy import stats

from .econometrics.ols import OlsFit, ols
from .errors import DomainError, InsufficientDataError
from .quotegrid import GRID_STEP, BarSeries, QuoteBar, to_datetime64

SLOTS = 48


def pct_spread(bar: QuoteBar) -> float:
    """(offer - bid) / midpoint."""
    bid, offer = bar.bid, bar.offer
    if not (bid > 0 and offer > 0):
        raise DomainError("bid and offer must be positive")
    return (offer - bid) / ((offer + bid) / 2.0)


def pct_spreads(bid, offer) -> np.ndarray:
    bid = np.asarray(bid, float)
    offer = np.asarray(offer, float)
    if np.any(~(bid > 0)) or np.any(~(offer > 0)):
        raise DomainError("bid and offer must be positive")
    return (offer - bid) / ((offer + bid) / 2.0)


def rogers_satchell(bar: QuoteBar) -> float:
    """Per-bar Rogers-Satchell variance ln(H/C)ln(H/O) + ln(L/C)ln(L/O) on mid prices."""
    return float(rs_variances(bar.mid_open, bar.mid_high, bar.mid_low, bar.mid_close))


def rs_variances(o, h, l, c) -> np.ndarray:
    o, h, l, c = (np.asarray(v, float) for v in (o, h, l, c))
    if np.any(~(o > 0)) or np.any(~(h > 0)) or np.any(~(l > 0)) or np.any(~(c > 0)):
        raise DomainError("OHLC prices must be positive")
    lh, ll = np.log(h), np.log(l)
    lo, lc = np.log(o), np.log(c)
    return (lh - lc) * (lh - lo) + (ll - lc) * (ll - lo)


def series_rs_variances(series: BarSeries) -> np.ndarray:
    ok = ~series.gap
    return rs_variances(series.mid_open[ok], series.mid_high[ok], series.mid_low[ok], series.mid_close[ok])


def window_volatility(bars) -> float:
    """sqrt(max(0, sum of per-bar RS variances)) over a window.

    Accepts a sequence of :class:`QuoteBar` or a :class:`BarSeries`.
    """
    if isinstance(bars, BarSeries):
        if (~bars.gap).sum() == 0:
            raise DomainError("empty window")
        total = float(np.sum(series_rs_variances(bars)))
    else:
        bars = list(bars)
        if not bars:
            raise DomainError("empty window")
        total = float(np.sum(rs_variances(*(np.array([getattr(b, f) for b in bars])
                                             for f in ("mid_open", "mid_high", "mid_low", "mid_close")))))
    return math.sqrt(max(0.0, total))


def half_hour_slots(timestamps, utc_offset_minutes: int = 0) -> np.ndarray:
    """Half-hour-of-day slot (0..47) of the interval each end-labelled bar covers.

    The bar stamped 05:30 covers 05:00-05:30 and falls in slot 10.
    """
    ts = np.asarray(timestamps, "datetime64[ns]") - GRID_STEP + np.timedelta64(utc_offset_minutes, "m")
    minutes = (ts - ts.astype("datetime64[D]")) // np.timedelta64(1, "m")
    return (minutes // 30).astype(int)


def half_hour_of_day(timestamp, utc_offset_minutes: int = 0) -> int:
    return int(half_hour_slots(np.array([to_datetime64(timestamp)]), utc_offset_minutes)[0])


@dataclass(frozen=True)
class SpreadObservation:
    timestamp: object
    pct_spread: float
    ln_traded_value: float
    rs_variance: float
    half_hour_of_day: int


def spread_observations(series: BarSeries, utc_offset_minutes: int = 0) -> list[SpreadObservation]:
    ok = ~series.gap
    ts = series.timestamps[ok]
    spreads = pct_spreads(series.bid[ok], series.offer[ok])
    with np.errstate(divide="ignore"):
        lnv = np.log(series.traded_value[ok])
    rs = series_rs_variances(series)
    slots = half_hour_slots(ts, utc_offset_minutes)
    return [SpreadObservation(t, float(s), float(v), float(r), int(k))
            for t, s, v, r, k in zip(ts, spreads, lnv, rs, slots)]


@dataclass(frozen=True)
class SpreadProfile:
    """Mean percentage spread per half-hour slot; slots without data are absent."""

    means: dict[int, float]
    counts: dict[int, int]
    utc_offset_minutes: int = 0

    def peak_slot(self) -> int:
        return max(self.means, key=self.means.get)

    def overall_mean(self) -> float:
        n = sum(self.counts.values())
        return sum(self.means[k] * self.counts[k] for k in self.means) / n

    def write_csv(self, fh: TextIO) -> None:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["slot", "mean_spread", "count"])
        for k in sorted(self.means):
            w.writerow([k, repr(self.means[k]), self.counts[k]])


def intraday_spread_profile(series: BarSeries, utc_offset_minutes: int = 0) -> SpreadProfile:
    ok = ~series.gap
    if not ok.any():
        raise DomainError("empty series")
    spreads = pct_spreads(series.bid[ok], series.offer[ok])
    slots = half_hour_slots(series.timestamps[ok], utc_offset_minutes)
    counts = np.bincount(slots, minlength=SLOTS)
    sums = np.bincount(slots, weights=spreads, minlength=SLOTS)
    present = np.flatnonzero(counts)
    return SpreadProfile({int(k): float(sums[k] / counts[k]) for k in present},
                         {int(k): int(counts[k]) for k in present}, utc_offset_minutes)


@dataclass(frozen=True, eq=False)
class SpreadRegressionReport:
    """Percentage spread on ln traded value, per-bar RS volatility and slot dummies."""

    coefficients: dict[str, float]
    standard_errors: dict[str, float]
    pvalues: dict[str, float]
    r_squared: float
    n_obs: int
    excluded_zero_volume: int
    dummy_slots: tuple[int, ...]
    dummy_f_stat: float
    dummy_f_pvalue: float
    fit: OlsFit = field(repr=False, default=None)

    def to_dict(self) -> dict:
        rows = {}
        for key, label in (("ln_traded_value", "Ln of trading value"), ("volatility", "Volatility"),
                           ("constant", "Constant term")):
            rows[label] = {"coefficient": self.coefficients[key], "standard_error": self.standard_errors[key],
                           "p_value": self.pvalues[key]}
        return {
            "rows": rows,
            "R-squared": self.r_squared,
            "Time dummies": "Yes",
            "time_dummies": {"kind": "half-hour-of-day", "baseline_slot": 0,
                             "slots": list(self.dummy_slots), "joint_F": self.dummy_f_stat,
                             "joint_F_pvalue": self.dummy_f_pvalue},
            "n_obs": self.n_obs,
            "excluded_zero_volume_bars": self.excluded_zero_volume,
            "volatility_regressor": "per-bar Rogers-Satchell standard deviation sqrt(max(0, rs))",
        }


def spread_regression(series: BarSeries, min_bars: int = 500, utc_offset_minutes: int = 0,
                      se_mode: str = "classical") -> SpreadRegressionReport:
    ok = ~series.gap
    vol_ok = ok & (series.traded_value > 0)
    excluded = int(ok.sum() - vol_ok.sum())
    n = int(vol_ok.sum())
    if n < min_bars:
        raise InsufficientDataError(f"{n} usable bars; spread regression needs at least {min_bars}")
    y = pct_spreads(series.bid[vol_ok], series.offer[vol_ok])
    lnv = np.log(series.traded_value[vol_ok])
    rs = rs_variances(series.mid_open[vol_ok], series.mid_high[vol_ok],
                      series.mid_low[vol_ok], series.mid_close[vol_ok])
    vol = np.sqrt(np.maximum(0.0, rs))
    slots = half_hour_slots(series.timestamps[vol_ok], utc_offset_minutes)
    present = sorted(set(slots.tolist()) - {0})
    dummies = (slots[:, None] == np.array(present)[None, :]).astype(float)
    base_cols = [np.ones(n), lnv, vol]
    names = ["constant", "ln_traded_value", "volatility"] + [f"slot_{k}" for k in present]
    X = np.column_stack(base_cols + ([dummies] if present else []))
    fit = ols(y, X, se_mode, names)
    if present:
        restricted = ols(y, np.column_stack(base_cols), se_mode)
        q = len(present)
        f_stat = ((restricted.ssr - fit.ssr) / q) / (fit.ssr / fit.dof)
        f_p = float(stats.f.sf(f_stat, q, fit.dof))
    else:
        f_stat, f_p = float("nan"), float("nan")
    pv = fit.pvalues
    return SpreadRegressionReport(
        {k: float(v) for k, v in zip(names, fit.coefficients)},
        {k: float(v) for k, v in zip(names, fit.standard_errors)},
        {k: float(v) for k, v in zip(names, pv)},
        fit.r_squared, fit.n_obs, excluded, tuple(present), float(f_stat), f_p, fit)
