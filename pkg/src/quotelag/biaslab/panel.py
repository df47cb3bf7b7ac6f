"""Week-by-week re-estimation and the relative-quote-value panel."""

from __future__ import annotations

import csv
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from datetime import datetime
from typing import Sequence, TextIO

import numpy as np

from ..econometrics.cointegration import engle_granger
from ..econometrics.vecm import estimate_vecm
from ..errors import ConfigurationError, PanelError, QuoteLagError, UndefinedProportionError
from ..impulse import DEFAULT_HORIZONS, ImpulseConfig, horizon_label, relative_quote_values, simulate_impulse
from ..ingest import TradeRecord
from ..microstructure import window_volatility
from ..quotegrid import AlignedPair, isoformat, slice_weeks, to_datetime, to_datetime64
from .gains import GainTracker, sort_trades, trade_times

logger = logging.getLogger(__name__)

SIDES = ("bid", "offer")
NAN = float("nan")


@dataclass(frozen=True)
class PanelConfig:
    p: int = 3
    impulse: ImpulseConfig = field(default_factory=ImpulseConfig)
    anchor: object = None           # Sunday 00:00 UTC; defaults to the Sunday on/before the first row
    min_rows: int = 200
    sides: tuple[str, ...] = SIDES
    gain_basis: str = "average"
    gain_at: str = "end"            # or "start"

    def __post_init__(self):
        if self.p < 1:
            raise ConfigurationError("p must be >= 1")
        if self.gain_at not in ("end", "start"):
            raise ConfigurationError("gain_at must be 'end' or 'start'")
        for s in self.sides:
            if s not in ("bid", "offer", "mid"):
                raise ConfigurationError(f"unknown side {s!r}")


@dataclass(frozen=True)
class WeeklyPanelRow:
    week_index: int
    week_start: datetime
    side: str
    n_rows: int
    rqv: dict[int, float]
    weekly_return: float
    ln_traded_value: float
    weekly_volatility: float
    pct_accounts_in_gain: float | None
    estimation_ok: bool
    diagnostics: str = ""
    alpha_local: float = NAN
    beta1: float = NAN
    cointegrated: bool | None = None

    def __post_init__(self):
        if set(self.rqv) != set(DEFAULT_HORIZONS):
            raise ValueError("rqv must cover exactly the five standard horizons")
        pct = self.pct_accounts_in_gain
        if pct is not None and not (0.0 <= pct <= 1.0):
            raise ValueError("pct_accounts_in_gain must lie in [0, 1]")


def default_anchor(pair: AlignedPair) -> np.datetime64:
    """Sunday 00:00 UTC on or before the start of the first row's interval."""
    day = (pair.grid[0] - pair.local.grid_step).astype("datetime64[D]")
    # 1970-01-01 was a Thursday, so Sunday has (days + 4) % 7 == 0
    back = (day.astype(np.int64) + 4) % 7
    return (day - back).astype("datetime64[ns]")


def _estimate_week(args):
    """Worker: one week and side -> (rqv by horizon, alpha, beta1, cointegrated, diagnostics)."""
    run, side, p, impulse_cfg = args
    try:
        coint = engle_granger(run.local.price(side), run.global_.price(side), force=True)
        fit = estimate_vecm(run, side, p, coint)
        path = simulate_impulse(fit, replace(impulse_cfg, horizon_bars=max(DEFAULT_HORIZONS) // 30))
        rqv = relative_quote_values(path, DEFAULT_HORIZONS)
        return rqv, fit.local.alpha, fit.beta1, bool(coint.cointegrated["5%"]), ""
    except QuoteLagError as exc:
        return None, NAN, NAN, None, f"{type(exc).__name__}: {exc}"


def _week_descriptors(rows: AlignedPair):
    loc = rows.local
    close = loc.mid_close
    ret = float(close[-1] / close[0] - 1.0)
    tv = float(np.sum(loc.traded_value))
    lnv = math.log(tv) if tv > 0 else NAN
    return ret, lnv, window_volatility(loc)


def _gain_by_week(windows, trades, cfg: PanelConfig) -> list[float | None]:
    if not trades:
        return [None] * len(windows)
    ordered = sort_trades(trades)
    stamps = trade_times(ordered)
    tracker = GainTracker(cfg.gain_basis)
    done = 0
    out = []
    for w in windows:
        if w.rows is None:
            out.append(None)
            continue
        if cfg.gain_at == "end":
            cutoff, price = w.rows.grid[-1], float(w.rows.local.mid_close[-1])
        else:
            cutoff, price = w.rows.grid[0], float(w.rows.local.mid_open[0])
        k = int(np.searchsorted(stamps, cutoff, side="right"))
        for t in ordered[done:k]:
            tracker.apply(t)
        done = max(done, k)
        try:
            out.append(tracker.pct_in_gain(price))
        except UndefinedProportionError:
            out.append(None)
    if tracker.oversells:
        logger.warning("%d oversell(s) clamped at zero holdings during gain replay", tracker.oversells)
    return out


def build_weekly_panel(pair: AlignedPair, trades: Sequence[TradeRecord] | None = None,
                       cfg: PanelConfig | None = None, workers: int = 1) -> list[WeeklyPanelRow]:
    """Estimate every week and side; failed weeks stay in the panel with ``estimation_ok=False``."""
    cfg = cfg or PanelConfig()
    anchor = default_anchor(pair) if cfg.anchor is None else to_datetime64(cfg.anchor)
    windows = slice_weeks(pair, anchor, cfg.min_rows)
    gains = _gain_by_week(windows, trades, cfg)

    jobs, meta = [], []
    for w in windows:
        desc = (NAN, NAN, NAN)
        note = ""
        run = None
        if w.rows is None:
            note = "no rows in week"
        else:
            desc = _week_descriptors(w.rows)
            if not w.usable:
                note = f"only {w.n_rows} rows (< {cfg.min_rows})"
            else:
                run = w.rows
                if not run.is_contiguous():
                    run = run.longest_segment()
                    if len(run) < cfg.min_rows:
                        note = f"longest contiguous run has {len(run)} rows (< {cfg.min_rows})"
                        run = None
        for side in cfg.sides:
            meta.append((w, side, desc, note))
            jobs.append(None if run is None else
                        (run, side, cfg.p, cfg.impulse))

    todo = [j for j in jobs if j is not None]
    if workers > 1 and len(todo) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            done = list(pool.map(_estimate_week, todo, chunksize=max(1, len(todo) // (4 * workers))))
    else:
        done = [_estimate_week(j) for j in todo]
    results = iter(done)

    rows = []
    for (w, side, (ret, lnv, vol), note), job in zip(meta, jobs):
        gain = gains[w.index]
        if job is None:
            rqv, alpha, beta1, coint, diag = None, NAN, NAN, None, note
        else:
            rqv, alpha, beta1, coint, diag = next(results)
        ok = rqv is not None
        rows.append(WeeklyPanelRow(
            w.index, w.start, side, w.n_rows, rqv if ok else {h: NAN for h in DEFAULT_HORIZONS},
            ret, lnv, vol, gain, ok, diag, alpha, beta1, coint))
        if not ok:
            logger.info("week %d %s flagged: %s", w.index, side, diag)
    if not any(r.estimation_ok for r in rows):
        raise PanelError("estimation failed in every week",
                         {f"{r.week_index}/{r.side}": r.diagnostics for r in rows})
    return rows


# --- export -----------------------------------------------------------------

def _rqv_column(minutes: int) -> str:
    return f"rqv_{horizon_label(minutes)}"


def panel_columns(has_gain: bool) -> list[str]:
    cols = ["week_index", "week_start", "side", "n_rows"]
    cols += [_rqv_column(h) for h in DEFAULT_HORIZONS]
    cols += ["weekly_return", "ln_traded_value", "weekly_volatility"]
    if has_gain:
        cols.append("pct_accounts_in_gain")
    cols += ["alpha_local", "beta1", "cointegrated_5pct", "estimation_ok", "diagnostics"]
    return cols


def _num(x) -> str:
    return "" if x is None or (isinstance(x, float) and math.isnan(x)) else repr(float(x))


def write_panel_csv(rows: Sequence[WeeklyPanelRow], fh: TextIO) -> None:
    """One line per week and side; the gain column is omitted when no row has it."""
    has_gain = any(r.pct_accounts_in_gain is not None for r in rows)
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(panel_columns(has_gain))
    for r in rows:
        line = [r.week_index, isoformat(to_datetime64(r.week_start)), r.side, r.n_rows]
        line += [_num(r.rqv[h]) for h in DEFAULT_HORIZONS]
        line += [_num(r.weekly_return), _num(r.ln_traded_value), _num(r.weekly_volatility)]
        if has_gain:
            line.append(_num(r.pct_accounts_in_gain))
        line += [_num(r.alpha_local), _num(r.beta1),
                 "" if r.cointegrated is None else str(bool(r.cointegrated)).lower(),
                 str(r.estimation_ok).lower(), r.diagnostics]
        w.writerow(line)


def read_panel_csv(fh: TextIO) -> list[WeeklyPanelRow]:
    def f(s):
        return NAN if s == "" else float(s)

    rows = []
    for rec in csv.DictReader(fh):
        gain = rec.get("pct_accounts_in_gain")
        coint = rec["cointegrated_5pct"]
        rows.append(WeeklyPanelRow(
            int(rec["week_index"]), to_datetime(to_datetime64(rec["week_start"])), rec["side"],
            int(rec["n_rows"]), {h: f(rec[_rqv_column(h)]) for h in DEFAULT_HORIZONS},
            f(rec["weekly_return"]), f(rec["ln_traded_value"]), f(rec["weekly_volatility"]),
            None if gain in (None, "") else float(gain), rec["estimation_ok"] == "true",
            rec["diagnostics"], f(rec["alpha_local"]), f(rec["beta1"]),
            None if coint == "" else coint == "true"))
    return rows


def panel_summary(rows: Sequence[WeeklyPanelRow]) -> dict:
    """Mean, SD, min and max of RQV per horizon and side over weeks that estimated."""
    out = {}
    for side in dict.fromkeys(r.side for r in rows):
        ok = [r for r in rows if r.side == side and r.estimation_ok]
        block = {"weeks": len([r for r in rows if r.side == side]), "weeks_estimated": len(ok)}
        for h in DEFAULT_HORIZONS:
            v = np.array([r.rqv[h] for r in ok])
            block[horizon_label(h)] = ({"mean": float(v.mean()), "sd": float(v.std(ddof=1)) if v.size > 1 else NAN,
                                        "min": float(v.min()), "max": float(v.max())}
                                       if v.size else None)
        out[side] = block
    return out
