"""Account-level trade histories with a built-in oracle for the share of accounts in gain.

Accounts trade at bar closes: buys lift the local offer, sells hit the local
bid. The probability of buying rises after a down bar and falls after an up
bar (buy the dip, sell the rise). Position and average cost are tracked with
the same floating-point arithmetic the replay in ``biaslab`` uses, so the
emitted path is an exact oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import ConfigurationError, DataError
from ..ingest import TradeRecord
from ..quotegrid import BarSeries, to_datetimes


@dataclass(frozen=True)
class TradeSpec:
    seed: int = 0
    n_accounts: int = 1000
    trade_prob: float = 0.01        # per account per bar
    dip_propensity: float = 0.3     # 0 gives direction-blind trading
    notional: float = 50_000.0      # mean local-currency size of a buy
    notional_vol: float = 1.0
    sell_all_prob: float = 0.3
    asset: str = "BTC"

    def __post_init__(self):
        if self.n_accounts < 1:
            raise ConfigurationError("n_accounts must be >= 1")
        if not 0 < self.trade_prob <= 1:
            raise ConfigurationError("trade_prob must lie in (0, 1]")
        if not 0 <= self.dip_propensity <= 0.5:
            raise ConfigurationError("dip_propensity must lie in [0, 0.5]")
        if not self.notional > 0:
            raise ConfigurationError("notional must be > 0")


@dataclass(frozen=True, eq=False)
class TradeHistory:
    trades: list[TradeRecord]
    timestamps: np.ndarray
    prices: np.ndarray              # local mid close used to score gains
    pct_path: np.ndarray            # NaN where nobody holds a position


def account_ids(n: int) -> list[str]:
    width = len(str(n - 1))
    return [f"acct{i:0{width}d}" for i in range(n)]


def _share_below(bars, accts, ev_cost, n_accounts, at, price) -> np.ndarray:
    """Share of holders whose cost is below ``price`` after the events of bars ``<= at``.

    Each account's cost is carried forward from its last event; +inf marks a flat
    account. NaN where nobody holds.
    """
    below = np.zeros(at.shape[0], np.int64)
    holders = np.zeros(at.shape[0], np.int64)
    order = np.argsort(accts, kind="stable")
    starts = np.searchsorted(accts[order], np.arange(n_accounts + 1))
    for a in range(n_accounts):
        idx = order[starts[a]:starts[a + 1]]
        if idx.size == 0:
            continue
        last = np.searchsorted(bars[idx], at, side="right") - 1
        c = np.where(last >= 0, ev_cost[idx][np.maximum(last, 0)], np.inf)
        held = np.isfinite(c)
        holders += held
        below += held & (c < price)
    out = np.full(at.shape[0], np.nan)
    ok = holders > 0
    out[ok] = below[ok] / holders[ok]
    return out


def _bernoulli_hits(rng: np.random.Generator, size: int, p: float) -> np.ndarray:
    """Sorted indices of successes in ``size`` Bernoulli(p) trials, via geometric gaps."""
    if p >= 1.0:
        return np.arange(size)
    chunks, last = [], -1
    while True:
        pos = last + np.cumsum(rng.geometric(p, int(size * p * 1.1) + 64))
        chunks.append(pos[pos < size])
        if pos[-1] >= size:
            return np.concatenate(chunks)
        last = int(pos[-1])


def simulate_trades(spec: TradeSpec, timestamps, bid, offer, mid, evaluate=None,
                    records: bool = True) -> TradeHistory:
    """Core simulator on plain arrays.

    ``evaluate`` (bar indices) limits where the oracle is scored; with
    ``records=False`` only positions are tracked and no TradeRecords are built.
    """
    ts = np.asarray(timestamps, "datetime64[ns]")
    bid, offer, mid = (np.asarray(v, float) for v in (bid, offer, mid))
    n = ts.shape[0]
    if n == 0:
        raise DataError("price path is empty")
    N = spec.n_accounts
    rng = np.random.default_rng(spec.seed)
    bars, accts = np.divmod(_bernoulli_hits(rng, n * N, spec.trade_prob), N)
    m = bars.shape[0]
    u_side = rng.random(m).tolist()
    v = spec.notional_vol
    notional = (spec.notional * np.exp(v * rng.standard_normal(m) - 0.5 * v * v)).tolist()
    sell_all = (rng.random(m) < spec.sell_all_prob).tolist()
    frac = rng.uniform(0.1, 0.9, m).tolist()

    ret = np.r_[0.0, mid[1:] / mid[:-1] - 1.0]
    scale = float(np.std(ret)) or 1.0
    p_buy = np.clip(0.5 - spec.dip_propensity * np.tanh(ret / scale), 0.05, 0.95).tolist()

    ids = account_ids(N)
    held = [0.0] * N
    cost = [0.0] * N
    trades: list[TradeRecord] = []
    # cost after each event, +inf once the account is flat, so it never counts as in gain
    ev_cost = [0.0] * m
    stamps = to_datetimes(ts) if records else None
    bounds = np.searchsorted(bars, np.arange(n + 1)).tolist()
    accts_l = accts.tolist()
    bid_l, offer_l = bid.tolist(), offer.tolist()
    for t in range(n):
        lo, hi = bounds[t], bounds[t + 1]
        if hi == lo:
            continue
        stamp = stamps[t] if records else None
        for e in range(lo, hi):
            a = accts_l[e]
            h = held[a]
            if h == 0.0 or u_side[e] < p_buy[t]:
                px = offer_l[t]
                q = notional[e] / px
                cost[a] = (cost[a] * h + px * q) / (h + q)
                held[a] = h + q
                side = "buy"
            else:
                px = bid_l[t]
                q = h if sell_all[e] else frac[e] * h
                rest = h - q
                if rest <= 0:
                    held[a], cost[a] = 0.0, 0.0
                else:
                    held[a] = rest
                side = "sell"
            ev_cost[e] = cost[a] if held[a] > 0 else math.inf
            if records:
                trades.append(TradeRecord(stamp, ids[a], spec.asset, side, q, px))
    scored = np.arange(n) if evaluate is None else np.unique(np.asarray(evaluate, int))
    pct = np.full(n, np.nan)
    pct[scored] = _share_below(bars, accts, np.array(ev_cost), N, scored, mid[scored])
    return TradeHistory(trades, ts, mid, pct)


def gen_trades(spec: TradeSpec, price_path: BarSeries, evaluate=None) -> TradeHistory:
    """Trades against the non-gap bars of a local quote series."""
    ok = ~price_path.gap
    return simulate_trades(spec, price_path.timestamps[ok], price_path.bid[ok], price_path.offer[ok],
                           price_path.mid_close[ok], evaluate)


def mean_or_nan(x) -> float:
    x = np.asarray(x, float)
    x = x[np.isfinite(x)]
    return float(x.mean()) if x.size else math.nan
