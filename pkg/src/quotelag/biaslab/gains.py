"""Per-account position replay and the share of holders sitting on paper gains.

Average-cost basis: a buy moves the account's cost to the quantity-weighted
mean of the old cost and the fill price, ``(cost*held + price*qty) / (held + qty)``;
a sell reduces the holding and leaves the cost alone. A holding that reaches
zero resets the cost to zero. Trades are replayed in (timestamp, account_id)
order; rows for the same account and timestamp keep their file order.
"""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass
from datetime import datetime
from typing import Iterable, Sequence

import numpy as np

from ..errors import ConfigurationError, DomainError, UndefinedProportionError
from ..ingest import TradeRecord
from ..quotegrid import datetimes_to_datetime64, to_datetime64

logger = logging.getLogger(__name__)

BASES = ("average", "fifo")


def sort_trades(trades: Iterable[TradeRecord]) -> list[TradeRecord]:
    """Replay order: by timestamp, then account id; file order breaks remaining ties."""
    trades = list(trades)
    if not trades:
        return trades
    stamps = datetimes_to_datetime64([t.timestamp for t in trades]).astype(np.int64)
    accounts = np.array([t.account_id for t in trades], dtype=str)
    return [trades[i] for i in np.lexsort((accounts, stamps)).tolist()]


def trade_times(trades: Sequence[TradeRecord]) -> np.ndarray:
    return datetimes_to_datetime64([t.timestamp for t in trades])


class GainTracker:
    """Incremental replay state; feed trades in replay order."""

    def __init__(self, basis: str = "average"):
        if basis not in BASES:
            raise ConfigurationError(f"unknown cost basis {basis!r}")
        self.basis = basis
        self.holdings: dict[str, float] = {}
        self.cost: dict[str, float] = {}
        self._lots: dict[str, deque] = {}
        self.oversells = 0

    def apply(self, t: TradeRecord) -> None:
        acct = t.account_id
        held = self.holdings.get(acct, 0.0)
        if t.side == "buy":
            if self.basis == "average":
                cost = self.cost.get(acct, 0.0)
                self.cost[acct] = (cost * held + t.price * t.quantity) / (held + t.quantity)
            else:
                self._lots.setdefault(acct, deque()).append([t.quantity, t.price])
            self.holdings[acct] = held + t.quantity
            if self.basis == "fifo":
                self.cost[acct] = self._fifo_cost(acct)
            return

        remaining = held - t.quantity
        if remaining < 0:
            self.oversells += 1
            logger.debug("account %s sold %g with only %g held; clamped at zero", acct, t.quantity, held)
        if remaining <= 0:
            self.holdings[acct] = 0.0
            self.cost[acct] = 0.0
            self._lots.pop(acct, None)
            return
        self.holdings[acct] = remaining
        if self.basis == "fifo":
            lots = self._lots[acct]
            q = t.quantity
            while q > 0 and lots:
                if lots[0][0] <= q:
                    q -= lots.popleft()[0]
                else:
                    lots[0][0] -= q
                    q = 0.0
            self.cost[acct] = self._fifo_cost(acct)

    def _fifo_cost(self, acct: str) -> float:
        lots = self._lots.get(acct)
        if not lots:
            return 0.0
        qty = sum(q for q, _ in lots)
        return sum(q * p for q, p in lots) / qty

    def counts(self, price: float) -> tuple[int, int]:
        """(accounts in gain, accounts holding a position) at ``price``."""
        holders = gain = 0
        for acct, held in self.holdings.items():
            if held > 0:
                holders += 1
                if price > self.cost[acct]:
                    gain += 1
        return gain, holders

    def pct_in_gain(self, price: float) -> float:
        if not price > 0:
            raise DomainError("price must be > 0")
        gain, holders = self.counts(price)
        if holders == 0:
            raise UndefinedProportionError("no account holds a position")
        return gain / holders


@dataclass(frozen=True)
class GainSnapshot:
    evaluated_at: object
    holdings: dict[str, float]
    average_cost: dict[str, float]
    pct_in_gain: float


def pct_accounts_in_gain(trades: Sequence[TradeRecord], price_at_t: float, at: datetime | None = None,
                         basis: str = "average") -> float:
    """Share of accounts with a positive holding whose cost is below ``price_at_t``.

    Only trades stamped at or before ``at`` count (all trades when ``at`` is None).
    """
    return gain_snapshot(trades, price_at_t, at, basis).pct_in_gain


def gain_snapshot(trades, price_at_t, at=None, basis="average") -> GainSnapshot:
    tracker = GainTracker(basis)
    cutoff = None if at is None else to_datetime64(at)
    ordered = sort_trades(trades)
    k = len(ordered) if cutoff is None else int(np.searchsorted(trade_times(ordered), cutoff, side="right"))
    for t in ordered[:k]:
        tracker.apply(t)
    pct = tracker.pct_in_gain(price_at_t)
    if tracker.oversells:
        logger.warning("%d oversell(s) clamped at zero holdings", tracker.oversells)
    held = {a: h for a, h in tracker.holdings.items() if h > 0}
    return GainSnapshot(at, held, {a: tracker.cost[a] for a in held}, pct)


def pct_path(trades: Sequence[TradeRecord], times, prices, basis: str = "average") -> np.ndarray:
    """Share in gain evaluated after all trades up to each of ``times`` (NaN with no holders).

    Single pass over the sorted trades; ``times`` must be increasing.
    """
    times = np.asarray(times, "datetime64[ns]")
    prices = np.asarray(prices, float)
    ordered = sort_trades(trades)
    stamps = trade_times(ordered)
    upto = np.searchsorted(stamps, times, side="right")
    tracker = GainTracker(basis)
    out = np.full(times.shape[0], np.nan)
    done = 0
    for i, (k, price) in enumerate(zip(upto, prices)):
        for t in ordered[done:k]:
            tracker.apply(t)
        done = max(done, int(k))
        gain, holders = tracker.counts(float(price))
        if holders:
            out[i] = gain / holders
    return out
