"""Time-grid data model: validated 30-minute bar series, pair alignment, week slicing.

Bars are labelled by interval END: the bar stamped 10:00 holds the quote state
as of the close of (09:30, 10:00]. Timestamps are stored as naive
``datetime64[ns]`` values in UTC.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from typing import Iterator

import numpy as np
import pandas as pd

from .errors import AlignmentError, ConfigurationError, DataError

logger = logging.getLogger(__name__)

GRID_STEP = np.timedelta64(30, "m")
BARS_PER_WEEK = 336
WEEK = np.timedelta64(7, "D")
PRICE_FIELDS = ("bid", "offer", "mid_open", "mid_high", "mid_low", "mid_close")
FIELDS = PRICE_FIELDS + ("traded_value",)
_EPOCH = datetime(1970, 1, 1, tzinfo=timezone.utc)


def to_datetime64(value) -> np.datetime64:
    """Coerce a datetime, ISO string or datetime64 into a UTC ``datetime64[ns]``."""
    if isinstance(value, np.datetime64):
        return value.astype("datetime64[ns]")
    if isinstance(value, str):
        value = datetime.fromisoformat(value.replace("Z", "+00:00"))
    if isinstance(value, datetime):
        if value.tzinfo is not None:
            value = value.astimezone(timezone.utc).replace(tzinfo=None)
        return np.datetime64(value, "ns")
    raise TypeError(f"cannot interpret {value!r} as a timestamp")


def to_datetime(value: np.datetime64) -> datetime:
    """UTC-aware :class:`datetime` for a ``datetime64`` value (microsecond precision)."""
    us = int(np.datetime64(value, "us").astype(np.int64))
    return _EPOCH + timedelta(microseconds=us)


_US = timedelta(microseconds=1)


def to_datetimes(values) -> list[datetime]:
    """Vectorised :func:`to_datetime` for an array of ``datetime64`` values."""
    us = np.asarray(values, "datetime64[us]")
    return list(pd.DatetimeIndex(us).tz_localize(timezone.utc).to_pydatetime())


def datetimes_to_datetime64(values) -> np.ndarray:
    """Vectorised :func:`to_datetime64` for datetimes (naive ones are read as UTC)."""
    values = list(values)
    if not values:
        return np.zeros(0, "datetime64[ns]")
    return pd.to_datetime(values, utc=True).tz_convert(None).to_numpy("datetime64[ns]")


def isoformat(value: np.datetime64) -> str:
    return to_datetime(value).isoformat()


@dataclass(frozen=True, slots=True)
class QuoteBar:
    """One 30-minute interval on one venue."""

    timestamp: datetime
    bid: float
    offer: float
    mid_open: float
    mid_high: float
    mid_low: float
    mid_close: float
    traded_value: float = 0.0

    def __post_init__(self):
        ts = to_datetime64(self.timestamp)
        if ts.astype(np.int64) % GRID_STEP.astype("timedelta64[ns]").astype(np.int64):
            raise DataError(f"timestamp {self.timestamp} is not on the 30-minute grid")
        if not self.bid > 0 or not self.offer >= self.bid:
            raise DataError(f"need offer >= bid > 0, got bid={self.bid} offer={self.offer}")
        o, h, l, c = self.mid_open, self.mid_high, self.mid_low, self.mid_close
        if not min(o, h, l, c) > 0:
            raise DataError("mid OHLC must be positive")
        if not (l <= min(o, c) and h >= max(o, c)):
            raise DataError(f"inconsistent OHLC o={o} h={h} l={l} c={c}")
        if not self.traded_value >= 0:
            raise DataError("traded_value must be >= 0")

    @property
    def mid(self) -> float:
        return (self.bid + self.offer) / 2.0


def _readonly(a, dtype) -> np.ndarray:
    out = np.array(a, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class BarSeries:
    """Columnar, immutable series of bars for one asset on one venue.

    With ``uniform=True`` (the default) timestamps must sit on an unbroken
    30-minute grid; missing intervals are explicit rows with ``gap=True`` and
    NaN prices. ``uniform=False`` is used for aligned legs, where gap rows have
    already been removed and holes are expected.
    """

    asset: str
    venue: str
    timestamps: np.ndarray
    bid: np.ndarray
    offer: np.ndarray
    mid_open: np.ndarray
    mid_high: np.ndarray
    mid_low: np.ndarray
    mid_close: np.ndarray
    traded_value: np.ndarray
    gap: np.ndarray | None = None
    uniform: bool = True
    grid_step: np.timedelta64 = GRID_STEP

    def __post_init__(self):
        ts = _readonly(self.timestamps, "datetime64[ns]")
        object.__setattr__(self, "timestamps", ts)
        n = ts.shape[0]
        for name in FIELDS:
            col = _readonly(getattr(self, name), np.float64)
            if col.shape != (n,):
                raise DataError(f"column {name} has shape {col.shape}, expected ({n},)")
            object.__setattr__(self, name, col)
        gap = np.zeros(n, bool) if self.gap is None else self.gap
        object.__setattr__(self, "gap", _readonly(gap, bool))
        if self.gap.shape != (n,):
            raise DataError("gap mask length mismatch")
        self._validate()

    def _validate(self):
        ts = self.timestamps.astype(np.int64)
        step = np.timedelta64(self.grid_step, "ns").astype(np.int64)
        if len(ts) and np.any(ts % step):
            raise DataError("timestamps must be exact multiples of the grid step")
        d = np.diff(ts)
        if np.any(d <= 0):
            raise DataError("timestamps must be strictly increasing")
        if self.uniform and np.any(d != step):
            raise DataError("silent hole in uniform series; insert gap rows instead")
        ok = ~self.gap
        if np.any(~np.isnan(self.bid[self.gap])):
            raise DataError("gap rows must carry NaN prices")
        bid, offer = self.bid[ok], self.offer[ok]
        o, h, l, c = (self.mid_open[ok], self.mid_high[ok], self.mid_low[ok], self.mid_close[ok])
        if not (np.all(bid > 0) and np.all(offer >= bid)):
            raise DataError("need offer >= bid > 0 on every bar")
        if not np.all(np.minimum.reduce([o, h, l, c]) > 0):
            raise DataError("mid OHLC must be positive")
        if not (np.all(l <= np.minimum(o, c)) and np.all(h >= np.maximum(o, c))):
            raise DataError("inconsistent mid OHLC")
        if not np.all(self.traded_value[ok] >= 0):
            raise DataError("traded_value must be >= 0")

    # construction -------------------------------------------------------

    @classmethod
    def from_bars(cls, asset: str, venue: str, bars: list[QuoteBar], *, fill_gaps: bool = True) -> BarSeries:
        """Build a series from bars; with ``fill_gaps`` any missing intervals become gap rows."""
        if not bars:
            return cls.empty(asset, venue)
        ts = np.array([to_datetime64(b.timestamp) for b in bars], dtype="datetime64[ns]")
        cols = {name: np.array([getattr(b, name) for b in bars], float) for name in FIELDS}
        series = cls(asset, venue, ts, **cols, uniform=False)
        return series.with_gaps() if fill_gaps else series

    @classmethod
    def empty(cls, asset: str, venue: str) -> BarSeries:
        z = np.zeros(0)
        return cls(asset, venue, np.zeros(0, "datetime64[ns]"), *(z,) * len(FIELDS))

    def with_gaps(self) -> BarSeries:
        """Re-grid onto an unbroken 30-minute grid, inserting gap rows for holes."""
        if len(self) == 0:
            return self
        grid = np.arange(self.timestamps[0], self.timestamps[-1] + self.grid_step, self.grid_step)
        pos = np.searchsorted(grid, self.timestamps)
        cols = {}
        for name in FIELDS:
            col = np.full(len(grid), np.nan)
            col[pos] = getattr(self, name)
            cols[name] = col
        gap = np.ones(len(grid), bool)
        gap[pos] = self.gap
        for name in FIELDS:
            cols[name][gap] = np.nan
        return BarSeries(self.asset, self.venue, grid, **cols, gap=gap, uniform=True,
                         grid_step=self.grid_step)

    def replace(self, **changes) -> BarSeries:
        kw = {name: getattr(self, name) for name in
              ("asset", "venue", "timestamps") + FIELDS + ("gap", "uniform", "grid_step")}
        kw.update(changes)
        return BarSeries(**kw)

    def take(self, index) -> BarSeries:
        """Rows selected by a slice, index array or boolean mask."""
        sub = {name: getattr(self, name)[index] for name in ("timestamps",) + FIELDS + ("gap",)}
        uniform = self.uniform and isinstance(index, slice) and index.step in (None, 1)
        return self.replace(**sub, uniform=uniform)

    # access ---------------------------------------------------------------

    def __len__(self) -> int:
        return self.timestamps.shape[0]

    def __iter__(self) -> Iterator[QuoteBar]:
        """Iterate over the non-gap bars."""
        for i in np.flatnonzero(~self.gap):
            yield self.bar(i)

    @property
    def bars(self) -> list[QuoteBar]:
        return list(self)

    def bar(self, i: int) -> QuoteBar | None:
        if self.gap[i]:
            return None
        return QuoteBar(to_datetime(self.timestamps[i]), *(float(getattr(self, f)[i]) for f in FIELDS))

    @property
    def mid(self) -> np.ndarray:
        return (self.bid + self.offer) / 2.0

    def price(self, side: str) -> np.ndarray:
        if side == "bid":
            return self.bid
        if side == "offer":
            return self.offer
        if side == "mid":
            return self.mid
        raise ConfigurationError(f"unknown side {side!r}")

    def to_frame(self):
        data = {name: getattr(self, name) for name in FIELDS}
        data["gap"] = self.gap
        return pd.DataFrame(data, index=pd.DatetimeIndex(self.timestamps, tz="UTC", name="timestamp"))

    def __eq__(self, other):
        if not isinstance(other, BarSeries):
            return NotImplemented
        if (self.asset, self.venue, self.uniform) != (other.asset, other.venue, other.uniform):
            return False
        if not np.array_equal(self.timestamps, other.timestamps) or not np.array_equal(self.gap, other.gap):
            return False
        return all(np.array_equal(getattr(self, f), getattr(other, f), equal_nan=True) for f in FIELDS)

    def __repr__(self):
        span = f"{self.timestamps[0]}..{self.timestamps[-1]}" if len(self) else "empty"
        return f"BarSeries({self.asset}@{self.venue}, {len(self)} rows, {int(self.gap.sum())} gaps, {span})"


@dataclass(frozen=True, eq=False)
class AlignedPair:
    """Local and global legs on one shared timestamp sequence, with no gap rows."""

    local: BarSeries
    global_: BarSeries
    dropped: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.local) == 0:
            raise AlignmentError("aligned pair must be nonempty")
        if not np.array_equal(self.local.timestamps, self.global_.timestamps):
            raise AlignmentError("legs carry different timestamp sequences")
        if self.local.gap.any() or self.global_.gap.any():
            raise AlignmentError("aligned legs cannot contain gap rows")

    @property
    def grid(self) -> np.ndarray:
        return self.local.timestamps

    def __len__(self) -> int:
        return len(self.local)

    def __eq__(self, other):
        if not isinstance(other, AlignedPair):
            return NotImplemented
        return self.local == other.local and self.global_ == other.global_

    def take(self, index) -> AlignedPair:
        return AlignedPair(self.local.take(index), self.global_.take(index))

    def is_contiguous(self) -> bool:
        return bool(np.all(np.diff(self.grid) == self.local.grid_step))

    def segments(self) -> list[tuple[int, int]]:
        """Half-open index ranges of the contiguous runs in the grid."""
        breaks = np.flatnonzero(np.diff(self.grid) != self.local.grid_step) + 1
        edges = [0, *breaks.tolist(), len(self)]
        return list(zip(edges[:-1], edges[1:]))

    def longest_segment(self) -> AlignedPair:
        a, b = max(self.segments(), key=lambda s: s[1] - s[0])
        return self.take(slice(a, b))


def align_pair(local: BarSeries, global_: BarSeries) -> AlignedPair:
    """Intersect the non-gap timestamps of two venues.

    The returned pair's ``dropped`` maps ``"local"``/``"global"`` to the number
    of input rows (including gap rows) that did not survive.
    """
    if np.timedelta64(local.grid_step, "ns") != np.timedelta64(global_.grid_step, "ns"):
        raise ConfigurationError(f"grid steps differ: {local.grid_step} vs {global_.grid_step}")
    lt = local.timestamps[~local.gap]
    gt = global_.timestamps[~global_.gap]
    common, li, gi = np.intersect1d(lt, gt, assume_unique=True, return_indices=True)
    if common.size == 0:
        raise AlignmentError(f"no overlapping bars between {local.venue} and {global_.venue}")
    lrows = np.flatnonzero(~local.gap)[li]
    grows = np.flatnonzero(~global_.gap)[gi]
    dropped = {"local": len(local) - common.size, "global": len(global_) - common.size}
    if dropped["local"] or dropped["global"]:
        logger.info("alignment dropped %(local)d local and %(global)d global rows", dropped)
    pair = AlignedPair(local.take(lrows).replace(uniform=False),
                       global_.take(grows).replace(uniform=False), dropped)
    return pair


@dataclass(frozen=True)
class WeekWindow:
    """One Sunday-anchored week of an aligned pair.

    ``rows`` is None when the week has no observations at all.
    """

    index: int
    start: datetime
    rows: AlignedPair | None
    partial: bool
    usable: bool

    @property
    def n_rows(self) -> int:
        return 0 if self.rows is None else len(self.rows)


def _check_anchor(anchor: np.datetime64):
    d = to_datetime(anchor)
    if d.weekday() != 6 or (d.hour, d.minute, d.second, d.microsecond) != (0, 0, 0, 0):
        raise ConfigurationError(f"week anchor {d.isoformat()} is not a Sunday 00:00 UTC")


def slice_weeks(pair: AlignedPair, anchor_start, min_rows: int = 200) -> list[WeekWindow]:
    """Partition ``pair`` into contiguous 7-day windows starting at ``anchor_start``.

    A bar belongs to the week holding the start of its interval, so the bar
    stamped Sunday 00:00 closes the previous week. Windows with fewer than 336 rows are flagged ``partial``; windows with
    fewer than ``min_rows`` rows are not ``usable``.
    """
    anchor = to_datetime64(anchor_start)
    _check_anchor(anchor)
    opens = pair.grid - pair.local.grid_step
    if opens[0] < anchor:
        raise ConfigurationError("week anchor lies after the start of the first row")
    week_of = ((opens - anchor) // WEEK).astype(np.int64)
    n_weeks = int(week_of[-1]) + 1
    bounds = np.searchsorted(week_of, np.arange(n_weeks + 1))
    windows = []
    for w in range(n_weeks):
        a, b = int(bounds[w]), int(bounds[w + 1])
        rows = pair.take(slice(a, b)) if b > a else None
        n = b - a
        windows.append(WeekWindow(w, to_datetime(anchor + w * WEEK), rows,
                                  partial=n < BARS_PER_WEEK, usable=n >= min_rows))
        if n < min_rows:
            logger.info("week %d has %d rows (< %d); marked unusable", w, n, min_rows)
    return windows
