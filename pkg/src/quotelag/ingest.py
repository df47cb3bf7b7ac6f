"""CSV ingestion, FX conversion and 30-minute resampling.

File formats (UTF-8, comma separated, ``.`` decimal point, no thousands
separators, ISO-8601 timestamps with an explicit UTC offset):

* quotes: ``timestamp,bid,offer,traded_value`` (extra columns ignored)
* trades: ``timestamp,account_id,asset,side,quantity,price``
* fx:     ``timestamp,rate`` (local currency per unit of quote currency)
"""

from __future__ import annotations

import csv
import io
import logging
import os
from dataclasses import dataclass, field
from datetime import datetime
from typing import Iterable, Sequence, TextIO

import numpy as np
import pandas as pd
import polars as pl

from .errors import CoverageError, EmptySeriesError, IngestionError, SchemaError
from .quotegrid import FIELDS, GRID_STEP, BarSeries, to_datetime, to_datetime64, to_datetimes

logger = logging.getLogger(__name__)

DEFAULT_MAX_BAD_FRACTION = 0.001
QUOTE_COLUMNS = ("timestamp", "bid", "offer", "traded_value")
TRADE_COLUMNS = ("timestamp", "account_id", "asset", "side", "quantity", "price")
FX_COLUMNS = ("timestamp", "rate")
_OFFSET_RE = r"(?:Z|[+-]\d\d:?\d\d)$"


@dataclass(frozen=True)
class RowError:
    line: int
    reason: str
    raw: str = ""


@dataclass
class ParseReport:
    """Malformed rows (with 1-based file line numbers) and warnings from one parse."""

    n_rows: int = 0
    errors: list[RowError] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def bad_fraction(self) -> float:
        return len(self.errors) / self.n_rows if self.n_rows else 0.0


@dataclass(frozen=True, slots=True)
class RawQuoteRecord:
    timestamp: datetime
    bid: float
    offer: float
    last_trade_value: float | None = None

    def __post_init__(self):
        if not (self.bid > 0 and self.offer >= self.bid):
            raise ValueError(f"need offer >= bid > 0, got {self.bid}/{self.offer}")


@dataclass(frozen=True, slots=True)
class TradeRecord:
    timestamp: datetime
    account_id: str
    asset: str
    side: str
    quantity: float
    price: float

    def __post_init__(self):
        if self.side not in ("buy", "sell"):
            raise ValueError(f"side must be buy or sell, got {self.side!r}")
        if not (self.quantity > 0 and self.price > 0):
            raise ValueError("quantity and price must be > 0")


@dataclass(frozen=True, eq=False)
class QuoteTable(Sequence):
    """Columnar quote records; indexing yields :class:`RawQuoteRecord`."""

    timestamps: np.ndarray
    bid: np.ndarray
    offer: np.ndarray
    last_trade_value: np.ndarray  # NaN where absent

    @classmethod
    def from_records(cls, records: Iterable[RawQuoteRecord]) -> QuoteTable:
        records = list(records)
        return cls(
            np.array([to_datetime64(r.timestamp) for r in records], dtype="datetime64[ns]"),
            np.array([r.bid for r in records], float),
            np.array([r.offer for r in records], float),
            np.array([np.nan if r.last_trade_value is None else r.last_trade_value for r in records], float),
        )

    def __len__(self):
        return self.timestamps.shape[0]

    def __getitem__(self, i):
        if isinstance(i, slice):
            return QuoteTable(self.timestamps[i], self.bid[i], self.offer[i], self.last_trade_value[i])
        v = self.last_trade_value[i]
        return RawQuoteRecord(to_datetime(self.timestamps[i]), float(self.bid[i]), float(self.offer[i]),
                              None if np.isnan(v) else float(v))


@dataclass(frozen=True, eq=False)
class FxRateSeries:
    timestamps: np.ndarray
    rates: np.ndarray

    def __post_init__(self):
        ts = np.asarray(self.timestamps, "datetime64[ns]")
        rates = np.asarray(self.rates, float)
        if ts.shape != rates.shape:
            raise SchemaError("fx timestamps and rates differ in length")
        if np.any(np.diff(ts) <= np.timedelta64(0, "ns")):
            raise IngestionError("fx timestamps must be strictly increasing")
        if np.any(~(rates > 0)):
            raise IngestionError("fx rates must be > 0")
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "rates", rates)

    @classmethod
    def constant(cls, rate: float, start) -> FxRateSeries:
        return cls(np.array([to_datetime64(start)]), np.array([float(rate)]))

    def rate_at(self, timestamps) -> np.ndarray:
        """Most recent rate at or before each timestamp (NaN if none)."""
        idx = np.searchsorted(self.timestamps, np.asarray(timestamps, "datetime64[ns]"), side="right") - 1
        out = np.full(idx.shape, np.nan)
        ok = idx >= 0
        out[ok] = self.rates[idx[ok]]
        return out


# -- low-level CSV plumbing -----------------------------------------------------

# a file that matches this shape can skip the general timestamp parser
_FIXED_UTC_RE = r"^\d{4}-\d\d-\d\dT\d\d:\d\d:\d\d(?:\.\d{1,9})?\+00:00$"


def _read_text(source) -> str:
    if isinstance(source, (str, os.PathLike)):
        with open(source, "r", encoding="utf-8", newline="") as fh:
            return fh.read()
    if isinstance(source, (bytes, bytearray)):
        return bytes(source).decode("utf-8")
    text = source.read()
    return text.decode("utf-8") if isinstance(text, bytes) else text


class _Rows:
    """Row view over string columns, used to echo rejected rows."""

    def __init__(self, columns: list[pl.Series]):
        self.columns = columns

    def __len__(self):
        return len(self.columns[0]) if self.columns else 0

    def __getitem__(self, i):
        return [c[int(i)] for c in self.columns]


def _frame_fast(text: str) -> pl.DataFrame | None:
    """All-string frame when every line is a plain row of the header's width, else None."""
    n_lines = text.count("\n") + (not text.endswith("\n"))
    first = text.split("\n", 1)[0]
    if '"' in text or n_lines < 2:
        return None
    width = first.count(",") + 1
    if text.count(",") != (width - 1) * n_lines:
        return None
    try:
        df = pl.read_csv(io.BytesIO(text.encode("utf-8")), infer_schema=False,
                         missing_utf8_is_empty_string=True, raise_if_empty=True)
    except pl.exceptions.PolarsError:
        return None
    return df if df.height == n_lines - 1 and df.width == width else None


def _read_rows(source, required: dict[str, str], optional: dict[str, str] | None = None):
    """Header-indexed, whitespace-stripped string columns plus rows with a wrong field count.

    ``optional`` columns are returned only when the header carries them.
    """
    text = _read_text(source)
    df = _frame_fast(text)
    if df is not None:
        header = list(df.columns)
        body_cols = df.get_columns()
        bad = []
        lines = np.arange(2, df.height + 2, dtype=np.int64)
    else:
        reader = csv.reader(io.StringIO(text, newline=""))
        header = next(reader, None)
        if header is None:
            raise SchemaError("file has no header row")
        width = len(header)
        lines, rows, bad = [], [], []
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != width:
                bad.append(RowError(line_no, f"expected {width} fields, got {len(row)}", ",".join(row)))
                continue
            lines.append(line_no)
            rows.append(row)
        lines = np.array(lines, dtype=np.int64)
        columns = list(zip(*rows)) if rows else [()] * width
        body_cols = [pl.Series(f"c{i}", list(c), dtype=pl.Utf8) for i, c in enumerate(columns)]
    header = [h.strip().lstrip("\ufeff") for h in header]
    missing = [col for col in required.values() if col not in header]
    if missing:
        raise SchemaError(f"missing required column(s): {', '.join(missing)}")
    pos = {key: header.index(col) for key, col in required.items()}
    pos |= {key: header.index(col) for key, col in (optional or {}).items() if col in header}
    cols = {key: body_cols[i].str.strip_chars() for key, i in pos.items()}
    return lines, cols, _Rows(body_cols), bad


def _fixed_utc(raw: pl.Series) -> np.ndarray | None:
    """Fast path for files whose every stamp has the shape the writers emit in UTC."""
    if not len(raw) or not raw.str.contains(_FIXED_UTC_RE).all():
        return None
    try:
        values = raw.str.strip_suffix("+00:00").to_numpy().astype("datetime64[ns]")
    except ValueError:
        return None
    return None if np.isnat(values).any() else values


def _timestamps(raw: pl.Series):
    values = _fixed_utc(raw)
    if values is not None:
        return values, np.ones(len(raw), bool)
    has_offset = raw.str.contains(_OFFSET_RE).fill_null(False).to_numpy()
    ts = pd.to_datetime(pd.Series(raw.to_list(), dtype=object), utc=True, errors="coerce", format="ISO8601")
    values = ts.dt.tz_convert("UTC").dt.tz_localize(None).to_numpy("datetime64[ns]")
    ok = has_offset & ~pd.isna(ts).to_numpy()
    return values, ok


def _to_float(text: str) -> float:
    try:
        return float(text)
    except ValueError:
        return np.nan


def _numbers(raw: pl.Series) -> np.ndarray:
    parsed = raw.cast(pl.Float64, strict=False)
    out = parsed.to_numpy().astype(float, copy=True)
    # whatever the fast cast refused goes through Python's float()
    for i in (parsed.is_null() & (raw != "")).arg_true().to_list():
        out[i] = _to_float(raw[i])
    return out


def _finish(report: ParseReport, max_bad_fraction: float, what: str):
    report.errors.sort(key=lambda e: e.line)
    if report.n_rows == 0:
        msg = f"{what}: file contains only a header"
        report.warnings.append(msg)
        logger.warning(msg)
    elif report.errors:
        logger.warning("%s: %d malformed row(s) of %d", what, len(report.errors), report.n_rows)
    if report.bad_fraction > max_bad_fraction:
        first = "; ".join(f"line {e.line}: {e.reason}" for e in report.errors[:5])
        raise IngestionError(f"{what}: {len(report.errors)}/{report.n_rows} malformed rows "
                             f"exceeds the {max_bad_fraction:.3%} tolerance ({first})")


def _reject(report, lines, rows, mask, reason):
    for i in np.flatnonzero(mask):
        report.errors.append(RowError(int(lines[i]), reason, ",".join(rows[i])))


# -- public parsers -----------------------------------------------------------------

def parse_quote_csv(source, schema: dict[str, str] | None = None,
                    max_bad_fraction: float = DEFAULT_MAX_BAD_FRACTION) -> tuple[QuoteTable, ParseReport]:
    """Parse a quote file into records in file order plus a report of rejected rows.

    ``schema`` maps ``timestamp``/``bid``/``offer``/``traded_value`` to column
    names; ``traded_value`` may be mapped to None (or be absent) to skip it.
    """
    schema = dict(zip(QUOTE_COLUMNS, QUOTE_COLUMNS)) | dict(schema or {})
    value_col = schema.pop("traded_value", None)
    required = {k: schema[k] for k in ("timestamp", "bid", "offer")}
    optional = {"traded_value": value_col} if value_col else {}
    lines, cols, rows, bad = _read_rows(source, required, optional)
    report = ParseReport(n_rows=len(rows) + len(bad), errors=list(bad))
    ts, ts_ok = _timestamps(cols["timestamp"])
    bid, offer = _numbers(cols["bid"]), _numbers(cols["offer"])
    if "traded_value" in cols:
        raw_v = cols["traded_value"]
        value = _numbers(raw_v)
        blank = (raw_v == "").to_numpy()
        value[blank] = np.nan
        value_ok = blank | (np.isfinite(value) & (value >= 0))
    else:
        value = np.full(len(rows), np.nan)
        value_ok = np.ones(len(rows), bool)
    checks = [
        (~ts_ok, "timestamp is not ISO-8601 with an explicit UTC offset"),
        (~(np.isfinite(bid) & (bid > 0)), "bid is not a positive number"),
        (~(np.isfinite(offer) & (offer > 0)), "offer is not a positive number"),
        (~(offer >= bid), "offer < bid"),
        (~value_ok, "traded_value is not a non-negative number"),
    ]
    keep = np.ones(len(rows), bool)
    for mask, reason in checks:
        mask = mask & keep
        _reject(report, lines, rows, mask, reason)
        keep &= ~mask
    _finish(report, max_bad_fraction, "quotes")
    return QuoteTable(ts[keep], bid[keep], offer[keep], value[keep]), report


def parse_trades_csv(source, max_bad_fraction: float = DEFAULT_MAX_BAD_FRACTION
                     ) -> tuple[list[TradeRecord], ParseReport]:
    """Parse a trade file. Duplicate rows are kept; the parser is not a cleaner."""
    lines, cols, rows, bad = _read_rows(source, dict(zip(TRADE_COLUMNS, TRADE_COLUMNS)))
    report = ParseReport(n_rows=len(rows) + len(bad), errors=list(bad))
    ts, ts_ok = _timestamps(cols["timestamp"])
    qty, price = _numbers(cols["quantity"]), _numbers(cols["price"])
    side = cols["side"].str.to_lowercase().to_numpy().astype(object)
    acct = cols["account_id"].to_numpy().astype(object)
    checks = [
        (~ts_ok, "timestamp is not ISO-8601 with an explicit UTC offset"),
        (acct == "", "empty account_id"),
        (~np.isin(side, ["buy", "sell"]), "side must be buy or sell"),
        (~(np.isfinite(qty) & (qty > 0)), "quantity is not a positive number"),
        (~(np.isfinite(price) & (price > 0)), "price is not a positive number"),
    ]
    keep = np.ones(len(rows), bool)
    for mask, reason in checks:
        mask = mask & keep
        _reject(report, lines, rows, mask, reason)
        keep &= ~mask
    _finish(report, max_bad_fraction, "trades")
    assets = cols["asset"].to_list()
    idx = np.flatnonzero(keep)
    stamps = to_datetimes(ts[idx])
    records = [TradeRecord(stamps[j], acct[i], assets[i], side[i], q, px)
               for j, (i, q, px) in enumerate(zip(idx.tolist(), qty[idx].tolist(), price[idx].tolist()))]
    return records, report


def parse_fx_csv(source, max_bad_fraction: float = DEFAULT_MAX_BAD_FRACTION) -> tuple[FxRateSeries, ParseReport]:
    lines, cols, rows, bad = _read_rows(source, dict(zip(FX_COLUMNS, FX_COLUMNS)))
    report = ParseReport(n_rows=len(rows) + len(bad), errors=list(bad))
    ts, ts_ok = _timestamps(cols["timestamp"])
    rate = _numbers(cols["rate"])
    keep = np.ones(len(rows), bool)
    for mask, reason in [(~ts_ok, "timestamp is not ISO-8601 with an explicit UTC offset"),
                         (~(np.isfinite(rate) & (rate > 0)), "rate is not a positive number")]:
        mask = mask & keep
        _reject(report, lines, rows, mask, reason)
        keep &= ~mask
    _finish(report, max_bad_fraction, "fx")
    if keep.sum() == 0:
        raise CoverageError("fx file has no usable rates")
    return FxRateSeries(ts[keep], rate[keep]), report


# -- transforms ------------------------------------------------------------------------

def fx_convert(series: BarSeries, fx: FxRateSeries) -> BarSeries:
    """Multiply every price field and traded value by the last rate at or before each bar."""
    rates = fx.rate_at(series.timestamps)
    missing = np.isnan(rates) & ~series.gap
    if missing.any():
        first = series.timestamps[np.flatnonzero(missing)[0]]
        raise CoverageError(f"no fx rate at or before {to_datetime(first).isoformat()}")
    cols = {name: getattr(series, name) * rates for name in FIELDS}
    venue = series.venue if series.venue.endswith("[converted]") else f"{series.venue}[converted]"
    return series.replace(venue=venue, **cols)


def bucket_labels(timestamps) -> np.ndarray:
    """End label of the 30-minute interval (start, end] holding each timestamp."""
    t = np.asarray(timestamps, "datetime64[ns]").astype(np.int64)
    step = np.timedelta64(GRID_STEP, "ns").astype(np.int64)
    return (-(-t // step) * step).astype("datetime64[ns]")


def resample_30m(records, asset: str = "", venue: str = "") -> BarSeries:
    """Aggregate quote records into end-labelled 30-minute bars.

    bid/offer are the last quote in the bucket, mid OHLC follows the mid-quote
    path, traded_value sums ``last_trade_value``; empty buckets become gap rows.
    """
    table = records if isinstance(records, QuoteTable) else QuoteTable.from_records(records)
    if len(table) == 0:
        raise EmptySeriesError("no quote records to resample")
    order = np.argsort(table.timestamps, kind="stable")
    ts = table.timestamps[order]
    bid, offer = table.bid[order], table.offer[order]
    value = np.nan_to_num(table.last_trade_value[order], nan=0.0)
    mid = (bid + offer) / 2.0
    labels = bucket_labels(ts)
    starts = np.flatnonzero(np.r_[True, labels[1:] != labels[:-1]])
    ends = np.r_[starts[1:], len(ts)] - 1
    bars = BarSeries(
        asset, venue, labels[starts],
        bid=bid[ends], offer=offer[ends],
        mid_open=mid[starts], mid_high=np.maximum.reduceat(mid, starts),
        mid_low=np.minimum.reduceat(mid, starts), mid_close=mid[ends],
        traded_value=np.add.reduceat(value, starts), uniform=False,
    )
    return bars.with_gaps()


# -- writers ---------------------------------------------------------------------------

def write_columns_csv(columns: dict[str, Sequence], fh: TextIO) -> None:
    """Write named columns; floats use the shortest round-trip form and NaN becomes an empty field.

    ``datetime64`` columns are written as UTC ISO-8601 with a ``+00:00`` offset,
    at second precision unless some stamp has a fraction.
    """
    data, fraction = {}, False
    for name, v in columns.items():
        if isinstance(v, np.ndarray) and v.dtype.kind == "M":
            v = v.astype("datetime64[ns]")
            fraction |= bool(np.any(v.astype(np.int64) % 1_000_000_000))
            v = pl.Series(name, v)
        data[name] = v
    df = pl.DataFrame(data).with_columns(pl.col(pl.Float64).fill_nan(None))
    stamp = "%Y-%m-%dT%H:%M:%S%.6f+00:00" if fraction else "%Y-%m-%dT%H:%M:%S+00:00"
    fh.write(df.write_csv(null_value="", datetime_format=stamp))


def write_quote_csv(table: QuoteTable, fh: TextIO) -> None:
    write_columns_csv(dict(zip(QUOTE_COLUMNS, (table.timestamps, table.bid, table.offer,
                                               table.last_trade_value))), fh)


def write_trades_csv(trades: Sequence[TradeRecord], fh: TextIO) -> None:
    stamps = (pd.DatetimeIndex([t.timestamp for t in trades]).tz_convert("UTC").tz_localize(None).to_numpy()
              if trades else np.zeros(0, "datetime64[ns]"))
    write_columns_csv({
        "timestamp": stamps,
        "account_id": pl.Series([t.account_id for t in trades], dtype=pl.Utf8),
        "asset": pl.Series([t.asset for t in trades], dtype=pl.Utf8),
        "side": pl.Series([t.side for t in trades], dtype=pl.Utf8),
        "quantity": np.array([t.quantity for t in trades], float),
        "price": np.array([t.price for t in trades], float),
    }, fh)


def write_fx_csv(fx: FxRateSeries, fh: TextIO) -> None:
    write_columns_csv(dict(zip(FX_COLUMNS, (fx.timestamps, fx.rates))), fh)


def load_bar_series(quotes_path, asset: str, venue: str, fx_path=None,
                    max_bad_fraction: float = DEFAULT_MAX_BAD_FRACTION) -> BarSeries:
    """Parse, resample and (optionally) FX-convert one venue's quote file."""
    table, _ = parse_quote_csv(quotes_path, max_bad_fraction=max_bad_fraction)
    bars = resample_30m(table, asset, venue)
    if fx_path is not None:
        fx, _ = parse_fx_csv(fx_path, max_bad_fraction)
        bars = fx_convert(bars, fx)
    return bars
