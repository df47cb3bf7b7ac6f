from __future__ import annotations

import numpy as np
import pytest

from quotelag.quotegrid import BarSeries, align_pair
from quotelag.synth import SynthSpec, TradeSpec, gen_pair_dataset

T0 = np.datetime64("2021-01-03T00:00", "ns")  # a Sunday
STEP = np.timedelta64(30, "m")


def grid(n: int, start=T0) -> np.ndarray:
    return start + np.arange(1, n + 1) * STEP


def make_series(mid, start=T0, spread=0.01, value=1000.0, venue="v", stamps=None) -> BarSeries:
    """Bars with mid closes ``mid``; open = previous close, high/low bracket both."""
    mid = np.asarray(mid, float)
    n = mid.shape[0]
    ts = grid(n, start) if stamps is None else np.asarray(stamps, "datetime64[ns]")
    o = np.r_[mid[0], mid[:-1]]
    h = np.maximum(o, mid) * 1.001
    lo = np.minimum(o, mid) * 0.999
    return BarSeries("BTC", venue, ts, bid=mid * (1 - spread / 2), offer=mid * (1 + spread / 2),
                     mid_open=o, mid_high=h, mid_low=lo, mid_close=mid,
                     traded_value=np.full(n, value), uniform=stamps is None)


def make_pair(a, b, start=T0):
    return align_pair(make_series(a, start, venue="local"), make_series(b, start, venue="global"))


@pytest.fixture(scope="session")
def small_dataset():
    """A 3-week synthetic pair with a trade history, shared by read-only tests."""
    return gen_pair_dataset(SynthSpec(seed=7, n_bars=3 * 336), TradeSpec(seed=8, n_accounts=50))


# criterion number -> one-line outcome, printed after the run
ACCEPTANCE: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
