import io
import math

import numpy as np
import pytest

from quotelag.biaslab import (PanelConfig, build_weekly_panel, panel_summary, pct_accounts_in_gain,
                              read_panel_csv, write_panel_csv)
from quotelag.biaslab.panel import default_anchor
from quotelag.errors import ConfigurationError, PanelError
from quotelag.impulse import DEFAULT_HORIZONS
from quotelag.synth import gen_biased_scenario

from conftest import T0, make_pair


@pytest.fixture(scope="module")
def null_scenario():
    ds = gen_biased_scenario("none", 109, seed=0)
    return ds, build_weekly_panel(ds.pair, ds.extra["trades"])


def _walk_pair(weeks, seed):
    rng = np.random.default_rng(seed)
    n = weeks * 336
    g = 1e6 * np.exp(np.cumsum(rng.normal(0, 0.003, n)))
    eta = np.zeros(n)
    for t in range(1, n):
        eta[t] = 0.6 * eta[t - 1] + rng.normal(0, 500)
    return g + eta, g


def test_109_weeks_per_side(null_scenario):
    ds, panel = null_scenario
    for side in ("bid", "offer"):
        rows = [r for r in panel if r.side == side]
        assert [r.week_index for r in rows] == list(range(109))
        assert all(r.n_rows == 336 for r in rows)
    assert sum(r.estimation_ok for r in panel) == 218


def test_gain_column_matches_replay_at_week_end(null_scenario):
    ds, panel = null_scenario
    trades = ds.extra["trades"]
    for r in [r for r in panel if r.side == "bid"][::20]:
        week = ds.pair.take(np.arange(r.week_index * 336, (r.week_index + 1) * 336))
        end = week.grid[-1].astype("datetime64[us]").item().replace(tzinfo=r.week_start.tzinfo)
        assert r.pct_accounts_in_gain == pct_accounts_in_gain(trades, float(week.local.mid_close[-1]), at=end)


def test_uniform_speed_gives_tight_cross_week_rqv(null_scenario):
    _, panel = null_scenario
    v = np.array([r.rqv[30] for r in panel if r.side == "bid" and r.estimation_ok])
    assert v.std(ddof=1) < 0.02


def test_week_descriptors(null_scenario):
    ds, panel = null_scenario
    r = next(r for r in panel if r.week_index == 5 and r.side == "bid")
    week = ds.pair.local.take(np.arange(5 * 336, 6 * 336))
    assert r.weekly_return == pytest.approx(week.mid_close[-1] / week.mid_close[0] - 1, rel=1e-12)
    assert r.ln_traded_value == pytest.approx(math.log(week.traded_value.sum()), rel=1e-12)


def test_failed_week_is_flagged_not_dropped():
    a, g = _walk_pair(3, 1)
    a[336:672], g[336:672] = a[335], g[335]
    panel = build_weekly_panel(make_pair(a, g), cfg=PanelConfig(sides=("bid",)))
    assert [r.week_index for r in panel] == [0, 1, 2]
    assert [r.estimation_ok for r in panel] == [True, False, True]
    assert panel[1].diagnostics and all(math.isnan(v) for v in panel[1].rqv.values())


def test_every_week_failing_raises():
    pair = make_pair(np.full(672, 100.0), np.full(672, 100.0))
    with pytest.raises(PanelError):
        build_weekly_panel(pair, cfg=PanelConfig(sides=("bid",)))


def test_short_week_is_flagged():
    a, g = _walk_pair(2, 2)
    panel = build_weekly_panel(make_pair(a[:500], g[:500]), cfg=PanelConfig(sides=("bid",)))
    assert [r.estimation_ok for r in panel] == [True, False]
    assert "rows" in panel[1].diagnostics and panel[1].n_rows == 164


def test_without_trades_gain_is_absent_and_csv_round_trips():
    a, g = _walk_pair(2, 3)
    panel = build_weekly_panel(make_pair(a, g))
    assert all(r.pct_accounts_in_gain is None for r in panel)
    buf = io.StringIO()
    write_panel_csv(panel, buf)
    assert "pct_accounts_in_gain" not in buf.getvalue().splitlines()[0]
    again = read_panel_csv(io.StringIO(buf.getvalue()))
    for x, y in zip(panel, again):
        assert (x.week_index, x.side, x.n_rows, x.estimation_ok) == (y.week_index, y.side, y.n_rows, y.estimation_ok)
        assert [x.rqv[h] for h in DEFAULT_HORIZONS] == [y.rqv[h] for h in DEFAULT_HORIZONS]
        assert (x.weekly_return, x.alpha_local, x.cointegrated) == (y.weekly_return, y.alpha_local, y.cointegrated)


def test_csv_round_trip_with_gain(null_scenario):
    _, panel = null_scenario
    buf = io.StringIO()
    write_panel_csv(panel[:10], buf)
    again = read_panel_csv(io.StringIO(buf.getvalue()))
    assert [r.pct_accounts_in_gain for r in again] == [r.pct_accounts_in_gain for r in panel[:10]]


def test_summary_block(null_scenario):
    _, panel = null_scenario
    s = panel_summary(panel)
    assert set(s) == {"bid", "offer"} and s["bid"]["weeks"] == 109
    v = np.array([r.rqv[60] for r in panel if r.side == "bid"])
    assert s["bid"]["1h"]["mean"] == pytest.approx(v.mean())
    assert s["bid"]["1h"]["min"] == v.min()


def test_deterministic_and_worker_count_does_not_matter():
    a, g = _walk_pair(2, 4)
    pair = make_pair(a, g)
    one = build_weekly_panel(pair)
    two = build_weekly_panel(pair, workers=2)
    b1, b2 = io.StringIO(), io.StringIO()
    write_panel_csv(one, b1)
    write_panel_csv(two, b2)
    assert b1.getvalue() == b2.getvalue()


def test_anchor_defaults_to_the_sunday_before():
    a, g = _walk_pair(1, 5)
    pair = make_pair(a, g, start=T0 + np.timedelta64(2, "D"))
    assert default_anchor(pair) == T0
    with pytest.raises(ConfigurationError):
        PanelConfig(gain_at="middle")
