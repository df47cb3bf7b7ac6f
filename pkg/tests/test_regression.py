from datetime import datetime, timedelta, timezone

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from quotelag.biaslab import ClassifierConfig, WeeklyPanelRow, bias_label, classify_bias, rqv_regression
from quotelag.biaslab.regression import LABELS
from quotelag.errors import ConfigurationError, DegenerateInputError, InsufficientDataError

from oracles import normal_equations_ols

W0 = datetime(2020, 11, 22, tzinfo=timezone.utc)


def synthetic_panel(rqv30, pct=None, ret=None, seed=0, side="bid"):
    """Panel rows with given 30-minute RQVs; the other regressors are independent noise."""
    rng = np.random.default_rng(seed)
    n = len(rqv30)
    pct = rng.uniform(0.2, 0.8, n) if pct is None else pct
    ret = rng.normal(0, 0.05, n) if ret is None else ret
    rows = []
    for i in range(n):
        rqv = {h: float(rqv30[i]) + 0.001 * k for k, h in enumerate((30, 60, 90, 120, 150))}
        rows.append(WeeklyPanelRow(i, W0 + timedelta(weeks=i), side, 336, rqv, float(ret[i]),
                                   float(rng.normal(18, 0.3)), float(rng.uniform(0.02, 0.08)),
                                   float(pct[i]), True))
    return rows


def test_regression_matches_normal_equations_oracle():
    rng = np.random.default_rng(1)
    panel = synthetic_panel(0.95 + rng.normal(0, 0.01, 109), seed=1)
    rep = rqv_regression(panel, "pct_gain", "bid", "30m")
    X = np.array([[1, r.pct_accounts_in_gain, r.ln_traded_value, r.weekly_volatility] for r in panel])
    beta, se = normal_equations_ols([r.rqv[30] for r in panel], X)
    assert np.allclose(rep.coefficients, beta, rtol=1e-8)
    assert np.allclose(rep.standard_errors, se, rtol=1e-8)
    assert rep.n_obs == 109 and rep.slope == rep.coefficients[1]


def test_planted_slope_is_recovered():
    rng = np.random.default_rng(2)
    pct = rng.uniform(0.1, 0.9, 109)
    panel = synthetic_panel(0.95 - 0.05 * pct + rng.normal(0, 0.005, 109), pct=pct, seed=2)
    rep = rqv_regression(panel, "pct_gain")
    assert abs(rep.slope + 0.05) < 0.02 and rep.slope_p < 0.05
    assert classify_bias(rep).label == "disposition_effect"


def test_noise_conditioning_is_rarely_significant():
    ts = []
    for seed in range(200):
        rng = np.random.default_rng(seed)
        rep = rqv_regression(synthetic_panel(0.95 + rng.normal(0, 0.01, 109), seed=seed + 10_000), "market_returns")
        ts.append(rep.slope / rep.slope_se)
    assert np.mean(np.abs(ts) < 3) >= 0.95


def test_horizon_selects_the_column():
    rng = np.random.default_rng(3)
    panel = synthetic_panel(0.95 + rng.normal(0, 0.01, 40))
    a = rqv_regression(panel, horizon=30)
    b = rqv_regression(panel, horizon="1h")
    assert b.coefficients[0] == pytest.approx(a.coefficients[0] + 0.001)
    assert b.mean_rqv == pytest.approx(a.mean_rqv + 0.001)


def test_constant_rqv_is_degenerate():
    with pytest.raises(DegenerateInputError):
        rqv_regression(synthetic_panel(np.full(50, 0.95)))


def test_errors_and_row_filtering():
    rng = np.random.default_rng(4)
    panel = synthetic_panel(0.95 + rng.normal(0, 0.01, 31))
    with pytest.raises(ConfigurationError):
        rqv_regression(panel, "volume")
    # a failed week and a week without gain data drop out of the pct-gain regression only
    panel[0] = WeeklyPanelRow(0, W0, "bid", 336, {h: float("nan") for h in (30, 60, 90, 120, 150)}, 0.0, 18.0, 0.05,
                              0.5, False)
    panel[1] = WeeklyPanelRow(1, W0, "bid", 336, panel[1].rqv, 0.0, 18.0, 0.05, None, True)
    assert rqv_regression(panel, "market_returns", min_rows=30).n_obs == 30
    with pytest.raises(InsufficientDataError):
        rqv_regression(panel, "pct_gain")
    with pytest.raises(InsufficientDataError):
        rqv_regression(panel, side="offer")


def test_report_layout():
    rng = np.random.default_rng(5)
    d = rqv_regression(synthetic_panel(0.95 + rng.normal(0, 0.01, 40)), "pct_gain").to_dict()
    assert list(d["rows"]) == ["% accounts in gain", "Ln of trading value", "Volatility", "Constant"]
    assert d["horizon"] == "30m" and d["standard_errors"] == "classical"


def test_reference_classifier_examples():
    assert bias_label(-0.03320, 0.001, 0.95) == "disposition_effect"
    assert bias_label(0.0, 0.9, 0.99) == "rational_or_symmetric"
    assert bias_label(0.05, 0.01, 0.95) == "house_money_or_self_attribution"
    assert bias_label(0.01, 0.4, 0.93) == "inconclusive"
    assert bias_label(-0.03, 0.07, 0.99, ClassifierConfig(significance=0.1)) == "disposition_effect"


@given(st.floats(-1, 1), st.floats(0, 1), st.floats(0.5, 1.5))
def test_classifier_partition_and_sign_flip(slope, p, mean):
    label = bias_label(slope, p, mean)
    assert label in LABELS
    flipped = bias_label(-slope, p, mean)
    if p < 0.05 and slope != 0:
        swap = {"disposition_effect": "house_money_or_self_attribution",
                "house_money_or_self_attribution": "disposition_effect"}
        assert flipped == swap[label]
    else:
        assert flipped == label


def test_classifier_config_validation():
    with pytest.raises(ConfigurationError):
        ClassifierConfig(significance=0.0)
