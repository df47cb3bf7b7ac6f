"""Weekly re-estimation protocol, gain proportions and behavioural-bias classification."""

from .gains import GainSnapshot, GainTracker, gain_snapshot, pct_accounts_in_gain, pct_path
from .panel import (PanelConfig, WeeklyPanelRow, build_weekly_panel, panel_summary, read_panel_csv,
                    write_panel_csv)
from .regression import (BiasVerdict, ClassifierConfig, RqvRegressionReport, bias_label, classify_bias,
                         rqv_regression)

__all__ = [
    "GainSnapshot", "GainTracker", "gain_snapshot", "pct_accounts_in_gain", "pct_path",
    "PanelConfig", "WeeklyPanelRow", "build_weekly_panel", "panel_summary", "read_panel_csv",
    "write_panel_csv", "BiasVerdict", "ClassifierConfig", "RqvRegressionReport", "bias_label",
    "classify_bias", "rqv_regression",
]
