"""Synthetic quote pairs, trade histories and bias scenarios with known ground truth."""

from .pair import (Draws, SynthDataset, SynthSpec, build_dataset, check_stable, gen_cointegrated_pair,
                   simulate_pair)
from .scenario import (KINDS, ScenarioSpec, dataset_outputs, gen_biased_scenario, gen_pair_dataset,
                       rqv30_sensitivity, scenario_spec, write_dataset)
from .trades import TradeHistory, TradeSpec, gen_trades, simulate_trades

__all__ = [
    "Draws", "SynthDataset", "SynthSpec", "build_dataset", "check_stable", "gen_cointegrated_pair",
    "simulate_pair", "KINDS", "ScenarioSpec", "gen_biased_scenario", "gen_pair_dataset", "dataset_outputs",
    "rqv30_sensitivity", "scenario_spec", "write_dataset", "TradeHistory", "TradeSpec", "gen_trades", "simulate_trades",
]
