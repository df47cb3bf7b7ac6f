"""Multi-week scenarios with a planted link between adjustment speed and the share of accounts in gain.

Week ``w`` runs with ``alpha_w = alpha_base * (1 + modulation * (pct_w - 0.5))`` where
``pct_w`` is the share of accounts in gain at the end of week ``w``. Because
prices feed back into positions, the schedule is found by a few fixed-point
passes over the same random draws. The modulation is set so that the true
30-minute RQV moves by ``planted_slope`` per unit of ``pct_w``.
"""

from __future__ import annotations

import io
import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from ..errors import ConfigurationError
from ..impulse import ImpulseConfig, simulate_impulse
from ..ingest import write_columns_csv, write_fx_csv, write_quote_csv, write_trades_csv
from ..quotegrid import BARS_PER_WEEK, GRID_STEP, isoformat
from .pair import (Draws, SynthDataset, SynthSpec, bar_labels, build_dataset, check_stable, local_spreads,
                   simulate_mids, simulate_pair)
from .trades import TradeSpec, gen_trades, simulate_trades

KINDS = ("disposition", "house_money", "none")
EXPECTED_LABEL = {"disposition": "disposition_effect", "house_money": "house_money_or_self_attribution",
                  "none": "rational_or_symmetric|inconclusive"}
PLANTED_SLOPE = 0.05


def scenario_pair_spec(seed: int, weeks: int) -> SynthSpec:
    # Lag sums satisfy sum(gamma) + sum(delta) = 1, so a drifting global price
    # leaves no steady-state gap: eta* = drift * (1 - sum(gamma) - sum(delta)) / alpha.
    # With a gap, trending weeks shift mean(local)/mean(global), which the
    # estimated RQV inherits, and the share in gain tracks the same trend.
    return SynthSpec(seed=seed, n_bars=weeks * BARS_PER_WEEK, beta0=0.0, beta1=1.0, alpha_local=-0.4,
                     gamma_local=(-0.10, -0.05, 0.0), delta_local=(0.30, 0.45, 0.40),
                     spread_bump=0.0005)


@dataclass(frozen=True)
class ScenarioSpec:
    weeks: int = 109
    alpha_modulation: float = 0.0
    pair: SynthSpec = field(default_factory=lambda: scenario_pair_spec(0, 109))
    trades: TradeSpec = field(default_factory=lambda: TradeSpec(n_accounts=200, trade_prob=0.005))
    passes: int = 3
    pct_center: float = 0.5

    def __post_init__(self):
        if self.weeks < 30:
            raise ConfigurationError("a scenario needs at least 30 weeks")
        if self.pair.n_bars != self.weeks * BARS_PER_WEEK:
            raise ConfigurationError("pair.n_bars must equal weeks * 336")

    @property
    def kind(self) -> str:
        if self.alpha_modulation == 0:
            return "none"
        return "disposition" if self.alpha_modulation < 0 else "house_money"

    @property
    def planted_slope(self) -> float:
        return rqv30_sensitivity(self.pair) * self.pair.alpha_local * self.alpha_modulation

    def week_alphas(self, pct: np.ndarray) -> np.ndarray:
        pct = np.where(np.isfinite(pct), pct, self.pct_center)
        return self.pair.alpha_local * (1.0 + self.alpha_modulation * (pct - self.pct_center))


def rqv30_sensitivity(pair: SynthSpec) -> float:
    """d RQV(30 min) / d alpha_local for the true system; exact because bar 1 is linear in alpha."""
    cfg = ImpulseConfig(horizon_bars=1)
    hi = simulate_impulse(pair.true_fit(pair.alpha_local + 0.01), cfg).rqv[1]
    lo = simulate_impulse(pair.true_fit(pair.alpha_local - 0.01), cfg).rqv[1]
    return float((hi - lo) / 0.02)


def scenario_spec(kind: str, weeks: int = 109, seed: int = 0, slope: float = PLANTED_SLOPE) -> ScenarioSpec:
    """Scenario whose only kind-dependent field is the sign of ``alpha_modulation``."""
    if kind not in KINDS:
        raise ConfigurationError(f"kind must be one of {KINDS}")
    pair = scenario_pair_spec(seed, weeks)
    sign = {"disposition": -1.0, "house_money": 1.0, "none": 0.0}[kind]
    mod = sign * abs(slope) / (rqv30_sensitivity(pair) * pair.alpha_local)
    # rqv30_sensitivity * alpha_local > 0, so disposition gets a negative modulation
    return ScenarioSpec(weeks=weeks, alpha_modulation=mod, pair=pair,
                        trades=TradeSpec(seed=seed + 1_000_003, n_accounts=200, trade_prob=0.005))


def _week_ends(weeks: int) -> np.ndarray:
    return np.arange(1, weeks + 1) * BARS_PER_WEEK - 1


def gen_biased_scenario(kind: str | ScenarioSpec, weeks: int = 109, seed: int = 0) -> SynthDataset:
    spec = kind if isinstance(kind, ScenarioSpec) else scenario_spec(kind, weeks, seed)
    pair_spec = spec.pair
    draws = Draws.draw(pair_spec)
    ends = _week_ends(spec.weeks)
    labels = bar_labels(pair_spec)
    s = local_spreads(pair_spec, labels)
    alphas = np.full(spec.weeks, pair_spec.alpha_local)
    passes = spec.passes if spec.alpha_modulation else 0
    for _ in range(passes):
        A, _G = simulate_mids(pair_spec, draws, np.repeat(alphas, BARS_PER_WEEK))
        hist = simulate_trades(spec.trades, labels, A * (1 - s / 2), A * (1 + s / 2), A, evaluate=ends,
                               records=False)
        alphas = spec.week_alphas(hist.pct_path[ends])
    check_stable(pair_spec, alphas.tolist())

    ds = build_dataset(pair_spec, draws, np.repeat(alphas, BARS_PER_WEEK))
    hist = gen_trades(spec.trades, ds.pair.local)
    pct_week = hist.pct_path[ends]
    true_rqv = []
    for w, a in enumerate(alphas):
        base = float(np.mean(ds.global_mid[w * BARS_PER_WEEK:(w + 1) * BARS_PER_WEEK]))
        path = simulate_impulse(pair_spec.true_fit(float(a)), ImpulseConfig(base_global_price=base, horizon_bars=1))
        true_rqv.append(float(path.rqv[1]))
    oracle = {
        "kind": spec.kind,
        "expected_label": EXPECTED_LABEL[spec.kind],
        "conditioning": "pct_gain",
        "horizon": "30m",
        "planted_slope": spec.planted_slope,
        "weeks": spec.weeks,
        "bars_per_week": BARS_PER_WEEK,
        "alpha_base": pair_spec.alpha_local,
        "alpha_modulation": spec.alpha_modulation,
        "alpha_by_week": alphas.tolist(),
        "pct_gain_by_week": [None if not np.isfinite(v) else float(v) for v in pct_week],
        "true_rqv_30m_by_week": true_rqv,
        "week_starts": [isoformat(labels[w * BARS_PER_WEEK] - GRID_STEP) for w in range(spec.weeks)],
        "scenario": _jsonable(asdict(spec)),
    }
    return replace(ds, extra={"trades": hist.trades, "pct_path": hist.pct_path, "oracle": oracle})


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


def pair_oracle(ds: SynthDataset) -> dict:
    spec = ds.spec
    return {"kind": "pair", "true_parameters": spec.to_dict(), "n_bars": spec.n_bars,
            "bars_per_week": BARS_PER_WEEK}


def gen_pair_dataset(spec: SynthSpec, trades: TradeSpec | None = None) -> SynthDataset:
    """A plain cointegrated pair, optionally with a trade history and its gain oracle."""
    ds = simulate_pair(spec)
    extra = {"oracle": pair_oracle(ds)}
    if trades is not None:
        hist = gen_trades(trades, ds.pair.local)
        extra |= {"trades": hist.trades, "pct_path": hist.pct_path}
        extra["oracle"]["trades"] = _jsonable(asdict(trades))
    return replace(ds, extra=extra)


def dataset_outputs(ds: SynthDataset) -> dict[str, str]:
    """File name -> text for the CSV inputs ``ingest`` reads plus the oracle files."""
    out = {}

    def render(name, writer):
        buf = io.StringIO(newline="")
        writer(buf)
        out[name] = buf.getvalue()

    render("local_quotes.csv", lambda fh: write_quote_csv(ds.local_quotes, fh))
    render("global_quotes.csv", lambda fh: write_quote_csv(ds.global_quotes, fh))
    render("fx.csv", lambda fh: write_fx_csv(ds.fx, fh))
    trades = ds.extra.get("trades")
    if trades is not None:
        render("trades.csv", lambda fh: write_trades_csv(trades, fh))
    pct = ds.extra.get("pct_path")
    if pct is not None:
        stamps = ds.pair.local.timestamps[~ds.pair.local.gap]
        render("oracle_pct_gain.csv", lambda fh: write_columns_csv(
            {"timestamp": stamps, "pct_accounts_in_gain": np.asarray(pct, float)}, fh))
    oracle = ds.extra.get("oracle") or pair_oracle(ds)
    out["oracle.json"] = json.dumps(oracle, indent=2, sort_keys=True) + "\n"
    return out


def write_dataset(ds: SynthDataset, directory) -> list[Path]:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    paths = []
    for name, text in dataset_outputs(ds).items():
        (d / name).write_text(text, encoding="utf-8", newline="")
        paths.append(d / name)
    return paths
