"""Command-line entry point: estimate, impulse, panel, classify, spreads, simulate.

Settings come from built-in defaults, then an optional config file of flat
dotted keys (``impulse.shock = 0.3``), then command-line flags; flags win.
Every command validates its configuration and computes all results before
writing anything, and each output file is written to a temporary name and
renamed into place.

Exit codes: 0 ok, 2 configuration, 3 data, 4 estimation, 5 internal.
"""

from __future__ import annotations

import argparse
import configparser
import hashlib
import io
import json
import logging
import math
import os
import sys
import tempfile
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Callable

import numpy as np

from . import __version__
from .biaslab import (ClassifierConfig, PanelConfig, build_weekly_panel, classify_bias, panel_summary,
                      read_panel_csv, rqv_regression, write_panel_csv)
from .biaslab.regression import CONDITIONING
from .econometrics import engle_granger, estimate_vecm
from .econometrics.vecm import coefficient_names
from .errors import ConfigurationError, DataError, EstimationError, QuoteLagError
from .impulse import (DEFAULT_HORIZONS, ImpulseConfig, horizon_label, long_run_rqv, parse_horizon,
                      relative_quote_values, simulate_impulse, write_path_csv)
from .ingest import load_bar_series, parse_trades_csv
from .microstructure import intraday_spread_profile, spread_regression
from .quotegrid import AlignedPair, align_pair, isoformat

logger = logging.getLogger("quotelag")

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_ESTIMATION, EXIT_INTERNAL = 0, 2, 3, 4, 5
COMMANDS = ("estimate", "impulse", "panel", "classify", "spreads", "simulate")
SIM_KINDS = ("pair", "disposition", "house_money", "none")

# settings that do not change results and stay out of the config hash
_UNHASHED = {"out", "workers", "local", "global_", "fx", "trades", "panel"}


@dataclass
class RunConfig:
    local: str | None = None
    global_: str | None = None
    fx: str | None = None
    trades: str | None = None
    panel: str | None = None
    asset: str = "BTC"
    p: int = 3
    se_mode: str = "classical"
    force: bool = False
    shock: float = 0.30
    base_price: float | None = None
    global_dynamics: str = "full"
    include_constants: bool = False
    impulse_bars: int = 12
    horizons: tuple[int, ...] = DEFAULT_HORIZONS
    anchor: str | None = None
    min_rows: int = 200
    gain_basis: str = "average"
    gain_at: str = "end"
    significance: float = 0.05
    fast_floor: float = 0.97
    utc_offset: int = 0
    min_bars: int = 500
    kind: str = "pair"
    weeks: int = 109
    n_bars: int = 5000
    accounts: int = 1000
    seed: int = 0
    out: str = "."
    workers: int = field(default_factory=lambda: os.cpu_count() or 1)

    def impulse_config(self) -> ImpulseConfig:
        bars = max(self.impulse_bars, max(self.horizons) // 30)
        return ImpulseConfig(self.shock, self.base_price, self.global_dynamics, bars, self.include_constants)

    def digest(self) -> str:
        settings = {k: v for k, v in asdict(self).items() if k not in _UNHASHED}
        blob = json.dumps(settings, sort_keys=True, default=list)
        return hashlib.sha256(blob.encode()).hexdigest()


# config-file key -> RunConfig field
CONFIG_KEYS = {
    "inputs.local": "local", "inputs.global": "global_", "inputs.fx": "fx", "inputs.trades": "trades",
    "inputs.panel": "panel", "asset": "asset", "model.p": "p", "model.se_mode": "se_mode", "model.force": "force",
    "impulse.shock": "shock", "impulse.base_price": "base_price", "impulse.global_dynamics": "global_dynamics",
    "impulse.include_constants": "include_constants", "impulse.bars": "impulse_bars", "horizons": "horizons",
    "panel.anchor": "anchor", "panel.min_rows": "min_rows", "panel.gain_basis": "gain_basis",
    "panel.gain_at": "gain_at", "classify.significance": "significance", "classify.fast_floor": "fast_floor",
    "spreads.utc_offset": "utc_offset", "spreads.min_bars": "min_bars", "simulate.kind": "kind",
    "simulate.weeks": "weeks", "simulate.n_bars": "n_bars", "simulate.accounts": "accounts", "seed": "seed",
    "output.dir": "out", "workers": "workers",
}


def parse_horizons(value) -> tuple[int, ...]:
    items = value.split(",") if isinstance(value, str) else value
    out = tuple(parse_horizon(v.strip() if isinstance(v, str) else v) for v in items if str(v).strip())
    if not out:
        raise ConfigurationError("horizons list is empty")
    return out


def _coerce(name: str, raw):
    """Convert a config/flag string to the type of RunConfig field ``name``."""
    if raw is None:
        return None
    if name == "horizons":
        return parse_horizons(raw)
    default = {f.name: f for f in fields(RunConfig)}[name]
    kind = default.type
    if not isinstance(raw, str):
        return raw
    text = raw.strip()
    try:
        if kind == "bool":
            if text.lower() in ("1", "true", "yes", "on"):
                return True
            if text.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if kind == "int":
            return int(text)
        if kind == "float":
            return float(text)
        if kind == "float | None":
            return None if text.lower() in ("", "none") else float(text)
    except ValueError:
        raise ConfigurationError(f"bad value {raw!r} for {name}") from None
    return text


def read_config_file(path) -> dict:
    """Flat ``key = value`` lines; ``#`` and ``;`` start comments."""
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        with open(path, encoding="utf-8") as fh:
            parser.read_string("[settings]\n" + fh.read(), source=str(path))
    except OSError as exc:
        raise ConfigurationError(f"cannot read config file {path}: {exc.strerror}") from None
    except configparser.Error as exc:
        raise ConfigurationError(f"malformed config file {path}: {exc}") from None
    values = {}
    for key, raw in parser["settings"].items():
        if key not in CONFIG_KEYS:
            raise ConfigurationError(f"unknown config key {key!r} in {path}")
        values[CONFIG_KEYS[key]] = _coerce(CONFIG_KEYS[key], raw)
    return values


def build_config(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig()
    if args.config:
        cfg = replace(cfg, **read_config_file(args.config))
    flags = {f.name: getattr(args, f.name, None) for f in fields(RunConfig)}
    cfg = replace(cfg, **{k: _coerce(k, v) for k, v in flags.items() if v is not None})
    return cfg


# --- validation ----------------------------------------------------------------

_REQUIRED = {
    "estimate": ("local", "global_", "fx"),
    "impulse": ("local", "global_", "fx"),
    "panel": ("local", "global_", "fx"),
    "spreads": ("local",),
}


def _check_readable(path: str | None, role: str):
    if path is None:
        raise ConfigurationError(f"no {role} file given")
    if not os.path.isfile(path) or not os.access(path, os.R_OK):
        raise ConfigurationError(f"{role} file not readable: {path}")


def validate(command: str, cfg: RunConfig) -> None:
    roles = {"local": "local quotes", "global_": "global quotes", "fx": "fx", "trades": "trades",
             "panel": "panel"}
    for name in _REQUIRED.get(command, ()):
        _check_readable(getattr(cfg, name), roles[name])
    if command == "spreads" and cfg.global_ is not None:
        _check_readable(cfg.global_, roles["global_"])
        _check_readable(cfg.fx, roles["fx"])
    if command == "panel" and cfg.trades is not None:
        _check_readable(cfg.trades, roles["trades"])
    if command == "classify":
        if cfg.panel is not None:
            _check_readable(cfg.panel, roles["panel"])
        else:
            for name in _REQUIRED["panel"]:
                _check_readable(getattr(cfg, name), roles[name])
            if cfg.trades is not None:
                _check_readable(cfg.trades, roles["trades"])
    if cfg.p < 1:
        raise ConfigurationError("p must be >= 1")
    if cfg.se_mode not in ("classical", "hc1"):
        raise ConfigurationError("se_mode must be classical or hc1")
    if cfg.workers < 1:
        raise ConfigurationError("workers must be >= 1")
    if cfg.kind not in SIM_KINDS:
        raise ConfigurationError(f"kind must be one of {', '.join(SIM_KINDS)}")
    if command == "simulate" and cfg.kind != "pair" and cfg.weeks < 30:
        raise ConfigurationError("scenario simulations need at least 30 weeks")
    cfg.impulse_config()  # raises on bad impulse settings
    PanelConfig(p=cfg.p, min_rows=cfg.min_rows, gain_basis=cfg.gain_basis, gain_at=cfg.gain_at)
    ClassifierConfig(cfg.significance, cfg.fast_floor)


# --- report plumbing --------------------------------------------------------------

def _clean(obj):
    """JSON-safe copy: NaN/inf become null, numpy scalars become Python numbers."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if math.isfinite(f) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def to_json(obj) -> str:
    return json.dumps(_clean(obj), indent=2, sort_keys=False) + "\n"


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def header(command: str, cfg: RunConfig, inputs: dict[str, str | None]) -> dict:
    return {
        "tool": "quotelag",
        "version": __version__,
        "command": command,
        "config_hash": cfg.digest(),
        "inputs": {role: {"file": os.path.basename(p), "sha256": file_digest(p)}
                   for role, p in inputs.items() if p is not None},
    }


class Outputs:
    """Collects rendered files and commits them with temp-then-rename."""

    def __init__(self, directory):
        self.directory = Path(directory)
        self.files: dict[str, str] = {}

    def add(self, name: str, text: str):
        self.files[name] = text

    def add_writer(self, name: str, writer: Callable):
        buf = io.StringIO(newline="")
        writer(buf)
        self.files[name] = buf.getvalue()

    def commit(self) -> list[Path]:
        self.directory.mkdir(parents=True, exist_ok=True)
        staged = []
        try:
            for name, text in self.files.items():
                fd, tmp = tempfile.mkstemp(prefix=f".{name}.", dir=self.directory)
                with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
                    fh.write(text)
                staged.append((tmp, self.directory / name))
        except BaseException:
            for tmp, _ in staged:
                os.unlink(tmp)
            raise
        umask = os.umask(0)
        os.umask(umask)
        for tmp, final in staged:
            os.chmod(tmp, 0o666 & ~umask)
            os.replace(tmp, final)
        return [final for _, final in staged]


# --- shared loading -----------------------------------------------------------------

def load_pair(cfg: RunConfig) -> AlignedPair:
    local = load_bar_series(cfg.local, cfg.asset, "local")
    glob = load_bar_series(cfg.global_, cfg.asset, "global", cfg.fx)
    pair = align_pair(local, glob)
    if any(pair.dropped.values()):
        logger.info("alignment dropped rows: %s", pair.dropped)
    return pair


def load_trades(cfg: RunConfig):
    if cfg.trades is None:
        return None
    trades, report = parse_trades_csv(cfg.trades)
    mine = [t for t in trades if t.asset == cfg.asset]
    if len(mine) < len(trades):
        logger.info("ignoring %d trades in other assets", len(trades) - len(mine))
    return mine


def _inputs(cfg: RunConfig, *names) -> dict:
    return {n.rstrip("_"): getattr(cfg, n) for n in names}


# --- commands ---------------------------------------------------------------------

_ROW_LABELS = {"constant": "Constant", "ec_lag1": "Cointegration term, first lag"}


def _row_label(name: str) -> str:
    if name in _ROW_LABELS:
        return _ROW_LABELS[name]
    leg, k = name.split("_lag")
    return f"{leg.capitalize()} price change, lag {k}"


def _equation_block(eq, ols_fit) -> dict:
    coefs, ses = eq.coefficients(), eq.standard_errors()
    pv = dict(zip(coefficient_names(eq.p), ols_fit.pvalues)) if ols_fit is not None else {}
    return {
        "rows": [{"name": n, "label": _row_label(n), "coefficient": coefs[n], "standard_error": ses[n],
                  "p_value": pv.get(n)} for n in coefficient_names(eq.p)],
        "r_squared": ols_fit.r_squared if ols_fit is not None else None,
        "residual_variance": eq.residual_variance,
    }


def _fit_side(pair: AlignedPair, side: str, cfg: RunConfig):
    pa, pb = pair.local.price(side), pair.global_.price(side)
    coint = engle_granger(pa, pb, force=cfg.force)
    fit = estimate_vecm(pair, side, cfg.p, coint, se_mode=cfg.se_mode, allow_segments=True, force=cfg.force)
    return coint, fit


def _coint_block(coint) -> dict:
    adf = coint.residual_adf
    return {
        "equation": "local = beta0 + beta1 * global + eta",
        "normalized": {"local": 1.0, "global": -coint.beta1, "constant": -coint.beta0},
        "beta0": coint.beta0, "beta0_se": coint.beta0_se,
        "beta1": coint.beta1, "beta1_se": coint.beta1_se,
        "residual_adf": None if adf is None else {
            "statistic": adf.statistic, "lags": adf.lags_used, "n_obs": adf.n_obs,
            "critical_values": adf.critical_values,
            "critical_value_source": "MacKinnon (2010), two variables, constant"},
        "cointegrated": coint.cointegrated,
        "degenerate": coint.degenerate,
    }


def cmd_estimate(cfg: RunConfig, out: Outputs) -> None:
    pair = load_pair(cfg)
    report = {"header": header("estimate", cfg, _inputs(cfg, "local", "global_", "fx")),
              "asset": cfg.asset, "rows": len(pair),
              "period": {"first": isoformat(pair.grid[0]), "last": isoformat(pair.grid[-1])},
              "rows_dropped_in_alignment": pair.dropped, "p": cfg.p,
              "standard_errors": cfg.se_mode, "segments": len(pair.segments()), "sides": {}}
    for side in ("bid", "offer"):
        coint, fit = _fit_side(pair, side, cfg)
        report["sides"][side] = {
            "cointegrating_equation": _coint_block(coint),
            "n_obs": fit.n_obs,
            "equations": {"local": _equation_block(fit.local, fit.local_ols),
                          "global": _equation_block(fit.global_, fit.global_ols)},
        }
    out.add("estimate.json", to_json(report))


def cmd_impulse(cfg: RunConfig, out: Outputs) -> None:
    pair = load_pair(cfg)
    icfg = cfg.impulse_config()
    table = {}
    for side in ("bid", "offer"):
        _, fit = _fit_side(pair, side, cfg)
        path = simulate_impulse(fit, icfg)
        rqv = relative_quote_values(path, cfg.horizons)
        try:
            limit = long_run_rqv(fit, icfg)
        except EstimationError as exc:
            logger.warning("%s: no long-run RQV (%s)", side, exc)
            limit = None
        table[side] = {"base_global_price": path.base_global_price, "shocked_level": path.shocked_level,
                       "rqv": {horizon_label(h): v for h, v in rqv.items()}, "long_run_rqv": limit,
                       "alpha_local": fit.local.alpha, "beta1": fit.beta1}
        out.add_writer(f"impulse_{side}.csv", lambda fh, path=path: write_path_csv(path, fh))
    report = {"header": header("impulse", cfg, _inputs(cfg, "local", "global_", "fx")),
              "asset": cfg.asset, "p": cfg.p,
              "impulse": {"shock_fraction": icfg.shock_fraction, "global_dynamics": icfg.global_dynamics,
                          "include_constants": icfg.include_constants, "bars": icfg.horizon_bars},
              "sides": table}
    out.add("rqv.json", to_json(report))


def _panel_config(cfg: RunConfig) -> PanelConfig:
    return PanelConfig(p=cfg.p, impulse=cfg.impulse_config(), anchor=cfg.anchor, min_rows=cfg.min_rows,
                       gain_basis=cfg.gain_basis, gain_at=cfg.gain_at)


def _build_panel(cfg: RunConfig):
    pair = load_pair(cfg)
    trades = load_trades(cfg)
    return build_weekly_panel(pair, trades or None, _panel_config(cfg), workers=cfg.workers)


def cmd_panel(cfg: RunConfig, out: Outputs) -> None:
    rows = _build_panel(cfg)
    summary = {"header": header("panel", cfg, _inputs(cfg, "local", "global_", "fx", "trades")),
               "asset": cfg.asset, "p": cfg.p,
               "gain_basis": f"{cfg.gain_basis}-cost, evaluated at week {cfg.gain_at}",
               "failed_weeks": [{"week": r.week_index, "side": r.side, "diagnostics": r.diagnostics}
                                for r in rows if not r.estimation_ok],
               "rqv_summary": panel_summary(rows)}
    out.add_writer("panel.csv", lambda fh: write_panel_csv(rows, fh))
    out.add("panel_summary.json", to_json(summary))


def cmd_classify(cfg: RunConfig, out: Outputs) -> None:
    if cfg.panel is not None:
        with open(cfg.panel, encoding="utf-8", newline="") as fh:
            rows = read_panel_csv(fh)
        inputs = _inputs(cfg, "panel")
    else:
        rows = _build_panel(cfg)
        inputs = _inputs(cfg, "local", "global_", "fx", "trades")
    ccfg = ClassifierConfig(cfg.significance, cfg.fast_floor)
    has_gain = any(r.pct_accounts_in_gain is not None for r in rows)
    conditionings = [c for c in CONDITIONING if c != "pct_gain" or has_gain]
    verdicts, regressions, skipped = [], [], []
    for cond in conditionings:
        for side in dict.fromkeys(r.side for r in rows):
            for h in cfg.horizons:
                try:
                    rep = rqv_regression(rows, cond, side, h)
                except QuoteLagError as exc:
                    skipped.append({"conditioning": cond, "side": side, "horizon": horizon_label(h),
                                    "reason": f"{type(exc).__name__}: {exc}"})
                    continue
                regressions.append(rep.to_dict())
                verdicts.append(classify_bias(rep, ccfg).to_dict())
    if not verdicts:
        raise EstimationError("no regression could be run: " + "; ".join(s["reason"] for s in skipped))
    report = {"header": header("classify", cfg, inputs),
              "thresholds": {"significance": ccfg.significance, "fast_adjustment_floor": ccfg.fast_floor},
              "gain_basis": f"{cfg.gain_basis}-cost" if has_gain else None,
              "verdicts": verdicts, "regressions": regressions, "skipped": skipped}
    out.add("verdicts.json", to_json(report))


def cmd_spreads(cfg: RunConfig, out: Outputs) -> None:
    legs = {"local": load_bar_series(cfg.local, cfg.asset, "local")}
    if cfg.global_ is not None:
        legs["global"] = load_bar_series(cfg.global_, cfg.asset, "global", cfg.fx)
    report = {"header": header("spreads", cfg, _inputs(cfg, "local", "global_", "fx")),
              "utc_offset_minutes": cfg.utc_offset, "venues": {}}
    for venue, series in legs.items():
        profile = intraday_spread_profile(series, cfg.utc_offset)
        out.add_writer(f"spread_profile_{venue}.csv", profile.write_csv)
        block = {"peak_slot": profile.peak_slot(), "overall_mean_spread": profile.overall_mean()}
        try:
            block["regression"] = spread_regression(series, cfg.min_bars, cfg.utc_offset, cfg.se_mode).to_dict()
        except EstimationError as exc:
            block["regression"] = None
            block["regression_skipped"] = f"{type(exc).__name__}: {exc}"
        report["venues"][venue] = block
    out.add("spreads.json", to_json(report))


def cmd_simulate(cfg: RunConfig, out: Outputs) -> None:
    from .synth import SynthSpec, TradeSpec, dataset_outputs, gen_biased_scenario, gen_pair_dataset

    if cfg.kind == "pair":
        ds = gen_pair_dataset(SynthSpec(seed=cfg.seed, n_bars=cfg.n_bars, asset=cfg.asset),
                              TradeSpec(seed=cfg.seed + 1, n_accounts=cfg.accounts, asset=cfg.asset))
    else:
        ds = gen_biased_scenario(cfg.kind, cfg.weeks, cfg.seed)
    for name, text in dataset_outputs(ds).items():
        out.add(name, text)


HANDLERS = {"estimate": cmd_estimate, "impulse": cmd_impulse, "panel": cmd_panel,
            "classify": cmd_classify, "spreads": cmd_spreads, "simulate": cmd_simulate}


# --- argument parsing ---------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="config file of flat dotted keys")
    common.add_argument("--out", help="output directory")
    common.add_argument("--p", type=int, help="VECM lag order")
    common.add_argument("--seed", type=int, help="random seed (simulate)")
    common.add_argument("--workers", type=int, help="worker processes for weekly estimation")
    common.add_argument("--horizons", help="comma separated, e.g. 30m,1h,1.5h")
    common.add_argument("--force", action="store_true", default=None,
                        help="skip the unit-root sanity check on price levels")
    common.add_argument("--asset", help="asset symbol")
    common.add_argument("--local", help="local-venue quote CSV")
    common.add_argument("--global", dest="global_", help="global-venue quote CSV (quote currency)")
    common.add_argument("--fx", help="fx CSV (local currency per unit of quote currency)")
    common.add_argument("--trades", help="account trade CSV")
    common.add_argument("--se-mode", dest="se_mode", choices=("classical", "hc1"))

    parser = argparse.ArgumentParser(prog="quotelag", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"quotelag {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("estimate", parents=[common], help="full-sample cointegration and VECM per side")
    imp = sub.add_parser("impulse", parents=[common], help="impulse paths and RQV table per side")
    pan = sub.add_parser("panel", parents=[common], help="weekly RQV panel")
    cls = sub.add_parser("classify", parents=[common], help="RQV regressions and bias verdicts")
    spr = sub.add_parser("spreads", parents=[common], help="intraday spread profile and spread regression")
    sim = sub.add_parser("simulate", parents=[common], help="write a synthetic dataset")
    for p in (imp, pan, cls):
        p.add_argument("--shock", type=float, help="global shock as a fraction (default 0.30)")
        p.add_argument("--base-price", dest="base_price", type=float)
        p.add_argument("--global-dynamics", dest="global_dynamics", choices=("full", "frozen"))
    for p in (pan, cls):
        p.add_argument("--anchor", help="Sunday 00:00 UTC week anchor")
        p.add_argument("--min-rows", dest="min_rows", type=int)
        p.add_argument("--gain-basis", dest="gain_basis", choices=("average", "fifo"))
        p.add_argument("--gain-at", dest="gain_at", choices=("end", "start"))
    cls.add_argument("--panel", help="panel CSV written by the panel command")
    cls.add_argument("--significance", type=float)
    cls.add_argument("--fast-floor", dest="fast_floor", type=float)
    spr.add_argument("--utc-offset", dest="utc_offset", type=int, help="minutes added to UTC for slots")
    spr.add_argument("--min-bars", dest="min_bars", type=int)
    sim.add_argument("--kind", choices=SIM_KINDS)
    sim.add_argument("--weeks", type=int)
    sim.add_argument("--n-bars", dest="n_bars", type=int)
    sim.add_argument("--accounts", type=int)
    return parser


def run(command: str, cfg: RunConfig) -> list[Path]:
    validate(command, cfg)
    out = Outputs(cfg.out)
    HANDLERS[command](cfg, out)
    return out.commit()


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=os.environ.get("QUOTELAG_LOG", "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = build_config(args)
        written = run(args.command, cfg)
    except ConfigurationError as exc:
        print(f"quotelag: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"quotelag: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except EstimationError as exc:
        print(f"quotelag: estimation failed: {exc}", file=sys.stderr)
        diagnostics = getattr(exc, "diagnostics", None)
        if diagnostics:
            for key, msg in diagnostics.items():
                print(f"  {key}: {msg}", file=sys.stderr)
        return EXIT_ESTIMATION
    except Exception as exc:  # noqa: BLE001 - last-resort exit code
        logger.debug("internal error", exc_info=True)
        print(f"quotelag: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    for path in written:
        logger.info("wrote %s", path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
