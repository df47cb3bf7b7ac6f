import csv
import json
import shutil
import subprocess
import sys

import pytest

from quotelag.cli import EXIT_CONFIG, EXIT_DATA, EXIT_ESTIMATION, main, read_config_file
from quotelag.errors import ConfigurationError


@pytest.fixture(scope="module")
def data(tmp_path_factory):
    d = tmp_path_factory.mktemp("sim")
    assert main(["simulate", "--seed", "4", "--n-bars", "1344", "--accounts", "60", "--out", str(d)]) == 0
    return d


def inputs(d, trades=True):
    args = ["--local", str(d / "local_quotes.csv"), "--global", str(d / "global_quotes.csv"),
            "--fx", str(d / "fx.csv"), "--force"]
    return args + (["--trades", str(d / "trades.csv")] if trades else [])


def test_simulate_writes_ingest_formats(data):
    names = {p.name for p in data.iterdir()}
    assert {"local_quotes.csv", "global_quotes.csv", "fx.csv", "trades.csv", "oracle.json",
            "oracle_pct_gain.csv"} <= names
    assert not any(n.startswith(".") for n in names)
    assert json.loads((data / "oracle.json").read_text())["true_parameters"]["seed"] == 4


def test_estimate_has_eight_coefficients_and_is_byte_identical(data, tmp_path):
    for run in ("a", "b"):
        assert main(["estimate", *inputs(data, False), "--p", "3", "--out", str(tmp_path / run)]) == 0
    a = (tmp_path / "a" / "estimate.json").read_bytes()
    assert a == (tmp_path / "b" / "estimate.json").read_bytes()
    rep = json.loads(a)
    for side in ("bid", "offer"):
        for eq in ("local", "global"):
            assert len(rep["sides"][side]["equations"][eq]["rows"]) == 8
    truth = json.loads((data / "oracle.json").read_text())["true_parameters"]
    coint = rep["sides"]["bid"]["cointegrating_equation"]
    assert abs(coint["beta1"] - truth["beta1"]) < 0.02
    alpha = rep["sides"]["bid"]["equations"]["local"]["rows"][1]
    assert alpha["name"] == "ec_lag1" and abs(alpha["coefficient"] - truth["alpha_local"]) < 0.05
    assert set(rep["header"]["inputs"]) == {"local", "global", "fx"}


def test_missing_fx_is_a_config_error_naming_the_path(data, tmp_path, capsys):
    missing = tmp_path / "nope" / "fx.csv"
    args = ["estimate", "--local", str(data / "local_quotes.csv"), "--global", str(data / "global_quotes.csv"),
            "--fx", str(missing), "--out", str(tmp_path / "o")]
    assert main(args) == EXIT_CONFIG
    assert str(missing) in capsys.readouterr().err
    assert not (tmp_path / "o").exists()


def test_bad_data_and_estimation_exit_codes(data, tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("timestamp,bid\n2021-01-01T00:00:00Z,1\n")
    assert main(["estimate", "--local", str(bad), "--global", str(data / "global_quotes.csv"),
                 "--fx", str(data / "fx.csv"), "--out", str(tmp_path)]) == EXIT_DATA
    # too few rows for the lag order
    short = tmp_path / "short.csv"
    short.write_text("".join((data / "local_quotes.csv").read_text().splitlines(True)[:40]))
    assert main(["estimate", "--local", str(short), "--global", str(data / "global_quotes.csv"),
                 "--fx", str(data / "fx.csv"), "--force", "--p", "12", "--out", str(tmp_path)]) == EXIT_ESTIMATION


def test_config_file_and_flag_precedence(data, tmp_path):
    conf = tmp_path / "run.conf"
    conf.write_text(f"inputs.local = {data / 'local_quotes.csv'}\ninputs.global = {data / 'global_quotes.csv'}\n"
                    f"inputs.fx = {data / 'fx.csv'}\nmodel.force = true\nmodel.p = 2  # two lags\n")
    assert main(["estimate", "--config", str(conf), "--out", str(tmp_path / "c")]) == 0
    rep = json.loads((tmp_path / "c" / "estimate.json").read_text())
    assert rep["p"] == 2
    assert main(["estimate", "--config", str(conf), "--p", "1", "--out", str(tmp_path / "f")]) == 0
    assert json.loads((tmp_path / "f" / "estimate.json").read_text())["p"] == 1
    conf.write_text("model.lags = 3\n")
    with pytest.raises(ConfigurationError):
        read_config_file(conf)
    assert main(["estimate", "--config", str(conf)]) == EXIT_CONFIG


def test_impulse_outputs(data, tmp_path):
    assert main(["impulse", *inputs(data, False), "--horizons", "30m,1h,2.5h", "--out", str(tmp_path)]) == 0
    rep = json.loads((tmp_path / "rqv.json").read_text())
    assert list(rep["sides"]["bid"]["rqv"]) == ["30m", "1h", "2.5h"]
    rows = list(csv.reader((tmp_path / "impulse_bid.csv").open()))
    assert rows[0] == ["bar", "local", "global", "rqv"] and len(rows) == 14
    assert main(["impulse", *inputs(data, False), "--horizons", "45m", "--out", str(tmp_path)]) == EXIT_CONFIG


def test_panel_and_classify(data, tmp_path):
    assert main(["panel", *inputs(data), "--workers", "1", "--out", str(tmp_path)]) == 0
    rows = list(csv.DictReader((tmp_path / "panel.csv").open()))
    assert len(rows) == 8 and "pct_accounts_in_gain" in rows[0]
    summary = json.loads((tmp_path / "panel_summary.json").read_text())
    assert summary["rqv_summary"]["bid"]["weeks"] == 4
    # four weeks are too few for the cross-week regressions
    assert main(["classify", "--panel", str(tmp_path / "panel.csv"), "--out", str(tmp_path)]) == EXIT_ESTIMATION


def test_panel_without_trades_and_classify_conditionings(tmp_path):
    sim = tmp_path / "sim"
    assert main(["simulate", "--kind", "none", "--weeks", "32", "--seed", "2", "--out", str(sim)]) == 0
    assert main(["panel", *inputs(sim, False), "--workers", "1", "--out", str(tmp_path / "p0")]) == 0
    header = (tmp_path / "p0" / "panel.csv").read_text().splitlines()[0]
    assert "pct_accounts_in_gain" not in header
    assert main(["classify", "--panel", str(tmp_path / "p0" / "panel.csv"), "--out", str(tmp_path / "c0")]) == 0
    verdicts = json.loads((tmp_path / "c0" / "verdicts.json").read_text())["verdicts"]
    assert {v["conditioning"] for v in verdicts} == {"market_returns"}
    assert len(verdicts) == 2 * 5
    assert main(["panel", *inputs(sim), "--workers", "1", "--out", str(tmp_path / "p1")]) == 0
    assert main(["classify", "--panel", str(tmp_path / "p1" / "panel.csv"), "--out", str(tmp_path / "c1")]) == 0
    verdicts = json.loads((tmp_path / "c1" / "verdicts.json").read_text())["verdicts"]
    assert {v["conditioning"] for v in verdicts} == {"market_returns", "pct_gain"}


def test_spreads(data, tmp_path):
    assert main(["spreads", "--local", str(data / "local_quotes.csv"), "--out", str(tmp_path)]) == 0
    rep = json.loads((tmp_path / "spreads.json").read_text())
    assert rep["venues"]["local"]["peak_slot"] == 10
    assert rep["venues"]["local"]["regression"]["Time dummies"] == "Yes"
    assert (tmp_path / "spread_profile_local.csv").read_text().startswith("slot,mean_spread,count\n")


@pytest.mark.skipif(shutil.which("quotelag") is None, reason="console script not installed")
def test_console_script_runs():
    proc = subprocess.run(["quotelag", "--version"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.startswith("quotelag ")
    proc = subprocess.run([sys.executable, "-m", "quotelag", "estimate"], capture_output=True, text=True)
    assert proc.returncode == EXIT_CONFIG and "local quotes" in proc.stderr
