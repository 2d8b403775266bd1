import json
import math
import os

import numpy as np
import pytest
from click.testing import CliRunner

from sizemix.cli import load_config, main
from sizemix.distributions import LNParams, LStParams
from sizemix.errors import SizemixError
from sizemix.estimation import FitConfig
from sizemix.fokker_planck import ParamPath
from sizemix.mixtures import MixtureParams
from sizemix.sampling import RngStream, sample


@pytest.fixture(scope="module")
def data_csv(tmp_path_factory):
    mix = MixtureParams((LNParams(1.0, 0.5), LNParams(4.0, 0.8)), (0.35,))
    x = sample(mix, 3000, RngStream(55))
    p = tmp_path_factory.mktemp("data") / "acme2001.csv"
    p.write_text("sales\n" + "\n".join(repr(float(v)) for v in x) + "\n")
    return str(p)


def run_cli(*args):
    return CliRunner().invoke(main, list(args), catch_exceptions=False)


def test_load_config_file_and_overrides(tmp_path):
    cfg_path = tmp_path / "fit.cfg"
    cfg_path.write_text(
        "# optimizer knobs\n"
        "n_starts = 4\n"
        "seed: 99\n"
        "simplex_tol = 1e-7\n"
    )
    cfg = load_config(str(cfg_path))
    assert cfg.n_starts == 4 and cfg.seed == 99 and cfg.simplex_tol == 1e-7
    # flags override the file
    cfg = load_config(str(cfg_path), n_starts=2)
    assert cfg.n_starts == 2 and cfg.seed == 99
    # defaults without a file
    assert load_config() == FitConfig()
    bad = tmp_path / "bad.cfg"
    bad.write_text("bogus_key = 1\n")
    with pytest.raises(SizemixError):
        load_config(str(bad))


def test_describe_verb(data_csv, tmp_path):
    out = str(tmp_path / "describe.csv")
    res = run_cli("describe", data_csv, "--column", "sales", "--out", out)
    assert res.exit_code == 0
    lines = open(out).read().splitlines()
    assert lines[0].startswith("label,n,mean,sd,")
    assert lines[1].startswith("acme2001,3000,")


def test_fit_verb_writes_json(data_csv, tmp_path):
    out = str(tmp_path / "fit.json")
    res = run_cli("fit", data_csv, "--model", "2LN", "--starts", "2", "--out", out)
    assert res.exit_code == 0
    doc = json.load(open(out))
    assert doc["schema"] == "composite-dist/1"
    assert doc["model"] == "2LN"
    mus = [c["mu"] for c in doc["params"]["components"]]
    assert mus[0] == pytest.approx(1.0, abs=0.1)
    assert mus[1] == pytest.approx(4.0, abs=0.1)
    assert set(doc["std_errors"]) == {"mu_1", "sigma_1", "mu_2", "sigma_2", "p_1"}


def test_full_verb_exit_codes(data_csv, tmp_path):
    out = str(tmp_path / "rep")
    res = run_cli("full", data_csv, "--models", "LN,2LN", "--starts", "2",
                  "--out", out, "--format", "json")
    assert res.exit_code == 0
    doc = json.load(open(os.path.join(out, "acme2001_table.json")))
    assert [r["model"] for r in doc["rows"]] == ["LN", "2LN"]


def test_full_verb_partial_exit_code(tmp_path):
    # a sample too small for 5LN: its row is blank, exit code 2
    x = sample(LNParams(1.0, 0.5), 60, RngStream(1))
    p = tmp_path / "small.csv"
    p.write_text("\n".join(repr(float(v)) for v in x) + "\n")
    out = str(tmp_path / "rep")
    res = run_cli("full", str(p), "--models", "LN,5LN", "--starts", "2", "--out", out)
    assert res.exit_code == 2
    assert "not estimable: 5LN" in res.output


def test_fatal_error_exit_code(tmp_path):
    p = tmp_path / "junk.csv"
    p.write_text("a\nb\n")
    res = run_cli("full", str(p), "--models", "LN")
    assert res.exit_code == 1
    assert "error:" in res.output


def test_split_eval_and_tt_verbs(data_csv, tmp_path):
    out = str(tmp_path / "rep_se")
    res = run_cli("split-eval", data_csv, "--models", "LN,2LN", "--starts", "2",
                  "--out", out, "--seed", "3")
    assert res.exit_code == 0
    assert os.path.exists(os.path.join(out, "acme2001_oos_table.csv"))

    out_tt = str(tmp_path / "rep_tt")
    res = run_cli("tt", data_csv, "--models", "LN,2LN", "--starts", "2",
                  "--out", out_tt, "--lower-frac", "0.05", "--upper-frac", "0.01")
    assert res.exit_code == 0
    doc = json.load(open(os.path.join(out_tt, "acme2001_tt_table.json")))
    assert [r["model"] for r in doc["rows"]] == ["LNtt", "2LNtt"]


def test_sample_verb_round_trip(tmp_path):
    params = {"components": [{"mu": 0.0, "sigma": 0.5}, {"mu": 3.0, "sigma": 0.8}],
              "weights": [0.4]}
    pf = tmp_path / "params.json"
    pf.write_text(json.dumps(params))
    out = str(tmp_path / "draws.csv")
    res = run_cli("sample", "--model", "2LN", "--params", str(pf),
                  "--n", "500", "--seed", "7", "--out", out)
    assert res.exit_code == 0
    draws = np.loadtxt(out, skiprows=1)
    assert draws.size == 500
    assert np.all(draws > 0)
    # identical seed, identical file
    out2 = str(tmp_path / "draws2.csv")
    run_cli("sample", "--model", "2LN", "--params", str(pf),
            "--n", "500", "--seed", "7", "--out", out2)
    assert open(out).read() == open(out2).read()


def test_sample_verb_truncated_needs_window(tmp_path):
    pf = tmp_path / "params.json"
    pf.write_text(json.dumps({"mu": 1.0, "sigma": 0.5}))
    res = run_cli("sample", "--model", "LNtt", "--params", str(pf), "--n", "10")
    assert res.exit_code == 1
    out = str(tmp_path / "d.csv")
    res = run_cli("sample", "--model", "LNtt", "--params", str(pf), "--n", "200",
                  "--x-min", "2.0", "--x-max", "8.0", "--seed", "1", "--out", out)
    assert res.exit_code == 0
    draws = np.loadtxt(out, skiprows=1)
    assert draws.min() >= 2.0 and draws.max() <= 8.0


@pytest.fixture()
def path_json(tmp_path):
    p0 = MixtureParams((LStParams(3.0, 0.5, 4.0), LStParams(6.0, 0.8, 12.0)), (0.4,))
    p1 = MixtureParams((LStParams(3.4, 0.6, 4.0), LStParams(6.5, 0.7, 12.0)), (0.35,))
    path = ParamPath(0.0, 1.0, p0, p1)
    f = tmp_path / "path.json"
    f.write_text(path.to_json())
    return str(f)


def test_fp_drift_verb(path_json, tmp_path):
    out = str(tmp_path / "drift.csv")
    res = run_cli("fp-drift", path_json, "--s", "0.4",
                  "--y-grid", "2:8:41", "--t-grid", "0.1:0.9:9", "--out", out)
    assert res.exit_code == 0
    assert "max PDE residual" in res.output
    lines = open(out).read().splitlines()
    assert lines[0] == "t,y,b"
    assert len(lines) == 1 + 9 * 41


def test_fp_simulate_verb(path_json, tmp_path):
    out = str(tmp_path / "ens.csv")
    res = run_cli("fp-simulate", path_json, "--s", "0.4", "--n", "2000",
                  "--steps", "100", "--seed", "2", "--out", out)
    assert res.exit_code == 0
    y = np.loadtxt(out, skiprows=1)
    assert y.size == 2000
    assert np.all(np.isfinite(y))


def test_report_verb_recombines_tables(data_csv, tmp_path):
    out = str(tmp_path / "rep")
    run_cli("full", data_csv, "--models", "LN,2LN", "--starts", "2",
            "--out", out, "--format", "json")
    out2 = str(tmp_path / "rep2")
    res = run_cli("report", os.path.join(out, "acme2001_table.json"), "--out", out2)
    assert res.exit_code == 0
    counts = json.load(open(os.path.join(out2, "summary_counts.json")))
    assert counts["n_tables"] == 1
