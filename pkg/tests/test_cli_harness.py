import json
import math

import numpy as np
import pytest

from fekete_rate import ModelSurface, WeightedSet
from fekete_rate.cli import EXIT_ERROR, EXIT_FAIL, EXIT_PASS, main
from fekete_rate.errors import InvalidInput
from fekete_rate.fields import ExprField
from fekete_rate.harness import (RateReport, config_hash, derived_seed, git_hash, log_rate,
                                 rate_experiment_J, rate_experiment_volume, sqrt_log_rate,
                                 write_report)

TORUS_CFG = json.dumps({"surface": {"kind": "torus", "tau": [0.0, 1.0]},
                        "phi": {"kind": "expr", "expr": "0.2*cos(2*pi*u)"}})


def _strip_timing(d):
    d = dict(d)
    d.pop("seconds", None)
    return d


def test_git_hash_matches_git():
    # `printf 'hello\n' | git hash-object --stdin`
    assert git_hash(b"hello\n") == "ce013625030ba8dba906f756967f9e9ca394464a"


def test_seeds_and_rates():
    assert derived_seed(0, 8) == derived_seed(0, 8)
    assert derived_seed(0, 8) != derived_seed(0, 16) != derived_seed(1, 8)
    assert log_rate(math.e) == pytest.approx(1 / math.e)
    assert sqrt_log_rate(math.e) == pytest.approx(math.sqrt(1 / math.e))


def test_config_hash_tracks_content(torus):
    a = WeightedSet.full(torus)
    b = WeightedSet.full(torus, ExprField(torus, "0.1*cos(2*pi*u)"))
    assert config_hash(a) == config_hash(WeightedSet.full(ModelSurface.torus(1j)))
    assert config_hash(a) != config_hash(b)


def test_rate_volume_report_and_files(tmp_path, torus):
    ws = WeightedSet.full(torus, ExprField(torus, "0.2*cos(2*pi*u)"))
    rep = rate_experiment_volume(ws, [4, 6, 8], resolution=64, envelope_resolution=128)
    assert isinstance(rep, RateReport)
    assert rep.params == [4, 6, 8]
    assert all(e >= 0 for e in rep.errors)
    s = [e / log_rate(p) for p, e in zip(rep.params, rep.errors)]
    assert rep.statistic == pytest.approx(s)
    assert rep.fitted_constant == max(s)
    assert rep.ratio == pytest.approx(max(s) / min(s))
    assert rep.passed == (rep.ratio <= 4.0)
    assert rep.provenance["config_hash"] == config_hash(ws)
    paths = write_report(rep, tmp_path / "vol")
    assert [p[-4:] for p in paths] == ["json", ".csv", ".dat"]
    back = json.loads((tmp_path / "vol.json").read_text())
    assert back["errors"] == rep.errors
    csv_lines = (tmp_path / "vol.csv").read_text().splitlines()
    assert csv_lines[0] == "param,error,statistic,seconds" and len(csv_lines) == 4
    dat = (tmp_path / "vol.dat").read_text().splitlines()
    assert dat[0].startswith("#") and len(dat) == 4
    assert float(dat[1].split()[0]) == pytest.approx(math.log(4))


def test_rate_experiment_determinism(torus):
    ws = WeightedSet.full(torus, ExprField(torus, "0.2*cos(2*pi*u)"))
    a = rate_experiment_J(ws, [8, 16], seed=7, restarts=2, envelope_resolution=128)
    b = rate_experiment_J(ws, [8, 16], seed=7, restarts=2, envelope_resolution=128)
    assert json.dumps(_strip_timing(a.to_dict()), sort_keys=True) == \
        json.dumps(_strip_timing(b.to_dict()), sort_keys=True)


def test_rate_param_validation(torus):
    ws = WeightedSet.full(torus)
    with pytest.raises(InvalidInput):
        rate_experiment_volume(ws, [8, 6])
    with pytest.raises(InvalidInput):
        rate_experiment_volume(ws, [2, 6])
    with pytest.raises(InvalidInput):
        rate_experiment_J(ws, [8, 512])


def test_rate_volume_rejects_bad_mu():
    ws_desc = {"surface": {"kind": "torus"},
               "mu": {"kind": "density",
                      "density": {"kind": "expr", "expr": "clip(dist(0.5, 0.5) - 0.3, 0, None)"}}}
    from fekete_rate.config import load_weighted_set
    ws = load_weighted_set(ws_desc)
    with pytest.raises(InvalidInput):
        rate_experiment_volume(ws, [4, 6], resolution=64, envelope_resolution=64,
                               density_samples=64)


def test_cli_gram(capsys):
    code = main(["gram", "--config", TORUS_CFG, "--n", "5", "--resolution", "64", "--json"])
    out = json.loads(capsys.readouterr().out)
    assert code == EXIT_PASS
    assert out["command"] == "gram" and out["N"] == 5 and math.isfinite(out["L_diff"])


def test_cli_boson_check(capsys):
    code = main(["boson-check", "--surface", "sphere", "--n", "6", "--samples", "10", "--json"])
    out = json.loads(capsys.readouterr().out)
    assert code == EXIT_PASS and out["spread"] < 1e-8 and len(out["log_ratios"]) == 10


def test_cli_minimize_and_exit_codes(capsys, tmp_path):
    path = tmp_path / "min.json"
    code = main(["minimize", "--config", TORUS_CFG, "--m", "6", "--restarts", "2",
                 "--out", str(path)])
    assert code == EXIT_PASS
    res = json.loads(path.read_text())
    assert len(res["points"]) == 6 and res["seed"] == 0
    capsys.readouterr()
    # a negative tolerance can never be met: the check fails with exit 2
    assert main(["minimize", "--config", TORUS_CFG, "--m", "4", "--restarts", "1",
                 "--tol", "-1"]) == EXIT_FAIL


def test_cli_errors(capsys):
    assert main(["gram", "--config", "{not json", "--n", "4"]) == EXIT_ERROR
    assert main(["gram", "--config", "/nonexistent/x.json", "--n", "4"]) == EXIT_ERROR
    assert main(["gram", "--surface", "torus", "--n", "0"]) == EXIT_ERROR
    assert "error:" in capsys.readouterr().err
    with pytest.raises(SystemExit):
        main(["no-such-command"])


def test_cli_bergman_csv(tmp_path, capsys):
    path = tmp_path / "rho.csv"
    code = main(["bergman", "--surface", "sphere", "--n", "4", "--resolution", "32",
                 "--bm-fit", "2,4", "--out", str(path)])
    assert code == EXIT_PASS
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    assert path.read_text().splitlines()[0] == "node_x,node_y,rho"
    assert np.allclose(data[:, 2], 5, atol=1e-9)


def test_cli_rate_vol_determinism(tmp_path, capsys):
    args = ["rate-vol", "--config", TORUS_CFG, "--n-values", "4,6", "--resolution", "64",
            "--seed", "3"]
    outs = []
    for k in range(2):
        stem = tmp_path / f"run{k}"
        main(args + ["--out", str(stem)])
        outs.append(_strip_timing(json.loads(stem.with_suffix(".json").read_text())))
    assert outs[0] == outs[1]
    assert outs[0]["provenance"]["seed"] == 3
