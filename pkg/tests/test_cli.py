import csv
import json
import math

import pytest

from schwinger_qse.cli import ConfigError, cmd_fit, cmd_model_info, config_digest, load_config, main

SMALL = "n_sites: 4\nD: [2, 3]\nbudgets: [1.0e+4, 1.0e+6]\ninstances: 3\nsolver: pqse\n"


@pytest.fixture
def cfg_path(tmp_path):
    path = tmp_path / "c.yaml"
    path.write_text(SMALL)
    return path


def read_rows(path):
    with open(path) as fh:
        lines = fh.read().splitlines()
    return lines[0], list(csv.DictReader(lines[1:]))


def test_model_info_values(capsys):
    report = cmd_model_info(load_config(None, environ={"SCHWINGER_QSE_N_SITES": "2"}))
    assert report["E_int"] == pytest.approx(0.06155, abs=1e-5)
    report = cmd_model_info(load_config(None, {"x": 0.0}, environ={"SCHWINGER_QSE_N_SITES": "4"}))
    assert report["E_int"] == 0.0
    assert "Lambda: 4" in capsys.readouterr().out


def test_bad_key(tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    bad.write_text("n_sites: 4\nbogus: 1\n")
    with pytest.raises(ConfigError, match="bogus"):
        load_config(str(bad), environ={})
    assert main(["model-info", "--config", str(bad)]) == 2
    assert "bogus" in capsys.readouterr().err


def test_env_override_and_digest(cfg_path):
    a = load_config(str(cfg_path), environ={})
    b = load_config(str(cfg_path), environ={"SCHWINGER_QSE_INSTANCES": "7"})
    assert b["instances"] == 7
    assert config_digest(a) == config_digest(load_config(str(cfg_path), environ={}))
    assert config_digest(a) != config_digest(b)


def test_sweep_grid_and_determinism(cfg_path, tmp_path):
    assert main(["sweep", "--config", str(cfg_path), "--out", str(tmp_path / "a")]) == 0
    assert main(["sweep", "--config", str(cfg_path), "--out", str(tmp_path / "b"), "--workers", "2"]) == 0
    text_a = (tmp_path / "a" / "sweep.csv").read_text()
    assert text_a == (tmp_path / "b" / "sweep.csv").read_text()
    header, rows = read_rows(tmp_path / "a" / "sweep.csv")
    assert header.startswith("# schema_version=1 config_digest=") and "seed_base=0" in header
    assert len(rows) == 2 * 2 * 3
    assert [(r["budget"], r["D_or_Dmax"], r["instance"]) for r in rows][:4] == [
        ("10000.0", "2", "0"), ("10000.0", "2", "1"), ("10000.0", "2", "2"), ("10000.0", "3", "0")]
    manifest = json.loads((tmp_path / "a" / "manifest_sweep.json").read_text())
    assert manifest["seed_base"] == 0 and manifest["instance_range"] == [0, 2]
    assert not (tmp_path / "a" / "sweep.partial.csv").exists()


def test_seed_changes_rows(cfg_path, tmp_path):
    main(["sweep", "--config", str(cfg_path), "--out", str(tmp_path / "a")])
    main(["sweep", "--config", str(cfg_path), "--out", str(tmp_path / "c"), "--seed", "5"])
    _, a = read_rows(tmp_path / "a" / "sweep.csv")
    _, c = read_rows(tmp_path / "c" / "sweep.csv")
    assert [r["energy"] for r in a] != [r["energy"] for r in c]


def test_noiseless_sweep_and_fit(cfg_path, tmp_path):
    cfg_path.write_text("n_sites: 8\nD: [2, 3, 4, 5, 6, 7, 8]\n")
    out = tmp_path / "nl"
    assert main(["sweep", "--config", str(cfg_path), "--out", str(out), "--noiseless"]) == 0
    _, rows = read_rows(out / "sweep.csv")
    assert len(rows) == 7 and all(r["budget"] == "inf" and r["solver"] == "qse" for r in rows)
    errs = [float(r["frac_error"]) for r in rows]
    assert errs[-1] < errs[0]
    assert main(["fit", "--config", str(cfg_path), "--out", str(out), "--input", str(out / "sweep.csv")]) == 0
    _, fits = read_rows(out / "fit.csv")
    assert fits[0]["kind"] == "loglinear_in_D" and float(fits[0]["chi"]) < 0


def test_fit_synthetic_paper_law(tmp_path):
    # synthetic sweeps whose 1e-4 crossing sits on 10^8.919 * 1.143^N
    path = tmp_path / "synthetic.csv"
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=["N", "mu", "x", "D_or_Dmax", "budget", "seed", "instance",
                                           "solver", "energy", "frac_error", "status", "partitions"])
        w.writeheader()
        for N in range(10, 27, 2):
            crossing = 10**8.919 * 1.143**N
            for budget in [10.0**k for k in range(4, 13)]:
                err = 1e-4 * (budget / crossing) ** -0.5
                w.writerow({"N": N, "mu": 1.5, "x": 0.5, "D_or_Dmax": 4, "budget": budget, "seed": 0,
                            "instance": 0, "solver": "pqse", "energy": 0, "frac_error": err,
                            "status": "ok", "partitions": ""})
    cfg = load_config(None, {"targets": [1e-4]}, environ={})
    cmd_fit(cfg, tmp_path, [path])
    _, rows = read_rows(tmp_path / "fit.csv")
    for r in rows:
        expect = 10**8.919 * 1.143 ** int(r["N"])
        assert float(r["requirement"]) == pytest.approx(expect, rel=1e-6)
        assert float(r["campaign_t"]) > 0


def test_fit_empty_input(tmp_path):
    empty = tmp_path / "e.csv"
    empty.write_text("N,mu,x,D_or_Dmax,budget,seed,instance,solver,energy,frac_error,status,partitions\n")
    assert main(["fit", "--out", str(tmp_path), "--input", str(empty)]) == 2
    assert main(["fit", "--out", str(tmp_path)]) == 2


def test_resources_command(tmp_path):
    cfg = tmp_path / "r.yaml"
    cfg.write_text("n_grid: [4, 16, 64]\n")
    assert main(["resources", "--config", str(cfg), "--out", str(tmp_path)]) == 0
    _, rows = read_rows(tmp_path / "resources.csv")
    get = lambda N, c, ph="G_tilde", pol="all_to_all_one_ancilla": next(  # noqa: E731
        r for r in rows if int(r["N"]) == N and r["construction"] == c and r["phases_in"] == ph and r["policy"] == pol)
    assert float(get(4, "U")["t"]) == 60 and float(get(4, "Pi")["t"]) == 1312
    for N in (16, 64):
        assert float(get(N, "U", "U")["t"]) > float(get(N, "U")["t"])
    row = get(64, "step")
    assert float(row["runtime_Eagle_r3"]) == pytest.approx(float(row["cnot"]) * 636e-9)


def test_capacity_exit_code(tmp_path):
    cfg = tmp_path / "big.yaml"
    cfg.write_text("n_sites: 28\nD: [2]\ninstances: 1\nbudgets: [1.0e+6]\n")
    assert main(["sweep", "--config", str(cfg), "--out", str(tmp_path)]) == 3


def test_numerical_failure_exit_code(tmp_path):
    cfg = tmp_path / "tiny.yaml"
    cfg.write_text("n_sites: 6\nD: [200]\ninstances: 1\nbudgets: [1.0e+6]\nscale: 1.0e-3\n")
    assert main(["sweep", "--config", str(cfg), "--out", str(tmp_path)]) == 4
