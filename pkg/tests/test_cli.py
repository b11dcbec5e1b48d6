import csv
import json

import pytest

from pbmo import cli

SMALL_GRID = {"grid": {"nx": 32, "nt": 32}}


def run(tmp_path, command, cfg=None, *extra):
    tmp_path.mkdir(parents=True, exist_ok=True)
    args = [command, "--out", str(tmp_path)]
    if cfg is not None:
        path = tmp_path / "cfg.json"
        path.write_text(json.dumps(cfg))
        args += ["--config", str(path)]
    code = cli.main(args + list(extra))
    report = json.loads((tmp_path / f"{command}.json").read_text()) if code != 2 else None
    return code, report


def test_seminorm_report_schema(tmp_path):
    code, rep = run(tmp_path, "seminorm", {"entry": "log_heat", **SMALL_GRID})
    assert code == 0 and rep["schema"] == 1 and rep["ok"] is True
    assert set(rep) >= {"command", "config", "timestamp", "results", "contracts", "seed", "threads"}
    assert rep["contracts"]["variants_below_pbmo"] is True
    rows = list(csv.reader(open(tmp_path / "seminorm.csv")))
    assert rows[0] == ["quantity", "value", "constant"]


def test_deterministic_apart_from_timestamp(tmp_path):
    a = run(tmp_path / "a", "seminorm", {"entry": "step_t", **SMALL_GRID})[1]
    b = run(tmp_path / "b", "seminorm", {"entry": "step_t", **SMALL_GRID})[1]
    a.pop("timestamp"), b.pop("timestamp")
    assert a == b


def test_zero_norm_contract(tmp_path):
    code, rep = run(tmp_path, "seminorm", {"entry": "exp_t", "grid": {"nx": 32, "nt": 64}})
    assert code == 0 and rep["contracts"]["zero_norms"] is True


def test_malformed_configs(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"p": 2,\n "grid": {"nx": 64,}}')
    assert cli.main(["seminorm", "--config", str(bad), "--out", str(tmp_path)]) == 2
    assert "line 2" in capsys.readouterr().err
    bad.write_text('{"gama": 0.5}')
    assert cli.main(["seminorm", "--config", str(bad), "--out", str(tmp_path)]) == 2
    assert "'gama'" in capsys.readouterr().err
    bad.write_text('{"p": "two"}')
    assert cli.main(["seminorm", "--config", str(bad), "--out", str(tmp_path)]) == 2
    bad.write_text('{"command": "jn"}')
    assert cli.main(["seminorm", "--config", str(bad), "--out", str(tmp_path)]) == 2
    bad.write_text('{"grid": {"nx": 1}}')
    assert cli.main(["seminorm", "--config", str(bad), "--out", str(tmp_path)]) == 2


def test_coarse_lattice_is_a_config_error(tmp_path, capsys):
    code, _ = run(tmp_path, "seminorm", {"entry": "exp_t", "grid": {"nx": 32, "nt": 32}})
    assert code == 2 and "empty" in capsys.readouterr().err


def test_out_from_environment(tmp_path, monkeypatch):
    monkeypatch.setenv(cli.OUT_ENV, str(tmp_path / "env"))
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"entry": "constant", **SMALL_GRID}))
    assert cli.main(["maximal", "--config", str(path)]) == 0
    assert (tmp_path / "env" / "maximal.json").exists()


def test_maximal_contracts(tmp_path):
    code, rep = run(tmp_path, "maximal", {"entry": "log_abs_x_lifted", **SMALL_GRID})
    assert code == 0
    assert rep["contracts"] == {"duality_exact": True, "plain_equals_star": True, "hardy_littlewood_exact": True}


def test_sandwich(tmp_path):
    code, rep = run(tmp_path, "sandwich", {"entries": ["sinh_t", "step_t"], "grid": {"nx": 32, "nt": 64}})
    assert code == 0 and len(rep["results"]["table"]) == 2


def test_dyadic_reports_boundary_distortion(tmp_path):
    code, rep = run(tmp_path, "dyadic", {"exponents": [2.0, 3.0], "depth": 6})
    assert code == 0 and (tmp_path / "dyadic.jsonl").exists()
    code, rep = run(tmp_path, "dyadic", {"exponents": [1.5], "depth": 4})
    assert code == 1 and rep["contracts"]["strict_distortion"] is False


def test_cz(tmp_path):
    code, rep = run(tmp_path, "cz", {"entry": "step_t", "grid": {"nx": 32, "nt": 64}, "depth": 3})
    assert code == 0 and rep["results"]["report"]["reconstruction_error"] <= 1e-12


def test_chain_single_spec(tmp_path):
    cfg = {"spec": {"theta": 0.5, "tau": 3.0, "v": [0.3]}, "grid": {"nx": 64, "nt": 128}}
    code, rep = run(tmp_path, "chain", cfg)
    assert code == 0 and rep["contracts"] == {"sound": True, "structure": True}


def test_jn(tmp_path):
    code, rep = run(tmp_path, "jn", {"c_grid": [0.0, 0.5, 2.0], **SMALL_GRID})
    assert code == 0 and rep["contracts"]["unit_at_zero"] is True


def test_oneside(tmp_path):
    code, rep = run(tmp_path, "oneside", {"entry": "sqrt_neg_x", "n": 256, "chain_cases": 5})
    assert code == 0 and rep["results"]["ratio"] > 0
    code, rep = run(tmp_path, "oneside", {"entry": "exp_x", "n": 256, "chain_cases": 2})
    assert code == 0 and rep["contracts"]["zero_norm"] is True


def test_diverge(tmp_path):
    code, rep = run(tmp_path, "diverge", {"windows": [2.0, 4.0], "n": 32})
    assert code == 0 and rep["results"]["growth"][0] >= 2


def test_verify_bounded(tmp_path):
    code, rep = run(tmp_path, "verify-bounded", {"entries": ["step_t"], **SMALL_GRID})
    assert code == 0 and rep["results"]["table"][0]["ratio"] == pytest.approx(1.0)


def test_field_file(tmp_path):
    from pbmo import corpus
    from pbmo.field import write_field_csv

    f = corpus.evaluate_entry("step_t", corpus.default_grid("step_t", 32, 32))
    write_field_csv(f, tmp_path / "f.csv")
    code, rep = run(tmp_path, "seminorm", {"field_file": str(tmp_path / "f.csv")})
    assert code == 0 and rep["results"]["source"].endswith("f.csv")
