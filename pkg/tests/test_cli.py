import csv
import io
import json

import pytest

from witnesskit import cli, experiments
from witnesskit.config import ConfigError, load_file, resolve
from witnesskit.reporting import format_value, render_csv, validate_manifest
from witnesskit.sdp import SolverFailure


def _run(tmp_path, experiment, text, *flags):
    cfg = tmp_path / "run.yaml"
    cfg.write_text(text)
    out = tmp_path / "out"
    code = cli.main([experiment, "--config", str(cfg), "--out", str(out), *flags])
    return code, out


def _rows(out, experiment):
    with open(out / f"{experiment}.csv", newline="") as fh:
        return list(csv.DictReader(fh))


def test_format_value():
    assert format_value(1 / 3) == "0.333333333"
    assert format_value(-0.0) == "0"
    assert format_value(float("nan")) == "" and format_value(None) == ""
    assert format_value(True) == "true" and format_value(7) == "7"
    assert format_value(123456789.123) == "123456789"


def test_render_csv_quotes_and_crlf():
    text = render_csv(["a", "b"], [{"a": "x,y", "b": 0.5}])
    assert text == 'a,b\r\n"x,y",0.5\r\n'


def test_resolve_defaults_and_overrides():
    cfg = resolve("table1", {"q1": [0.1]}, {"seed": 9, "k": None})
    assert cfg["d"] == 4 and cfg["seed"] == 9 and cfg["k"] == [2]
    assert cfg["noise"] == ["depolarizing"]
    assert cfg["optimizer"]["restarts"] >= 1
    cfg = resolve("xy", {"xy": {"h": 0.25}})
    assert cfg["xy"]["h"] == 0.25 and cfg["xy"]["n"] == 4


@pytest.mark.parametrize("experiment,raw", [
    ("table1", {"unknown_key": 1}),
    ("pure-thresholds", {"measure": "uniform"}),
    ("ghz", {"k": 3}),
    ("random-scan", {"rank": 5}),
    ("xy", {"xy": {"q": [0.5, 0.6]}}),
    ("pure-thresholds", {"experiment": "ghz"}),
    ("pure-thresholds", {"d": 2, "rank": 5}),
])
def test_resolve_rejects_bad_configs(experiment, raw):
    with pytest.raises(ConfigError):
        resolve(experiment, raw)


def test_load_file_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_file(tmp_path / "missing.yaml")
    bad = tmp_path / "bad.yaml"
    bad.write_text("- 1\n- 2\n")
    with pytest.raises(ConfigError):
        load_file(bad)
    js = tmp_path / "ok.json"
    js.write_text('{"d": 3}')
    assert load_file(js) == {"d": 3}


def test_config_error_exit_code(tmp_path, capsys):
    code, _ = _run(tmp_path, "ghz", "k: 5\n")
    assert code == cli.EXIT_CONFIG
    assert "config" in capsys.readouterr().err
    with pytest.raises(SystemExit) as exc:
        cli.main(["nope", "--config", "x"])
    assert exc.value.code == cli.EXIT_CONFIG


def test_pure_thresholds_explicit_maxent(tmp_path):
    code, out = _run(tmp_path, "pure-thresholds", "d: 2\nstates: [maxent, product]\nnoise: depolarizing\n")
    assert code == 0
    rows = _rows(out, "pure-thresholds")
    assert [r["state_id"] for r in rows] == ["x0000", "x0001"]
    assert abs(float(rows[0]["p_sep_inf"]) - 2 / 3) < 1e-5
    assert abs(float(rows[0]["p_u2_sup"]) - 2 / 3) < 1e-5
    manifest = json.loads((out / "pure-thresholds.manifest.json").read_text())
    validate_manifest(manifest)
    assert manifest["output"]["rows"] == 2 and manifest["exit_code"] == 0


def test_pure_thresholds_sampling_is_byte_identical(tmp_path):
    text = "d: 2\ncount: 1\nseed: 3\n"
    code, out = _run(tmp_path, "pure-thresholds", text)
    assert code == 0
    first = (out / "pure-thresholds.csv").read_bytes()
    code, out = _run(tmp_path, "pure-thresholds", text)
    assert (out / "pure-thresholds.csv").read_bytes() == first
    rows = _rows(out, "pure-thresholds")
    assert [r["noise_model"] for r in rows] == ["dephasing", "depolarizing"]
    assert all(float(r["p_sep_inf"]) > float(r["p_u2_sup"]) for r in rows)


def test_seed_flag_overrides_file(tmp_path):
    _, out = _run(tmp_path, "pure-thresholds", "d: 2\ncount: 1\nseed: 3\nnoise: depolarizing\n", "--seed", "4")
    manifest = json.loads((out / "pure-thresholds.manifest.json").read_text())
    assert manifest["seed"] == 4 and manifest["config"]["seed"] == 4


def test_table1_rows(tmp_path):
    code, out = _run(tmp_path, "table1", "q1: [0.4]\n")
    assert code == 0
    (row,) = _rows(out, "table1")
    assert abs(float(row["f_fixed"]) - 0.468484999675455) < 1e-6
    assert row["max_f"] == "" and row["status"] == "ok"


def test_threshold_experiments_without_optimizer(tmp_path):
    code, out = _run(tmp_path, "ghz", "optimize: false\n")
    assert code == 0
    (row,) = _rows(out, "ghz")
    assert abs(float(row["p_sep_inf"]) - 8 / 9) < 1e-6
    code, out = _run(tmp_path, "xy", "optimize: false\nnoise: dephasing\n")
    assert code == 0 and len(_rows(out, "xy")) == 1
    code, out = _run(tmp_path, "random-scan", "optimize: false\ncount: 1\n")
    assert code == 0
    manifest = json.loads((out / "random-scan.manifest.json").read_text())
    assert _rows(out, "random-scan")[0]["state_id"] == "s0000"
    assert "summary" not in manifest


def test_envelope_columns_and_endpoints(tmp_path):
    code, out = _run(tmp_path, "envelope", "preset: orthogonal-maxent\ngrid_size: 3\n")
    assert code == 0
    rows = _rows(out, "envelope")
    assert list(rows[0]) == ["c", "v_ppt", "v_u2"]
    assert float(rows[0]["c"]) == 0 and abs(float(rows[-1]["c"]) - 0.25) < 1e-6
    assert all(abs(float(r["v_ppt"]) - float(r["v_u2"])) < 1e-4 for r in rows)


def test_solver_failures_exit_3(tmp_path, monkeypatch, capsys):
    def broken(*args, **kwargs):
        raise SolverFailure("forced")

    monkeypatch.setattr(experiments, "noise_threshold", broken)
    code, out = _run(tmp_path, "pure-thresholds", "d: 2\nstates: [maxent]\nnoise: depolarizing\n")
    assert code == cli.EXIT_SOLVER
    assert "x0000" in capsys.readouterr().err
    manifest = json.loads((out / "pure-thresholds.manifest.json").read_text())
    assert manifest["failed_ids"] == ["x0000"] and manifest["exit_code"] == 3
    (row,) = _rows(out, "pure-thresholds")
    assert row["status"].startswith("solver") or row["status"] != "ok"
