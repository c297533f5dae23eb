import json
import math

import pytest

from geoqgate.cli import EXIT_CONFIG, EXIT_NUMERICAL, EXIT_OK, main
from geoqgate.errors import ConfigError
from geoqgate.scenarios import merge_config

SMALL = {
    "agp-sweep": {"grid": {"rate_steps": 4, "time_steps": 10, "substeps": 2}},
    "rydberg-path": {"grid": {"steps": 200, "substeps": 1}},
    "bezier": {},
    "kitaev-fidelity": {
        "path": {"dmu_values": [0.5], "ddelta_values": [0.3, 0.5], "series_point": [0.5, 0.5]},
        "grid": {"steps": 100, "samples": 4},
    },
    "ising-fidelity": {
        "model": {"Lx": 2, "Ly": 2},
        "path": {"dJ_values": [0.1], "dh_values": [0.1, 0.3]},
        "grid": {"steps": 50, "samples": 3},
    },
    "nu-qua": {"grid": {"mesh": [20, 20], "curvature": [6, 6]}},
    "langevin": {"grid": {"T": 1.0, "steps": 1000, "burn_in": 100}},
}

HEADERS = {
    "agp_sweep.csv": "rate,time,p_excited",
    "rydberg_ring.csv": "t,Omega,Delta,mass_term,P1,P2,P3",
    "rydberg_direct.csv": "t,Omega,Delta,mass_term,P1,P2,P3",
    "bezier.csv": "s,b3,mu",
    "kitaev_surface.csv": "dmu,ddelta,fidelity",
    "kitaev_series.csv": "time,fidelity",
    "kitaev_realizations.csv": "index,delta_gamma,fidelity_formula,fidelity_exact",
    "ising_surface.csv": "dJ,dh,fidelity",
    "nu_qua_curvature.csv": "lambda1,lambda2,F",
    "langevin.csv": "t,lambda,velocity",
}


def run(tmp_path, scenario, doc, *extra, name="cfg.json"):
    cfg = tmp_path / name
    cfg.write_text(json.dumps(doc))
    out = tmp_path / "out"
    return main([scenario, "--config", str(cfg), "--out", str(out), *extra]), out


@pytest.mark.parametrize("scenario", sorted(SMALL))
def test_scenarios_write_headed_csv(tmp_path, scenario, capsys):
    code, out = run(tmp_path, scenario, SMALL[scenario])
    assert code == EXIT_OK
    summary = json.loads(capsys.readouterr().out)
    assert summary["scenario"] == scenario
    written = sorted(p.name for p in out.iterdir())
    assert written == summary["files"]
    for name in written:
        text = (out / name).read_text()
        if name.endswith(".csv"):
            assert text.splitlines()[0] == HEADERS[name]
        else:
            json.loads(text)


def test_reproducible_outputs(tmp_path):
    doc = SMALL["kitaev-fidelity"]
    first = tmp_path / "a"
    second = tmp_path / "b"
    (tmp_path / "cfg.json").write_text(json.dumps(doc))
    assert main(["kitaev-fidelity", "--config", str(tmp_path / "cfg.json"), "--out", str(first), "--seed", "5"]) == 0
    assert main(["kitaev-fidelity", "--config", str(tmp_path / "cfg.json"), "--out", str(second), "--seed", "5",
                 "--threads", "2"]) == 0
    for p in first.iterdir():
        assert p.read_bytes() == (second / p.name).read_bytes()


def test_agp_sweep_grid_shape(tmp_path):
    code, out = run(tmp_path, "agp-sweep", SMALL["agp-sweep"])
    assert code == 0
    rows = (out / "agp_sweep.csv").read_text().splitlines()[1:]
    assert len(rows) == 4 * 10


def test_bezier_samples(tmp_path):
    code, out = run(tmp_path, "bezier", {})
    rows = [line.split(",") for line in (out / "bezier.csv").read_text().splitlines()[1:]]
    assert len(rows) == 101
    assert float(rows[0][1]) == 0.0 and float(rows[-1][1]) == 1.0


def test_full_precision_numbers(tmp_path):
    code, out = run(tmp_path, "bezier", {"grid": {"points": 4}})
    s_value = (out / "bezier.csv").read_text().splitlines()[2].split(",")[0]
    assert float(s_value) == 1 / 3
    assert len(s_value.replace("0.", "").lstrip("0")) >= 16


def test_zero_noise_kitaev_surface_is_one(tmp_path):
    doc = json.loads(json.dumps(SMALL["kitaev-fidelity"]))
    doc["noise"] = {"sigma": 0.0}
    code, out = run(tmp_path, "kitaev-fidelity", doc)
    assert code == 0
    values = [float(r.split(",")[2]) for r in (out / "kitaev_surface.csv").read_text().splitlines()[1:]]
    assert values == [1.0] * len(values)


def test_nu_qua_identical_paths(tmp_path, capsys):
    line = {"family": "linear", "parameters": {"start": [0.4, 0.0], "end": [0.4, 1.5]}, "T": 1.0}
    code, _ = run(tmp_path, "nu-qua", {"path": {"path": line, "reference": line}, "grid": {"mesh": [10, 4]}})
    assert code == 0
    assert json.loads(capsys.readouterr().out)["nu_qua"] == 0.0


def test_nu_qua_reports_closed_form_discrepancy(tmp_path, capsys):
    doc = {
        "model": {"model": "two_level", "params": {}, "controls": ["Omega", "Delta"]},
        "path": {
            "path": {"family": "polyline", "parameters": {"vertices": [[1.0, -1.0], [2.0, 0.0], [1.0, 1.0]]}, "T": 1.0},
            "reference": {"family": "linear", "parameters": {"start": [1.0, -1.0], "end": [1.0, 1.0]}, "T": 1.0},
        },
        "grid": {"mesh": [30, 30], "curvature": [10, 10]},
    }
    code, _ = run(tmp_path, "nu-qua", doc)
    assert code == 0
    cmp = json.loads(capsys.readouterr().out)["closed_form_comparison"]
    assert cmp["max_abs_first_principles"] < 1e-10
    assert cmp["max_abs_closed_form"] > 0.01


def test_config_errors_exit_one(tmp_path):
    assert run(tmp_path, "bezier", {"colour": 1})[0] == EXIT_CONFIG
    assert run(tmp_path, "bezier", {"grid": {"points": 10, "extra": 2}})[0] == EXIT_CONFIG
    assert run(tmp_path, "langevin", {"grid": {"T": math.inf}}, name="inf.json")[0] == EXIT_CONFIG
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["bezier", "--config", str(bad), "--out", str(tmp_path)]) == EXIT_CONFIG
    assert main(["bezier", "--out", str(tmp_path), "--seed", "-3"]) == EXIT_CONFIG
    assert main(["bezier", "--out", str(tmp_path), "--threads", "0"]) == EXIT_CONFIG


def test_thread_env_fallback(tmp_path, monkeypatch):
    monkeypatch.setenv("GEOQGATE_THREADS", "lots")
    assert main(["bezier", "--out", str(tmp_path)]) == EXIT_CONFIG
    monkeypatch.setenv("GEOQGATE_THREADS", "2")
    assert main(["bezier", "--out", str(tmp_path)]) == EXIT_OK


def test_numerical_failure_exits_two(tmp_path):
    # At k = pi the gap closes where mu = 2t, which is the start of this surface.
    doc = {"model": {"k": math.pi, "mu0": 2.0}, "path": {"dmu_values": [0.5], "ddelta_values": [0.5]},
           "grid": {"steps": 50, "samples": 2}}
    assert run(tmp_path, "kitaev-fidelity", doc)[0] == EXIT_NUMERICAL


def test_unknown_scenario_is_rejected():
    with pytest.raises(SystemExit):
        main(["frobnicate"])
    with pytest.raises(ConfigError):
        merge_config("frobnicate", {})


def test_output_dir_from_config(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"output": {"dir": "from_cfg"}}))
    assert main(["bezier", "--config", str(cfg)]) == 0
    assert (tmp_path / "from_cfg" / "bezier.csv").exists()
