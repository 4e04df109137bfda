import json
import math
import os

import numpy as np
import pytest

from qdcavity.core import CavityDotParams
from qdcavity.errors import (
    ConfigError,
    CrossingAmbiguityError,
    DataError,
    FitError,
    IntegrationError,
    SchemaError,
)
from qdcavity.io import RunConfig, load_spectrum_csv, run, write_spectrum_csv
from qdcavity.io.cli import main
from qdcavity.io.config import TASKS, parse_json
from qdcavity.io.csvio import format_number, write_table
from qdcavity.io.run import EXIT_CONFIG, EXIT_DATA, EXIT_NUMERICAL, error_object, exit_code_for, jsonable
from qdcavity.reflectivity import delta_R_V
from qdcavity.spectrofit import synth_spectrum, synthetic_grid

# small but complete configurations for every task
SMALL_TASK_PARAMS = {
    "synth": {"temperature_indices": [0, 5], "noise_fraction": 0.01, "n_points": 50},
    "fit-reflectivity": {"guess_perturbation": 0.1},
    "ramsey": {"tau_ps": {"start_ps": 0.0, "stop_ps": 600.0, "num": 41}, "t2_star_ps": 400.0,
               "n_samples": 50},
    "rabi": {"pulse": {"kind": "instantaneous"}, "power": [1.0, 2.0]},
    "rotation-scan": {"detuning_meV": [-0.8, -0.025, 0.025, 0.3]},
    "pumping": {"transitions": [0, 1], "rabi_per_ps": [1.0]},
}
B_FIELD = {"ramsey": 2.0, "rabi": 2.0, "rotation-scan": 2.0, "pumping": 4.0}


def _config(task, out_dir, seed=3):
    physical = {}
    if task in B_FIELD:
        physical["field"] = {"B_x_T": B_FIELD[task]}
        physical["levels"] = {"dipole_axis_angle_rad": 0.0 if task == "pumping" else math.pi / 4}
    return RunConfig.from_dict({"task": task, "seed": seed, "physical": physical,
                                "task_params": SMALL_TASK_PARAMS[task],
                                "output": {"directory": str(out_dir)}})


def _read_all(directory):
    return {name: open(os.path.join(directory, name), "rb").read()
            for name in sorted(os.listdir(directory)) if name != "run.log"}


class TestConfig:
    def test_defaults_and_provenance(self):
        cfg = RunConfig.from_dict({"task": "synth"})
        assert cfg.seed == 0
        assert cfg.physical["cavity_dot"]["g_C_meV"] == pytest.approx(0.0249)
        assert cfg.provenance["config.physical.cavity_dot.g_C_meV"] == "default"
        assert cfg.output == {"directory": "out", "formats": ["json", "csv"]}

    def test_meV_boundary(self):
        cfg = RunConfig.from_dict({"task": "synth", "physical": {"cavity_dot": {"g_C_meV": 0.03}}})
        assert cfg.cavity_dot().g_C == pytest.approx(30.0)
        assert cfg.provenance["config.physical.cavity_dot.g_C_meV"] == "config"

    def test_echo_round_trip(self):
        for task in TASKS:
            cfg = _config(task, "x")
            again = RunConfig.from_json(json.dumps(cfg.to_dict()))
            assert again == cfg

    @pytest.mark.parametrize("raw", [
        {"task": "synth", "bogus": 1},
        {"task": "synth", "task_params": {"n_point": 3}},
        {"task": "dance"},
        {"task": "synth", "seed": -1},
        {"task": "synth", "seed": 1.5},
        {"task": "synth", "physical": {"cavity_dot": {"Gamma_C_meV": 0.0}}},
        {"task": "synth", "physical": {"cavity_dot": {"Gamma_0_meV": 0.0}}},
        {"task": "synth", "physical": {"field": {"B_x_T": -1.0}}},
        {"task": "ramsey", "task_params": {"pulse": {"kind": "square"}}},
        {"task": "ramsey", "task_params": {"pulse": {"angle_rad": 1.0}}},
        {"task": "rabi", "task_params": {"pulse": {"kind": "sech", "angle_rad": 1.0}}},
        {"task": "rotation-scan", "task_params": {"detuning_meV": {"start_meV": 0, "num": 3}}},
        {"task": "synth", "output": {"formats": ["xml"]}},
        {"task": "synth", "task_params": {"noise_fraction": True}},
    ])
    def test_rejects(self, raw):
        with pytest.raises(ConfigError):
            RunConfig.from_dict(raw)

    @pytest.mark.parametrize("text", ['{"task": "synth", "seed": NaN}', '{"task": "synth", "task": "synth"}',
                                      '{"task": '])
    def test_strict_json(self, text):
        with pytest.raises(ConfigError):
            parse_json(text)

    def test_overrides(self):
        cfg = RunConfig.from_dict({"task": "synth"}).with_overrides(seed=7, directory="d", formats=["csv"])
        assert (cfg.seed, cfg.output["directory"], cfg.output["formats"]) == (7, "d", ["csv"])
        assert cfg.provenance["config.seed"] == "cli"


class TestCsv:
    def test_two_rows(self, tmp_path):
        path = tmp_path / "s.csv"
        path.write_text("energy_meV,signal\n1301.90,0.1\n1302.00,-0.1\n")
        spec = load_spectrum_csv(path)
        np.testing.assert_allclose(spec.grid, [1301900.0, 1302000.0])
        np.testing.assert_allclose(spec.values, [0.1, -0.1])

    def test_missing_signal(self, tmp_path):
        path = tmp_path / "s.csv"
        path.write_text("energy_meV,value\n1301.90,0.1\n")
        with pytest.raises(SchemaError, match="signal"):
            load_spectrum_csv(path)

    def test_sorted_with_metadata(self, tmp_path):
        path = tmp_path / "s.csv"
        path.write_text("energy_meV,signal,temperature_K,note\n1302.0,2,10,a\n1301.0,1,10,b\n")
        spec = load_spectrum_csv(path)
        np.testing.assert_allclose(spec.values, [1, 2])
        assert spec.meta["temperature_K"] == 10.0
        assert spec.meta["ignored_columns"] == ["note"]

    @pytest.mark.parametrize("body, match", [
        ("1301.9,0.1\n1301.9,0.2\n", r"lines \[2, 3\]"),
        ("1301.9,abc\n", "line 2"),
        ("1301.9,inf\n", "not finite"),
        ("", "no data"),
        ("1301.9\n", "fields"),
    ])
    def test_bad_rows(self, tmp_path, body, match):
        path = tmp_path / "s.csv"
        path.write_text("energy_meV,signal\n" + body)
        with pytest.raises(DataError, match=match):
            load_spectrum_csv(path)

    def test_empty_and_missing_file(self, tmp_path):
        (tmp_path / "e.csv").write_text("")
        with pytest.raises(SchemaError):
            load_spectrum_csv(tmp_path / "e.csv")
        with pytest.raises(DataError):
            load_spectrum_csv(tmp_path / "nope.csv")

    def test_round_trip(self, tmp_path, published):
        spec = synth_spectrum(published, synthetic_grid(published), 1e-4, seed=2)
        write_spectrum_csv(tmp_path / "s.csv", spec)
        back = load_spectrum_csv(tmp_path / "s.csv")
        np.testing.assert_allclose(back.values, spec.values, rtol=1e-12)
        np.testing.assert_allclose(back.grid, spec.grid, rtol=1e-12)

    def test_full_precision(self):
        x = 0.1 + 0.2
        assert float(format_number(x)) == x
        assert format_number(3) == "3" and format_number(True) == "true"

    def test_table_line_endings(self, tmp_path):
        write_table(tmp_path / "t.csv", ["a", "b"], [[1, 0.5]])
        assert (tmp_path / "t.csv").read_bytes() == b"a,b\n1,0.5\n"


class TestRun:
    def test_synth_equals_library(self, tmp_path):
        cfg = RunConfig.from_dict({"task": "synth", "output": {"directory": str(tmp_path)}})
        env = run(cfg)
        spec = load_spectrum_csv(tmp_path / "spectrum.csv")
        p = CavityDotParams()
        np.testing.assert_allclose(spec.values, delta_R_V(spec.grid, p).values, rtol=1e-12, atol=1e-18)
        assert env.files == ["spectrum.csv", "result.json"]

    def test_result_envelope(self, tmp_path):
        cfg = _config("synth", tmp_path)
        run(cfg)
        doc = json.loads((tmp_path / "result.json").read_text())
        assert set(doc) == {"artifact_version", "task", "config_echo", "provenance", "results", "warnings", "files"}
        assert RunConfig.from_dict(doc["config_echo"]) == cfg
        assert (tmp_path / "run.log").exists()

    def test_json_only(self, tmp_path):
        cfg = _config("synth", tmp_path).with_overrides(formats=["json"])
        run(cfg)
        assert sorted(os.listdir(tmp_path)) == ["result.json", "run.log"]

    def test_no_write(self, tmp_path):
        env = run(_config("synth", tmp_path / "never"), write=False)
        assert not (tmp_path / "never").exists()
        assert env.results["spectra"][0]["name"] == "spectrum_0"

    def test_fit_recovers(self, tmp_path):
        env = run(_config("fit-reflectivity", tmp_path))
        sh = env.results["shared"]
        assert sh["g_C_meV"] == pytest.approx(0.0249, rel=0.1)
        assert sh["Gamma_C_meV"] == pytest.approx(0.172, rel=0.1)
        assert env.results["rank"] == 23

    def test_fit_from_written_files(self, tmp_path):
        synth = RunConfig.from_dict({"task": "synth", "seed": 1, "task_params": {
            "temperature_indices": [0, 1, 2, 3, 4, 5], "noise_fraction": 0.01},
            "output": {"directory": str(tmp_path / "s")}})
        run(synth)
        files = [str(tmp_path / "s" / f"spectrum_{i}.csv") for i in range(6)]
        guesses = [{"omega_C_meV": c, "omega_D_meV": d} for c, d in
                   zip((1302.13, 1302.14, 1302.13, 1302.11, 1302.05, 1301.93),
                       (1301.94, 1301.88, 1301.77, 1301.62, 1301.37, 1300.92))]
        fit = RunConfig.from_dict({"task": "fit-reflectivity", "task_params": {
            "data_files": files, "per_dataset_guess": guesses, "guess_perturbation": 0.2},
            "output": {"directory": str(tmp_path / "f")}})
        env = run(fit)
        assert env.results["shared"]["Gamma_D_meV"] == pytest.approx(0.0052, rel=0.2)
        assert "truth_shared" not in env.results

    def test_rotation_dip_toward_cavity(self, tmp_path):
        env = run(_config("rotation-scan", tmp_path))
        # the dip sits next to the dot line, on the cavity side
        assert env.results["min_fidelity_detuning_meV"] == pytest.approx(0.025)
        assert env.results["max_fidelity"] > env.results["min_fidelity"] + 0.02

    def test_missing_guesses(self, tmp_path):
        cfg = RunConfig.from_dict({"task": "fit-reflectivity", "task_params": {"data_files": ["a.csv"]},
                                   "output": {"directory": str(tmp_path)}})
        with pytest.raises(DataError):
            run(cfg)


@pytest.mark.filterwarnings("ignore::qdcavity.errors.SimulationWarning")
@pytest.mark.parametrize("task", TASKS)
def test_rerun_byte_identical(tmp_path, task):
    cfg = _config(task, tmp_path)
    run(cfg)
    first = _read_all(tmp_path)
    run(cfg)
    second = _read_all(tmp_path)
    assert first.keys() == second.keys()
    for name in first:
        assert first[name] == second[name], name


class TestErrors:
    @pytest.mark.parametrize("exc, code", [
        (ConfigError("x"), EXIT_CONFIG),
        (SchemaError("x"), EXIT_DATA),
        (CrossingAmbiguityError("x", [1000.0]), EXIT_DATA),
        (FitError("x", last_iterate=np.array([1.0])), EXIT_NUMERICAL),
        (IntegrationError("x", 3.0), EXIT_NUMERICAL),
        (RuntimeError("x"), 1),
    ])
    def test_exit_codes(self, exc, code):
        assert exit_code_for(exc) == code
        obj = error_object(exc, "synth")
        assert obj["error"]["exit_code"] == code
        json.dumps(obj)

    def test_context(self):
        assert error_object(FitError("x", last_iterate=np.array([1.0])))["error"]["context"]["last_iterate"] == [1.0]
        assert error_object(CrossingAmbiguityError("x", [1000.0]))["error"]["context"]["candidates_meV"] == [1.0]

    def test_jsonable(self):
        assert jsonable({"a": np.float64(math.nan), "b": (np.int64(2), np.bool_(True))}) == {"a": None, "b": [2, True]}


class TestCli:
    def test_success(self, tmp_path, capsys):
        code = main(["synth", "--out", str(tmp_path), "--seed", "4", "--format", "csv"])
        assert code == 0
        summary = json.loads(capsys.readouterr().out)
        assert summary["files"] == ["spectrum.csv"]

    def test_config_file(self, tmp_path, capsys):
        path = tmp_path / "c.json"
        path.write_text(json.dumps({"task": "synth", "task_params": {"n_points": 7}}))
        assert main(["synth", "--config", str(path), "--out", str(tmp_path / "o")]) == 0
        assert len(load_spectrum_csv(tmp_path / "o" / "spectrum.csv").grid) == 7

    @pytest.mark.parametrize("content, code", [
        ('{"task": "synth", "seed": NaN}', EXIT_CONFIG),
        ('{"task": "ramsey"}', EXIT_CONFIG),
        ('{"task": "synth", "extra": 1}', EXIT_CONFIG),
    ])
    def test_config_errors(self, tmp_path, capsys, content, code):
        path = tmp_path / "c.json"
        path.write_text(content)
        assert main(["synth", "--config", str(path), "--out", str(tmp_path)]) == code
        err = json.loads(capsys.readouterr().err)
        assert err["error"]["exit_code"] == code
        assert err["error"]["context"]["task"] == "synth"

    def test_data_error(self, tmp_path, capsys):
        data = tmp_path / "d.csv"
        data.write_text("energy_meV,signal\n1301.9,0.1\n1302.0,0.2\n1301.9,0.3\n")
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"task": "fit-reflectivity", "task_params": {
            "data_files": [str(data)], "per_dataset_guess": [{"omega_C_meV": 1302.1, "omega_D_meV": 1301.9}]}}))
        assert main(["fit-reflectivity", "--config", str(cfg), "--out", str(tmp_path / "o")]) == EXIT_DATA
        err = json.loads(capsys.readouterr().err)
        assert err["error"]["type"] == "DataError"
        assert "[2, 4]" in err["error"]["message"]

    def test_missing_config_file(self, tmp_path, capsys):
        assert main(["synth", "--config", str(tmp_path / "none.json")]) == EXIT_CONFIG

    def test_bad_format_flag(self):
        with pytest.raises(SystemExit):
            main(["synth", "--format", "xml"])
