"""End-to-end command-line interface tests."""

import json

import pytest

from atomlink.cli import main


def run_cli(*argv):
    return main(list(argv))


@pytest.fixture()
def small_run(tmp_path):
    out = tmp_path / "run"
    code = run_cli("simulate", "--preset", "l6", "--seed", "1", "--mode",
                   "sampled-clicks", "--events", "120", "--out", str(out),
                   "--trajectories", "300")
    assert code == 0
    return out


class TestSimulate:
    def test_outputs_exist(self, small_run):
        for name in ("events.jsonl", "summary.json", "clicks.csv", "manifest.json"):
            assert (small_run / name).exists()
        summary = json.loads((small_run / "summary.json").read_text())
        assert summary["n_events"] == 120
        assert "measured_event_rate_hz" in summary
        manifest = json.loads((small_run / "manifest.json").read_text())
        assert manifest["config_hash"] == summary["config_hash"]

    def test_zero_events(self, tmp_path):
        out = tmp_path / "empty"
        assert run_cli("simulate", "--preset", "l6", "--events", "0",
                       "--out", str(out), "--trajectories", "300") == 0
        lines = (out / "events.jsonl").read_text().strip().splitlines()
        assert len(lines) == 1  # header only
        summary = json.loads((out / "summary.json").read_text())
        assert summary["n_events"] == 0

    def test_determinism_byte_identical(self, tmp_path):
        outs = []
        for sub in ("a", "b"):
            out = tmp_path / sub
            assert run_cli("simulate", "--preset", "l6", "--seed", "9",
                           "--events", "60", "--out", str(out),
                           "--trajectories", "300") == 0
            outs.append((out / "events.jsonl").read_bytes())
        assert outs[0] == outs[1]

    def test_refuses_overwrite(self, small_run):
        code = run_cli("simulate", "--preset", "l6", "--events", "5",
                       "--out", str(small_run), "--trajectories", "300")
        assert code == 4

    def test_bad_preset_is_config_error(self, tmp_path, capsys):
        with pytest.raises(SystemExit) as exc:
            run_cli("simulate", "--preset", "nope", "--out", str(tmp_path))
        assert exc.value.code == 2

    def test_bad_scenario_file(self, tmp_path):
        bad = tmp_path / "bad.ini"
        bad.write_text("[nodes]\ngarbage = true\n")
        code = run_cli("simulate", "--scenario", str(bad), "--out", str(tmp_path))
        assert code == 2


class TestAnalyze:
    def test_report_fields(self, small_run, tmp_path):
        out = tmp_path / "analysis"
        code = run_cli("analyze", "--events", str(small_run / "events.jsonl"),
                       "--clicks", str(small_run / "clicks.csv"),
                       "--summary", str(small_run / "summary.json"),
                       "--estimators", "fidelity,contrast,sbr",
                       "--out", str(out))
        assert code == 0
        report = json.loads((out / "report.json").read_text())
        assert 0.5 < report["estimators"]["fidelity"]["fidelity"] <= 1.0
        assert report["accepted_fraction"] > 0.5
        assert report["estimators"]["sbr"]["coincidence"] > 10

    def test_reanalysis_identical(self, small_run, tmp_path):
        blobs = []
        for sub in ("x", "y"):
            out = tmp_path / sub
            assert run_cli("analyze", "--events", str(small_run / "events.jsonl"),
                           "--estimators", "fidelity", "--out", str(out)) == 0
            blobs.append((out / "report.json").read_bytes())
        assert blobs[0] == blobs[1]

    def test_empty_estimators(self, small_run, tmp_path):
        out = tmp_path / "plain"
        assert run_cli("analyze", "--events", str(small_run / "events.jsonl"),
                       "--estimators", "", "--out", str(out)) == 0
        report = json.loads((out / "report.json").read_text())
        assert report["estimators"] == {}

    def test_malformed_line_reports_lineno(self, small_run, tmp_path, capsys):
        bad = tmp_path / "bad.jsonl"
        lines = (small_run / "events.jsonl").read_text().splitlines()
        lines.insert(3, "{not json")
        bad.write_text("\n".join(lines))
        code = run_cli("analyze", "--events", str(bad), "--out", str(tmp_path))
        assert code == 4
        assert ":4:" in capsys.readouterr().err

    def test_mixed_hashes_rejected(self, small_run, tmp_path):
        other = tmp_path / "other"
        assert run_cli("simulate", "--preset", "l11", "--events", "20",
                       "--out", str(other), "--trajectories", "300") == 0
        code = run_cli("analyze", "--events", str(small_run / "events.jsonl"),
                       "--clicks", str(other / "clicks.csv"),
                       "--out", str(tmp_path / "mix"))
        assert code == 2
        code = run_cli("analyze", "--events", str(small_run / "events.jsonl"),
                       "--clicks", str(other / "clicks.csv"),
                       "--out", str(tmp_path / "mix"), "--force")
        assert code == 0


class TestRates:
    def test_table_written(self, tmp_path):
        assert run_cli("rates", "--out", str(tmp_path), "--seed", "2") == 0
        text = (tmp_path / "rates.csv").read_text().splitlines()
        assert text[0].startswith("name,")
        assert len(text) == 5  # header + four presets
        l6 = dict(zip(text[0].split(","), text[1].split(",")))
        assert float(l6["repetition_rate_hz"]) == pytest.approx(30.8e3, rel=0.05)
        assert float(l6["success_probability_model"]) == pytest.approx(3.66e-6, rel=0.01)


class TestCalibrate:
    def test_default_targets_converge(self, tmp_path):
        assert run_cli("calibrate", "--out", str(tmp_path)) == 0
        payload = json.loads((tmp_path / "calibration.json").read_text())
        assert payload["converged"]
        assert all(abs(r) < 0.10 for r in payload["residuals"].values())

    def test_already_calibrated_noop(self, tmp_path):
        assert run_cli("calibrate", "--out", str(tmp_path)) == 0
        first = json.loads((tmp_path / "calibration.json").read_text())
        assert run_cli("calibrate", "--out", str(tmp_path), "--force") == 0
        second = json.loads((tmp_path / "calibration.json").read_text())
        assert first["parameters"] == second["parameters"]

    def test_contradictory_targets_exit_3(self, tmp_path):
        targets = tmp_path / "targets.json"
        targets.write_text(json.dumps({
            "fidelities": {"l6": 0.99, "l33": 0.15},
            "fidelity_sigmas": {"l6": 0.01, "l33": 0.01},
        }))
        code = run_cli("calibrate", "--targets", str(targets), "--out", str(tmp_path))
        assert code == 3

    def test_refuses_overwrite(self, tmp_path):
        assert run_cli("calibrate", "--out", str(tmp_path)) == 0
        assert run_cli("calibrate", "--out", str(tmp_path)) == 4


class TestDephasing:
    def test_envelope_csv(self, tmp_path):
        code = run_cli("dephasing", "--preset", "l6", "--node", "1",
                       "--t-max", "30e-6", "--dt", "2e-6",
                       "--trajectories", "300", "--seed", "3",
                       "--out", str(tmp_path))
        assert code == 0
        lines = (tmp_path / "envelope.csv").read_text().splitlines()
        assert lines[0].startswith("# config_hash=")
        assert lines[1] == "time_us,basis,expectation,envelope"
        # 16 times x 3 bases
        assert len(lines) == 2 + 16 * 3

    def test_flat_envelope_without_noise(self, tmp_path):
        code = run_cli("dephasing", "--preset", "l6", "--node", "1",
                       "--t-max", "20e-6", "--dt", "4e-6",
                       "--trajectories", "300", "--seed", "3",
                       "--sigma-mg", "0", "--fictitious-scale", "0",
                       "--out", str(tmp_path))
        assert code == 0
        import csv
        with open(tmp_path / "envelope.csv") as fh:
            fh.readline()
            rows = list(csv.DictReader(fh))
        assert all(float(r["envelope"]) > 0.999 for r in rows)


class TestExportScenario:
    def test_round_trip(self, tmp_path):
        assert run_cli("export-scenario", "--preset", "l33",
                       "--out", str(tmp_path)) == 0
        from atomlink.protocol import load_scenario, preset, config_hash
        loaded = load_scenario(tmp_path / "scenario.ini")
        assert config_hash(loaded) == config_hash(preset("l33"))
