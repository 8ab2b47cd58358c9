"""Config parsing, experiment dispatch, output writing, end-to-end CLI."""

import json
import math

import pytest

from haarlab import canonical_json, make_density_matrix, save_density_matrix
from haarlab.cli import (
    ConfigError,
    build_config,
    main,
    parse_config,
    parse_config_text,
    run_experiment,
    write_results,
)

CONVERGE_TEXT = """\
experiment = converge
k = 2
eps = 1.0
ns = 16,64,256   # dimension grid
trials = 2000
seed = 42
"""


class TestConfigParsing:
    def test_documented_example_is_valid(self):
        config = parse_config(CONVERGE_TEXT)
        assert config.experiment == "converge"
        assert config.seed == 42
        assert config.params == {
            "k": 2,
            "eps": 1.0,
            "ns": [16, 64, 256],
            "trials": 2000,
        }
        assert not config.warnings

    def test_delta_range_error(self):
        text = "experiment = events\nn = 100\nk = 2\ndelta = 1.5\ntrials = 200\n"
        with pytest.raises(ConfigError) as exc:
            parse_config(text)
        assert any("delta must lie in (0,1)" in e for e in exc.value.errors)

    def test_missing_seed_defaults_with_warning(self):
        config = build_config(
            parse_config_text("experiment = sphere\nn = 64\ntrials = 200\n"),
            env={},
        )
        assert config.seed == 0
        assert any("defaulting to 0" in w for w in config.warnings)

    def test_env_seed_used_when_config_silent(self):
        config = build_config(
            parse_config_text("experiment = sphere\nn = 64\ntrials = 200\n"),
            env={"HAARLAB_SEED": "77"},
        )
        assert config.seed == 77
        assert not config.warnings

    def test_flags_override_file(self):
        config = build_config(
            parse_config_text(CONVERGE_TEXT),
            flag_values={"seed": "7", "trials": "150"},
        )
        assert config.seed == 7
        assert config.params["trials"] == 150

    def test_all_errors_reported_with_provenance(self):
        text = "experiment = events\nn = 100\nk = 0\ndelta = 2.0\nbogus = 1\n"
        with pytest.raises(ConfigError) as exc:
            parse_config(text)
        messages = "\n".join(exc.value.errors)
        assert "unknown key 'bogus'" in messages
        assert "line 5" in messages
        assert "delta" in messages
        assert "k must be >= 1" in messages
        assert "missing required key 'trials'" in messages

    def test_unparseable_line_reports_line_number(self):
        with pytest.raises(ConfigError) as exc:
            parse_config_text("experiment converge\n")
        assert "line 1" in exc.value.errors[0]

    def test_key_not_used_by_experiment(self):
        text = "experiment = sphere\nn = 64\ntrials = 200\neps = 1.0\n"
        with pytest.raises(ConfigError) as exc:
            parse_config(text)
        assert any("not used by experiment" in e for e in exc.value.errors)

    def test_trials_floor_per_experiment(self):
        text = "experiment = gaussianity\nn = 64\nk = 2\ntrials = 100\n"
        with pytest.raises(ConfigError) as exc:
            parse_config(text)
        assert any("trials must be >= 1000" in e for e in exc.value.errors)

    def test_condwf_coefficient_validation(self):
        text = "experiment = condwf-check\nc = 0.9,0.9\nn = 64\ntrials = 1000\n"
        with pytest.raises(ConfigError) as exc:
            parse_config(text)
        assert any("sum to 1" in e for e in exc.value.errors)


def run_text(text, **flags):
    return run_experiment(build_config(parse_config_text(text), flag_values=flags))


class TestRunExperiment:
    def test_converge_payload_shape(self):
        record = run_text(
            "experiment = converge\nk = 2\neps = 1.0\nns = 8,16,32\n"
            "trials = 100\nseed = 5\n"
        )
        points = record.payload["curve"]["points"]
        assert [p["n"] for p in points] == [8, 16, 32]
        assert all(p["trials"] == 100 for p in points)
        assert record.schema_version == "1"
        assert record.params["ns"] == [8, 16, 32]

    def test_payload_deterministic(self):
        text = (
            "experiment = converge\nk = 2\neps = 1.0\nns = 8,16\n"
            "trials = 100\nseed = 9\n"
        )
        a = run_text(text)
        b = run_text(text)
        assert canonical_json(a.payload) == canonical_json(b.payload)
        assert a.timestamp != "" and a.runtime_seconds >= 0.0

    def test_certificate_reports_threshold(self):
        record = run_text(
            "experiment = certificate\nk = 1\ndelta = 0.04\neps = 0.5\n"
            "n = 2000\ntrials = 5\nseed = 11\n"
        )
        payload = record.payload
        assert payload["n0"] == 1288
        assert payload["entry_dist_violations_in_event"] == 0
        assert payload["all_passed_in_event"]
        assert payload["constants"]["col_dist"]["1"] == 20.0

    def test_events_payload(self):
        record = run_text(
            "experiment = events\nn = 200\nk = 2\ndelta = 0.1\n"
            "trials = 200\nseed = 3\n"
        )
        payload = record.payload
        assert payload["radius"] == pytest.approx(math.sqrt(math.log(10.0)))
        assert len(payload["pair_rates"]) == 2
        assert len(payload["entry_rates"]) == 4
        assert payload["bounds"]["joint_lower"] == pytest.approx(0.2)

    def test_gap_check_with_rho_file(self, tmp_path):
        rho = make_density_matrix([0.7, 0.3])
        path = tmp_path / "rho.txt"
        save_density_matrix(rho, path, form="spectrum")
        record = run_text(
            f"experiment = gap-check\nrho = {path}\ncov_samples = 2000\n"
            "ga_samples = 2000\nks_samples = 500\nseed = 13\n"
        )
        assert record.payload["spectrum"] == [0.7, 0.3]
        assert record.payload["all_passed"]

    def test_params_echo_round_trips(self):
        # The record's params echo must rebuild into a config that reproduces
        # the payload exactly.
        text = (
            "experiment = converge\nk = 2\neps = 1.0\nns = 8,16\n"
            "trials = 100\nseed = 21\n"
        )
        record = run_text(text)
        echoed_lines = [f"experiment = {record.experiment}", f"seed = {record.seed}"]
        for key, value in record.params.items():
            if isinstance(value, list):
                echoed_lines.append(f"{key} = {','.join(str(v) for v in value)}")
            else:
                echoed_lines.append(f"{key} = {value}")
        replay = run_text("\n".join(echoed_lines) + "\n")
        assert replay.params == record.params
        assert canonical_json(replay.payload) == canonical_json(record.payload)

    def test_sphere_and_condwf(self):
        sphere = run_text(
            "experiment = sphere\nn = 256\ntrials = 2000\nseed = 15\n"
        )
        assert sphere.payload["all_passed"]
        c1 = math.sqrt(0.7)
        c2 = math.sqrt(0.3)
        condwf = run_text(
            f"experiment = condwf-check\nc = {c1!r},{c2!r}\nn = 256\n"
            "trials = 1500\nseed = 17\n"
        )
        assert condwf.payload["all_passed"]
        assert condwf.payload["c_squared"] == pytest.approx([0.7, 0.3])


class TestWriteResults:
    def _record(self):
        return run_text(
            "experiment = converge\nk = 2\neps = 1.0\nns = 8\n"
            "trials = 100\nseed = 5\n"
        )

    def test_jsonl(self, tmp_path, capsys):
        record = self._record()
        write_results(record, "jsonl")
        line = capsys.readouterr().out
        parsed = json.loads(line)
        assert parsed["experiment"] == "converge"
        assert parsed["payload"] == record.payload

    def test_csv_file(self, tmp_path):
        record = self._record()
        out = tmp_path / "curve.csv"
        write_results(record, "csv", str(out))
        content = out.read_text()
        assert content.splitlines()[0] == "n,trials,successes,p_hat,ci_low,ci_high"

    def test_text_summary(self, capsys):
        record = run_text(
            "experiment = sphere\nn = 128\ntrials = 500\nseed = 5\n"
        )
        write_results(record, "text")
        out = capsys.readouterr().out
        assert "experiment: sphere" in out
        assert "[PASS]" in out or "[FAIL]" in out


class TestMainEntry:
    def test_flags_only_run(self, capsys):
        code = main(
            [
                "converge",
                "--k", "2", "--eps", "1.0", "--ns", "8,16",
                "--trials", "100", "--seed", "3", "--format", "csv",
            ]
        )
        captured = capsys.readouterr()
        assert code == 0
        assert captured.out.splitlines()[0] == "n,trials,successes,p_hat,ci_low,ci_high"
        assert "running converge" in captured.err

    def test_config_file_with_flag_override(self, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text(CONVERGE_TEXT.replace("2000", "100").replace("16,64,256", "8"))
        out = tmp_path / "r.jsonl"
        code = main(["converge", "--config", str(cfg), "--seed", "8",
                     "--out", str(out)])
        assert code == 0
        parsed = json.loads(out.read_text())
        assert parsed["seed"] == 8

    def test_config_errors_exit_2(self, capsys):
        code = main(["events", "--n", "100", "--k", "2", "--delta", "1.5",
                     "--trials", "200"])
        assert code == 2
        assert "delta must lie in (0,1)" in capsys.readouterr().err

    def test_csv_unsupported_exits_2(self, capsys):
        code = main(["sphere", "--n", "64", "--trials", "200", "--seed", "1",
                     "--format", "csv"])
        assert code == 2
        assert "csv" in capsys.readouterr().err.lower()

    def test_strict_passing_run_exits_zero(self, capsys):
        code = main(["sphere", "--n", "128", "--trials", "500", "--seed", "2",
                     "--strict"])
        assert code == 0
        capsys.readouterr()

    def test_strict_failing_run_exits_one(self, monkeypatch, capsys):
        # Force a failing report through the dispatcher to pin the exit code.
        from haarlab import cli as cli_module

        def fake_runner(config, stream):
            return {"reports": [], "all_passed": False}

        monkeypatch.setitem(cli_module._RUNNERS, "sphere", fake_runner)
        code = main(["sphere", "--n", "128", "--trials", "500", "--seed", "2",
                     "--strict"])
        assert code == 1
        code = main(["sphere", "--n", "128", "--trials", "500", "--seed", "2"])
        assert code == 0  # without --strict statistical failure is data
        capsys.readouterr()

    def test_worker_flag_does_not_change_payload(self, tmp_path):
        outs = []
        for workers in ("1", "2"):
            out = tmp_path / f"w{workers}.jsonl"
            code = main(
                [
                    "converge", "--k", "2", "--eps", "1.0", "--ns", "8,16",
                    "--trials", "100", "--seed", "3", "--workers", workers,
                    "--out", str(out),
                ]
            )
            assert code == 0
            outs.append(json.loads(out.read_text())["payload"])
        assert canonical_json(outs[0]) == canonical_json(outs[1])
