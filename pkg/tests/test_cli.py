import json
import subprocess
import sys

import pytest

from svito.cli import EXIT_PASS, EXIT_USAGE, ConfigError, ExperimentConfig, main


def run_cli(*args, cwd=None):
    return subprocess.run([sys.executable, "-m", "svito", *args], capture_output=True, text=True, cwd=cwd)


class TestConfig:
    def test_round_trip(self):
        cfg = ExperimentConfig("bsde-solve", seed=4, steps=16, problem={"driver": {"name": "linear", "b": 0.2}})
        back = ExperimentConfig.from_json(cfg.to_json())
        assert back == cfg and back.digest == cfg.digest

    def test_digest_changes_with_content(self):
        assert ExperimentConfig("isometry", seed=1).digest != ExperimentConfig("isometry", seed=2).digest

    def test_unknown_field_names_line(self):
        text = '{\n  "schema_version": 1,\n  "subcommand": "isometry",\n  "sede": 3\n}\n'
        with pytest.raises(ConfigError, match=r"cfg\.json:4: unknown field 'sede'"):
            ExperimentConfig.from_json(text, "cfg.json")

    def test_syntax_error_has_position(self):
        with pytest.raises(ConfigError, match=r"cfg\.json:2:"):
            ExperimentConfig.from_json('{\n  "schema_version": 1,,\n}', "cfg.json")

    @pytest.mark.parametrize("tol", [0, -1e-3, float("inf")])
    def test_tolerances_must_be_positive(self, tol):
        with pytest.raises(ConfigError, match="tol"):
            ExperimentConfig("bsde-solve", tolerances={"tol": tol}).validate()

    def test_schema_version_is_required(self):
        with pytest.raises(ConfigError, match="schema_version"):
            ExperimentConfig.from_json('{"subcommand": "isometry"}')
        with pytest.raises(ConfigError, match="schema_version"):
            ExperimentConfig.from_json('{"subcommand": "isometry", "schema_version": 99}')

    def test_problem_fields_are_checked(self):
        with pytest.raises(ConfigError, match="scheme"):
            ExperimentConfig("bsde-solve", problem={"scheme": "sideways"}).validate()
        with pytest.raises(ConfigError, match="driver"):
            ExperimentConfig("bsde-solve", problem={"driver": {"name": "linear", "c1": 1, "c2": 0}}).validate()
        with pytest.raises(ConfigError, match="set"):
            ExperimentConfig("isometry", problem={"set": "[2,1]"}).validate()


class TestRuns:
    def test_algebra_check_passes(self, tmp_path):
        code = main(["algebra-check", "--trials", "10000", "--seed", "1", "--out", str(tmp_path)])
        assert code == EXIT_PASS
        (run,) = tmp_path.iterdir()
        assert run.name.startswith("algebra-check-")
        assert json.loads((run / "summary.json").read_text())["verdict"] == "pass"
        assert ExperimentConfig.from_json((run / "config.json").read_text()).digest in run.name

    def test_rerun_leaves_outputs_untouched(self, tmp_path):
        args = ["algebra-check", "--trials", "500", "--out", str(tmp_path)]
        main(args)
        (run,) = tmp_path.iterdir()
        stamp = {p.name: p.stat().st_mtime_ns for p in run.iterdir()}
        main(args)
        assert [p for p in tmp_path.iterdir()] == [run]
        assert {p.name: p.stat().st_mtime_ns for p in run.iterdir()} == stamp

    def test_zero_tolerance_is_usage_error_without_output(self, tmp_path):
        cfg = tmp_path / "bad.json"
        cfg.write_text(json.dumps({"schema_version": 1, "subcommand": "bsde-solve", "tolerances": {"tol": 0}}))
        out = tmp_path / "runs"
        assert main(["bsde-solve", "--config", str(cfg), "--out", str(out)]) == EXIT_USAGE
        assert not out.exists()

    def test_bad_subcommand_and_flags(self):
        r = run_cli("transmogrify")
        assert r.returncode == EXIT_USAGE
        r = run_cli("isometry", "--paths", "many")
        assert r.returncode == EXIT_USAGE

    def test_bsde_solve_outputs(self, tmp_path):
        cfg = tmp_path / "p.json"
        cfg.write_text(json.dumps({
            "schema_version": 1, "subcommand": "bsde-solve", "steps": 16, "paths": 1500, "seed": 2,
            "problem": {"xi": {"g": "sin", "alpha": 0, "beta": 1},
                        "driver": {"name": "linear", "b": 0.25, "c2": 0.1}, "write_paths": 2},
        }))
        assert main(["bsde-solve", "--config", str(cfg), "--out", str(tmp_path / "o")]) == EXIT_PASS
        (run,) = (tmp_path / "o").iterdir()
        names = sorted(p.name for p in run.iterdir())
        assert names == ["config.json", "diagnostics.csv", "picard_report.csv", "solution.csv", "summary.json"]
        summary = json.loads((run / "summary.json").read_text())
        diag = dict(line.split(",") for line in (run / "diagnostics.csv").read_text().splitlines()[1:])
        assert summary["max_residual"] == float(diag["max_residual"])
        assert len((run / "solution.csv").read_text().splitlines()) == 1 + 2 * 17

    def test_max_iter_is_inconclusive(self, tmp_path):
        cfg = tmp_path / "p.json"
        cfg.write_text(json.dumps({
            "schema_version": 1, "subcommand": "bsde-solve", "steps": 8, "paths": 500,
            "tolerances": {"tol": 1e-14},
            "problem": {"xi": {"g": "sin", "alpha": 0, "beta": 1},
                        "driver": {"name": "linear", "a": 0.25, "b": 0.25}, "max_iter": 2},
        }))
        assert main(["bsde-solve", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 3

    def test_identical_runs_are_byte_identical(self, tmp_path):
        for d in ("a", "b"):
            assert main(["ito-verify", "--paths", "300", "--steps", "32", "--out", str(tmp_path / d)]) == EXIT_PASS
        (ra,), (rb,) = (tmp_path / "a").iterdir(), (tmp_path / "b").iterdir()
        assert ra.name == rb.name
        for p in ra.iterdir():
            assert p.read_bytes() == (rb / p.name).read_bytes()
