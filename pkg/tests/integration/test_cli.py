"""End-to-end runs of the acsq command line"""

import csv
import json

import pytest
import yaml

from acsq.cli.runner import EXIT_CONFIG, EXIT_FAILED, EXIT_OK, main

BUMP = {"kind": "separable-gaussian-p", "name": "bump", "g": "exp(-(ln(q)-1)^2)"}


@pytest.fixture
def experiment_file(tmp_path):
    """Write a config mapping to YAML and return its path"""

    def write(name="experiment", **overrides):
        data = {
            "schema": 1,
            "name": name,
            "parametrizations": ["param1", "param2"],
            "fiducial": {"alpha": 2, "beta": 1},
            "basis": {"size": 8},
        }
        data.update(overrides)
        path = tmp_path / f"{name}.yaml"
        path.write_text(yaml.safe_dump(data))
        return path

    return write


def load_result(directory, name):
    return json.loads((directory / f"{name}.result.json").read_text())


@pytest.mark.integration
class TestCommands:

    def test_check_identity(self, experiment_file, tmp_path):
        """Resolution of the identity passes for both built-ins"""
        out = tmp_path / "out"
        config = experiment_file("roi", command="check-identity")
        assert main(["--config", str(config), "--out", str(out)]) == EXIT_OK

        result = load_result(out, "roi")
        assert result["passed"] is True
        assert result["verdicts"] == {"roi@param1": "pass", "roi@param2": "pass"}
        assert result["scalars"]["roi_defect@param1"] < 1e-6
        assert result["scalars"]["A"] == pytest.approx(2.0 / 3.0)
        assert (out / "roi.table.csv").exists()
        assert (out / "roi.provenance.json").exists()

    def test_compare_parametrizations(self, experiment_file, tmp_path):
        """The shifted bump is reported inequivalent"""
        out = tmp_path / "out"
        config = experiment_file("compare", command="compare-parametrizations", observables=[BUMP])
        assert main(["--config", str(config), "--out", str(out)]) == EXIT_OK

        result = load_result(out, "compare")
        assert result["verdicts"]["bump"] == "inequivalent"
        assert abs(result["scalars"]["trace_1@bump"] - result["scalars"]["trace_2@bump"]) > 1e-3

    def test_quantize_writes_matrices(self, experiment_file, tmp_path):
        """Operator matrices go to JSON and CSV"""
        out = tmp_path / "out"
        observables = [{"kind": "p-independent", "name": "q", "g": "q"}]
        config = experiment_file("ops", command="quantize", parametrizations=["param1"], observables=observables)
        assert main(["--config", str(config), "--out", str(out)]) == EXIT_OK

        result = load_result(out, "ops")
        assert result["verdicts"] == {"q@param1": "closed-form"}
        assert result["matrices"]["q@param1"]["N"] == 8
        with open(out / "ops.table.csv", newline="") as f:
            rows = list(csv.reader(f))
        assert rows[0] == ["matrix", "m", "n", "real", "imag"]
        assert len(rows) == 1 + 64

    def test_divergence_is_a_finding(self, experiment_file, tmp_path):
        """q under param2 with infinite B exits 0 with a divergent verdict"""
        out = tmp_path / "out"
        config = experiment_file(
            "weak",
            command="quantize",
            parametrizations=["param2"],
            fiducial={"alpha": 0.8, "beta": 1, "require_b": False},
            observables=[{"kind": "p-independent", "name": "q", "g": "q"}],
        )
        assert main(["--config", str(config), "--out", str(out)]) == EXIT_OK
        result = load_result(out, "weak")
        assert result["verdicts"] == {"q@param2": "divergent"}
        assert result["reports"]["q@param2"]["certificate"]["verdict"] == "divergent"

    def test_trace_table(self, experiment_file, tmp_path):
        """trace writes the partial traces as a series"""
        out = tmp_path / "out"
        config = experiment_file("trace", command="trace", parametrizations=["param1"], observables=[BUMP])
        main(["--config", str(config), "--out", str(out)])

        with open(out / "trace.table.csv", newline="") as f:
            rows = list(csv.reader(f))
        assert rows[0] == ["parametrization", "observable", "N", "partial_trace"]
        assert [row[2] for row in rows[1:]] == [str(n) for n in range(1, 9)]
        assert load_result(out, "trace")["verdicts"]["bump@param1"] in ("consistent", "inconsistent")

    def test_boundedness(self, experiment_file, tmp_path):
        """A bounded observable gets a norm check, q gets a divergent verdict"""
        out = tmp_path / "out"
        observables = [
            {"kind": "separable-gaussian-p", "name": "bump0", "g": "exp(-ln(q)^2)"},
            {"kind": "p-independent", "name": "q", "g": "q"},
        ]
        config = experiment_file("bounds", command="boundedness", parametrizations=["param1"], observables=observables)
        assert main(["--config", str(config), "--out", str(out)]) == EXIT_OK

        result = load_result(out, "bounds")
        assert result["verdicts"] == {"bump0@param1": "bounded", "q@param1": "divergent"}
        assert result["reports"]["bump0@param1"]["norm_check"]["holds"] is True

    def test_command_flag_overrides_file(self, experiment_file, tmp_path):
        """--command replaces the command in the file"""
        out = tmp_path / "out"
        config = experiment_file("override", command="quantize", observables=[BUMP])
        assert main(["--config", str(config), "--command", "compare-parametrizations", "--out", str(out)]) == EXIT_OK
        assert load_result(out, "override")["command"] == "compare-parametrizations"

    @pytest.mark.slow
    def test_commutators(self, experiment_file, tmp_path):
        """Defects at N = 16 and N = 24 both pass and shrink"""
        out = tmp_path / "out"
        config = experiment_file("comm", command="commutators", basis={"size": 16})
        assert main(["--config", str(config), "--out", str(out)]) == EXIT_OK
        scalars = load_result(out, "comm")["scalars"]
        for name in ("param1", "param2"):
            assert scalars[f"defect@{name}@16"] < 1e-4
            assert scalars[f"defect@{name}@24"] <= 1.1 * scalars[f"defect@{name}@16"] + 1e-10


@pytest.mark.integration
class TestExitCodes:

    def test_missing_config_flag(self):
        """argparse errors map to the configuration exit code"""
        assert main([]) == EXIT_CONFIG

    def test_unknown_key(self, experiment_file, tmp_path):
        """Schema violations exit 2 before any computation"""
        config = experiment_file("bad", command="check-identity", colour="red")
        assert main(["--config", str(config), "--out", str(tmp_path / "out")]) == EXIT_CONFIG
        assert not (tmp_path / "out").exists()

    def test_malformed_expression(self, experiment_file, tmp_path, capsys):
        """'q+*p' exits 2 and reports the position"""
        observables = [{"kind": "generic", "f": "q+*p"}]
        config = experiment_file("syntax", command="quantize", observables=observables)
        assert main(["--config", str(config), "--out", str(tmp_path / "out")]) == EXIT_CONFIG
        assert "position 2" in capsys.readouterr().err

    def test_missing_file(self, tmp_path):
        """A config path that does not exist exits 2"""
        assert main(["--config", str(tmp_path / "nowhere.yaml")]) == EXIT_CONFIG

    def test_failed_verdict(self, experiment_file, tmp_path):
        """An unreachable roi tolerance fails the run with exit 1"""
        config = experiment_file("strict", command="check-identity", tolerances={"roi": 1e-30})
        assert main(["--config", str(config), "--out", str(tmp_path / "out")]) == EXIT_FAILED


@pytest.mark.integration
class TestDeterminism:

    def test_identical_runs_give_identical_records(self, experiment_file, tmp_path):
        """Records differ only in wall_time"""
        config = experiment_file("det", command="compare-parametrizations", observables=[BUMP])
        first, second = tmp_path / "a", tmp_path / "b"
        assert main(["--config", str(config), "--out", str(first)]) == EXIT_OK
        assert main(["--config", str(config), "--out", str(second)]) == EXIT_OK

        a = load_result(first, "det")
        b = load_result(second, "det")
        a.pop("wall_time")
        b.pop("wall_time")
        assert a == b

    def test_matrix_tables_are_identical(self, experiment_file, tmp_path):
        """CSV output of two identical runs is byte-identical"""
        config = experiment_file("det_ops", command="quantize", observables=[BUMP])
        first, second = tmp_path / "a", tmp_path / "b"
        main(["--config", str(config), "--out", str(first)])
        main(["--config", str(config), "--out", str(second)])
        assert (first / "det_ops.table.csv").read_bytes() == (second / "det_ops.table.csv").read_bytes()
