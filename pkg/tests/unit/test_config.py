"""Tests for experiment configuration files and run plans"""

import textwrap

import pytest

from acsq.cli.config import (
    ExperimentConfig,
    ObservableSpec,
    build_observable,
    build_plan,
    canonical,
    load_config,
    validate_config,
)
from acsq.core.errors import ConfigError, ExpressionSyntaxError
from acsq.quantizer.observables import LINEAR_IN_P, SEPARABLE_GAUSSIAN_P

TRACE_CONFIG = """\
schema: 1
name: traces
command: compare-parametrizations
parametrizations: [param1, param2]
fiducial: {alpha: 2, beta: 1}
basis: {size: 6}
observables:
  - kind: separable-gaussian-p
    g: exp(-(ln(q)-1)^2)
"""


@pytest.fixture
def write_yaml(tmp_path):
    def write(text, name="experiment.yaml"):
        path = tmp_path / name
        path.write_text(textwrap.dedent(text))
        return path

    return write


def minimal(**extra):
    data = {"schema": 1, "fiducial": {"alpha": 2, "beta": 1}}
    data.update(extra)
    return data


@pytest.mark.unit
class TestLoading:

    def test_valid_file(self, write_yaml):
        """A complete file validates and keeps its values"""
        config = load_config(write_yaml(TRACE_CONFIG))
        assert config.command == "compare-parametrizations"
        assert config.basis.size == 6
        assert config.parametrizations == ["param1", "param2"]
        assert config.observables[0].kind == SEPARABLE_GAUSSIAN_P

    def test_missing_file(self, tmp_path):
        """Unreadable files are reported as such"""
        with pytest.raises(ConfigError) as excinfo:
            load_config(tmp_path / "missing.yaml")
        assert excinfo.value.field == "<file>"

    def test_yaml_syntax_error(self, write_yaml):
        """Broken YAML names its line"""
        with pytest.raises(ConfigError, match="line") as excinfo:
            load_config(write_yaml("schema: 1\nfiducial: {alpha: 2\n"))
        assert excinfo.value.field == "<yaml>"

    def test_missing_schema(self):
        """The schema version is mandatory"""
        with pytest.raises(ConfigError) as excinfo:
            validate_config({"fiducial": {"alpha": 2, "beta": 1}})
        assert excinfo.value.field == "schema"

    def test_unknown_key(self):
        """Unknown keys are rejected with their path"""
        with pytest.raises(ConfigError) as excinfo:
            validate_config(minimal(colour="red"))
        assert excinfo.value.field == "colour"

    def test_nested_unknown_key(self):
        """Unknown nested keys carry the full path"""
        with pytest.raises(ConfigError) as excinfo:
            validate_config(minimal(basis={"size": 4, "order": 8}))
        assert excinfo.value.field == "basis.order"

    def test_fiducial_needs_one_source(self):
        """alpha/beta and a profile are mutually exclusive"""
        with pytest.raises(ConfigError) as excinfo:
            validate_config({"schema": 1, "fiducial": {"alpha": 2, "beta": 1, "profile": "phi.txt"}})
        assert excinfo.value.field == "fiducial"

    def test_unknown_command(self):
        """Commands outside the table are refused"""
        with pytest.raises(ConfigError, match="unknown command"):
            validate_config(minimal(command="plot"))

    def test_unknown_parametrization(self):
        """Built-in names are checked"""
        with pytest.raises(ConfigError, match="param3"):
            validate_config(minimal(parametrizations=["param3"]))

    def test_bad_tolerance(self):
        """Tolerance overrides go through the Tolerances model"""
        with pytest.raises(ConfigError, match="tolerances.roi"):
            validate_config(minimal(tolerances={"roi": -1.0}))

    def test_observable_pieces_checked(self):
        """A p-independent observable needs g and takes nothing else"""
        with pytest.raises(ConfigError, match="needs the expression 'g'"):
            validate_config(minimal(observables=[{"kind": "p-independent", "f": "q"}]))

    def test_canonical_is_stable(self, write_yaml):
        """Validating the canonical form gives the canonical form back"""
        config = load_config(write_yaml(TRACE_CONFIG))
        again = ExperimentConfig.model_validate(canonical(config))
        assert canonical(again) == canonical(config)
        assert canonical(config)["schema"] == 1


@pytest.mark.unit
class TestObservables:

    def test_p_independent(self):
        """g is a function of q only"""
        f = build_observable(ObservableSpec(kind="p-independent", g="q"))
        assert float(f(3.0, 2.0)) == pytest.approx(2.0)

    def test_p_in_a_q_piece(self):
        """p inside g is a syntax error"""
        with pytest.raises(ExpressionSyntaxError):
            build_observable(ObservableSpec(kind="p-independent", g="p*q"))

    def test_linear_in_p(self):
        """p g1 + g0"""
        f = build_observable(ObservableSpec(kind="linear-in-p", g1="q", g0="1"))
        assert f.kind == LINEAR_IN_P
        assert float(f(2.0, 3.0)) == pytest.approx(7.0)
        assert f.name == "p*(q)+1"

    def test_separable(self):
        """The Gaussian profile keeps its parameters"""
        f = build_observable(
            ObservableSpec(kind="separable-gaussian-p", g="1", amplitude=2.0, center=1.0, width=0.5)
        )
        assert float(f(1.0, 5.0)) == pytest.approx(2.0)
        assert f.p_profile.width == 0.5

    def test_generic(self):
        """Generic observables use both variables"""
        f = build_observable(ObservableSpec(kind="generic", f="exp(-p^2)/q", name="g"))
        assert f.name == "g"
        assert float(f(0.0, 4.0)) == pytest.approx(0.25)


@pytest.mark.unit
class TestRunPlan:

    def test_plan_from_file(self, write_yaml):
        """Names, objects and the output directory are resolved"""
        plan = build_plan(load_config(write_yaml(TRACE_CONFIG)), out_dir="out")
        assert plan.command == "compare-parametrizations"
        assert plan.name == "traces"
        assert [param.name for param in plan.parametrizations] == ["param1", "param2"]
        assert plan.basis.size == 6
        assert plan.fiducial.A == pytest.approx(2.0 / 3.0)
        assert str(plan.output_dir) == "out"

    def test_command_flag_overrides(self, write_yaml):
        """--command wins over the file"""
        plan = build_plan(load_config(write_yaml(TRACE_CONFIG)), command="trace")
        assert plan.command == "trace"
        assert plan.to_dict()["command"] == "trace"

    def test_no_command(self):
        """A command must come from somewhere"""
        with pytest.raises(ConfigError) as excinfo:
            build_plan(validate_config(minimal()))
        assert excinfo.value.field == "command"

    def test_inadmissible_fiducial(self):
        """alpha <= 1/2 is a configuration error"""
        config = validate_config({"schema": 1, "command": "check-identity", "fiducial": {"alpha": 0.4, "beta": 1}})
        with pytest.raises(ConfigError) as excinfo:
            build_plan(config)
        assert excinfo.value.field == "fiducial"

    def test_degenerate_custom_chart(self):
        """A custom chart with constant eta is rejected with its index"""
        config = validate_config(
            minimal(command="check-identity", parametrizations=[{"name": "flat", "xi": "p", "eta": "1"}])
        )
        with pytest.raises(ConfigError) as excinfo:
            build_plan(config)
        assert excinfo.value.field == "parametrizations.0"

    def test_custom_chart(self):
        """A valid custom chart keeps its expressions"""
        config = validate_config(
            minimal(command="check-identity", parametrizations=[{"name": "scaled", "xi": "p*q", "eta": "q"}])
        )
        plan = build_plan(config)
        assert plan.parametrizations[0].describe()["expressions"] == {"xi": "p*q", "eta": "q"}
