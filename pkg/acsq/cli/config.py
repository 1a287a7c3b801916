"""
Experiment configuration: YAML file -> validated ExperimentConfig -> RunPlan.

Example (schema 1):

    schema: 1
    name: traces
    command: compare-parametrizations
    parametrizations: [param1, param2]
    fiducial: {alpha: 2, beta: 1}
    basis: {size: 12}
    observables:
      - kind: separable-gaussian-p
        amplitude: 1.0
        center: 0.0
        width: 1.0
        g: exp(-(ln(q)-1)^2)
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Union

import yaml
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from acsq.core.errors import (
    AcsqError,
    AdmissibilityError,
    ConfigError,
    DegenerateParametrizationError,
    DomainError,
)
from acsq.core.settings import Tolerances
from acsq.fiducial.vectors import FiducialVector, load_profile, make_fiducial
from acsq.group.affine import BUILTIN_PARAMETRIZATIONS, Parametrization, get_parametrization
from acsq.hilbert.basis import BasisSet, make_basis
from acsq.quantizer.observables import (
    GENERIC,
    LINEAR_IN_P,
    P_INDEPENDENT,
    SEPARABLE_GAUSSIAN_P,
    Observable,
)
from acsq.quantizer.paths import PATHS
from acsq.cli.expressions import parse_expression

COMMANDS = (
    "check-identity",
    "quantize",
    "trace",
    "compare-parametrizations",
    "commutators",
    "boundedness",
)
SCHEMA_VERSION = 1


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class CustomParametrizationSpec(_Strict):
    name: str
    xi: str
    eta: str


class FiducialSpec(_Strict):
    alpha: Optional[float] = None
    beta: Optional[float] = None
    profile: Optional[str] = None
    require_b: bool = True

    @model_validator(mode="after")
    def _one_source(self) -> "FiducialSpec":
        family = self.alpha is not None or self.beta is not None
        if family and self.profile is not None:
            raise ValueError("give either alpha/beta or profile, not both")
        if not family and self.profile is None:
            raise ValueError("give alpha and beta, or a profile path")
        if family and (self.alpha is None or self.beta is None):
            raise ValueError("alpha and beta must be given together")
        return self


class BasisSpec(_Strict):
    size: int = Field(8, ge=1)
    grid_order: Optional[int] = Field(None, ge=2)


class ObservableSpec(_Strict):
    kind: Literal["p-independent", "linear-in-p", "separable-gaussian-p", "generic"]
    name: Optional[str] = None
    g: Optional[str] = None
    g0: Optional[str] = None
    g1: Optional[str] = None
    f: Optional[str] = None
    amplitude: float = 1.0
    center: float = 0.0
    width: float = Field(1.0, gt=0)

    @model_validator(mode="after")
    def _pieces(self) -> "ObservableSpec":
        required = {
            P_INDEPENDENT: ("g",),
            LINEAR_IN_P: ("g1",),
            SEPARABLE_GAUSSIAN_P: ("g",),
            GENERIC: ("f",),
        }[self.kind]
        allowed = {
            P_INDEPENDENT: {"g"},
            LINEAR_IN_P: {"g0", "g1"},
            SEPARABLE_GAUSSIAN_P: {"g"},
            GENERIC: {"f"},
        }[self.kind]
        for piece in required:
            if getattr(self, piece) is None:
                raise ValueError(f"kind '{self.kind}' needs the expression '{piece}'")
        for piece in ("g", "g0", "g1", "f"):
            if getattr(self, piece) is not None and piece not in allowed:
                raise ValueError(f"kind '{self.kind}' does not take the expression '{piece}'")
        return self


class OutputSpec(_Strict):
    directory: str = "results"
    name: Optional[str] = None


class ExperimentConfig(_Strict):
    """
    The validated content of an experiment file.

    Unknown keys are rejected at every level; tolerance overrides are checked
    against the Tolerances model.
    """

    schema_version: Literal[1] = Field(alias="schema")
    name: Optional[str] = None
    command: Optional[str] = None
    parametrizations: List[Union[str, CustomParametrizationSpec]] = Field(
        default_factory=lambda: ["param1"]
    )
    fiducial: FiducialSpec
    basis: BasisSpec = Field(default_factory=BasisSpec)
    observables: List[ObservableSpec] = Field(default_factory=list)
    path: Optional[str] = None
    tolerances: Dict[str, Any] = Field(default_factory=dict)
    output: OutputSpec = Field(default_factory=OutputSpec)

    model_config = ConfigDict(extra="forbid", frozen=True, populate_by_name=True)

    @model_validator(mode="after")
    def _known(self) -> "ExperimentConfig":
        if self.command is not None and self.command not in COMMANDS:
            raise ValueError(f"unknown command '{self.command}'; expected one of {COMMANDS}")
        if self.path is not None and self.path not in PATHS:
            raise ValueError(f"unknown path '{self.path}'; expected one of {PATHS}")
        for spec in self.parametrizations:
            if isinstance(spec, str) and spec not in BUILTIN_PARAMETRIZATIONS:
                raise ValueError(
                    f"unknown parametrization '{spec}'; built-ins are "
                    f"{sorted(BUILTIN_PARAMETRIZATIONS)}, or give name/xi/eta"
                )
        try:
            Tolerances(**self.tolerances)
        except ValidationError as error:
            item = error.errors()[0]
            raise ValueError(f"tolerances.{_field_path(item['loc'])}: {item['msg']}") from None
        return self


def canonical(config: ExperimentConfig) -> Dict[str, Any]:
    '''
    Canonical JSON-ready form of a config; validating it again gives the same form.

    canonical: config: ExperimentConfig -> Dict[str, Any]

    Examples:
        canonical(ExperimentConfig.model_validate(canonical(config))) == canonical(config) -> True
    '''
    return config.model_dump(mode="json", by_alias=True)


def _field_path(loc) -> str:
    return ".".join(str(part) for part in loc) or "<root>"


def validate_config(data: Any, source: str = "<config>") -> ExperimentConfig:
    '''
    Validate a parsed configuration mapping.

    validate_config: data: Any, source: str = "<config>" -> ExperimentConfig

    Examples:
        validate_config({"schema": 1, "fiducial": {"alpha": 2, "beta": 1}}) -> ExperimentConfig
        validate_config({"schema": 1, "fiducial": {...}, "colour": "red"}) -> Raises ConfigError at 'colour'
    '''
    if not isinstance(data, dict):
        raise ConfigError(f"{source}: expected a mapping at the top level", field="<root>")
    if "schema" not in data:
        raise ConfigError(
            f"{source}: missing 'schema' field.\nAdd 'schema: {SCHEMA_VERSION}' at the top of the file.",
            field="schema",
        )
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as error:
        first = error.errors()[0]
        where = _field_path(first["loc"])
        lines = [f"{source}: invalid configuration"]
        for item in error.errors():
            lines.append(f"  {_field_path(item['loc'])}: {item['msg']}")
        raise ConfigError("\n".join(lines), field=where) from None


def load_config(path: Union[str, Path]) -> ExperimentConfig:
    '''
    Read and validate a YAML experiment file.

    load_config: path: Union[str, Path] -> ExperimentConfig

    Examples:
        load_config("experiments/roi.yaml") -> ExperimentConfig(command='check-identity', ...)
        load_config("missing.yaml") -> Raises ConfigError
    '''
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as error:
        raise ConfigError(f"Cannot read config file {path}: {error}", field="<file>") from None
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as error:
        mark = getattr(error, "problem_mark", None)
        where = f" at line {mark.line + 1}, column {mark.column + 1}" if mark is not None else ""
        raise ConfigError(f"{path}: YAML syntax error{where}: {error}", field="<yaml>") from None
    config = validate_config(data, source=str(path))
    logger.debug(f"Loaded config {path}: command={config.command}")
    return config


@dataclass(frozen=True)
class RunPlan:
    """Everything a command needs, built from a validated config"""

    config: ExperimentConfig
    command: str
    name: str
    parametrizations: List[Parametrization]
    fiducial: FiducialVector
    basis: BasisSet
    observables: List[Observable]
    tolerances: Tolerances
    path: Optional[str]
    output_dir: Path

    def to_dict(self) -> Dict[str, Any]:
        return {"command": self.command, "config": canonical(self.config)}


def _parametrization(spec, index: int, tolerances: Tolerances) -> Parametrization:
    if isinstance(spec, str):
        return get_parametrization(spec)
    xi = parse_expression(spec.xi)
    eta = parse_expression(spec.eta)
    try:
        return Parametrization(
            spec.name,
            xi=xi,
            eta=eta,
            expressions={"xi": spec.xi, "eta": spec.eta},
            tolerances=tolerances,
        )
    except (DegenerateParametrizationError, DomainError) as error:
        raise ConfigError(
            f"parametrizations.{index}: '{spec.name}' is not a valid chart of the group.\n{error}",
            field=f"parametrizations.{index}",
        ) from None


def build_observable(spec: ObservableSpec) -> Observable:
    '''
    Observable of the declared kind from its expressions.

    build_observable: spec: ObservableSpec -> Observable

    Examples:
        build_observable(ObservableSpec(kind="p-independent", g="q"))(3.0, 2.0) -> 2.0
        build_observable(ObservableSpec(kind="p-independent", g="p*q")) -> Raises ExpressionSyntaxError
    '''
    q_only = ("q",)
    if spec.kind == P_INDEPENDENT:
        g = parse_expression(spec.g, q_only)
        return Observable.p_independent(g.of_q(), name=spec.name or spec.g, source={"g": spec.g})
    if spec.kind == LINEAR_IN_P:
        g1 = parse_expression(spec.g1, q_only)
        g0 = parse_expression(spec.g0, q_only) if spec.g0 is not None else None
        source = {"g1": spec.g1}
        if spec.g0 is not None:
            source["g0"] = spec.g0
        return Observable.linear_in_p(
            g1.of_q(),
            g0.of_q() if g0 is not None else None,
            name=spec.name or f"p*({spec.g1})" + (f"+{spec.g0}" if spec.g0 else ""),
            source=source,
        )
    if spec.kind == SEPARABLE_GAUSSIAN_P:
        g = parse_expression(spec.g, q_only)
        return Observable.separable_gaussian(
            spec.amplitude,
            spec.center,
            spec.width,
            g.of_q(),
            name=spec.name or f"gauss(p)*{spec.g}",
            source={"g": spec.g},
        )
    f = parse_expression(spec.f)
    return Observable.generic(lambda p, q: f(p, q), name=spec.name or spec.f, source={"f": spec.f})


def _fiducial(spec: FiducialSpec, tolerances: Tolerances) -> FiducialVector:
    try:
        if spec.profile is not None:
            return load_profile(spec.profile)
        return make_fiducial(spec.alpha, spec.beta, require_b=spec.require_b, tolerances=tolerances)
    except (DomainError, AdmissibilityError) as error:
        raise ConfigError(f"fiducial: {error}", field="fiducial") from None


def build_plan(config: ExperimentConfig, command: Optional[str] = None, out_dir: Optional[str] = None) -> RunPlan:
    '''
    Turn a validated config into concrete objects; the command flag overrides the file.

    build_plan: config: ExperimentConfig, command: Optional[str] = None,
                out_dir: Optional[str] = None -> RunPlan

    Examples:
        build_plan(load_config("roi.yaml")) -> RunPlan(command='check-identity', ...)
        build_plan(config_without_command) -> Raises ConfigError
    '''
    chosen = command or config.command
    if chosen is None:
        raise ConfigError("No command given: set 'command' in the file or pass --command", field="command")
    if chosen not in COMMANDS:
        raise ConfigError(f"Unknown command '{chosen}'; expected one of {COMMANDS}", field="command")
    tolerances = Tolerances(**config.tolerances)
    params = [_parametrization(spec, i, tolerances) for i, spec in enumerate(config.parametrizations)]
    fiducial = _fiducial(config.fiducial, tolerances)
    try:
        basis = make_basis(config.basis.size, config.basis.grid_order, tolerances.gram)
    except AcsqError as error:
        raise ConfigError(f"basis: {error}", field="basis") from None
    observables = [build_observable(spec) for spec in config.observables]
    name = config.output.name or config.name or chosen
    directory = Path(out_dir) if out_dir is not None else Path(config.output.directory)
    return RunPlan(
        config=config,
        command=chosen,
        name=name,
        parametrizations=params,
        fiducial=fiducial,
        basis=basis,
        observables=observables,
        tolerances=tolerances,
        path=config.path,
        output_dir=directory,
    )
