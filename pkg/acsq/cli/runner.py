"""
Command-line entry point: acsq --config FILE [--command NAME] [--out DIR].

Exit status: 0 when the command ran and its verdict (if any) passed, or when the
finding is a divergence; 1 for numerical failures and failed verdicts; 2 for
configuration and expression errors.
"""

import argparse
import sys
import time
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional

import numpy as np
from loguru import logger

from acsq import __version__
from acsq.analysis.boundedness import boundedness_certificate, norm_bound_check
from acsq.analysis.commutators import commutator_check
from acsq.analysis.traces import INEQUIVALENT, NOT_DISTINGUISHED, numeric_trace, trace_inequivalence_test
from acsq.cli.config import COMMANDS, RunPlan, build_plan, canonical, load_config
from acsq.cli.records import MatrixRecord, ResultRecord, write_record
from acsq.core.errors import AcsqError, ConfigError, DivergenceError, ExpressionSyntaxError
from acsq.core.experiment import experiment
from acsq.hilbert.basis import completeness_defect, make_basis
from acsq.quantizer.operators import quantize, resolution_of_identity_matrix, roi_defect

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_CONFIG = 2

# basis growth used to confirm that commutator defects shrink
COMMUTATOR_REFINEMENT = 8


@dataclass
class Outcome:
    """What a command computed, before it becomes a ResultRecord"""

    scalars: Dict[str, Optional[float]] = field(default_factory=dict)
    matrices: Dict[str, MatrixRecord] = field(default_factory=dict)
    verdicts: Dict[str, str] = field(default_factory=dict)
    reports: Dict[str, Any] = field(default_factory=dict)
    passed: Optional[bool] = None
    table: Optional[Dict[str, Any]] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "scalars": self.scalars,
            "verdicts": self.verdicts,
            "passed": self.passed,
            "matrices": sorted(self.matrices),
        }


def _label(*parts: str) -> str:
    return "@".join(parts)


def _probe(y_center: float):
    def probe(x):
        y = np.log(x)
        return np.exp(-0.5 * (y - y_center) ** 2) * np.pi ** -0.25

    return probe


@experiment(name="check-identity")
def check_identity(plan: RunPlan) -> Outcome:
    """Resolution of the identity for every parametrization, plus basis completeness"""
    outcome = Outcome()
    tolerance = plan.tolerances.roi
    passed = True
    for param in plan.parametrizations:
        op = resolution_of_identity_matrix(param, plan.fiducial, plan.basis, plan.tolerances)
        defect = roi_defect(op)
        ok = defect < tolerance
        passed = passed and ok
        outcome.scalars[_label("roi_defect", param.name)] = defect
        outcome.verdicts[_label("roi", param.name)] = "pass" if ok else "fail"
        outcome.matrices[_label("roi", param.name)] = MatrixRecord.from_array(op.entries)
    probe = _probe(0.5)
    outcome.scalars["completeness_defect"] = completeness_defect(plan.basis, [(probe, probe)])
    outcome.scalars["gram_defect"] = plan.basis.gram_defect
    outcome.scalars["A"] = plan.fiducial.A
    outcome.passed = passed
    return outcome


@experiment(name="quantize")
def quantize_observables(plan: RunPlan) -> Outcome:
    """Operator matrices of every observable under every parametrization"""
    outcome = Outcome()
    for param in plan.parametrizations:
        for f in plan.observables:
            label = _label(f.name, param.name)
            try:
                op = quantize(f, param, plan.fiducial, plan.basis, path=plan.path, tolerances=plan.tolerances)
            except DivergenceError as error:
                outcome.verdicts[label] = "divergent"
                if error.certificate is not None:
                    outcome.reports[label] = {"certificate": error.certificate.to_dict()}
                continue
            outcome.matrices[label] = MatrixRecord.from_array(op.entries)
            outcome.verdicts[label] = op.path
            outcome.scalars[_label("hermiticity_defect", label)] = op.hermiticity_defect
            outcome.reports[label] = op.to_dict(include_entries=False)
    return outcome


@experiment(name="trace")
def trace_observables(plan: RunPlan) -> Outcome:
    """Truncated traces against the phase-space trace formula"""
    outcome = Outcome()
    rows: List[List[Any]] = []
    passed = True
    for param in plan.parametrizations:
        for f in plan.observables:
            label = _label(f.name, param.name)
            try:
                op = quantize(f, param, plan.fiducial, plan.basis, path=plan.path, tolerances=plan.tolerances)
            except DivergenceError:
                outcome.verdicts[label] = "divergent"
                continue
            report = numeric_trace(op, tolerances=plan.tolerances)
            outcome.reports[label] = report.to_dict()
            outcome.scalars[_label("numeric_trace", label)] = report.numeric_trace
            outcome.scalars[_label("analytic_trace", label)] = report.analytic_trace
            if report.consistent is None:
                outcome.verdicts[label] = "not-trace-class"
            else:
                outcome.verdicts[label] = "consistent" if report.consistent else "inconsistent"
                passed = passed and report.consistent
            partial = np.cumsum(np.real(np.diag(op.entries)))
            rows.extend([param.name, f.name, n + 1, float(value)] for n, value in enumerate(partial))
    outcome.passed = passed
    outcome.table = {"header": ["parametrization", "observable", "N", "partial_trace"], "rows": rows}
    return outcome


@experiment(name="compare-parametrizations")
def compare_parametrizations(plan: RunPlan) -> Outcome:
    """Trace-based inequivalence test of param1 against param2"""
    outcome = Outcome()
    passed = True
    for f in plan.observables:
        report = trace_inequivalence_test(f, plan.fiducial, plan.tolerances)
        outcome.reports[f.name] = report.to_dict()
        outcome.verdicts[f.name] = report.verdict
        outcome.scalars[_label("trace_1", f.name)] = report.trace_1.value
        outcome.scalars[_label("trace_2", f.name)] = report.trace_2.value
        outcome.scalars[_label("difference", f.name)] = report.difference
        if report.verdict == NOT_DISTINGUISHED:
            passed = False
    outcome.passed = passed
    if any(v == INEQUIVALENT for v in outcome.verdicts.values()):
        logger.info("Traces differ between the parametrizations: the quantizations are inequivalent")
    return outcome


@experiment(name="commutators")
def commutators(plan: RunPlan) -> Outcome:
    """Affine commutation relations at N and at a refined N"""
    outcome = Outcome()
    rows: List[List[Any]] = []
    passed = True
    refined_basis = make_basis(plan.basis.size + COMMUTATOR_REFINEMENT, gram_tolerance=plan.basis.gram_tolerance)
    for param in plan.parametrizations:
        coarse = commutator_check(param, plan.fiducial, plan.basis, plan.tolerances)
        refined = commutator_check(param, plan.fiducial, refined_basis, plan.tolerances)
        shrinking = refined.defect <= 1.1 * coarse.defect + 1e-10
        ok = coarse.passed and shrinking
        passed = passed and ok
        outcome.reports[param.name] = {"coarse": coarse.to_dict(), "refined": refined.to_dict()}
        outcome.scalars[_label("defect", param.name, str(coarse.truncation_N))] = coarse.defect
        outcome.scalars[_label("defect", param.name, str(refined.truncation_N))] = refined.defect
        outcome.verdicts[param.name] = "pass" if ok else "fail"
        for report in (coarse, refined):
            rows.append([param.name, report.truncation_N, report.defect, report.defect_opposite_sign])
    outcome.passed = passed
    outcome.table = {"header": ["parametrization", "N", "defect", "defect_opposite_sign"], "rows": rows}
    return outcome


@experiment(name="boundedness")
def boundedness(plan: RunPlan) -> Outcome:
    """Boundedness certificates, with a norm check for bounded observables"""
    outcome = Outcome()
    for param in plan.parametrizations:
        for f in plan.observables:
            label = _label(f.name, param.name)
            certificate = boundedness_certificate(f, param, plan.fiducial, plan.tolerances)
            outcome.verdicts[label] = certificate.verdict
            outcome.scalars[_label("certificate", label)] = certificate.integral_value
            entry: Dict[str, Any] = {"certificate": certificate.to_dict()}
            if certificate.bounded:
                try:
                    op = quantize(f, param, plan.fiducial, plan.basis, path=plan.path, tolerances=plan.tolerances)
                    check = norm_bound_check(op, certificate)
                    entry["norm_check"] = check.to_dict()
                    if check.holds is False:
                        outcome.passed = False
                except AcsqError as error:
                    logger.warning(f"Norm check for '{label}' skipped: {error}")
                    entry["norm_check"] = {"skipped": str(error)}
            outcome.reports[label] = entry
    return outcome


COMMAND_TABLE: Dict[str, Callable] = {
    "check-identity": check_identity,
    "quantize": quantize_observables,
    "trace": trace_observables,
    "compare-parametrizations": compare_parametrizations,
    "commutators": commutators,
    "boundedness": boundedness,
}


def run(plan: RunPlan) -> ResultRecord:
    '''
    Execute the plan's command, write its record files and return the record.

    run: plan: RunPlan -> ResultRecord

    Examples:
        run(build_plan(load_config("roi.yaml"))) -> ResultRecord(command='check-identity', passed=True)
    '''
    start_time = time.time()
    result = COMMAND_TABLE[plan.command].run(plan)
    outcome: Outcome = result.result
    operations = result.provenance.to_dict()["operations"]
    record = ResultRecord(
        command=plan.command,
        name=plan.name,
        config=canonical(plan.config),
        scalars=outcome.scalars,
        matrices=outcome.matrices,
        verdicts=outcome.verdicts,
        reports=outcome.reports,
        tolerances=plan.tolerances.model_dump(),
        passed=outcome.passed,
        wall_time=time.time() - start_time,
        version=__version__,
        provenance={
            "environment": result.provenance.environment,
            "signatures": [
                {"inputs": op["inputs"], "outputs": op["outputs"]} for op in operations
            ],
        },
    )
    write_record(record, plan.output_dir, outcome.table)
    result.save_provenance(plan.output_dir / f"{plan.name}.provenance.json")
    return record


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="acsq",
        description="Affine coherent state quantization experiments",
    )
    parser.add_argument("--config", required=True, help="YAML experiment file (schema: 1)")
    parser.add_argument("--command", choices=COMMANDS, help="command to run (overrides the file)")
    parser.add_argument("--out", help="output directory (overrides output.directory)")
    parser.add_argument(
        "--seedless",
        action="store_true",
        help="reserved: the computations use no randomness",
    )
    parser.add_argument("--verbose", action="store_true", help="log per-step numerics")
    return parser


def configure_logging(verbose: bool) -> None:
    logger.remove()
    logger.add(sys.stderr, level="DEBUG" if verbose else "INFO")


def main(argv: Optional[List[str]] = None) -> int:
    '''
    Console entry point.

    main: argv: Optional[List[str]] = None -> int

    Examples:
        main(["--config", "roi.yaml"]) -> 0
        main(["--config", "bad.yaml"]) -> 2
    '''
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exit_:
        return EXIT_CONFIG if exit_.code else EXIT_OK
    configure_logging(args.verbose)

    try:
        plan = build_plan(load_config(args.config), command=args.command, out_dir=args.out)
    except (ConfigError, ExpressionSyntaxError) as error:
        logger.error(f"Configuration error: {error}")
        return EXIT_CONFIG

    try:
        record = run(plan)
    except (ConfigError, ExpressionSyntaxError) as error:
        logger.error(f"Configuration error: {error}")
        return EXIT_CONFIG
    except AcsqError as error:
        logger.error(f"{type(error).__name__}: {error}")
        return EXIT_FAILED

    if record.passed is False:
        logger.error(f"Command '{plan.command}' finished with a failed verdict: {record.verdicts}")
        return EXIT_FAILED
    logger.info(f"Command '{plan.command}' finished: {record.verdicts}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
