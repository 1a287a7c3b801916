"""
Experiment orchestration with the @experiment decorator
"""

import functools
import time
from pathlib import Path
from typing import Any, Callable, Dict, Optional, Union

from loguru import logger

from acsq.core.provenance import ProvenanceTracker


class ExperimentResult:
    """
    Produces an experiment execution with provenance metadata.

    Contract:
        result: The actual return value of the experiment
        provenance: ProvenanceTracker with execution details
        experiment_name: Name of the experiment
    """

    def __init__(self, result: Any, provenance: ProvenanceTracker, experiment_name: str):
        self.result = result
        self.provenance = provenance
        self.experiment_name = experiment_name

    def save_provenance(self, filepath: Union[str, Path]) -> None:
        '''
        Save provenance metadata to a JSON file.

        save_provenance: filepath: Union[str, Path] -> None

        Examples:
            result.save_provenance("trace.provenance.json") -> Saves provenance to JSON file
        '''
        self.provenance.save(filepath)
        logger.info(f"Saved provenance for '{self.experiment_name}' to {filepath}")

    def get_summary(self) -> Dict[str, Any]:
        return self.provenance.get_summary()

    def __repr__(self) -> str:
        summary = self.provenance.get_summary()
        elapsed = summary["total_execution_time"] or 0.0
        return (
            f"ExperimentResult(experiment='{self.experiment_name}', "
            f"operations={summary['total_operations']}, "
            f"time={elapsed:.2f}s)"
        )


class Experiment:
    """
    Wrapper for an experiment function with provenance tracking.

    Created by @experiment decorator. Calling it runs the function directly;
    .run() tracks inputs, outputs, timing and failures.
    """

    def __init__(
        self,
        func: Callable,
        name: Optional[str] = None,
        description: Optional[str] = None
    ):
        self.func = func
        self.name = name or func.__name__
        self.description = description or func.__doc__
        functools.update_wrapper(self, func)

    def __call__(self, *args, **kwargs) -> Any:
        logger.debug(f"Executing experiment '{self.name}' (no provenance tracking)")
        return self.func(*args, **kwargs)

    def run(self, *args, **kwargs) -> ExperimentResult:
        """
        Execute the experiment WITH provenance tracking.

        Returns:
            ExperimentResult containing both the result and provenance metadata
        """
        logger.info(f"Starting experiment '{self.name}'")
        tracker = ProvenanceTracker(self.name)
        record = tracker.start_operation(
            self.name,
            operation_type="experiment",
            parameters={k: str(v) for k, v in kwargs.items()},
        )
        for i, arg in enumerate(args):
            record.add_input(f"arg_{i}", arg)
        for key, value in kwargs.items():
            record.add_input(key, value)

        start_time = time.time()
        try:
            result = self.func(*args, **kwargs)
            execution_time = time.time() - start_time
            record.add_output("result", result)
            tracker.complete_operation(record, execution_time)
            tracker.finalize()
            logger.info(f"Experiment '{self.name}' completed in {execution_time:.2f}s")
        except Exception as e:
            execution_time = time.time() - start_time
            tracker.record_error(record, e)
            tracker.complete_operation(record, execution_time)
            tracker.finalize()
            logger.error(f"Experiment '{self.name}' failed after {execution_time:.2f}s: {e}")
            raise

        return ExperimentResult(result, tracker, self.name)


def experiment(name: Optional[str] = None, description: Optional[str] = None):
    '''
    Decorator that turns a function into a tracked experiment. Call it directly for
    the bare result, or use .run() to also capture inputs, outputs, timing and the
    numerical environment.

    experiment: name: Optional[str] = None, description: Optional[str] = None
                -> Callable[[Callable], Experiment]

    Examples:
        @experiment(name="trace")
        def trace_run(plan):
            return compare_traces(plan)
        trace_run.run(plan) -> ExperimentResult with provenance metadata
    '''

    def decorator(func: Callable) -> Experiment:
        return Experiment(func, name=name, description=description)

    return decorator
