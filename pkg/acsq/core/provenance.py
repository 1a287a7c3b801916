"""Provenance tracking for reproducible numerical experiments"""

import datetime
import hashlib
import json
import platform
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

import numpy as np
from loguru import logger


def _canonical(value: Any) -> Any:
    """JSON-ready view of a value, used for signatures and records"""
    if isinstance(value, np.ndarray):
        return {"shape": list(value.shape), "dtype": str(value.dtype)}
    for attribute in ("to_dict", "describe", "model_dump"):
        method = getattr(value, attribute, None)
        if callable(method):
            try:
                return method()
            except TypeError:
                continue
    if isinstance(value, (str, int, float, bool)) or value is None:
        return value
    if isinstance(value, Path):
        return str(value)
    return repr(value)


def array_of(value: Any) -> Optional[np.ndarray]:
    """The numerical payload of matrices, states and plain arrays"""
    if isinstance(value, np.ndarray):
        return value
    for attribute in ("entries", "coefficients"):
        payload = getattr(value, attribute, None)
        if isinstance(payload, np.ndarray):
            return payload
    return None


def compute_signature(value: Any) -> str:
    '''
    Short md5 signature of a value: array bytes for numerical payloads,
    canonical JSON for everything else.

    compute_signature: value: Any -> str

    Examples:
        compute_signature(np.eye(2)) -> 'c0b5...' (16 hex digits)
        compute_signature({"N": 8}) == compute_signature({"N": 8}) -> True
    '''
    payload = array_of(value)
    if payload is not None:
        data = np.ascontiguousarray(payload)
        digest = hashlib.md5(str(data.shape).encode() + str(data.dtype).encode() + data.tobytes())
        return digest.hexdigest()[:16]
    text = json.dumps(_canonical(value), sort_keys=True, default=repr)
    return hashlib.md5(text.encode()).hexdigest()[:16]


class ProvenanceRecord:
    """
    One step of an experiment: its name, keyword parameters, the md5
    signatures of what went in and came out, and how long it took.
    """

    def __init__(
        self,
        operation_name: str,
        operation_type: str = "task",
        parameters: Optional[Dict[str, Any]] = None
    ):
        self.operation_name = operation_name
        self.operation_type = operation_type
        self.parameters = parameters or {}
        self.timestamp = datetime.datetime.now(datetime.timezone.utc)
        self.inputs: List[Dict[str, Any]] = []
        self.outputs: List[Dict[str, Any]] = []
        self.execution_time: Optional[float] = None
        self.error: Optional[str] = None

    def _describe(self, name: str, value: Any) -> Dict[str, Any]:
        record: Dict[str, Any] = {
            "name": name,
            "type": type(value).__name__,
            "signature": compute_signature(value),
        }
        payload = array_of(value)
        if payload is not None:
            record["shape"] = list(payload.shape)
        elif isinstance(value, (str, Path, int, float, bool)):
            record["value"] = str(value) if isinstance(value, Path) else value
        return record

    def add_input(self, name: str, value: Any) -> None:
        """Describe an argument by type, signature and shape or value"""
        self.inputs.append(self._describe(name, value))

    def add_output(self, name: str, value: Any) -> None:
        """Describe a return value the same way as an input"""
        self.outputs.append(self._describe(name, value))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "operation_name": self.operation_name,
            "operation_type": self.operation_type,
            "parameters": self.parameters,
            "timestamp": self.timestamp.isoformat(),
            "inputs": self.inputs,
            "outputs": self.outputs,
            "execution_time": self.execution_time,
            "error": self.error,
        }


class ProvenanceTracker:
    """
    Provenance of one experiment run.

    Holds the ordered operation records and the library versions the numbers
    depend on, so a result file can be traced back to its environment.
    """

    def __init__(self, experiment_name: str):
        self.experiment_name = experiment_name
        self.records: List[ProvenanceRecord] = []
        self.start_time = datetime.datetime.now(datetime.timezone.utc)
        self.end_time: Optional[datetime.datetime] = None
        self.environment = self._capture_environment()

    def _capture_environment(self) -> Dict[str, Any]:
        import pydantic
        import scipy

        from acsq import __version__

        return {
            "acsq_version": __version__,
            "python_version": platform.python_version(),
            "platform": platform.platform(),
            "numpy_version": np.__version__,
            "scipy_version": scipy.__version__,
            "pydantic_version": pydantic.VERSION,
        }

    def start_operation(
        self,
        operation_name: str,
        operation_type: str = "task",
        parameters: Optional[Dict[str, Any]] = None
    ) -> ProvenanceRecord:
        """Open a record for the next step"""
        record = ProvenanceRecord(operation_name, operation_type, parameters)
        self.records.append(record)
        logger.debug(f"Started tracking operation: {operation_name}")
        return record

    def complete_operation(self, record: ProvenanceRecord, execution_time: float) -> None:
        record.execution_time = execution_time
        logger.debug(f"Completed operation: {record.operation_name} ({execution_time:.3f}s)")

    def record_error(self, record: ProvenanceRecord, error: Exception) -> None:
        record.error = f"{type(error).__name__}: {error}"
        logger.error(f"Error in operation {record.operation_name}: {error}")

    def finalize(self) -> None:
        self.end_time = datetime.datetime.now(datetime.timezone.utc)
        total_time = (self.end_time - self.start_time).total_seconds()
        logger.debug(f"Experiment '{self.experiment_name}' tracked for {total_time:.2f}s")

    @property
    def total_time(self) -> Optional[float]:
        if self.end_time is None:
            return None
        return (self.end_time - self.start_time).total_seconds()

    def to_dict(self) -> Dict[str, Any]:
        return {
            "experiment_name": self.experiment_name,
            "start_time": self.start_time.isoformat(),
            "end_time": self.end_time.isoformat() if self.end_time else None,
            "total_execution_time": self.total_time,
            "environment": self.environment,
            "operations": [record.to_dict() for record in self.records],
        }

    def save(self, filepath: Union[str, Path]) -> None:
        """Write the tracker as indented JSON"""
        filepath = Path(filepath)
        with open(filepath, "w") as f:
            json.dump(self.to_dict(), f, indent=2)
        logger.info(f"Saved provenance to {filepath}")

    @classmethod
    def load(cls, filepath: Union[str, Path]) -> "ProvenanceTracker":
        """Load provenance from JSON file (operations are kept as plain dictionaries)"""
        filepath = Path(filepath)
        with open(filepath, "r") as f:
            data = json.load(f)
        tracker = cls(data["experiment_name"])
        tracker.start_time = datetime.datetime.fromisoformat(data["start_time"])
        if data["end_time"]:
            tracker.end_time = datetime.datetime.fromisoformat(data["end_time"])
        tracker.environment = data["environment"]
        for entry in data.get("operations", []):
            record = ProvenanceRecord(entry["operation_name"], entry["operation_type"], entry["parameters"])
            record.inputs = entry["inputs"]
            record.outputs = entry["outputs"]
            record.execution_time = entry["execution_time"]
            record.error = entry["error"]
            tracker.records.append(record)
        logger.info(f"Loaded provenance from {filepath}")
        return tracker

    def get_summary(self) -> Dict[str, Any]:
        return {
            "experiment_name": self.experiment_name,
            "total_operations": len(self.records),
            "failed_operations": sum(1 for r in self.records if r.error),
            "total_execution_time": self.total_time,
            "operations": [
                {
                    "name": r.operation_name,
                    "type": r.operation_type,
                    "time": r.execution_time,
                    "status": "failed" if r.error else "success",
                }
                for r in self.records
            ],
        }
