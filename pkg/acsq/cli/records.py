"""Result records and their atomic JSON / CSV writers"""

import csv
import io
import json
import math
import os
import tempfile
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np
from loguru import logger
from pydantic import BaseModel, ConfigDict, Field


class MatrixRecord(BaseModel):
    """A complex matrix stored row-major as separate real and imaginary parts"""

    model_config = ConfigDict(extra="forbid")

    N: int
    real: List[List[float]]
    imag: List[List[float]]

    @classmethod
    def from_array(cls, entries: np.ndarray) -> "MatrixRecord":
        entries = np.asarray(entries, dtype=complex)
        return cls(N=entries.shape[0], real=entries.real.tolist(), imag=entries.imag.tolist())

    def to_array(self) -> np.ndarray:
        return np.array(self.real, dtype=float) + 1j * np.array(self.imag, dtype=float)


class ResultRecord(BaseModel):
    """
    Everything one command produced, enough to re-run it.

    Contract:
        command: the command that ran
        config: canonical config echo
        scalars: named numbers (None for divergent values)
        matrices: named operator matrices
        verdicts: named verdict strings
        reports: structured analysis reports
        tolerances: the tolerances in effect
        wall_time: seconds, the only field that varies between identical runs
        version: acsq version tag
    """

    model_config = ConfigDict(extra="forbid")

    command: str
    name: str
    config: Dict[str, Any]
    scalars: Dict[str, Optional[float]] = Field(default_factory=dict)
    matrices: Dict[str, MatrixRecord] = Field(default_factory=dict)
    verdicts: Dict[str, str] = Field(default_factory=dict)
    reports: Dict[str, Any] = Field(default_factory=dict)
    tolerances: Dict[str, Any] = Field(default_factory=dict)
    passed: Optional[bool] = None
    wall_time: float = 0.0
    version: str = ""
    provenance: Dict[str, Any] = Field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(_plain(self.model_dump()), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ResultRecord":
        return cls.model_validate(json.loads(text))


def _plain(value: Any) -> Any:
    """Python builtins only, for json"""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return _plain(value.tolist())
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (np.floating, float)):
        return float(value)
    if isinstance(value, (complex, np.complexfloating)):
        return {"real": float(value.real), "imag": float(value.imag)}
    return value


def atomic_write(path: Union[str, Path], text: str) -> Path:
    '''
    Write text to path via a temporary file in the same directory and os.replace.

    atomic_write: path: Union[str, Path], text: str -> Path

    Examples:
        atomic_write("results/run.result.json", "{}") -> Path('results/run.result.json')
    '''
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    handle, temporary = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(handle, "w", newline="") as f:
            f.write(text)
        os.replace(temporary, path)
    except BaseException:
        if os.path.exists(temporary):
            os.unlink(temporary)
        raise
    return path


def table_text(header: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(value) for value in row])
    return buffer.getvalue()


def _cell(value: Any) -> Any:
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    if isinstance(value, (np.floating, np.integer)):
        return value.item()
    return "" if value is None else value


def matrix_rows(matrices: Dict[str, MatrixRecord]) -> List[List[Any]]:
    rows = []
    for name, matrix in matrices.items():
        for m in range(matrix.N):
            for n in range(matrix.N):
                rows.append([name, m, n, matrix.real[m][n], matrix.imag[m][n]])
    return rows


def write_record(
    record: ResultRecord,
    directory: Union[str, Path],
    table: Optional[Dict[str, Any]] = None
) -> Dict[str, Path]:
    '''
    Write <name>.result.json and, when there is tabular output, <name>.table.csv.

    The table is the given series (header + rows) or, failing that, every matrix
    entry as (matrix, m, n, real, imag).

    write_record: record: ResultRecord, directory: Union[str, Path],
                  table: Optional[Dict[str, Any]] = None -> Dict[str, Path]

    Examples:
        write_record(record, "results") -> {'json': Path('results/roi.result.json'), 'csv': ...}
    '''
    directory = Path(directory)
    written = {"json": atomic_write(directory / f"{record.name}.result.json", record.to_json())}
    if table is not None:
        text = table_text(table["header"], table["rows"])
    elif record.matrices:
        text = table_text(["matrix", "m", "n", "real", "imag"], matrix_rows(record.matrices))
    else:
        text = None
    if text is not None:
        written["csv"] = atomic_write(directory / f"{record.name}.table.csv", text)
    logger.info(f"Wrote {', '.join(str(p) for p in written.values())}")
    return written
