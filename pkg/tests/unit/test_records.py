"""Tests for result records and their writers"""

import csv
import json

import numpy as np
import pytest

from acsq.cli.records import MatrixRecord, ResultRecord, atomic_write, table_text, write_record


@pytest.fixture
def record():
    return ResultRecord(
        command="check-identity",
        name="roi",
        config={"schema": 1},
        scalars={"A": 2.0 / 3.0, "trace": None},
        matrices={"roi": MatrixRecord.from_array(np.array([[1.0, 0.5j], [-0.5j, 1.0]]))},
        verdicts={"roi@param1": "converged"},
        passed=True,
        wall_time=0.25,
        version="0.1.0",
    )


@pytest.mark.unit
class TestResultRecord:

    def test_json_round_trip(self, record):
        """from_json(to_json()) restores every field"""
        restored = ResultRecord.from_json(record.to_json())
        assert restored == record
        np.testing.assert_array_equal(restored.matrices["roi"].to_array(), record.matrices["roi"].to_array())

    def test_json_is_sorted_and_plain(self, record):
        """Keys are sorted so identical runs produce identical files"""
        data = json.loads(record.to_json())
        assert list(data) == sorted(data)
        assert data["scalars"]["trace"] is None

    def test_numpy_values_become_builtins(self):
        """Reports may hold numpy scalars and complex numbers"""
        rec = ResultRecord(
            command="trace",
            name="t",
            config={},
            reports={"x": np.float64(1.5), "flag": np.bool_(True), "z": 1 + 2j, "v": np.arange(2)},
        )
        data = json.loads(rec.to_json())["reports"]
        assert data == {"x": 1.5, "flag": True, "z": {"real": 1.0, "imag": 2.0}, "v": [0, 1]}

    def test_matrix_record_shape(self):
        """Real and imaginary parts are stored row-major"""
        matrix = MatrixRecord.from_array(np.array([[1 + 1j, 2], [3, 4 - 1j]]))
        assert matrix.N == 2
        assert matrix.real == [[1.0, 2.0], [3.0, 4.0]]
        assert matrix.imag == [[1.0, 0.0], [0.0, -1.0]]


@pytest.mark.unit
class TestWriters:

    def test_atomic_write_leaves_no_temporaries(self, tmp_path):
        """Only the target file remains"""
        target = atomic_write(tmp_path / "sub" / "out.json", "{}")
        assert target.read_text() == "{}"
        assert [path.name for path in target.parent.iterdir()] == ["out.json"]

    def test_atomic_write_replaces(self, tmp_path):
        """An existing file is replaced whole"""
        atomic_write(tmp_path / "out.txt", "first")
        atomic_write(tmp_path / "out.txt", "second")
        assert (tmp_path / "out.txt").read_text() == "second"

    def test_table_cells(self):
        """Non-finite floats are spelled out and None is empty"""
        text = table_text(["a", "b", "c"], [[float("inf"), None, np.float64(0.5)]])
        assert text == "a,b,c\ninf,,0.5\n"

    def test_write_record_with_matrices(self, tmp_path, record):
        """Matrices go to the CSV entry by entry"""
        written = write_record(record, tmp_path)
        assert written["json"].name == "roi.result.json"
        with open(written["csv"], newline="") as f:
            rows = list(csv.reader(f))
        assert rows[0] == ["matrix", "m", "n", "real", "imag"]
        assert len(rows) == 1 + 4
        assert rows[2] == ["roi", "0", "1", "0.0", "0.5"]

    def test_write_record_with_table(self, tmp_path, record):
        """An explicit series replaces the matrix dump"""
        written = write_record(record, tmp_path, table={"header": ["N", "trace"], "rows": [[4, 1.0], [6, 1.5]]})
        assert written["csv"].read_text() == "N,trace\n4,1.0\n6,1.5\n"

    def test_write_record_without_table(self, tmp_path):
        """No matrices and no series means no CSV"""
        rec = ResultRecord(command="trace", name="bare", config={})
        written = write_record(rec, tmp_path)
        assert set(written) == {"json"}
        assert not (tmp_path / "bare.table.csv").exists()
