"""Task decorators for numerical operations with consistency checks"""

import functools
import time
from typing import Any, Callable, List, Optional

import numpy as np
from loguru import logger

from acsq.core.errors import NumericError

# basis sizes above this make the quadrature paths slow
LARGE_BASIS = 64


def _bases(args: tuple, kwargs: dict) -> List[Any]:
    found = []
    for value in list(args) + list(kwargs.values()):
        basis = getattr(value, "basis", None)
        if basis is None and hasattr(value, "gram_tolerance"):
            basis = value
        if basis is not None and hasattr(basis, "size"):
            found.append(basis)
    return found


class NumericTask:
    """
    Wrapper for a numerical operation with input checks and timing.

    Created by @numeric_task decorator. Provides:
    - basis-size consistency warnings across arguments
    - performance warnings for large truncations
    - finiteness check of array results
    """

    def __init__(
        self,
        func: Callable,
        name: Optional[str] = None,
        check_finite: bool = True,
        warn_large_basis: bool = True
    ):
        self.func = func
        self.name = name or func.__name__
        self.check_finite = check_finite
        self.warn_large_basis = warn_large_basis
        functools.update_wrapper(self, func)

    def _detect_issues(self, args: tuple, kwargs: dict) -> List[str]:
        issues = []
        bases = _bases(args, kwargs)
        sizes = sorted({basis.size for basis in bases})
        if len(sizes) > 1:
            issues.append(f"BASIS MISMATCH: arguments carry truncations {sizes}.")
        if self.warn_large_basis and sizes and sizes[-1] > LARGE_BASIS:
            issues.append(
                f"PERFORMANCE: truncation N={sizes[-1]} exceeds {LARGE_BASIS}; "
                f"quadrature paths scale with N^2 per node."
            )
        return issues

    def _check_result(self, result: Any) -> None:
        entries = getattr(result, "entries", result)
        if isinstance(entries, np.ndarray) and entries.dtype.kind in "fc":
            if not np.all(np.isfinite(entries)):
                raise NumericError(
                    f"Task '{self.name}' produced non-finite entries.\n"
                    f"Check the observable for singularities inside the fiducial support."
                )

    def __call__(self, *args, **kwargs) -> Any:
        logger.debug(f"Executing numeric task '{self.name}'")
        for issue in self._detect_issues(args, kwargs):
            logger.warning(f"[CHECK] {issue}")

        start_time = time.time()
        try:
            result = self.func(*args, **kwargs)
            if self.check_finite:
                self._check_result(result)
            execution_time = time.time() - start_time
            logger.debug(f"Task '{self.name}' completed in {execution_time:.3f}s")
            return result
        except Exception as e:
            execution_time = time.time() - start_time
            logger.error(f"Task '{self.name}' failed after {execution_time:.3f}s: {e}")
            raise


def numeric_task(
    name: Optional[str] = None,
    check_finite: bool = True,
    warn_large_basis: bool = True
):
    '''
    Decorator that times a numerical operation, warns about inconsistent or oversized
    truncations among its arguments, and rejects non-finite array results.

    numeric_task: name: Optional[str] = None, check_finite: bool = True,
                  warn_large_basis: bool = True -> Callable[[Callable], NumericTask]

    Examples:
        @numeric_task(name="quantize")
        def quantize(f, param, phi, basis): ...
        quantize(f, PARAM1, phi, make_basis(8)) -> OperatorMatrix, timing logged at debug
    '''

    def decorator(func: Callable) -> NumericTask:
        return NumericTask(func, name=name, check_finite=check_finite, warn_large_basis=warn_large_basis)

    return decorator
