"""
Log-Hermite basis of L2(R+, dx/x) and the state vectors expanded in it.

The basis functions are e_n(x) = h_n(ln x), with h_n the orthonormal Hermite
functions on the real line.
"""

import math
from dataclasses import dataclass
from typing import Callable, Iterable, Optional, Sequence, Tuple, Union

import numpy as np
from loguru import logger

from acsq.core.errors import AccuracyError, BasisMismatchError, DomainError, NumericError
from acsq.core.settings import DEFAULT_TOLERANCES
from acsq.hilbert.quadrature import QuadratureGrid

_PI_QUARTER = math.pi ** -0.25

# y-window of the standard probe grid; covers the fiducial family for beta in [0.05, 20]
STANDARD_WINDOW = (-40.0, 12.0)

_standard_grid: Optional[QuadratureGrid] = None


def standard_grid() -> QuadratureGrid:
    """Adaptive panel grid on STANDARD_WINDOW used for function-level integrals"""
    global _standard_grid
    if _standard_grid is None:
        _standard_grid = QuadratureGrid.adaptive_panel(
            *STANDARD_WINDOW, frequency=0.0, nodes_per_panel=12, max_width=0.25
        )
    return _standard_grid


def _recurrence(n: int, y: np.ndarray, seed: np.ndarray) -> np.ndarray:
    y = np.asarray(y, dtype=float)
    out = np.empty((n,) + y.shape)
    if n == 0:
        return out
    out[0] = seed
    if n > 1:
        out[1] = math.sqrt(2.0) * y * out[0]
    for k in range(1, n - 1):
        out[k + 1] = math.sqrt(2.0 / (k + 1)) * y * out[k] - math.sqrt(k / (k + 1)) * out[k - 1]
    return out


def hermite_functions(n: int, y: Union[float, np.ndarray]) -> np.ndarray:
    '''
    Orthonormal Hermite functions h_0 ... h_{n-1} evaluated at y.

    hermite_functions: n: int, y: array -> np.ndarray of shape (n,) + y.shape

    Examples:
        hermite_functions(1, 0.0) -> [pi^(-1/4)]
        hermite_functions(3, np.linspace(-1, 1, 5)).shape -> (3, 5)
    '''
    y = np.asarray(y, dtype=float)
    with np.errstate(under="ignore"):
        seed = _PI_QUARTER * np.exp(-0.5 * y * y)
    return _recurrence(n, y, seed)


def hermite_polynomials(n: int, y: Union[float, np.ndarray]) -> np.ndarray:
    """Polynomial parts P_k(y) = h_k(y) e^{y^2/2}"""
    y = np.asarray(y, dtype=float)
    return _recurrence(n, y, np.full(y.shape, _PI_QUARTER))


def hermite_derivative_matrix(n: int) -> np.ndarray:
    '''
    Exact matrix L with h_k' = sum_j L[j, k] h_j, shape (n + 1, n).

    hermite_derivative_matrix: n: int -> np.ndarray

    Examples:
        hermite_derivative_matrix(2) -> [[0, 0.7071], [-0.7071, 0], [0, -1.0]]
    '''
    matrix = np.zeros((n + 1, n))
    for k in range(n):
        if k > 0:
            matrix[k - 1, k] = math.sqrt(k / 2.0)
        matrix[k + 1, k] = -math.sqrt((k + 1) / 2.0)
    return matrix


def exponential_moments(n: int, k: float, extra: int = 0) -> np.ndarray:
    '''
    Exact matrix E[m, j] = int h_m(y) h_j(y) e^{-k y} dy for m < n + extra, j < n.

    Shifting y = z - k/2 turns the integrand into a polynomial times e^{-z^2},
    which Gauss-Hermite integrates exactly.

    exponential_moments: n: int, k: float, extra: int = 0 -> np.ndarray

    Examples:
        exponential_moments(4, 0.0) -> identity(4)
        exponential_moments(1, 2.0) -> [[e]]
    '''
    rows = n + extra
    z, w = np.polynomial.hermite.hermgauss(rows + 1)
    shifted = z - 0.5 * k
    poly = hermite_polynomials(rows, shifted)
    scale = math.exp(0.25 * k * k)
    return scale * (poly * w[None, :]) @ poly[:n].T


@dataclass(frozen=True, eq=False)
class BasisSet:
    """
    The first N log-Hermite functions with the grid their Gram matrix was checked on.

    Contract:
        size: number of basis functions N
        grid: quadrature grid of the Gram check
        gram_tolerance: accepted |G - I| entrywise
        gram_defect: achieved max |G - I|
    """

    size: int
    grid: QuadratureGrid
    gram_tolerance: float
    gram_defect: float

    def functions(self, x: Union[float, np.ndarray]) -> np.ndarray:
        """e_n(x) for n < N, shape (N,) + x.shape"""
        x = np.asarray(x, dtype=float)
        if np.any(x <= 0):
            raise DomainError("Basis functions are defined only for x > 0")
        return hermite_functions(self.size, np.log(x))

    def log_functions(self, y: Union[float, np.ndarray]) -> np.ndarray:
        """e_n evaluated at x = e^y"""
        return hermite_functions(self.size, y)

    def gram(self, grid: Optional[QuadratureGrid] = None) -> np.ndarray:
        grid = grid or self.grid
        values = self.log_functions(grid.log_nodes)
        return (values * grid.weights[None, :]) @ values.T

    def compatible(self, other: "BasisSet") -> bool:
        return isinstance(other, BasisSet) and other.size == self.size

    def __repr__(self) -> str:
        return (
            f"BasisSet(size={self.size}, grid={self.grid.kind}:{self.grid.order}, "
            f"gram_defect={self.gram_defect:.2e})"
        )


def make_basis(
    size: int,
    grid_order: Optional[int] = None,
    gram_tolerance: float = DEFAULT_TOLERANCES.gram
) -> BasisSet:
    '''
    Build the N-function log-Hermite basis and verify its Gram matrix.

    make_basis: size: int, grid_order: Optional[int] = None,
                gram_tolerance: float = 1e-10 -> BasisSet

    Examples:
        make_basis(8, 64) -> BasisSet(size=8, grid=gauss-in-log:64, gram_defect=1e-15)
        make_basis(8, 4) -> Raises AccuracyError (grid too coarse)
    '''
    if size < 1:
        raise DomainError(f"Basis size must be at least 1, got {size}")
    if grid_order is None:
        grid_order = max(2 * size, 32)
    if grid_order < 2 * size:
        logger.warning(
            f"grid_order={grid_order} is below 2N={2 * size}; Gram accuracy is not guaranteed"
        )
    grid = QuadratureGrid.gauss_in_log(grid_order)
    values = hermite_functions(size, grid.log_nodes)
    gram = (values * grid.weights[None, :]) @ values.T
    defect = float(np.max(np.abs(gram - np.eye(size))))
    if not defect <= gram_tolerance:
        raise AccuracyError(
            f"Gram matrix of the {size}-function basis deviates by {defect:.3e} "
            f"on a grid of order {grid.order}.\n"
            f"Increase grid_order (at least {2 * size}) or relax gram_tolerance.",
            achieved=defect,
            tolerance=gram_tolerance,
        )
    logger.debug(f"Built basis N={size} on grid order {grid.order}, Gram defect {defect:.2e}")
    return BasisSet(size=size, grid=grid, gram_tolerance=gram_tolerance, gram_defect=defect)


def _frozen_complex(values) -> np.ndarray:
    array = np.array(values, dtype=complex)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class StateVector:
    """
    A vector of the Hilbert space given by its coefficients in a BasisSet.

    Contract:
        coefficients: length-N complex vector
        basis: the BasisSet the coefficients refer to
    """

    coefficients: np.ndarray
    basis: BasisSet

    def __post_init__(self):
        coefficients = _frozen_complex(self.coefficients)
        if coefficients.shape != (self.basis.size,):
            raise BasisMismatchError(
                f"Expected {self.basis.size} coefficients, got shape {coefficients.shape}"
            )
        if not np.all(np.isfinite(coefficients)):
            raise NumericError("State vector coefficients must be finite")
        object.__setattr__(self, "coefficients", coefficients)

    @classmethod
    def from_function(
        cls,
        basis: BasisSet,
        fn: Callable[[np.ndarray], np.ndarray],
        grid: Optional[QuadratureGrid] = None
    ) -> "StateVector":
        '''
        Project a function of x onto the basis: c_n = <e_n|fn>.

        from_function: basis: BasisSet, fn: Callable, grid: Optional[QuadratureGrid] = None
                       -> StateVector

        Examples:
            StateVector.from_function(basis, lambda x: basis.functions(x)[2]) -> coefficients e_2
        '''
        grid = grid or standard_grid()
        samples = _sample(fn, grid)
        values = basis.log_functions(grid.log_nodes)
        return cls(values @ (grid.weights * samples), basis)

    @classmethod
    def unit(cls, basis: BasisSet, index: int) -> "StateVector":
        """The basis vector e_index"""
        if not 0 <= index < basis.size:
            raise DomainError(f"Basis index {index} outside 0..{basis.size - 1}")
        coefficients = np.zeros(basis.size, dtype=complex)
        coefficients[index] = 1.0
        return cls(coefficients, basis)

    def evaluate(self, x: Union[float, np.ndarray]) -> np.ndarray:
        """psi(x) = sum_n c_n e_n(x)"""
        return np.tensordot(self.coefficients, self.basis.functions(x), axes=(0, 0))

    def norm(self) -> float:
        return float(np.linalg.norm(self.coefficients))

    def conjugate(self) -> "StateVector":
        # the basis functions are real
        return StateVector(np.conj(self.coefficients), self.basis)

    def __repr__(self) -> str:
        return f"StateVector(N={self.basis.size}, norm={self.norm():.6g})"


Vector = Union[StateVector, Callable[[np.ndarray], np.ndarray]]


def _sample(fn: Callable[[np.ndarray], np.ndarray], grid: QuadratureGrid) -> np.ndarray:
    with np.errstate(under="ignore"):
        samples = np.asarray(fn(grid.nodes), dtype=complex)
    samples = np.broadcast_to(samples, grid.nodes.shape)
    if not np.all(np.isfinite(samples)):
        bad = int(np.sum(~np.isfinite(samples)))
        raise NumericError(
            f"{bad} non-finite samples while integrating on {grid.kind} grid of order {grid.order}"
        )
    return samples


def inner_product(a: Vector, b: Vector, grid: Optional[QuadratureGrid] = None) -> complex:
    '''
    <a|b> = int dnu(x) conj(a(x)) b(x) for state vectors or functions of x.

    Two state vectors are paired in coefficient space; anything else is sampled
    on the grid (the standard adaptive grid when none is given).

    inner_product: a: StateVector | Callable, b: StateVector | Callable,
                   grid: Optional[QuadratureGrid] = None -> complex

    Examples:
        inner_product(StateVector.unit(basis, 2), StateVector.unit(basis, 2)) -> (1+0j)
        inner_product(fiducial, fiducial) -> (1+0j)
    '''
    if isinstance(a, StateVector) and isinstance(b, StateVector):
        if not a.basis.compatible(b.basis):
            raise BasisMismatchError(
                f"Cannot pair states of bases with N={a.basis.size} and N={b.basis.size}"
            )
        return complex(np.vdot(a.coefficients, b.coefficients))
    grid = grid or standard_grid()
    fa = a.evaluate if isinstance(a, StateVector) else a
    fb = b.evaluate if isinstance(b, StateVector) else b
    values = np.conj(_sample(fa, grid)) * _sample(fb, grid)
    return complex(np.dot(values, grid.weights))


def completeness_defect(
    basis: BasisSet,
    probe_pairs: Iterable[Tuple[Vector, Vector]],
    grid: Optional[QuadratureGrid] = None
) -> float:
    '''
    Largest gap between direct inner products and their truncated Parseval sums.

    completeness_defect: basis: BasisSet, probe_pairs: Iterable[Tuple[f, g]],
                         grid: Optional[QuadratureGrid] = None -> float

    Examples:
        completeness_defect(basis, [(e0, e0), (e0, e1)]) -> 1e-16
    '''
    grid = grid or standard_grid()
    defect = 0.0
    for first, second in probe_pairs:
        direct = inner_product(first, second, grid)
        ca = _coefficients(basis, first, grid)
        cb = _coefficients(basis, second, grid)
        defect = max(defect, abs(direct - np.vdot(ca, cb)))
    return float(defect)


def _coefficients(basis: BasisSet, vector: Vector, grid: QuadratureGrid) -> np.ndarray:
    if isinstance(vector, StateVector):
        if not basis.compatible(vector.basis):
            raise BasisMismatchError("Probe state lives in a different basis")
        return vector.coefficients
    return StateVector.from_function(basis, vector, grid).coefficients


def gram_stability(size: int, orders: Sequence[int] = (32, 64)) -> float:
    """Change in the Gram matrix between two grid orders"""
    grams = []
    for order in orders:
        grid = QuadratureGrid.gauss_in_log(order)
        values = hermite_functions(size, grid.log_nodes)
        grams.append((values * grid.weights[None, :]) @ values.T)
    return float(np.max(np.abs(grams[-1] - grams[0])))
