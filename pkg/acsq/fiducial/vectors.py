"""Fiducial vectors, their normalization and the admissibility constants A and B"""

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, Optional, Tuple, Union

import numpy as np
from loguru import logger
from scipy import special, stats
from scipy.interpolate import CubicSpline

from acsq.core.errors import AdmissibilityError, ConfigError, DomainError
from acsq.core.settings import DEFAULT_TOLERANCES, Tolerances
from acsq.hilbert.quadrature import NestedIntegral, QuadratureGrid, half_line_integral


@dataclass(frozen=True, eq=False)
class FiducialVector:
    """
    A normalized fiducial vector Phi with its cached moments.

    Contract:
        evaluate: x -> Phi(x), vectorized
        A: int dx x^-2 |Phi|^2 (finite for admissible vectors)
        B: int dx x^-3 |Phi|^2 (inf when divergent and not demanded)
        family_params: (alpha, beta) for the x^alpha e^(-beta x) family, else None
        tag: label for records
        support: (u_min, u_max) holding all but a negligible part of |Phi|^2 dnu
        real: whether Phi is real-valued
    """

    evaluate: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    A: float
    B: float
    family_params: Optional[Tuple[float, float]]
    tag: str
    support: Tuple[float, float]
    real: bool = True

    def __call__(self, x) -> np.ndarray:
        return self.evaluate(np.asarray(x, dtype=float))

    @property
    def alpha(self) -> Optional[float]:
        return self.family_params[0] if self.family_params else None

    @property
    def beta(self) -> Optional[float]:
        return self.family_params[1] if self.family_params else None

    def moment(self, k: float) -> float:
        '''
        M_k = int du u^(k-2) |Phi(u)|^2; M_0 = A, M_1 = 1, M_-1 = B.

        Closed form for the (alpha, beta) family, nested quadrature otherwise.

        moment: k: float -> float

        Examples:
            make_fiducial(2, 1).moment(0) -> 0.6667
            make_fiducial(2, 1).moment(-3) -> inf
        '''
        if self.family_params is not None:
            return family_moment(*self.family_params, k)
        result = moment_integral(self, k)
        return result.values[-1] if result.converged else math.inf

    def normalized(self) -> "FiducialVector":
        """Rescale so that <Phi|Phi> = 1 on the support window"""
        norm = moment_integral(self, 1.0).values[-1]
        if not norm > 0:
            raise AdmissibilityError("Fiducial vector has zero norm", constant="norm")
        scale = 1.0 / math.sqrt(norm)
        base = self.evaluate
        return FiducialVector(
            evaluate=lambda x: scale * base(x),
            A=self.A * scale ** 2,
            B=self.B * scale ** 2,
            family_params=self.family_params,
            tag=self.tag,
            support=self.support,
            real=self.real,
        )

    def describe(self) -> Dict[str, Any]:
        description: Dict[str, Any] = {"tag": self.tag, "A": self.A, "B": self.B}
        if self.family_params:
            description["alpha"], description["beta"] = self.family_params
        return description


def _log_norm(alpha: float, beta: float) -> float:
    return 0.5 * (2 * alpha * math.log(2 * beta) - special.gammaln(2 * alpha))


def family_moment(alpha: float, beta: float, k: float) -> float:
    '''
    Closed form N^2 Gamma(2 alpha + k - 1) / (2 beta)^(2 alpha + k - 1).

    family_moment: alpha: float, beta: float, k: float -> float

    Examples:
        family_moment(2, 1, 0) -> 0.6667
        family_moment(3, 2, 0) -> 0.8
        family_moment(1, 1, -1) -> inf
    '''
    s = 2 * alpha + k - 1
    if s <= 0:
        return math.inf
    return math.exp(2 * _log_norm(alpha, beta) + special.gammaln(s) - s * math.log(2 * beta))


def family_support(alpha: float, beta: float, tail: float = DEFAULT_TOLERANCES.support) -> Tuple[float, float]:
    """Window of |Phi|^2 dnu, a Gamma(2 alpha, 1/(2 beta)) density, up to the tail mass"""
    dist = stats.gamma(a=2 * alpha, scale=1.0 / (2 * beta))
    return float(dist.ppf(tail)), float(dist.isf(tail))


def make_fiducial(
    alpha: float,
    beta: float,
    require_b: bool = True,
    check: bool = True,
    tolerances: Tolerances = DEFAULT_TOLERANCES
) -> FiducialVector:
    '''
    Normalized Phi(x) = N x^alpha e^(-beta x) with closed-form A and B.

    A = 2 beta / (2 alpha - 1) is finite for alpha > 1/2 and
    B = 4 beta^2 / ((2 alpha - 1)(2 alpha - 2)) for alpha > 1.

    make_fiducial: alpha: float, beta: float, require_b: bool = True,
                   check: bool = True -> FiducialVector

    Examples:
        make_fiducial(2, 1) -> FiducialVector(A=0.6667, B=0.6667)
        make_fiducial(0.4, 1) -> Raises AdmissibilityError (A divergent)
        make_fiducial(0.8, 1, require_b=False) -> FiducialVector(A=3.3333, B=inf)
    '''
    if not beta > 0 or not math.isfinite(beta):
        raise DomainError(f"Fiducial beta must be positive and finite, got {beta}")
    if not math.isfinite(alpha) or alpha <= 0:
        raise DomainError(f"Fiducial alpha must be positive and finite, got {alpha}")
    if check and alpha <= 0.5:
        raise AdmissibilityError(
            f"alpha={alpha} makes A = int dx x^-2 |Phi|^2 diverge at x = 0.\n"
            f"Admissible fiducial vectors need alpha > 1/2.",
            constant="A",
        )
    if check and alpha <= 1 and require_b:
        raise AdmissibilityError(
            f"alpha={alpha} makes B = int dx x^-3 |Phi|^2 diverge at x = 0.\n"
            f"Use alpha > 1, or pass require_b=False when B is not needed.",
            constant="B",
        )
    log_norm = _log_norm(alpha, beta)

    def evaluate(x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore", under="ignore"):
            values = np.exp(log_norm + alpha * np.log(x) - beta * x)
        return np.where(x > 0, values, 0.0)

    phi = FiducialVector(
        evaluate=evaluate,
        A=family_moment(alpha, beta, 0),
        B=family_moment(alpha, beta, -1),
        family_params=(float(alpha), float(beta)),
        tag=f"alpha={alpha:g},beta={beta:g}",
        support=family_support(alpha, beta, tolerances.support),
    )
    logger.debug(f"Fiducial {phi.tag}: A={phi.A:.6g}, B={phi.B:.6g}")
    return phi


def moment_integral(phi: FiducialVector, k: float, nestings: int = 2) -> NestedIntegral:
    '''
    Nested-domain quadrature of int dx x^(k-2) |Phi(x)|^2.

    moment_integral: phi: FiducialVector, k: float -> NestedIntegral

    Examples:
        moment_integral(make_fiducial(2, 1), 0).values[-1] -> 0.6667
    '''
    lo, hi = phi.support
    return half_line_integral(
        lambda x: x ** (k - 2) * np.abs(phi(x)) ** 2,
        lo,
        hi,
        nestings=nestings,
        growth=DEFAULT_TOLERANCES.divergence_growth,
    )


def load_profile(path: Union[str, Path], tag: Optional[str] = None) -> FiducialVector:
    '''
    Tabulated real profile from two-column text (x, Phi(x)), spline-interpolated in ln x.

    The profile vanishes outside the table, is normalized, and must be admissible.

    load_profile: path: Union[str, Path], tag: Optional[str] = None -> FiducialVector

    Examples:
        load_profile("phi.txt") -> FiducialVector(tag='phi.txt', A=..., B=...)
        load_profile("bad.txt") -> Raises ConfigError (non-increasing x column)
    '''
    path = Path(path)
    try:
        table = np.loadtxt(path, ndmin=2)
    except (OSError, ValueError) as e:
        raise ConfigError(f"Cannot read fiducial profile {path}: {e}", field="fiducial.profile") from e
    if table.shape[1] != 2 or table.shape[0] < 4:
        raise ConfigError(
            f"Fiducial profile {path} must have two columns and at least 4 rows, "
            f"got shape {table.shape}",
            field="fiducial.profile",
        )
    x, values = table[:, 0], table[:, 1]
    if not (np.all(x > 0) and np.all(np.diff(x) > 0)):
        raise ConfigError(
            f"Fiducial profile {path}: the x column must be positive and strictly increasing",
            field="fiducial.profile",
        )
    spline = CubicSpline(np.log(x), values)
    y_lo, y_hi = math.log(x[0]), math.log(x[-1])

    def evaluate(u: np.ndarray) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        with np.errstate(divide="ignore"):
            y = np.log(np.where(u > 0, u, 1.0))
        inside = (u > 0) & (y >= y_lo) & (y <= y_hi)
        return np.where(inside, spline(np.clip(y, y_lo, y_hi)), 0.0)

    raw = FiducialVector(
        evaluate=evaluate,
        A=math.nan,
        B=math.nan,
        family_params=None,
        tag=tag or path.name,
        support=(float(x[0]), float(x[-1])),
    )
    phi = raw.normalized()
    report = admissibility_report(phi)
    if report.a_verdict != "converged":
        raise AdmissibilityError(f"Profile {path} has a divergent A constant", constant="A")
    phi = FiducialVector(
        evaluate=phi.evaluate,
        A=report.A,
        B=report.B if report.b_verdict == "converged" else math.inf,
        family_params=None,
        tag=phi.tag,
        support=phi.support,
    )
    logger.info(f"Loaded fiducial profile {path} ({len(x)} rows): A={phi.A:.6g}, B={phi.B:.6g}")
    return phi


@dataclass(frozen=True)
class AdmissibilityReport:
    """
    Quadrature values of the norm and of A, B with their nested-domain verdicts.

    Verdicts are 'converged', 'divergent' or 'inconclusive'.
    """

    norm: float
    A: float
    B: float
    norm_verdict: str
    a_verdict: str
    b_verdict: str
    grid_norm: Optional[float] = None

    @property
    def admissible(self) -> bool:
        return self.a_verdict == "converged" and abs(self.norm - 1.0) < 1e-8

    def to_dict(self) -> Dict[str, Any]:
        return {
            "norm": self.norm,
            "A": self.A,
            "B": self.B,
            "verdicts": {"norm": self.norm_verdict, "A": self.a_verdict, "B": self.b_verdict},
            "grid_norm": self.grid_norm,
            "admissible": self.admissible,
        }


def admissibility_report(
    phi: FiducialVector,
    quad: Optional[QuadratureGrid] = None
) -> AdmissibilityReport:
    '''
    Check normalization and the finiteness of A and B on nested domains.

    Divergence is reported through the verdicts, never raised. When a grid is
    given the norm is also evaluated on it as a second-resolution check.

    admissibility_report: phi: FiducialVector, quad: Optional[QuadratureGrid] = None
                          -> AdmissibilityReport

    Examples:
        admissibility_report(make_fiducial(2, 1)) -> norm 1.0, A 0.6667, B 0.6667, all converged
        admissibility_report(make_fiducial(0.4, 1, check=False)) -> a_verdict 'divergent'
        admissibility_report(make_fiducial(1.0, 1, require_b=False)) -> b_verdict 'divergent'
    '''
    results = {k: moment_integral(phi, k) for k in (1.0, 0.0, -1.0)}
    grid_norm = None
    if quad is not None:
        grid_norm = float(np.dot(np.abs(phi(quad.nodes)) ** 2, quad.weights))
    report = AdmissibilityReport(
        norm=results[1.0].values[-1],
        A=results[0.0].values[-1],
        B=results[-1.0].values[-1],
        norm_verdict=results[1.0].verdict,
        a_verdict=results[0.0].verdict,
        b_verdict=results[-1.0].verdict,
        grid_norm=grid_norm,
    )
    for name, verdict in (("A", report.a_verdict), ("B", report.b_verdict)):
        if verdict != "converged":
            logger.warning(f"Fiducial {phi.tag}: constant {name} is {verdict}")
    return report
