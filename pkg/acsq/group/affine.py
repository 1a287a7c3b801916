"""
Affine group of the real line with pluggable phase-space parametrizations.

A parametrization chi(p, q) = (xi, eta) identifies the half plane
{(p, q): q > 0} with group elements (xi, eta), eta > 0, whose product is
(xi1, eta1) . (xi2, eta2) = (eta1 xi2 + xi1, eta1 eta2).
"""

import math
from dataclasses import dataclass
from typing import Callable, Dict, Optional, Tuple

import numpy as np
from loguru import logger

from acsq.core.errors import DegenerateParametrizationError, DomainError
from acsq.core.settings import DEFAULT_TOLERANCES, Tolerances
from acsq.hilbert.quadrature import half_plane_integral, require_converged

ArrayFn = Callable[[np.ndarray, np.ndarray], np.ndarray]

# validation sample: 10 x 10 grid on p in [-5, 5], q in [0.1, 10]
SAMPLE_P = np.linspace(-5.0, 5.0, 10)
SAMPLE_Q = np.linspace(0.1, 10.0, 10)


@dataclass(frozen=True)
class PhasePoint:
    """
    A point (p, q) of the half-plane phase space.

    Contract:
        p: finite momentum-like coordinate
        q: finite positive position-like coordinate
    """

    p: float
    q: float

    def __post_init__(self):
        p, q = float(self.p), float(self.q)
        if not (math.isfinite(p) and math.isfinite(q)):
            raise DomainError(f"Phase point coordinates must be finite, got ({p}, {q})")
        if q <= 0:
            raise DomainError(
                f"Phase point q must be positive, got q={q}.\n"
                f"The phase space is the half plane R x R+."
            )
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)

    def as_tuple(self) -> Tuple[float, float]:
        return (self.p, self.q)


@dataclass(frozen=True)
class Reduction:
    """
    Structure of a parametrization with eta = eta(q) and xi = a(q) p + b(q).

    Such parametrizations admit the analytic p-integral in the quantizer.
    """

    slope: Callable[[np.ndarray], np.ndarray]
    offset: Callable[[np.ndarray], np.ndarray]


class Parametrization:
    """
    A one-to-one map chi(p, q) = (xi, eta) of the half plane onto the affine group.

    Contract:
        name: identifier used in records
        xi, eta: vectorized callables of (p, q)
        jacobian: analytic d(xi, eta)/d(p, q) determinant, central differences when None
        inverse: analytic (xi, eta) -> (p, q), Newton iteration in (p, ln q) when None
    """

    def __init__(
        self,
        name: str,
        xi: ArrayFn,
        eta: ArrayFn,
        jacobian: Optional[ArrayFn] = None,
        inverse: Optional[Callable[[np.ndarray, np.ndarray], Tuple[np.ndarray, np.ndarray]]] = None,
        reduction: Optional[Reduction] = None,
        expressions: Optional[Dict[str, str]] = None,
        tolerances: Tolerances = DEFAULT_TOLERANCES,
        validate: bool = True
    ):
        self.name = name
        self._xi = xi
        self._eta = eta
        self._jacobian = jacobian
        self._inverse = inverse
        self._reduction = reduction
        self.expressions = dict(expressions or {})
        self.tolerances = tolerances
        self._reduction_checked = reduction is not None
        if validate:
            self.validate()

    # coordinates
    def to_group(self, p, q) -> Tuple[np.ndarray, np.ndarray]:
        """Group coordinates (xi, eta) of phase points (p, q)"""
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
        if np.any(q <= 0):
            raise DomainError(f"Parametrization '{self.name}' evaluated at non-positive q")
        with np.errstate(all="ignore"):
            xi = np.broadcast_to(np.asarray(self._xi(p, q), dtype=float), np.broadcast(p, q).shape)
            eta = np.broadcast_to(np.asarray(self._eta(p, q), dtype=float), xi.shape)
        if not (np.all(np.isfinite(xi)) and np.all(np.isfinite(eta)) and np.all(eta > 0)):
            raise DomainError(
                f"Parametrization '{self.name}' left the group: eta must be finite and positive.\n"
                f"Check the eta expression on the requested phase points."
            )
        return xi, eta

    def from_group(self, xi, eta) -> Tuple[np.ndarray, np.ndarray]:
        """Phase points (p, q) of group elements (xi, eta)"""
        xi = np.asarray(xi, dtype=float)
        eta = np.asarray(eta, dtype=float)
        if np.any(eta <= 0) or not np.all(np.isfinite(xi)):
            raise DomainError("Group elements need finite xi and positive eta")
        if self._inverse is not None:
            with np.errstate(all="ignore"):
                p, q = self._inverse(xi, eta)
            p = np.broadcast_to(np.asarray(p, dtype=float), np.broadcast(xi, eta).shape)
            q = np.broadcast_to(np.asarray(q, dtype=float), p.shape)
            if not (np.all(np.isfinite(p)) and np.all(q > 0)):
                raise DomainError(
                    f"Inverse of '{self.name}' is undefined at the requested group elements"
                )
            return p, q
        return self._newton_inverse(xi, eta)

    def _newton_inverse(self, xi: np.ndarray, eta: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        shape = np.broadcast(xi, eta).shape
        target_xi = np.broadcast_to(xi, shape).ravel()
        target_s = np.log(np.broadcast_to(eta, shape)).ravel()
        p = target_xi.copy()
        s = target_s.copy()
        self._seed_from_sample(target_xi, target_s, p, s)

        def residual(pv, sv):
            with np.errstate(all="ignore"):
                fx = np.asarray(self._xi(pv, np.exp(sv)), dtype=float) - target_xi
                fe = np.log(np.asarray(self._eta(pv, np.exp(sv)), dtype=float)) - target_s
            return np.broadcast_to(fx, pv.shape), np.broadcast_to(fe, pv.shape)

        tol = self.tolerances.inverse * 1e-3
        rx, re = residual(p, s)
        for _ in range(60):
            size = np.maximum(np.abs(rx) / np.maximum(1.0, np.abs(target_xi)), np.abs(re))
            if np.all(size <= tol):
                break
            hp = 1e-7 * np.maximum(1.0, np.abs(p))
            hs = 1e-7 * np.maximum(1.0, np.abs(s))
            xp1, ep1 = residual(p + hp, s)
            xp0, ep0 = residual(p - hp, s)
            xs1, es1 = residual(p, s + hs)
            xs0, es0 = residual(p, s - hs)
            a11, a21 = (xp1 - xp0) / (2 * hp), (ep1 - ep0) / (2 * hp)
            a12, a22 = (xs1 - xs0) / (2 * hs), (es1 - es0) / (2 * hs)
            det = a11 * a22 - a12 * a21
            with np.errstate(all="ignore"):
                dp = (a22 * rx - a12 * re) / det
                ds = (a11 * re - a21 * rx) / det
            dp = np.where(np.isfinite(dp), dp, 0.0)
            ds = np.where(np.isfinite(ds), ds, 0.0)
            step = np.ones_like(p)
            for _ in range(12):
                cand_p, cand_s = p - step * dp, s - step * ds
                nx, ne = residual(cand_p, cand_s)
                new_size = np.hypot(nx / np.maximum(1.0, np.abs(target_xi)), ne)
                worse = ~(new_size <= np.hypot(rx / np.maximum(1.0, np.abs(target_xi)), re))
                if not np.any(worse & (size > tol)):
                    break
                step = np.where(worse, 0.5 * step, step)
            p, s = p - step * dp, s - step * ds
            rx, re = residual(p, s)
        size = np.maximum(np.abs(rx) / np.maximum(1.0, np.abs(target_xi)), np.abs(re))
        if not np.all(size <= self.tolerances.inverse):
            raise DomainError(
                f"Numeric inverse of '{self.name}' did not converge "
                f"(worst residual {float(np.nanmax(size)):.2e}).\n"
                f"Supply an analytic inverse or restrict the group elements."
            )
        return p.reshape(shape), np.exp(s).reshape(shape)

    def _seed_from_sample(self, target_xi, target_s, p, s) -> None:
        # coarse search over (p, ln q) for starting points
        gp, gs = np.meshgrid(np.linspace(-20, 20, 41), np.linspace(-12, 12, 49), indexing="ij")
        gp, gs = gp.ravel(), gs.ravel()
        with np.errstate(all="ignore"):
            gx = np.broadcast_to(np.asarray(self._xi(gp, np.exp(gs)), dtype=float), gp.shape)
            ge = np.log(np.broadcast_to(np.asarray(self._eta(gp, np.exp(gs)), dtype=float), gp.shape))
        valid = np.isfinite(gx) & np.isfinite(ge)
        gp, gs, gx, ge = gp[valid], gs[valid], gx[valid], ge[valid]
        if gp.size == 0:
            return
        for start in range(0, target_xi.size, 512):
            stop = min(start + 512, target_xi.size)
            dist = (gx[None, :] - target_xi[start:stop, None]) ** 2 + (
                ge[None, :] - target_s[start:stop, None]
            ) ** 2
            best = np.argmin(dist, axis=1)
            p[start:stop] = gp[best]
            s[start:stop] = gs[best]

    def jacobian(self, p, q) -> np.ndarray:
        '''
        Determinant d(xi, eta)/d(p, q).

        Central differences with step 1e-6 max(1, |coordinate|) when no analytic
        Jacobian was supplied.

        jacobian: p: array, q: array -> np.ndarray

        Examples:
            PARAM2.jacobian(0.0, 2.0) -> -0.25
        '''
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
        if self._jacobian is not None:
            return np.broadcast_to(
                np.asarray(self._jacobian(p, q), dtype=float), np.broadcast(p, q).shape
            )
        hp = 1e-6 * np.maximum(1.0, np.abs(p))
        hq = np.minimum(1e-6 * np.maximum(1.0, np.abs(q)), 0.5 * q)
        xp1, ep1 = self.to_group(p + hp, q)
        xp0, ep0 = self.to_group(p - hp, q)
        xq1, eq1 = self.to_group(p, q + hq)
        xq0, eq0 = self.to_group(p, q - hq)
        dxi_dp, deta_dp = (xp1 - xp0) / (2 * hp), (ep1 - ep0) / (2 * hp)
        dxi_dq, deta_dq = (xq1 - xq0) / (2 * hq), (eq1 - eq0) / (2 * hq)
        return dxi_dp * deta_dq - dxi_dq * deta_dp

    def sigma(self, p, q) -> np.ndarray:
        """Invariant measure density eta^-2 |jacobian|"""
        _, eta = self.to_group(p, q)
        return np.abs(self.jacobian(p, q)) / (eta * eta)

    def validate(self) -> None:
        '''
        Check positivity, one-to-one-ness and the inverse on the validation sample.

        validate: -> None

        Examples:
            Parametrization("flat", lambda p, q: p, lambda p, q: 1 + 0 * q) -> Raises DegenerateParametrizationError
        '''
        p, q = np.meshgrid(SAMPLE_P, SAMPLE_Q, indexing="ij")
        xi, eta = self.to_group(p, q)
        jac = self.jacobian(p, q)
        if not np.all(np.abs(jac) >= self.tolerances.jacobian_floor):
            worst = float(np.min(np.abs(jac)))
            raise DegenerateParametrizationError(
                f"Parametrization '{self.name}' has a vanishing Jacobian ({worst:.2e}) "
                f"on the validation sample.\n"
                f"chi must be one-to-one; check that xi and eta depend on p and q independently."
            )
        try:
            p_back, q_back = self.from_group(xi, eta)
        except DomainError as e:
            raise DegenerateParametrizationError(
                f"Parametrization '{self.name}' cannot be inverted on the validation sample: {e}"
            ) from e
        error = np.maximum(
            np.abs(p_back - p) / np.maximum(1.0, np.abs(p)),
            np.abs(q_back - q) / np.maximum(1.0, q),
        )
        if not np.all(error <= self.tolerances.inverse):
            raise DegenerateParametrizationError(
                f"Inverse of '{self.name}' misses the validation sample by {float(np.max(error)):.2e}"
            )
        logger.debug(f"Validated parametrization '{self.name}'")

    def reduction(self) -> Optional[Reduction]:
        '''
        Reduction structure when eta depends on q alone and xi is affine in p.

        reduction: -> Optional[Reduction]

        Examples:
            PARAM1.reduction() -> Reduction(slope=1, offset=0)
            custom chi(p, q) = (p q, q) -> Reduction(slope=q, offset=0)
            custom chi(p, q) = (p, q exp(p)) -> None
        '''
        if self._reduction_checked:
            return self._reduction
        self._reduction_checked = True
        p, q = np.meshgrid(SAMPLE_P, SAMPLE_Q, indexing="ij")
        xi, eta = self.to_group(p, q)
        xi0, eta0 = self.to_group(np.zeros_like(q), q)
        xi1, _ = self.to_group(np.ones_like(q), q)
        slope_values = xi1 - xi0
        eta_fixed = np.all(np.abs(eta - eta0) <= 1e-12 * np.abs(eta0))
        affine = np.all(
            np.abs(xi - (xi0 + p * slope_values)) <= 1e-10 * np.maximum(1.0, np.abs(xi))
        )
        if eta_fixed and affine:

            def slope(qv):
                qv = np.asarray(qv, dtype=float)
                return self.to_group(np.ones_like(qv), qv)[0] - self.to_group(np.zeros_like(qv), qv)[0]

            def offset(qv):
                qv = np.asarray(qv, dtype=float)
                return self.to_group(np.zeros_like(qv), qv)[0]

            self._reduction = Reduction(slope=slope, offset=offset)
            logger.debug(f"Parametrization '{self.name}' admits the analytic p-reduction")
        return self._reduction

    def q_of_eta(self, eta) -> np.ndarray:
        """q as a function of eta for reducible parametrizations"""
        if self.reduction() is None:
            raise DomainError(f"Parametrization '{self.name}' has no q(eta) map")
        eta = np.asarray(eta, dtype=float)
        return self.from_group(np.zeros_like(eta), eta)[1]

    def describe(self) -> Dict[str, object]:
        description: Dict[str, object] = {"name": self.name}
        if self.expressions:
            description["expressions"] = dict(self.expressions)
        return description

    def __repr__(self) -> str:
        return f"Parametrization('{self.name}')"


def _ones(p, q):
    return np.ones(np.broadcast(p, q).shape)


PARAM1 = Parametrization(
    "param1",
    xi=lambda p, q: p + 0.0 * q,
    eta=lambda p, q: q + 0.0 * p,
    jacobian=_ones,
    inverse=lambda xi, eta: (xi + 0.0 * eta, eta + 0.0 * xi),
    reduction=Reduction(slope=np.ones_like, offset=np.zeros_like),
)

PARAM2 = Parametrization(
    "param2",
    xi=lambda p, q: p + 0.0 * q,
    eta=lambda p, q: 1.0 / q + 0.0 * p,
    jacobian=lambda p, q: -1.0 / (q * q) + 0.0 * p,
    inverse=lambda xi, eta: (xi + 0.0 * eta, 1.0 / eta + 0.0 * xi),
    reduction=Reduction(slope=np.ones_like, offset=np.zeros_like),
)

BUILTIN_PARAMETRIZATIONS: Dict[str, Parametrization] = {"param1": PARAM1, "param2": PARAM2}


def get_parametrization(name: str) -> Parametrization:
    '''
    Look up a built-in parametrization.

    get_parametrization: name: str -> Parametrization

    Examples:
        get_parametrization("param2") -> Parametrization('param2')
        get_parametrization("param3") -> Raises DomainError
    '''
    try:
        return BUILTIN_PARAMETRIZATIONS[name]
    except KeyError:
        known = ", ".join(sorted(BUILTIN_PARAMETRIZATIONS))
        raise DomainError(
            f"Unknown parametrization '{name}'.\n"
            f"Built-ins: {known}. Declare custom ones with xi/eta expressions."
        ) from None


@dataclass(frozen=True)
class MeasureDensity:
    """sigma(p, q) dp dq, the left-invariant measure pulled back through a parametrization"""

    parametrization: Parametrization

    def __call__(self, p, q) -> np.ndarray:
        return self.parametrization.sigma(p, q)


def compose_arrays(param: Parametrization, pa, qa, pb, qb) -> Tuple[np.ndarray, np.ndarray]:
    """Vectorized group product of phase points a . b"""
    xa, ea = param.to_group(pa, qa)
    xb, eb = param.to_group(pb, qb)
    return param.from_group(ea * xb + xa, ea * eb)


def compose(param: Parametrization, a: PhasePoint, b: PhasePoint) -> PhasePoint:
    '''
    Group product a . b pulled back through the parametrization.

    compose: param: Parametrization, a: PhasePoint, b: PhasePoint -> PhasePoint

    Examples:
        compose(PARAM1, PhasePoint(1, 2), PhasePoint(3, 4)) -> PhasePoint(p=7.0, q=8.0)
        compose(PARAM2, PhasePoint(1, 2), PhasePoint(3, 4)) -> PhasePoint(p=2.5, q=8.0)
    '''
    p, q = compose_arrays(param, a.p, a.q, b.p, b.q)
    return PhasePoint(float(p), float(q))


def identity(param: Parametrization) -> PhasePoint:
    """Phase point of the group identity (0, 1)"""
    p, q = param.from_group(0.0, 1.0)
    return PhasePoint(float(p), float(q))


def inverse_element(param: Parametrization, g: PhasePoint) -> PhasePoint:
    '''
    Phase point of the group inverse (-xi/eta, 1/eta).

    inverse_element: param: Parametrization, g: PhasePoint -> PhasePoint

    Examples:
        inverse_element(PARAM1, PhasePoint(1, 2)) -> PhasePoint(p=-0.5, q=0.5)
        inverse_element(PARAM2, PhasePoint(1, 2)) -> PhasePoint(p=-2.0, q=0.5)
    '''
    xi, eta = param.to_group(g.p, g.q)
    p, q = param.from_group(-xi / eta, 1.0 / eta)
    return PhasePoint(float(p), float(q))


def act(param: Parametrization, g: PhasePoint, x):
    """Action x -> eta x + xi of the group element g on the real line"""
    xi, eta = param.to_group(g.p, g.q)
    return eta * np.asarray(x, dtype=float) + xi


def measure_density(param: Parametrization) -> MeasureDensity:
    '''
    Invariant measure density sigma = eta^-2 |d(xi, eta)/d(p, q)|.

    measure_density: param: Parametrization -> MeasureDensity

    Examples:
        measure_density(PARAM1)(1.0, 2.0) -> 0.25
        measure_density(PARAM2)(1.0, 2.0) -> 1.0
    '''
    p, q = np.meshgrid(SAMPLE_P, SAMPLE_Q, indexing="ij")
    jac = param.jacobian(p, q)
    if not np.all(np.abs(jac) >= param.tolerances.jacobian_floor):
        raise DegenerateParametrizationError(
            f"Jacobian of '{param.name}' falls below {param.tolerances.jacobian_floor:g} "
            f"on the validation sample."
        )
    return MeasureDensity(param)


def left_invariance_defect(
    param: Parametrization,
    g0: PhasePoint,
    test_fn: Callable[[np.ndarray, np.ndarray], np.ndarray],
    nestings: int = 2
) -> float:
    '''
    |int sigma f(g0 . g) - int sigma f(g)| by nested half-plane quadrature.

    left_invariance_defect: param: Parametrization, g0: PhasePoint,
                            test_fn: Callable -> float

    Examples:
        left_invariance_defect(PARAM1, PhasePoint(1, 2), bump) -> 1e-12
        left_invariance_defect(PARAM2, identity(PARAM2), bump) -> 0.0
    '''
    sigma = measure_density(param)

    def plain(p, q):
        return sigma(p, q) * test_fn(p, q)

    def shifted(p, q):
        p, q = np.broadcast_arrays(p, q)
        pg, qg = compose_arrays(param, g0.p, g0.q, p, q)
        return sigma(p, q) * test_fn(pg, qg)

    growth = param.tolerances.divergence_growth
    base = require_converged(half_plane_integral(plain, nestings=nestings, growth=growth), "base integral")
    moved = require_converged(
        half_plane_integral(shifted, nestings=nestings, growth=growth), "translated integral"
    )
    defect = abs(moved - base)
    logger.debug(f"Left-invariance defect of '{param.name}' at {g0.as_tuple()}: {defect:.3e}")
    return defect
