"""Classical observables f(p, q) on the half-plane phase space"""

from dataclasses import dataclass, field, replace
from typing import Any, Callable, Dict, Optional

import numpy as np

from acsq.core.errors import DomainError

P_INDEPENDENT = "p-independent"
LINEAR_IN_P = "linear-in-p"
SEPARABLE_GAUSSIAN_P = "separable-gaussian-p"
GENERIC = "generic"

KINDS = (P_INDEPENDENT, LINEAR_IN_P, SEPARABLE_GAUSSIAN_P, GENERIC)

QFn = Callable[[np.ndarray], np.ndarray]
PQFn = Callable[[np.ndarray, np.ndarray], np.ndarray]


def _zeros(q):
    return np.zeros(np.shape(q))


def _broadcast_q(fn: QFn) -> QFn:
    def wrapped(q):
        q = np.asarray(q, dtype=float)
        return np.broadcast_to(np.asarray(fn(q), dtype=float), q.shape)

    return wrapped


@dataclass(frozen=True)
class GaussianProfile:
    """amplitude * exp(-((p - center) / width)^2)"""

    amplitude: float
    center: float
    width: float

    def __post_init__(self):
        if not self.width > 0:
            raise DomainError(f"Gaussian profile width must be positive, got {self.width}")

    def __call__(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        return self.amplitude * np.exp(-(((p - self.center) / self.width) ** 2))


@dataclass(frozen=True, eq=False)
class Observable:
    """
    A real phase-space function in one of four shapes.

    Contract:
        kind: p-independent   f = g0(q)
              linear-in-p     f = p g1(q) + g0(q)
              separable-gaussian-p  f = profile(p) g0(q)
              generic         f = f(p, q)
        name: label for records
        source: expressions the observable was built from, for records
    """

    kind: str
    g0: Optional[QFn] = field(default=None, repr=False)
    g1: Optional[QFn] = field(default=None, repr=False)
    p_profile: Optional[GaussianProfile] = None
    f: Optional[PQFn] = field(default=None, repr=False)
    name: str = "f"
    source: Dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"Unknown observable kind '{self.kind}'; expected one of {KINDS}")
        needs = {
            P_INDEPENDENT: self.g0 is not None,
            LINEAR_IN_P: self.g1 is not None,
            SEPARABLE_GAUSSIAN_P: self.p_profile is not None and self.g0 is not None,
            GENERIC: self.f is not None,
        }
        if not needs[self.kind]:
            raise DomainError(f"Observable of kind '{self.kind}' is missing its defining pieces")

    # constructors
    @classmethod
    def p_independent(cls, g: QFn, name: str = "f", source: Optional[Dict[str, Any]] = None):
        return cls(P_INDEPENDENT, g0=_broadcast_q(g), name=name, source=source or {})

    @classmethod
    def linear_in_p(
        cls,
        g1: QFn,
        g0: Optional[QFn] = None,
        name: str = "f",
        source: Optional[Dict[str, Any]] = None
    ):
        return cls(
            LINEAR_IN_P,
            g0=_broadcast_q(g0) if g0 is not None else None,
            g1=_broadcast_q(g1),
            name=name,
            source=source or {},
        )

    @classmethod
    def separable_gaussian(
        cls,
        amplitude: float,
        center: float,
        width: float,
        g: QFn,
        name: str = "f",
        source: Optional[Dict[str, Any]] = None
    ):
        return cls(
            SEPARABLE_GAUSSIAN_P,
            g0=_broadcast_q(g),
            p_profile=GaussianProfile(amplitude, center, width),
            name=name,
            source=source or {},
        )

    @classmethod
    def generic(cls, f: PQFn, name: str = "f", source: Optional[Dict[str, Any]] = None):
        return cls(GENERIC, f=f, name=name, source=source or {})

    @classmethod
    def constant(cls, value: float, name: Optional[str] = None):
        return cls.p_independent(
            lambda q: np.full(np.shape(q), float(value)), name=name or f"{value:g}",
            source={"g": f"{value:g}"},
        )

    @classmethod
    def position(cls):
        """f(p, q) = q"""
        return cls.p_independent(lambda q: q, name="q", source={"g": "q"})

    @classmethod
    def dilation(cls):
        """f(p, q) = p q"""
        return cls.linear_in_p(lambda q: q, name="p*q", source={"g1": "q"})

    def __call__(self, p, q) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        q = np.asarray(q, dtype=float)
        shape = np.broadcast(p, q).shape
        with np.errstate(all="ignore"):
            if self.kind == P_INDEPENDENT:
                values = self.g0(np.broadcast_to(q, shape))
            elif self.kind == LINEAR_IN_P:
                values = p * self.g1(np.broadcast_to(q, shape))
                if self.g0 is not None:
                    values = values + self.g0(np.broadcast_to(q, shape))
            elif self.kind == SEPARABLE_GAUSSIAN_P:
                values = self.p_profile(p) * self.g0(np.broadcast_to(q, shape))
            else:
                values = self.f(p, q)
        return np.broadcast_to(np.asarray(values, dtype=float), shape)

    def substitute_inverse_q(self) -> "Observable":
        '''
        The observable (p, q) -> f(p, 1/q), of the same kind.

        substitute_inverse_q: -> Observable

        Examples:
            Observable.position().substitute_inverse_q()(0.0, 4.0) -> 0.25
        '''

        def invert(fn: Optional[QFn]) -> Optional[QFn]:
            if fn is None:
                return None
            return lambda q: fn(1.0 / np.asarray(q, dtype=float))

        source = {"substituted": "q -> 1/q", **self.source}
        if self.kind == GENERIC:
            base = self.f
            return Observable(
                GENERIC,
                f=lambda p, q: base(p, 1.0 / np.asarray(q, dtype=float)),
                name=f"{self.name}(p,1/q)",
                source=source,
            )
        return Observable(
            self.kind,
            g0=invert(self.g0),
            g1=invert(self.g1),
            p_profile=self.p_profile,
            name=f"{self.name}(p,1/q)",
            source=source,
        )

    def scaled(self, factor: float) -> "Observable":
        """factor * f, same kind"""
        combined = self.combine(self, factor, 0.0)
        return replace(
            combined,
            name=f"{factor:g}*{self.name}",
            source={"scaled": factor, "of": dict(self.source)},
        )

    def combine(self, other: "Observable", a: float, b: float) -> "Observable":
        '''
        a f + b g for observables of the same kind (and the same p-profile).

        combine: other: Observable, a: float, b: float -> Observable

        Examples:
            Observable.position().combine(Observable.constant(1), 2, 3)(0, 1) -> 5.0
        '''
        if self.kind != other.kind:
            raise DomainError(f"Cannot combine observables of kinds {self.kind} and {other.kind}")
        if self.kind == SEPARABLE_GAUSSIAN_P and self.p_profile != other.p_profile:
            raise DomainError("Separable observables combine only with equal p-profiles")
        name = f"{a:g}*{self.name}+{b:g}*{other.name}"
        source = {"combined": [a, b], "of": [dict(self.source), dict(other.source)]}
        if self.kind == GENERIC:
            f1, f2 = self.f, other.f
            return Observable(
                GENERIC, f=lambda p, q: a * f1(p, q) + b * f2(p, q), name=name, source=source
            )

        def mix(first: Optional[QFn], second: Optional[QFn]) -> Optional[QFn]:
            if first is None and second is None:
                return None
            u = first or _zeros
            v = second or _zeros
            return lambda q: a * u(q) + b * v(q)

        return Observable(
            self.kind,
            g0=mix(self.g0, other.g0),
            g1=mix(self.g1, other.g1),
            p_profile=self.p_profile,
            name=name,
            source=source,
        )

    def is_inversion_symmetric(self, tolerance: float = 1e-12) -> bool:
        '''
        Whether f(p, q) = f(p, 1/q) on a sample of the half plane.

        is_inversion_symmetric: tolerance: float = 1e-12 -> bool

        Examples:
            gaussian(ln q)^2 observable -> True
            gaussian(ln q - 1)^2 observable -> False
        '''
        p, q = np.meshgrid(np.linspace(-3, 3, 13), np.geomspace(0.05, 20.0, 17), indexing="ij")
        direct = self(p, q)
        flipped = self(p, 1.0 / q)
        scale = max(float(np.nanmax(np.abs(direct))), 1e-300)
        gap = np.abs(direct - flipped)
        return bool(np.all(gap <= tolerance * scale) or not np.any(np.isfinite(gap)))

    def is_zero(self) -> bool:
        p, q = np.meshgrid(np.linspace(-3, 3, 7), np.geomspace(0.05, 20.0, 9), indexing="ij")
        return bool(np.all(self(p, q) == 0))

    def describe(self) -> Dict[str, Any]:
        description: Dict[str, Any] = {"kind": self.kind, "name": self.name}
        if self.source:
            description["source"] = dict(self.source)
        if self.p_profile is not None:
            description["p_profile"] = {
                "amplitude": self.p_profile.amplitude,
                "center": self.p_profile.center,
                "width": self.p_profile.width,
            }
        return description


def gaussian_bump(center_log_q: float = 0.0, p_width: float = 1.0, q_width: float = 1.0) -> Observable:
    '''
    exp(-(p / p_width)^2) exp(-((ln q - center_log_q) / q_width)^2) as a separable observable.

    gaussian_bump: center_log_q: float = 0.0, p_width: float = 1.0,
                   q_width: float = 1.0 -> Observable

    Examples:
        gaussian_bump(1.0)(0.0, math.e) -> 1.0
    '''
    return Observable.separable_gaussian(
        1.0,
        0.0,
        p_width,
        lambda q: np.exp(-(((np.log(q) - center_log_q) / q_width) ** 2)),
        name=f"bump(c={center_log_q:g})",
        source={
            "f": f"exp(-(p/{p_width:g})^2)*exp(-((ln(q)-{center_log_q:g})/{q_width:g})^2)"
        },
    )

