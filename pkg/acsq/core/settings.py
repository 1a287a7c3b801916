"""Numerical defaults and environment overrides"""

import os
from typing import Optional

from loguru import logger
from pydantic import BaseModel, ConfigDict, Field

from acsq.core.errors import ConfigError

GRID_ORDER_CAP_ENV = "ACSQ_GRID_ORDER_CAP"

# nodes of hermgauss beyond this order overflow exp(y^2) in the dnu weights
MAX_GRID_ORDER = 256


class Tolerances(BaseModel):
    """
    Every tolerance and resolution default used by the numerical modules.

    Instances are immutable; use ``model_copy(update=...)`` to derive overrides.
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    gram: float = Field(1e-10, gt=0)
    hermiticity_closed_form: float = Field(1e-12, gt=0)
    hermiticity_quadrature: float = Field(1e-6, gt=0)
    roi: float = Field(1e-6, gt=0)
    normalization: float = Field(1e-10, gt=0)
    divergence_growth: float = Field(1e-3, gt=0)
    commutator: float = Field(1e-4, gt=0)
    commutator_margin: int = Field(4, ge=0)
    commutator_padding: Optional[int] = Field(None, ge=0)
    p_max: float = Field(40.0, gt=0)
    overlap_bandwidth: float = Field(40.0, gt=0)
    eta_window: float = Field(1e-9, gt=0, lt=1)
    support: float = Field(1e-14, gt=0, lt=1)
    jacobian_floor: float = Field(1e-12, gt=0)
    inverse: float = Field(1e-10, gt=0)


DEFAULT_TOLERANCES = Tolerances()


def grid_order_cap() -> int:
    '''
    Upper bound on quadrature orders, read from ACSQ_GRID_ORDER_CAP when set.

    grid_order_cap: -> int

    Examples:
        grid_order_cap() -> 256
        ACSQ_GRID_ORDER_CAP=96 grid_order_cap() -> 96
    '''
    raw = os.environ.get(GRID_ORDER_CAP_ENV)
    if raw is None or raw.strip() == "":
        return MAX_GRID_ORDER
    try:
        cap = int(raw)
    except ValueError:
        raise ConfigError(
            f"{GRID_ORDER_CAP_ENV}={raw!r} is not an integer.\n"
            f"Set it to a positive integer such as 128, or unset it.",
            field=GRID_ORDER_CAP_ENV,
        ) from None
    if cap < 2:
        raise ConfigError(
            f"{GRID_ORDER_CAP_ENV}={cap} must be at least 2.",
            field=GRID_ORDER_CAP_ENV,
        )
    if cap > MAX_GRID_ORDER:
        logger.warning(f"{GRID_ORDER_CAP_ENV}={cap} exceeds {MAX_GRID_ORDER}; using {MAX_GRID_ORDER}")
        return MAX_GRID_ORDER
    return cap
