"""Market, firm and contract parameters, and the planar change of coordinates.

Default of a firm is the first time its value process crosses an
exponentially growing barrier.  Writing ``Y_i(t) = ln(V_i(t) / barrier_i(t))``,
each ``Y_i`` is an arithmetic Brownian motion started at
``y0_i = ln(v0_i / k_barrier_i) > 0`` with drift ``nu_i`` and volatility
``sigma_i``, and default is the first passage of ``Y_i`` to zero.

``derive_wedge`` maps the correlated pair ``(Y_1, Y_2)`` to a standard planar
Brownian motion with constant drift ``(phi1, phi2)`` living in the wedge
``0 < theta < wedge_angle``; firm 2's barrier is the horizontal boundary
``theta = 0`` and firm 1's barrier is the slanted ray ``theta = wedge_angle``.
All quantities are annualized; there are no day-count conventions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError

__all__ = [
    "FirmParams",
    "MarketParams",
    "CdsContract",
    "FtdContract",
    "WedgeGeometry",
    "drift_nu",
    "derive_wedge",
]


@dataclass(frozen=True)
class FirmParams:
    """One default-prone entity.

    Attributes
    ----------
    v0 : initial firm value (currency, > 0)
    k_barrier : barrier level at t=0 (currency, > 0)
    gamma : barrier growth rate (1/year)
    sigma : firm-value volatility (1/sqrt(year), > 0)
    payout : net payout ratio (1/year); may be negative for net inflows
    """

    v0: float
    k_barrier: float
    gamma: float
    sigma: float
    payout: float = 0.0

    def __post_init__(self):
        if not (self.v0 > 0.0):
            raise DomainError(f"v0 must be > 0, got {self.v0}")
        if not (self.k_barrier > 0.0):
            raise DomainError(f"k_barrier must be > 0, got {self.k_barrier}")
        if not (self.sigma > 0.0):
            raise DomainError(f"sigma must be > 0, got {self.sigma}")
        if not (self.v0 > self.k_barrier):
            raise DomainError(
                f"firm starts at or below its barrier: v0={self.v0} <= k_barrier={self.k_barrier}"
            )

    @property
    def y0(self) -> float:
        """Log-distance to the barrier at t=0, ln(v0 / k_barrier) > 0."""
        return math.log(self.v0 / self.k_barrier)


@dataclass(frozen=True)
class MarketParams:
    """Constant short rate and Brownian correlation between the two firms."""

    r: float
    rho: float

    def __post_init__(self):
        if not (-1.0 < self.rho < 1.0):
            raise DomainError(f"rho must lie strictly in (-1, 1), got {self.rho}")
        if not (self.r >= 0.0):
            raise DomainError(f"short rate must be >= 0, got {self.r}")


@dataclass(frozen=True)
class CdsContract:
    """A CDS on firm 1, protection sold by (default-prone) firm 2."""

    notional: float
    recovery_underlying: float
    recovery_counterparty: float
    spread: float
    maturity: float

    def __post_init__(self):
        if not (self.notional > 0.0):
            raise DomainError(f"notional must be > 0, got {self.notional}")
        if not (0.0 <= self.recovery_underlying <= 1.0):
            raise DomainError(f"recovery_underlying must be in [0, 1], got {self.recovery_underlying}")
        if not (0.0 <= self.recovery_counterparty <= 1.0):
            raise DomainError(f"recovery_counterparty must be in [0, 1], got {self.recovery_counterparty}")
        if not (self.spread >= 0.0):
            raise DomainError(f"spread must be >= 0, got {self.spread}")
        if not (self.maturity > 0.0):
            raise DomainError(f"maturity must be > 0, got {self.maturity}")


@dataclass(frozen=True)
class FtdContract:
    """First-to-default swap on the pair: pays notional*(1-recovery) at the first default."""

    notional: float
    recovery: float
    maturity: float

    def __post_init__(self):
        if not (self.notional > 0.0):
            raise DomainError(f"notional must be > 0, got {self.notional}")
        if not (0.0 <= self.recovery <= 1.0):
            raise DomainError(f"recovery must be in [0, 1], got {self.recovery}")
        if not (self.maturity > 0.0):
            raise DomainError(f"maturity must be > 0, got {self.maturity}")


@dataclass(frozen=True)
class WedgeGeometry:
    """Derived polar state of the transformed two-firm process.

    The transformed process starts at radius ``r0``, angle ``theta0`` inside
    the wedge ``0 < theta < wedge_angle`` and carries drift ``(phi1, phi2)``.
    ``nu1/nu2`` and ``y01/y02`` are kept for the single-name formulas and the
    inverse transform.
    """

    r0: float
    theta0: float
    wedge_angle: float
    phi1: float
    phi2: float
    nu1: float
    nu2: float
    y01: float
    y02: float

    @property
    def z10(self) -> float:
        """Horizontal start coordinate, r0*cos(theta0)."""
        return self.r0 * math.cos(self.theta0)

    @property
    def z20(self) -> float:
        """Vertical start coordinate, r0*sin(theta0)."""
        return self.r0 * math.sin(self.theta0)

    @property
    def phi_norm_sq(self) -> float:
        return self.phi1 * self.phi1 + self.phi2 * self.phi2


def drift_nu(firm: FirmParams, mkt: MarketParams) -> float:
    """Per-firm log-distance drift: r - payout - gamma - sigma^2/2."""
    return mkt.r - firm.payout - firm.gamma - 0.5 * firm.sigma * firm.sigma


def derive_wedge(firm1: FirmParams, firm2: FirmParams, mkt: MarketParams) -> WedgeGeometry:
    """Change coordinates from two correlated firms to a drifted Brownian motion in a wedge.

    Raises DomainError if either firm starts at/below its barrier, if
    |rho| >= 1, or if the start falls outside the open wedge.
    """
    rho = mkt.rho
    root = math.sqrt(1.0 - rho * rho)
    y01, y02 = firm1.y0, firm2.y0
    s1, s2 = firm1.sigma, firm2.sigma

    z1 = (y01 * s2 - rho * y02 * s1) / (s1 * s2 * root)
    z2 = y02 / s2

    nu1 = drift_nu(firm1, mkt)
    nu2 = drift_nu(firm2, mkt)
    phi1 = (nu1 * s2 - nu2 * s1 * rho) / (s1 * s2 * root)
    phi2 = nu2 / s2

    alpha = math.asin(rho) + 0.5 * math.pi
    r0 = math.hypot(z1, z2)
    theta0 = math.atan2(z2, z1)

    # Out-of-wedge starts are rejected, not clamped: silently clamping would
    # hide inconsistent calibration inputs.
    if not (0.0 < theta0 < alpha):
        raise DomainError(
            f"start angle {theta0:.6g} outside the open wedge (0, {alpha:.6g})"
        )
    return WedgeGeometry(
        r0=r0,
        theta0=theta0,
        wedge_angle=alpha,
        phi1=phi1,
        phi2=phi2,
        nu1=nu1,
        nu2=nu2,
        y01=y01,
        y02=y02,
    )
