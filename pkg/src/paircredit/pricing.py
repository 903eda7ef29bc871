"""Leg values and fair prices for the two-name CDS and the first-to-default swap.

Conventions fixed here once for both products:

* Every leg is scaled by the contract notional, so fair values are plain
  currency differences.
* Default legs carry the discount factor e^{-r t} at the default time.
* The Girsanov weight inside the boundary densities uses the hitting time t,
  never the maturity, in every leg integral.
* The counterparty leg multiplies the boundary density by the already
  discounted, already positive-part CDS value, so its prefactor is just
  (1 - R_c).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import DegenerateContract, DomainError, NoRoot
from .jointlaw import (
    WedgeDensityParams,
    _survival_with_err,
    hitting_density_horizontal,
    hitting_density_slanted,
)
from .params import CdsContract, FirmParams, FtdContract, MarketParams, derive_wedge
from .quadrature import QuadSpec, adaptive_gauss_kronrod, integrate_time_radius
from .singlename import (
    SingleNameCoeffs,
    cds_value_at_default,
    conditional_default_prob,
    discounted_hitting_factor,
    h_tilde,
)
from .specfun import SeriesTolerances

__all__ = [
    "LegValue",
    "counterparty_default_leg",
    "standard_default_leg",
    "fee_leg",
    "cds_fair_value",
    "cds_par_spread",
    "ftd_default_leg",
    "ftd_fair_spread",
    "single_name_par_spread",
]


@dataclass(frozen=True)
class LegValue:
    """A priced leg with its numerical error budget and named sub-terms."""

    value: float
    error_estimate: float
    breakdown: dict

    def __post_init__(self):
        if self.error_estimate < 0.0:
            raise DomainError("error_estimate must be >= 0")


def _annuity(t, r: float):
    """Present value of a continuous unit coupon paid on [0, t]."""
    return (1.0 - np.exp(-r * t)) / r


def _require_positive_rate(mkt: MarketParams):
    if not (mkt.r > 0.0):
        raise DomainError(
            "fee legs divide by r; r=0 is a removable singularity "
            "((1 - e^{-r t})/r -> t) and is not special-cased"
        )


def counterparty_default_leg(
    firm1: FirmParams,
    firm2: FirmParams,
    mkt: MarketParams,
    contract: CdsContract,
    spec: QuadSpec = QuadSpec(),
    tol: SeriesTolerances = SeriesTolerances(),
    fee_mode: str = "exact",
) -> LegValue:
    """Expected discounted loss from the protection seller defaulting first.

    (1 - R_c) times the integral of the discounted positive-part CDS value
    against the firm-2-first hitting density.
    """
    _require_positive_rate(mkt)
    wedge = derive_wedge(firm1, firm2, mkt)
    p = WedgeDensityParams(wedge, tol)
    coeffs = SingleNameCoeffs.from_params(firm1, mkt)
    lgd_c = 1.0 - contract.recovery_counterparty
    root = math.sqrt(1.0 - mkt.rho * mkt.rho)

    def integrand(t, mus):
        dens = hitting_density_horizontal(t, mus, p)
        out = np.zeros_like(dens)
        live = dens > 0.0
        if np.any(live):
            out[live] = dens[live] * h_tilde(
                mus[live], t, contract, coeffs, wedge, mkt, fee_mode
            )
        return out

    def kink(t):
        # The positive part of the CDS value vanishes beyond a critical
        # coordinate; aligning a panel edge with it keeps refinement local.
        mu_star = _exposure_kink(t, contract, coeffs, mkt, fee_mode)
        return [mu_star / root] if mu_star is not None else []

    val, err = integrate_time_radius(
        integrand,
        contract.maturity,
        spec,
        mu_center=wedge.r0 * math.cos(wedge.theta0),
        inner_breakpoints=kink,
    )
    return LegValue(value=lgd_c * val, error_estimate=lgd_c * err, breakdown={"exposure_integral": val})


def _exposure_kink(t: float, contract: CdsContract, coeffs: SingleNameCoeffs, mkt: MarketParams, fee_mode: str):
    """Scaled distance mu where the time-t CDS value crosses zero, if any."""
    def value(mu: float) -> float:
        return cds_value_at_default(mu, t, contract, coeffs, mkt, fee_mode)

    if contract.spread == 0.0:
        return None  # value stays positive: no kink
    lo, hi = 0.0, 1.0
    for _ in range(60):
        if value(hi) == 0.0:
            break
        hi *= 2.0
        if hi > 1e6:
            return None
    else:  # pragma: no cover
        return None
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if value(mid) > 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-10 * max(1.0, hi):
            break
    return hi


def standard_default_leg(
    firm1: FirmParams,
    firm2: FirmParams,
    mkt: MarketParams,
    contract: CdsContract,
    spec: QuadSpec = QuadSpec(),
    tol: SeriesTolerances = SeriesTolerances(),
) -> LegValue:
    """Expected discounted protection payment on the underlying defaulting first."""
    wedge = derive_wedge(firm1, firm2, mkt)
    p = WedgeDensityParams(wedge, tol)
    scale = contract.notional * (1.0 - contract.recovery_underlying)
    r = mkt.r

    def integrand(t, mus):
        return math.exp(-r * t) * hitting_density_slanted(t, mus, p)

    val, err = integrate_time_radius(
        integrand,
        contract.maturity,
        spec,
        mu_center=wedge.r0 * math.cos(wedge.wedge_angle - wedge.theta0),
    )
    return LegValue(value=scale * val, error_estimate=scale * err, breakdown={"discounted_hit_prob": val})


def _fee_per_unit_spread(
    firm1: FirmParams,
    firm2: FirmParams,
    mkt: MarketParams,
    maturity: float,
    notional: float,
    spec: QuadSpec,
    tol: SeriesTolerances,
):
    """Fee leg for spread 1: notional * E[(1 - e^{-r (tau ^ T)})/r]."""
    _require_positive_rate(mkt)
    wedge = derive_wedge(firm1, firm2, mkt)
    p = WedgeDensityParams(wedge, tol)
    r = mkt.r

    surv, surv_err = _survival_with_err(maturity, p, spec)
    term_surv = _annuity(maturity, r) * surv

    def make_integrand(slanted: bool):
        dens = hitting_density_slanted if slanted else hitting_density_horizontal
        return lambda t, mus: _annuity(t, r) * dens(t, mus, p)

    term1, err1 = integrate_time_radius(
        make_integrand(True),
        maturity,
        spec,
        mu_center=wedge.r0 * math.cos(wedge.wedge_angle - wedge.theta0),
    )
    term2, err2 = integrate_time_radius(
        make_integrand(False),
        maturity,
        spec,
        mu_center=wedge.r0 * math.cos(wedge.theta0),
    )
    value = notional * (term_surv + term1 + term2)
    err = notional * (err1 + err2 + _annuity(maturity, r) * surv_err)
    breakdown = {
        "survival_term": notional * term_surv,
        "firm1_first_term": notional * term1,
        "firm2_first_term": notional * term2,
    }
    return value, err, breakdown


def fee_leg(
    firm1: FirmParams,
    firm2: FirmParams,
    mkt: MarketParams,
    contract: CdsContract,
    spec: QuadSpec = QuadSpec(),
    tol: SeriesTolerances = SeriesTolerances(),
) -> LegValue:
    """Present value of the continuous spread paid until first default or maturity."""
    per_unit, err, breakdown = _fee_per_unit_spread(
        firm1, firm2, mkt, contract.maturity, contract.notional, spec, tol
    )
    s = contract.spread
    return LegValue(
        value=s * per_unit,
        error_estimate=s * err,
        breakdown={k: s * v for k, v in breakdown.items()},
    )


def cds_fair_value(
    firm1: FirmParams,
    firm2: FirmParams,
    mkt: MarketParams,
    contract: CdsContract,
    spec: QuadSpec = QuadSpec(),
    tol: SeriesTolerances = SeriesTolerances(),
    fee_mode: str = "exact",
) -> float:
    """Protection buyer's value: standard + counterparty default legs minus fee leg."""
    d_s = standard_default_leg(firm1, firm2, mkt, contract, spec, tol)
    d_c = counterparty_default_leg(firm1, firm2, mkt, contract, spec, tol, fee_mode)
    f = fee_leg(firm1, firm2, mkt, contract, spec, tol)
    return d_s.value + d_c.value - f.value


def cds_par_spread(
    firm1: FirmParams,
    firm2: FirmParams,
    mkt: MarketParams,
    contract: CdsContract,
    spec: QuadSpec = QuadSpec(),
    tol: SeriesTolerances = SeriesTolerances(),
    fee_mode: str = "exact",
    s_hi_limit: float = 1.0,
) -> float:
    """Spread making the CDS fair value zero; contract.spread is ignored.

    The counterparty leg depends on the running spread through the CDS value
    at default, so this is a bracketing bisection on the fair value, not a
    leg ratio.  With full counterparty recovery the dependence disappears and
    the exact ratio D_s / F' is returned directly.
    """
    d_s = standard_default_leg(firm1, firm2, mkt, contract, spec, tol)
    fprime, f_err, _ = _fee_per_unit_spread(
        firm1, firm2, mkt, contract.maturity, contract.notional, spec, tol
    )
    if fprime <= 0.0:
        raise DegenerateContract("fee leg per unit spread is zero")

    if contract.recovery_counterparty >= 1.0 - 1e-15:
        return d_s.value / fprime

    def fair(s: float) -> float:
        d_c = counterparty_default_leg(
            firm1, firm2, mkt, replace(contract, spread=s), spec, tol, fee_mode
        )
        return d_s.value + d_c.value - s * fprime

    tol_v = max(spec.abs_tol, 4.0 * (d_s.error_estimate + spec.rel_tol * d_s.value + f_err))
    lo, g_lo = 0.0, fair(0.0)
    if abs(g_lo) <= tol_v:
        return 0.0
    hi = 0.01
    g_hi = fair(hi)
    while g_hi > 0.0:
        hi *= 2.0
        if hi > s_hi_limit:
            raise NoRoot(f"no par spread below {s_hi_limit} (fair value still positive)")
        g_hi = fair(hi)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        g_mid = fair(mid)
        if abs(g_mid) <= tol_v or (hi - lo) < 1e-12:
            return mid
        if g_mid > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def ftd_default_leg(
    firm1: FirmParams,
    firm2: FirmParams,
    mkt: MarketParams,
    contract: FtdContract,
    spec: QuadSpec = QuadSpec(),
    tol: SeriesTolerances = SeriesTolerances(),
) -> LegValue:
    """Expected discounted payment at the first default of either firm."""
    wedge = derive_wedge(firm1, firm2, mkt)
    p = WedgeDensityParams(wedge, tol)
    scale = contract.notional * (1.0 - contract.recovery)
    r = mkt.r

    t1, e1 = integrate_time_radius(
        lambda t, mus: math.exp(-r * t) * hitting_density_slanted(t, mus, p),
        contract.maturity,
        spec,
        mu_center=wedge.r0 * math.cos(wedge.wedge_angle - wedge.theta0),
    )
    t2, e2 = integrate_time_radius(
        lambda t, mus: math.exp(-r * t) * hitting_density_horizontal(t, mus, p),
        contract.maturity,
        spec,
        mu_center=wedge.r0 * math.cos(wedge.theta0),
    )
    return LegValue(
        value=scale * (t1 + t2),
        error_estimate=scale * (e1 + e2),
        breakdown={"firm1_first": scale * t1, "firm2_first": scale * t2},
    )


def ftd_fair_spread(
    firm1: FirmParams,
    firm2: FirmParams,
    mkt: MarketParams,
    contract: FtdContract,
    spec: QuadSpec = QuadSpec(),
    tol: SeriesTolerances = SeriesTolerances(),
) -> float:
    """Fair first-to-default spread: default leg over fee leg per unit spread.

    The default leg does not depend on the spread, so the ratio is exact and
    no root-finding is involved.
    """
    d = ftd_default_leg(firm1, firm2, mkt, contract, spec, tol)
    fprime, _err, _ = _fee_per_unit_spread(
        firm1, firm2, mkt, contract.maturity, contract.notional, spec, tol
    )
    if fprime <= 0.0:
        raise DegenerateContract("fee leg per unit spread is zero")
    return d.value / fprime


def single_name_par_spread(
    firm: FirmParams,
    mkt: MarketParams,
    recovery: float,
    maturity: float,
    spec: QuadSpec = QuadSpec(),
) -> float:
    """Par spread of a stand-alone CDS on one firm with a riskless counterparty."""
    _require_positive_rate(mkt)
    if not (0.0 <= recovery < 1.0):
        raise DomainError(f"recovery must be in [0, 1), got {recovery}")
    coeffs = SingleNameCoeffs.from_params(firm, mkt)
    mu0 = firm.y0 / firm.sigma
    default_leg = (1.0 - recovery) * discounted_hitting_factor(mu0, maturity, coeffs)

    def survived(t: float) -> float:
        if t <= 0.0:
            return 1.0
        return math.exp(-mkt.r * t) * (1.0 - conditional_default_prob(mu0, t, coeffs))

    annuity, _ = adaptive_gauss_kronrod(
        survived, 0.0, maturity, rel_tol=spec.rel_tol, abs_tol=spec.abs_tol,
        max_subdivisions=spec.max_subdivisions,
    )
    if annuity <= 0.0:
        raise DegenerateContract("single-name annuity is zero")
    return default_leg / annuity
