"""Single-name first-passage formulas and the CDS value at the counterparty default.

Everything here is conditional on the counterparty (firm 2) defaulting first
at time t while firm 1 sits at scaled log-distance ``mu = Y_1(t)/sigma_1 >= 0``
from its barrier.  The survivor's default probability, the discounted
first-passage factor and the market value of the running CDS follow in closed
form; ``h_tilde`` is the same value expressed in the wedge coordinate of the
transformed process.

Tail-heavy products (growing exponential times vanishing normal CDF) are
assembled in log space so large ``mu`` cannot overflow.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import log_ndtr as _log_ndtr

from .errors import DomainError
from .params import CdsContract, MarketParams, WedgeGeometry, drift_nu
from .specfun import normal_cdf

__all__ = [
    "SingleNameCoeffs",
    "conditional_default_prob",
    "gaussian_exp_integral",
    "discounted_hitting_factor",
    "cds_value_at_default",
    "h_tilde",
]


@dataclass(frozen=True)
class SingleNameCoeffs:
    """Rate/drift bundle for the surviving firm: beta = nu1/sigma1, rate_alpha = sqrt(beta^2 + 2r)."""

    nu1: float
    sigma1: float
    rate_alpha: float
    beta: float

    def __post_init__(self):
        if not (self.sigma1 > 0.0):
            raise DomainError(f"sigma1 must be > 0, got {self.sigma1}")
        if self.rate_alpha < abs(self.beta) - 1e-12:
            raise DomainError(
                f"rate_alpha={self.rate_alpha} < |beta|={abs(self.beta)}: needs r >= 0"
            )

    @classmethod
    def from_params(cls, firm1, mkt: MarketParams) -> "SingleNameCoeffs":
        nu1 = drift_nu(firm1, mkt)
        beta = nu1 / firm1.sigma
        return cls(
            nu1=nu1,
            sigma1=firm1.sigma,
            rate_alpha=math.sqrt(beta * beta + 2.0 * mkt.r),
            beta=beta,
        )


def _check_mu(mu):
    if np.any(np.asarray(mu) < 0.0):
        raise DomainError("mu (scaled barrier distance) must be >= 0")


def conditional_default_prob(mu, horizon: float, coeffs: SingleNameCoeffs):
    """P(firm 1 defaults within `horizon`) given current scaled distance mu.

    Accepts scalar or array mu; result is clipped to [0, 1] against
    sub-1e-12 floating spill.
    """
    _check_mu(mu)
    if not (horizon > 0.0):
        raise DomainError(f"horizon must be > 0, got {horizon}")
    mu = np.asarray(mu, dtype=float)
    beta = coeffs.beta
    sq = math.sqrt(horizon)
    first = normal_cdf(-(mu + beta * horizon) / sq)
    second = np.exp(-2.0 * beta * mu + _log_ndtr((-mu + beta * horizon) / sq))
    p = first + second
    p = np.clip(p, 0.0, 1.0)
    return float(p) if p.ndim == 0 else p


def gaussian_exp_integral(a: float, b: float, c: float, y: float) -> float:
    """Closed form of int_0^y e^{a x} dN((b - c x)/sqrt(x)) for b < 0, c^2 > 2a."""
    if not (b < 0.0):
        raise DomainError(f"b must be < 0, got {b}")
    disc = c * c - 2.0 * a
    if not (disc > 0.0):
        raise DomainError(f"requires c^2 > 2a, got c^2 - 2a = {disc}")
    if not (y > 0.0):
        raise DomainError(f"y must be > 0, got {y}")
    d = math.sqrt(disc)
    sq = math.sqrt(y)
    g = math.exp(b * (c - d)) * normal_cdf((b - d * y) / sq)
    h = math.exp(b * (c + d)) * normal_cdf((b + d * y) / sq)
    return ((d + c) / (2.0 * d)) * g + ((d - c) / (2.0 * d)) * h


def discounted_hitting_factor(mu, horizon: float, coeffs: SingleNameCoeffs):
    """E[e^{-r tau} 1{tau < horizon}] for firm 1's first passage from scaled distance mu."""
    _check_mu(mu)
    if not (horizon > 0.0):
        raise DomainError(f"horizon must be > 0, got {horizon}")
    mu = np.asarray(mu, dtype=float)
    a, beta = coeffs.rate_alpha, coeffs.beta
    sq = math.sqrt(horizon)
    term1 = np.exp(-mu * (beta - a) + _log_ndtr(-(mu + a * horizon) / sq))
    term2 = np.exp(-mu * (beta + a) + _log_ndtr((-mu + a * horizon) / sq))
    out = np.clip(term1 + term2, 0.0, 1.0)
    return float(out) if out.ndim == 0 else out


def cds_value_at_default(
    mu,
    t,
    contract: CdsContract,
    coeffs: SingleNameCoeffs,
    mkt: MarketParams,
    fee_mode: str = "exact",
):
    """Discounted positive part of the CDS market value at the counterparty's default time t.

    The undiscounted time-t value per unit notional is

        p = (1 - R_u + s/r) * discounted_hitting_factor(mu, T - t)
            - (s/r) * (1 - e^{-r (T-t)} * survival(mu, T - t))

    and the leg integrand is e^{-r t} * C * max(0, p).  fee_mode="unconditional"
    replaces the surviving-firm fee conditioning by the riskless annuity
    (fees to maturity regardless of the underlying's default), a standard
    speed-over-exactness approximation.
    """
    if fee_mode not in ("exact", "unconditional"):
        raise DomainError(f"unknown fee_mode {fee_mode!r}")
    if not (mkt.r > 0.0):
        raise DomainError(
            "fee terms divide by r; r=0 is a removable singularity "
            "((1 - e^{-r h})/r -> h) and is not special-cased"
        )
    _check_mu(mu)
    t_arr = np.asarray(t, dtype=float)
    T = contract.maturity
    if np.any(t_arr < 0.0) or np.any(t_arr >= T):
        raise DomainError("default time t must lie in [0, T)")
    mu = np.asarray(mu, dtype=float)
    horizon = T - t_arr

    r, s = mkt.r, contract.spread
    ru = contract.recovery_underlying
    if t_arr.ndim == 0:
        df = discounted_hitting_factor(mu, float(horizon), coeffs)
        if fee_mode == "exact":
            surv = 1.0 - conditional_default_prob(mu, float(horizon), coeffs)
    else:
        # Array default times (Monte Carlo usage): same formulas, per-element horizon.
        beta, al = coeffs.beta, coeffs.rate_alpha
        sq = np.sqrt(horizon)
        df = np.exp(-mu * (beta - al) + _log_ndtr(-(mu + al * horizon) / sq)) + np.exp(
            -mu * (beta + al) + _log_ndtr((-mu + al * horizon) / sq)
        )
        df = np.clip(df, 0.0, 1.0)
        if fee_mode == "exact":
            surv = 1.0 - np.clip(
                normal_cdf(-(mu + beta * horizon) / sq)
                + np.exp(-2.0 * beta * mu + _log_ndtr((-mu + beta * horizon) / sq)),
                0.0,
                1.0,
            )
    if fee_mode == "exact":
        p = (1.0 - ru + s / r) * df - (s / r) * (1.0 - np.exp(-r * horizon) * surv)
    else:
        p = (1.0 - ru) * df - (s / r) * (1.0 - np.exp(-r * horizon))
    out = np.exp(-r * t_arr) * contract.notional * np.maximum(0.0, p)
    return float(out) if out.ndim == 0 else out


def h_tilde(
    z,
    t: float,
    contract: CdsContract,
    coeffs: SingleNameCoeffs,
    wedge: WedgeGeometry,
    mkt: MarketParams,
    fee_mode: str = "exact",
):
    """CDS value at counterparty default, addressed by the survivor's wedge coordinate.

    On the horizontal boundary the survivor's scaled barrier distance is
    mu = sqrt(1 - rho^2) * z, so this is a pure reparametrization of
    cds_value_at_default.
    """
    if np.any(np.asarray(z) < 0.0):
        raise DomainError("boundary coordinate z must be >= 0")
    root = math.sqrt(1.0 - mkt.rho * mkt.rho)
    return cds_value_at_default(np.asarray(z, dtype=float) * root, t, contract, coeffs, mkt, fee_mode)
