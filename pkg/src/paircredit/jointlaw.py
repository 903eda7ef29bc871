"""Joint laws of the transformed two-firm process in the wedge.

The driftless (Q-measure) survival density in polar coordinates is a Fourier-
Bessel series over orders ``n*pi/alpha``; the first-hitting densities on the
two boundary rays are its normal derivatives and carry the Girsanov weight
that restores the drift.  Series evaluation notes:

* The textbook form of these sums starts the index at n=0; that term is
  identically zero, so evaluation starts at n=1.
* Every term is bounded by ``exp(env)`` with
  ``env = log(weight * prefactor) - (rad - r0)^2 / (2t)`` while the true value
  is bounded by ``exp(env - x*(1 - cos(dtheta)))`` where ``x = rad*r0/t`` and
  ``dtheta`` is the angular separation of evaluation point and start.  When
  that true bound drops below e^-60 (~1e-26, far under any quadrature floor)
  the series is skipped and 0 is returned: beyond roughly e^-36 the sum is
  pure cancellation noise in double precision anyway.
* For ``x <= 650`` terms are accumulated on the linear scale (one vectorized
  Bessel matrix per call) and the prefactor is applied in log scale; for
  ``x > 650`` each weighted term is assembled fully in log scale before
  exponentiation, which keeps the t -> 0 regime overflow-free.
* Truncation: stop after 3 consecutive terms below ``term_tol`` times the
  running partial sum, but only past the Bessel turning point ``n > x/delta``
  (sin factors make single terms vanish non-monotonically before it; past it
  the terms decay super-geometrically).  Hitting the ``max_terms`` cap raises
  SeriesNoConvergence.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DomainError, SeriesNoConvergence
from .params import WedgeGeometry
from .quadrature import QuadSpec, integrate_time_radius, integrate_wedge
from .specfun import SeriesTolerances, bessel_i_matrix, log_bessel_i
from scipy.special import gammaln as _gammaln

__all__ = [
    "WedgeDensityParams",
    "NormalizationResult",
    "survival_density_q",
    "girsanov_weight",
    "hitting_density_horizontal",
    "hitting_density_slanted",
    "survival_prob",
    "normalization_check",
    "hitting_density_from_gradient",
]

# True-value log bound under which densities are returned as exactly 0.
_HARD_ZERO_EXP = -60.0
# Nodes needing more series terms than max_terms still return 0 when their
# true-value bound sits below this (absolute error < 3e-20); above it the
# series honestly cannot converge and SeriesNoConvergence is raised.
_NEGLIGIBLE_EXP = -45.0
# Below this horizon (years) hitting densities are 0 to far beyond double range.
_T_MIN = 1e-8
# Linear-scale Bessel accumulation is safe (incl. n <= max_terms coefficient
# growth) up to this series argument; beyond it terms go through log scale.
_LINEAR_X_MAX = 650.0
# Series-sum negativity beyond this is a truncation bug, not float noise.
_NEG_TOL = -1e-12


@dataclass(frozen=True)
class WedgeDensityParams:
    """Wedge geometry plus the series truncation policy."""

    wedge: WedgeGeometry
    tol: SeriesTolerances = SeriesTolerances()


@dataclass(frozen=True)
class NormalizationResult:
    """Partition of unity over 'firm 2 first', 'firm 1 first', 'no default'."""

    p_firm2_first: float
    p_firm1_first: float
    p_survive: float

    @property
    def total(self) -> float:
        return self.p_firm2_first + self.p_firm1_first + self.p_survive


@lru_cache(maxsize=128)
def _series_ctx(wedge: WedgeGeometry, tol: SeriesTolerances):
    alpha = wedge.wedge_angle
    n = np.arange(1, tol.max_terms + 1, dtype=float)
    orders = n * (math.pi / alpha)
    return {
        "n": n,
        "orders": orders,
        "lgam": _gammaln(orders + 1.0),
        "sin0": np.sin(n * math.pi * wedge.theta0 / alpha),
    }


def girsanov_weight(x, y, t, wedge: WedgeGeometry):
    """Radon-Nikodym factor moving the driftless wedge law onto the drifted one."""
    if np.any(np.asarray(t) < 0.0):
        raise DomainError("t must be >= 0")
    out = np.exp(_log_girsanov(x, y, t, wedge))
    return float(out) if np.ndim(out) == 0 else out


def _log_girsanov(x, y, t, wedge: WedgeGeometry):
    return (
        wedge.phi1 * (np.asarray(x, dtype=float) - wedge.z10)
        + wedge.phi2 * (np.asarray(y) - wedge.z20)
        - 0.5 * wedge.phi_norm_sq * np.asarray(t)
    )


def _series_sum(
    x: np.ndarray,
    coeffs: np.ndarray,
    log_scale: np.ndarray,
    bound: np.ndarray,
    p: WedgeDensityParams,
):
    """sum_n coeffs[n] * I_{n pi/alpha}(x) per node, times exp(log_scale), with truncation control.

    x, log_scale: per-node arrays; coeffs: (max_terms, nodes) or (max_terms,);
    bound: per-node log upper bound on the weighted result.
    """
    tol = p.tol
    ctx = _series_ctx(p.wedge, tol)
    orders = ctx["orders"]
    delta = orders[0]
    nmax = tol.max_terms
    out = np.zeros_like(x)

    if coeffs.ndim == 1:
        coeffs = np.broadcast_to(coeffs[:, None], (nmax, x.size))

    # The stopping rule can only fire past the Bessel turning point x/delta.
    # Nodes whose turning point exceeds the cap are either provably
    # negligible (returned as 0) or an honest failure.
    over = x / delta + 3.0 > nmax
    if np.any(over):
        meaningful = over & (bound >= _NEGLIGIBLE_EXP)
        if np.any(meaningful):
            j = int(np.argmax(np.where(meaningful, x, -np.inf)))
            raise SeriesNoConvergence(
                f"series argument {x[j]:.3g} needs more than max_terms={nmax} orders "
                f"(turning point {x[j] / delta:.0f}); raise max_terms or avoid this (t, radius)"
            )
        keep = ~over
        out[keep] = _series_sum(x[keep], coeffs[:, keep], log_scale[keep], bound[keep], p)
        return out

    turn = x / delta
    lin = x <= _LINEAR_X_MAX
    if np.any(lin):
        xl = x[lin]
        # Terms decay super-geometrically a little past the turning point, so
        # usually far fewer than max_terms orders are needed; escalate to the
        # full cap only if the stopping rule has not fired by the estimate.
        xmax = float(xl.max())
        n_est = min(nmax, int(xmax / delta + 3.0 * math.sqrt(xmax) / delta) + 12)
        sums = None
        for n_try in dict.fromkeys((n_est, nmax)):
            imat = bessel_i_matrix(orders[:n_try], xl, lgam=ctx["lgam"][:n_try])  # (n_try, m)
            terms = coeffs[:n_try, lin] * imat
            try:
                sums = _truncate_and_sum(terms, turn[lin], tol, xl)
                break
            except SeriesNoConvergence:
                if n_try == nmax:
                    raise
        # exp(log_scale) alone can underflow while sum*exp(log_scale) is normal.
        mag = np.zeros_like(sums)
        nz = sums != 0.0
        mag[nz] = np.exp(np.log(np.abs(sums[nz])) + log_scale[lin][nz])
        out[lin] = np.sign(sums) * mag

    if np.any(~lin):
        idx = np.nonzero(~lin)[0]
        for j in idx:
            out[j] = _series_sum_log(float(x[j]), coeffs[:, j], float(log_scale[j]), orders, turn[j], tol)
    return out


def _truncate_and_sum(terms: np.ndarray, turn: np.ndarray, tol: SeriesTolerances, x: np.ndarray):
    """Apply the 3-consecutive-small stopping rule columnwise; return full partial sums."""
    partial = np.cumsum(terms, axis=0)
    small = np.abs(terms) <= tol.term_tol * np.abs(partial)
    three = small.copy()
    three[2:] &= small[1:-1] & small[:-2]
    three[:2] = False
    nmax = terms.shape[0]
    past_turn = np.arange(1, nmax + 1, dtype=float)[:, None] > turn[None, :]
    converged = np.any(three & past_turn, axis=0)
    if not np.all(converged):
        j = int(np.argmin(converged))
        raise SeriesNoConvergence(
            f"series for argument {x[j]:.6g} did not meet the stopping rule "
            f"within max_terms={nmax}"
        )
    return partial[-1]


def _series_sum_log(x: float, coeffs: np.ndarray, log_scale: float, orders: np.ndarray, turn: float, tol: SeriesTolerances):
    # Fully log-scale assembly for huge arguments (t -> 0): each weighted term
    # is exp(log|coeff| + log I + log_scale), so nothing overflows.
    total = 0.0
    consec = 0
    for i, c in enumerate(coeffs):
        if c == 0.0:
            term = 0.0
        else:
            term = math.copysign(math.exp(math.log(abs(c)) + log_bessel_i(orders[i], x) + log_scale), c)
        total += term
        if abs(term) <= tol.term_tol * abs(total):
            consec += 1
            if consec >= 3 and (i + 1) > turn:
                return total
        else:
            consec = 0
    raise SeriesNoConvergence(
        f"log-scale series for argument {x:.6g} did not converge within max_terms={len(coeffs)}"
    )


def _finalize_density(vals: np.ndarray, scalar: bool):
    bad = vals < _NEG_TOL
    if np.any(bad):
        raise SeriesNoConvergence(
            f"series truncation produced a negative density {vals[bad].min():.3e}"
        )
    vals = np.where(vals < 0.0, 0.0, vals)
    return float(vals[0]) if scalar else vals


def survival_density_q(mu_r, theta: float, t: float, p: WedgeDensityParams):
    """Driftless survival density of the wedge process in polar coordinates (per radius*angle)."""
    w = p.wedge
    alpha = w.wedge_angle
    if not (0.0 < theta < alpha):
        raise DomainError(f"theta must lie in (0, {alpha:.6g}), got {theta}")
    if not (t > 0.0):
        raise DomainError(f"t must be > 0, got {t}")
    mu = np.atleast_1d(np.asarray(mu_r, dtype=float))
    scalar = np.ndim(mu_r) == 0
    if np.any(mu <= 0.0):
        raise DomainError("radius must be > 0")

    x = mu * w.r0 / t
    log_pref = np.log(2.0 * mu / (alpha * t))
    env = log_pref - (mu - w.r0) ** 2 / (2.0 * t)
    dtheta = theta - w.theta0
    bound = env - x * (1.0 - math.cos(dtheta))

    out = np.zeros_like(mu)
    live = bound >= _HARD_ZERO_EXP
    if np.any(live):
        ctx = _series_ctx(w, p.tol)
        coeffs = np.sin(ctx["n"] * math.pi * theta / alpha) * ctx["sin0"]
        log_scale = log_pref[live] - (mu[live] ** 2 + w.r0 ** 2) / (2.0 * t)
        out[live] = _series_sum(x[live], coeffs, log_scale, bound[live], p)
    return _finalize_density(out, scalar)


def _hitting_density(t: float, rad, p: WedgeDensityParams, slanted: bool):
    w = p.wedge
    alpha = w.wedge_angle
    if not (t > 0.0):
        raise DomainError(f"t must be > 0, got {t}")
    rad_arr = np.atleast_1d(np.asarray(rad, dtype=float))
    scalar = np.ndim(rad) == 0
    if np.any(rad_arr <= 0.0):
        raise DomainError("boundary radius must be > 0")
    if t < _T_MIN:
        out = np.zeros_like(rad_arr)
        return _finalize_density(out, scalar)

    if slanted:
        bx = rad_arr * math.cos(alpha)
        by = rad_arr * math.sin(alpha)
        ang = alpha - w.theta0
    else:
        bx = rad_arr
        by = np.zeros_like(rad_arr)
        ang = w.theta0

    x = rad_arr * w.r0 / t
    log_w = _log_girsanov(bx, by, t, w)
    log_pref = math.log(math.pi) - 2.0 * math.log(alpha) - math.log(t) - np.log(rad_arr)
    env = log_w + log_pref - (rad_arr - w.r0) ** 2 / (2.0 * t)
    bound = env - x * (1.0 - math.cos(ang))

    out = np.zeros_like(rad_arr)
    live = bound >= _HARD_ZERO_EXP
    if np.any(live):
        ctx = _series_ctx(w, p.tol)
        coeffs = ctx["n"] * ctx["sin0"]
        if slanted:
            signs = np.ones_like(coeffs)
            signs[1::2] = -1.0  # (-1)^(n+1)
            coeffs = coeffs * signs
        log_scale = log_w[live] + log_pref[live] - (rad_arr[live] ** 2 + w.r0 ** 2) / (2.0 * t)
        out[live] = _series_sum(x[live], coeffs, log_scale, bound[live], p)
    return _finalize_density(out, scalar)


def hitting_density_horizontal(t: float, a, p: WedgeDensityParams):
    """Density (per time*length) of firm 2 defaulting first at t with survivor coordinate a."""
    return _hitting_density(t, a, p, slanted=False)


def hitting_density_slanted(t: float, mu_r, p: WedgeDensityParams):
    """Density (per time*length) of firm 1 defaulting first at t, radius mu_r on the slanted ray."""
    return _hitting_density(t, mu_r, p, slanted=True)


def _survival_mu_center(p: WedgeDensityParams, T: float) -> float:
    w = p.wedge
    return w.r0 + math.sqrt(w.phi_norm_sq) * T


def _survival_with_err(T: float, p: WedgeDensityParams, spec: QuadSpec):
    if not (T > 0.0):
        raise DomainError(f"T must be > 0, got {T}")
    w = p.wedge

    def integrand(mus, kappa):
        q = survival_density_q(mus, kappa, T, p)
        return q * girsanov_weight(mus * math.cos(kappa), mus * math.sin(kappa), T, w)

    val, err = integrate_wedge(
        integrand,
        w.wedge_angle,
        spec,
        mu_center=_survival_mu_center(p, T),
        radial_scale=math.sqrt(T),
    )
    return min(max(val, 0.0), 1.0), err


def survival_prob(T: float, p: WedgeDensityParams, spec: QuadSpec = QuadSpec()):
    """P(no default by T): drift-weighted survival density integrated over the wedge."""
    return _survival_with_err(T, p, spec)[0]


def normalization_check(T: float, p: WedgeDensityParams, spec: QuadSpec = QuadSpec()) -> NormalizationResult:
    """Integrate both hitting densities and the survival mass; the three must sum to 1."""
    w = p.wedge
    p2, _ = integrate_time_radius(
        lambda t, mus: hitting_density_horizontal(t, mus, p),
        T,
        spec,
        mu_center=w.r0 * math.cos(w.theta0),
    )
    p1, _ = integrate_time_radius(
        lambda t, mus: hitting_density_slanted(t, mus, p),
        T,
        spec,
        mu_center=w.r0 * math.cos(w.wedge_angle - w.theta0),
    )
    return NormalizationResult(
        p_firm2_first=p2,
        p_firm1_first=p1,
        p_survive=survival_prob(T, p, spec),
    )


def _weighted_cartesian_density(a: float, y: float, t: float, p: WedgeDensityParams) -> float:
    # Drift-weighted survival density in Cartesian coordinates (per area).
    mu = math.hypot(a, y)
    theta = math.atan2(y, a)
    q = survival_density_q(mu, theta, t, p)
    return q / mu * girsanov_weight(a, y, t, p.wedge)


def hitting_density_from_gradient(t: float, a: float, p: WedgeDensityParams) -> float:
    """Hitting density on the horizontal boundary from the density gradient.

    Half the inward normal derivative of the drift-weighted survival density
    at (a, 0), by image-symmetry central differences with Richardson
    refinement.  Independent route to hitting_density_horizontal.
    """
    if not (t > 0.0 and a > 0.0):
        raise DomainError("t and a must be > 0")
    w = p.wedge
    scale = min(a, w.r0, math.sqrt(t))
    if w.wedge_angle < 0.5 * math.pi:
        # keep the probe points inside a narrow wedge
        scale = min(scale, a * math.tan(w.wedge_angle))
    h = 0.05 * scale

    def slope(step: float) -> float:
        # f vanishes on the boundary and extends odd through it, so f(h)/h is
        # a central difference with O(h^2) error.
        return _weighted_cartesian_density(a, step, t, p) / step

    prev = None
    best = math.inf
    result = 0.0
    for _ in range(14):
        d = (4.0 * slope(0.5 * h) - slope(h)) / 3.0
        if prev is not None:
            change = abs(d - prev)
            if change < best:
                best = change
                result = d
            if change <= 1e-9 * max(abs(d), 1e-300):
                result = d
                break
        prev = d
        h *= 0.5
    else:
        if prev is not None and best is math.inf:
            result = prev
    return 0.5 * result
