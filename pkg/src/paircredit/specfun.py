"""Special functions: standard normal CDF and modified Bessel I of real order.

The Bessel evaluators switch between the ascending power series and the
large-argument asymptotic expansion at ``x = max(30, 2*order^2)``; both
expansions reach ~1e-10 relative accuracy on the overlap.  ``log_bessel_i``
adds a rescaled series (arbitrary magnitude) and a Debye large-order
expansion so that the log value is available wherever the raw value would
overflow double precision.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erfc as _erfc, gammaln as _gammaln

from .errors import DomainError, OverflowSignal

__all__ = [
    "SeriesTolerances",
    "normal_cdf",
    "bessel_i",
    "log_bessel_i",
    "bessel_i_matrix",
]

# Raw I_nu(x) values stop being representable (e^x scale) shortly above here.
OVERFLOW_X = 705.0

# Beyond this the rescaled ascending series gets too long; switch to Debye.
_LOG_SERIES_X_MAX = 3000.0

_SQRT1_2 = 1.0 / math.sqrt(2.0)


@dataclass(frozen=True)
class SeriesTolerances:
    """Truncation policy for the boundary/survival series.

    term_tol is relative to the running partial sum; max_terms caps the
    series length (SeriesNoConvergence beyond it).
    """

    term_tol: float = 1e-12
    max_terms: int = 200

    def __post_init__(self):
        if not (self.term_tol > 0.0):
            raise DomainError(f"term_tol must be > 0, got {self.term_tol}")
        if self.max_terms < 8:
            raise DomainError(f"max_terms must be >= 8, got {self.max_terms}")


def normal_cdf(x):
    """Standard normal CDF; accepts scalars or numpy arrays."""
    if isinstance(x, (float, int)):
        return 0.5 * math.erfc(-float(x) * _SQRT1_2)
    return 0.5 * _erfc(-np.asarray(x, dtype=float) * _SQRT1_2)


def _ascending_series(order: float, x: float) -> float:
    # I_nu(x) = sum_k (x/2)^(nu+2k) / (k! Gamma(nu+k+1)), stable for x <= OVERFLOW_X.
    lt0 = order * math.log(0.5 * x) - math.lgamma(order + 1.0)
    if lt0 < -745.0:
        return 0.0
    term = math.exp(lt0)
    total = term
    q = 0.25 * x * x
    for k in range(1, 20000):
        term *= q / (k * (order + k))
        total += term
        if term <= 1e-17 * total:
            return total
    raise RuntimeError("ascending Bessel series failed to terminate")  # pragma: no cover


def _asymptotic_sum(order: float, x: float) -> float:
    # sum_m (-1)^m a_m(order)/x^m with a_m = prod_{j<m} (4 nu^2 - (2j+1)^2) / (m! 8^m).
    four_nu2 = 4.0 * order * order
    term = 1.0
    total = 1.0
    prev = abs(term)
    for m in range(1, 200):
        term *= -(four_nu2 - (2.0 * m - 1.0) ** 2) / (8.0 * x * m)
        if abs(term) > prev:  # asymptotic tail started growing: truncate
            break
        total += term
        prev = abs(term)
        if abs(term) <= 1e-17 * abs(total):
            break
    return total


def bessel_i(order: float, x: float) -> float:
    """Modified Bessel function of the first kind, real order >= 0, x >= 0.

    Raises OverflowSignal for x beyond the double-precision overflow
    threshold; use log_bessel_i there.
    """
    if order < 0.0:
        raise DomainError(f"order must be >= 0, got {order}")
    if x < 0.0:
        raise DomainError(f"x must be >= 0, got {x}")
    if x == 0.0:
        return 1.0 if order == 0.0 else 0.0
    if x > OVERFLOW_X:
        raise OverflowSignal(
            f"I_nu({x}) exceeds double range; use log_bessel_i"
        )
    if x <= max(30.0, 2.0 * order * order):
        return _ascending_series(order, x)
    return math.exp(x - 0.5 * math.log(2.0 * math.pi * x)) * _asymptotic_sum(order, x)


def _log_series_rescaled(order: float, x: float) -> float:
    # Rescaled ascending series: log(t0) + log(sum of term ratios), immune to
    # overflow/underflow of the raw terms.
    lt0 = order * math.log(0.5 * x) - math.lgamma(order + 1.0)
    term = 1.0
    total = 1.0
    offset = 0.0
    q = 0.25 * x * x
    for k in range(1, 100000):
        term *= q / (k * (order + k))
        total += term
        if total > 1e280:
            total *= 1e-280
            term *= 1e-280
            offset += 280.0 * math.log(10.0)
        if term <= 1e-17 * total:
            return lt0 + math.log(total) + offset
    raise RuntimeError("rescaled Bessel series failed to terminate")  # pragma: no cover


def _debye_u(k: int, p: float) -> float:
    # Debye polynomials u_k(p) of the uniform large-order expansion.
    if k == 0:
        return 1.0
    if k == 1:
        return (3.0 * p - 5.0 * p**3) / 24.0
    if k == 2:
        return (81.0 * p**2 - 462.0 * p**4 + 385.0 * p**6) / 1152.0
    if k == 3:
        return (30375.0 * p**3 - 369603.0 * p**5 + 765765.0 * p**7 - 425425.0 * p**9) / 414720.0
    if k == 4:
        return (
            4465125.0 * p**4
            - 94121676.0 * p**6
            + 349922430.0 * p**8
            - 446185740.0 * p**10
            + 185910725.0 * p**12
        ) / 39813120.0
    if k == 5:
        return (
            1519035525.0 * p**5
            - 49286948607.0 * p**7
            + 284499769554.0 * p**9
            - 614135872350.0 * p**11
            + 566098157625.0 * p**13
            - 188699385875.0 * p**15
        ) / 6688604160.0
    raise ValueError(k)  # pragma: no cover


def _log_debye(order: float, x: float) -> float:
    # DLMF-style uniform expansion; adequate (<~3e-10 rel) for order >= ~38.
    z = x / order
    w = math.hypot(1.0, z)
    eta = w + math.log(z / (1.0 + w))
    p = 1.0 / w
    s = 0.0
    for k in range(6):
        s += _debye_u(k, p) / order**k
    return order * eta - 0.5 * math.log(2.0 * math.pi * order) - 0.5 * math.log(w) + math.log(s)


def log_bessel_i(order: float, x: float) -> float:
    """ln I_nu(x) for real order >= 0 and x > 0, valid far beyond raw overflow."""
    if order < 0.0:
        raise DomainError(f"order must be >= 0, got {order}")
    if not (x > 0.0):
        raise DomainError(f"x must be > 0, got {x}")
    if x > max(30.0, 2.0 * order * order):
        return x - 0.5 * math.log(2.0 * math.pi * x) + math.log(_asymptotic_sum(order, x))
    if x <= _LOG_SERIES_X_MAX:
        return _log_series_rescaled(order, x)
    return _log_debye(order, x)


def bessel_i_matrix(orders: np.ndarray, x: np.ndarray, lgam: np.ndarray | None = None) -> np.ndarray:
    """I_nu(x) on an (orders, x) grid via the ascending series, linear scale.

    Intended for the wedge series: one call evaluates every Bessel order at
    every quadrature node.  Requires max(x) <= 650 so that e^x-scale sums keep
    double-precision headroom; entries too small for double underflow to
    exactly 0.0.

    lgam optionally carries precomputed lgamma(orders + 1).
    """
    orders = np.asarray(orders, dtype=float)
    x = np.asarray(x, dtype=float)
    if x.size == 0 or orders.size == 0:
        return np.zeros((orders.size, x.size))
    xmax = float(x.max())
    if xmax > 650.0:
        raise OverflowSignal(f"bessel_i_matrix limited to x <= 650, got {xmax}")
    if float(x.min()) <= 0.0:
        raise DomainError("bessel_i_matrix requires x > 0")
    if lgam is None:
        lgam = _gammaln(orders + 1.0)

    nu = orders[:, None]
    lt0 = nu * np.log(0.5 * x)[None, :] - lgam[:, None]
    term = np.exp(lt0)
    total = term.copy()
    q = (0.25 * x * x)[None, :]
    # Worst-case term count grows ~ x/2 + O(sqrt(x)); 2000 is generous for x <= 650.
    for k in range(1, 2000):
        term *= q / (k * (nu + k))
        total += term
        if not np.any(term > 1e-16 * total + 1e-320):
            return total
    raise RuntimeError("bessel_i_matrix series failed to terminate")  # pragma: no cover
