"""Adaptive Gauss-Kronrod integration for the pricing integrals.

Two improper-domain drivers sit on top of one adaptive (G7, K15) engine:

* ``integrate_time_radius`` -- nested rule over (t, mu) in (0, T] x (0, inf);
  the outer time variable is substituted t = T*u^2 to concentrate nodes near
  t = 0 where hitting densities vary fastest, and the radial domain is
  truncated at ``mu_center + mu_cutoff_sigmas * sqrt(t)``.
* ``integrate_wedge`` -- nested rule over (mu, kappa) in (0, inf) x (0, alpha).

Inner integrands are evaluated vectorized over the 15 panel nodes.  Both
drivers report a combined error estimate (outer panel error plus the
integrated inner error estimates) and raise QuadratureFailure once the panel
budget is exhausted.
"""
from __future__ import annotations

import heapq
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, QuadratureFailure

__all__ = ["QuadSpec", "adaptive_gauss_kronrod", "integrate_time_radius", "integrate_wedge"]

# (G7, K15) nodes and weights, positive half, QUADPACK dqk15 constants.
_XGK = np.array([
    0.9914553711208126, 0.9491079123427585, 0.8648644233597691,
    0.7415311855993944, 0.5860872354676911, 0.4058451513773972,
    0.2077849550078985, 0.0,
])
_WGK = np.array([
    0.0229353220105292, 0.0630920926299786, 0.1047900103222502,
    0.1406532597155259, 0.1690047266392679, 0.1903505780647854,
    0.2044329400752989, 0.2094821410847278,
])
_WG = np.array([
    0.1294849661688697, 0.2797053914892767,
    0.3818300505051189, 0.4179591836734694,
])

# All 15 nodes on [-1, 1] and their Kronrod/Gauss weights, in one fixed order.
_NODES = np.concatenate([-_XGK[:7], _XGK[::-1]])
_W_K = np.concatenate([_WGK[:7], _WGK[::-1]])
_w_gauss_half = np.zeros(8)
_w_gauss_half[[1, 3, 5, 7]] = _WG
_W_G = np.concatenate([_w_gauss_half[:7], _w_gauss_half[::-1]])
_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class QuadSpec:
    """Error-control knobs for the pricing integrals."""

    rel_tol: float = 1e-6
    abs_tol: float = 1e-10
    mu_cutoff_sigmas: float = 12.0
    max_subdivisions: int = 400

    def __post_init__(self):
        if not (self.rel_tol > 0.0):
            raise DomainError(f"rel_tol must be > 0, got {self.rel_tol}")
        if not (self.abs_tol >= 0.0):
            raise DomainError(f"abs_tol must be >= 0, got {self.abs_tol}")
        if not (self.mu_cutoff_sigmas >= 8.0):
            raise DomainError(f"mu_cutoff_sigmas must be >= 8, got {self.mu_cutoff_sigmas}")
        if self.max_subdivisions < 4:
            raise DomainError(f"max_subdivisions must be >= 4, got {self.max_subdivisions}")


def _eval_panel(f, a: float, b: float, vectorized: bool):
    """One K15/G7 evaluation on [a, b] -> (values, err, where values has >= 1 components)."""
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    xs = mid + half * _NODES
    if vectorized:
        fx = np.atleast_2d(np.asarray(f(xs), dtype=float))  # (ncomp, 15)
    else:
        fx = np.array([np.atleast_1d(np.asarray(f(x), dtype=float)) for x in xs]).T
    resk = fx @ _W_K
    resg = fx @ _W_G
    vals = resk * half
    # QUADPACK-style error sharpening on the first component.
    f0 = fx[0]
    resabs = float(np.abs(f0) @ _W_K) * abs(half)
    reskh = 0.5 * float(resk[0])
    resasc = float(np.abs(f0 - reskh) @ _W_K) * abs(half)
    err = abs(float(resk[0] - resg[0])) * abs(half)
    if resasc != 0.0 and err != 0.0:
        err = resasc * min(1.0, (200.0 * err / resasc) ** 1.5)
    err = max(err, 50.0 * _EPS * resabs)
    return vals, err


def adaptive_gauss_kronrod(
    f,
    a: float,
    b: float,
    *,
    rel_tol: float,
    abs_tol: float,
    max_subdivisions: int = 400,
    breakpoints=None,
    vectorized: bool = False,
):
    """Adaptive (G7, K15) integration of f over [a, b].

    f may return a scalar or a vector of components; convergence and panel
    splitting are driven by the first component and every component is
    integrated with the same nodes.  With vectorized=True, f receives the
    15-node array and must return shape (15,) or (ncomp, 15).

    Returns (values, error_estimate) where values has the shape of one f
    evaluation.  Raises QuadratureFailure if the panel budget is exhausted
    before the tolerance is met.
    """
    if not b > a:
        raise DomainError(f"empty integration interval [{a}, {b}]")
    edges = [a, b] if not breakpoints else sorted({a, b, *(p for p in breakpoints if a < p < b)})

    heap = []  # (-err, tiebreak, a, b, vals, err)
    tick = 0
    for lo, hi in zip(edges[:-1], edges[1:]):
        vals, err = _eval_panel(f, lo, hi, vectorized)
        heapq.heappush(heap, (-err, tick, lo, hi, vals, err))
        tick += 1

    while True:
        total = sum(item[4][0] for item in heap)
        total_err = sum(item[5] for item in heap)
        if total_err <= max(abs_tol, rel_tol * abs(total)):
            break
        if len(heap) >= max_subdivisions:
            raise QuadratureFailure(
                f"no convergence with {len(heap)} panels on [{a}, {b}]: "
                f"err={total_err:.3e} vs tol={max(abs_tol, rel_tol * abs(total)):.3e}"
            )
        _, _, lo, hi, _, _ = heapq.heappop(heap)
        mid = 0.5 * (lo + hi)
        for plo, phi in ((lo, mid), (mid, hi)):
            vals, err = _eval_panel(f, plo, phi, vectorized)
            heapq.heappush(heap, (-err, tick, plo, phi, vals, err))
            tick += 1

    values = sum(item[4] for item in heap)
    err = sum(item[5] for item in heap)
    if values.size == 1:
        return float(values[0]), err
    return values, err


def _radial_breakpoints(center: float, width: float, mu_max: float):
    pts = []
    if center > 0.0:
        for k in (-8.0, -3.0, 3.0, 8.0):
            pts.append(center + k * width)
        pts.append(center)
    else:
        pts.extend([3.0 * width, 8.0 * width])
    return [p for p in pts if 0.0 < p < mu_max]


def integrate_time_radius(
    integrand,
    T: float,
    spec: QuadSpec,
    *,
    mu_center: float = 0.0,
    inner_breakpoints=None,
):
    """Integrate integrand(t, mu) over (0, T] x (0, inf).

    integrand must accept (t: float, mu: ndarray) and return an ndarray;
    its radial decay is assumed Gaussian around mu_center with scale sqrt(t),
    which sets the truncation point and the initial panel layout.
    inner_breakpoints(t), if given, contributes extra radial panel edges
    (e.g. a known kink location of the integrand).

    Returns (value, error_estimate).
    """
    if not (T > 0.0):
        raise DomainError(f"T must be > 0, got {T}")
    inner_rel = 0.25 * spec.rel_tol
    inner_abs = 0.25 * spec.abs_tol / T
    # A decay center behind the origin still leaves Gaussian mass near 0.
    center = max(mu_center, 0.0)

    def outer(u: float):
        t = T * u * u
        if t < 1e-300:
            return np.zeros(2)
        width = math.sqrt(t)
        mu_max = center + spec.mu_cutoff_sigmas * width
        bps = _radial_breakpoints(center, width, mu_max)
        if inner_breakpoints is not None:
            bps.extend(p for p in inner_breakpoints(t) if 0.0 < p < mu_max)
        val, ierr = adaptive_gauss_kronrod(
            lambda mus: integrand(t, mus),
            0.0,
            mu_max,
            rel_tol=inner_rel,
            abs_tol=inner_abs,
            max_subdivisions=spec.max_subdivisions,
            breakpoints=bps,
            vectorized=True,
        )
        jac = 2.0 * T * u
        return np.array([val * jac, ierr * jac])

    vals, outer_err = adaptive_gauss_kronrod(
        outer,
        0.0,
        1.0,
        rel_tol=spec.rel_tol,
        abs_tol=spec.abs_tol,
        max_subdivisions=spec.max_subdivisions,
    )
    return float(vals[0]), float(outer_err + vals[1])


def integrate_wedge(
    integrand,
    alpha: float,
    spec: QuadSpec,
    *,
    mu_center: float = 0.0,
    radial_scale: float = 1.0,
):
    """Integrate integrand(mu, kappa) over (0, inf) x (0, alpha).

    integrand must accept (mu: ndarray, kappa: float) and return an ndarray;
    radial decay is Gaussian around mu_center with scale radial_scale.

    Returns (value, error_estimate).
    """
    if not (alpha > 0.0):
        raise DomainError(f"alpha must be > 0, got {alpha}")
    if not (radial_scale > 0.0):
        raise DomainError(f"radial_scale must be > 0, got {radial_scale}")
    center = max(mu_center, 0.0)
    mu_max = center + spec.mu_cutoff_sigmas * radial_scale
    bps = _radial_breakpoints(center, radial_scale, mu_max)
    inner_rel = 0.25 * spec.rel_tol
    inner_abs = 0.25 * spec.abs_tol / alpha

    def outer(kappa: float):
        val, ierr = adaptive_gauss_kronrod(
            lambda mus: integrand(mus, kappa),
            0.0,
            mu_max,
            rel_tol=inner_rel,
            abs_tol=inner_abs,
            max_subdivisions=spec.max_subdivisions,
            breakpoints=bps,
            vectorized=True,
        )
        return np.array([val, ierr])

    vals, outer_err = adaptive_gauss_kronrod(
        outer,
        0.0,
        alpha,
        rel_tol=spec.rel_tol,
        abs_tol=spec.abs_tol,
        max_subdivisions=spec.max_subdivisions,
    )
    return float(vals[0]), float(outer_err + vals[1])
