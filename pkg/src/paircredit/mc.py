"""Brute-force Monte Carlo oracle for the closed-form laws and legs.

Paths follow the exact per-step law of the log-distances to the barriers
(arithmetic Brownian motion with correlated increments); a one-sided
Brownian-bridge correction removes the discrete-monitoring bias of the
barrier check.  The bridge test draws a standard exponential E and flags a
crossing when ``E * sigma^2 dt / 2 > y_k * y_{k+1}``, which is the event
``U < exp(-2 y_k y_{k+1} / (sigma^2 dt))`` without evaluating exp; steps whose
crossing probability is below e^-36 skip the draw entirely.  The two firms'
corrections are applied independently, ignoring the correlation of intra-step
crossings (second order in dt); a same-step double crossing (rare, O(dt)) is
attributed to either firm with probability 1/2.  Default times are recorded
at the step midpoint.

Paths are simulated in fixed-size chunks with independent spawned RNG
streams and merged in chunk order, so results are bitwise identical for a
given (seed, config) regardless of the worker-thread count
(PAIRCREDIT_THREADS, default: available parallelism).
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from numba import njit

from .errors import DomainError
from .params import CdsContract, FirmParams, FtdContract, MarketParams, drift_nu
from .singlename import SingleNameCoeffs, cds_value_at_default

__all__ = [
    "McConfig",
    "McEstimate",
    "FirstPassageSample",
    "HittingHistogram",
    "simulate_first_passage",
    "mc_leg",
    "mc_hitting_histogram",
    "mc_single_name",
    "worker_count",
]

_CHUNK = 125_000  # fixed so estimates never depend on the worker count


@dataclass(frozen=True)
class McConfig:
    """Simulation size, resolution, seed and variance knobs."""

    n_paths: int = 100_000
    steps_per_year: int = 500
    seed: int = 0
    bridge_correction: bool = True
    antithetic: bool = False

    def __post_init__(self):
        if self.n_paths < 1000:
            raise DomainError(f"n_paths must be >= 1000, got {self.n_paths}")
        if self.steps_per_year < 250:
            raise DomainError(f"steps_per_year must be >= 250, got {self.steps_per_year}")


@dataclass(frozen=True)
class McEstimate:
    mean: float
    std_error: float
    n_effective: int

    def __post_init__(self):
        if self.std_error < 0.0:
            raise DomainError("std_error must be >= 0")

    def z_score(self, reference: float) -> float:
        """Distance of `reference` from the estimate in standard errors."""
        if self.std_error == 0.0:
            return 0.0 if reference == self.mean else math.inf
        return (self.mean - reference) / self.std_error


@dataclass(frozen=True)
class FirstPassageSample:
    """Per-path first-passage records over a fixed horizon.

    which: 0 = no default by the horizon, 1 = firm 1 first, 2 = firm 2 first.
    tau:   first default time (midpoint of the crossing step), or horizon.
    coord: survivor's wedge coordinate at tau (nan for surviving paths).
    """

    which: np.ndarray
    tau: np.ndarray
    coord: np.ndarray
    horizon: float

    @property
    def n_paths(self) -> int:
        return self.which.size


@dataclass(frozen=True)
class HittingHistogram:
    """Empirical (tau, coordinate) density on a grid, with per-bin standard errors."""

    t_edges: np.ndarray
    x_edges: np.ndarray
    counts: np.ndarray
    density: np.ndarray
    std_error: np.ndarray
    n_paths: int


def worker_count() -> int:
    env = os.environ.get("PAIRCREDIT_THREADS")
    if env:
        n = int(env)
        if n < 1:
            raise DomainError(f"PAIRCREDIT_THREADS must be >= 1, got {n}")
        return n
    return os.cpu_count() or 1


@njit(nogil=True, cache=True)
def _pair_chunk(rng, n_paths, n_steps, dt, y10, y20, nu1, nu2, s1, s2, rho,
                bridge, antithetic, which, tau, coord):
    root = math.sqrt(1.0 - rho * rho)
    d1 = nu1 * dt
    d2 = nu2 * dt
    sq1 = s1 * math.sqrt(dt)
    sq2 = s2 * math.sqrt(dt)
    k1 = 0.5 * s1 * s1 * dt
    k2 = 0.5 * s2 * s2 * dt
    thr1 = 36.0 * k1  # crossing prob < e^-36: skip the bridge draw
    thr2 = 36.0 * k2
    horizon = n_steps * dt
    z1buf = np.empty(n_steps)
    z2buf = np.empty(n_steps)
    for i in range(n_paths):
        mirror = antithetic and (i & 1) == 1
        y1 = y10
        y2 = y20
        w = 0
        tt = horizon
        cc = np.nan
        for k in range(n_steps):
            if mirror:
                z1 = -z1buf[k]
                z2 = -z2buf[k]
            else:
                z1 = rng.standard_normal()
                z2 = rng.standard_normal()
                if antithetic:
                    z1buf[k] = z1
                    z2buf[k] = z2
            g2 = rho * z1 + root * z2
            y1n = y1 + d1 + sq1 * z1
            y2n = y2 + d2 + sq2 * g2
            hit1 = y1n <= 0.0
            if (not hit1) and bridge:
                prod = y1 * y1n
                if prod < thr1 and rng.standard_exponential() * k1 > prod:
                    hit1 = True
            hit2 = y2n <= 0.0
            if (not hit2) and bridge:
                prod = y2 * y2n
                if prod < thr2 and rng.standard_exponential() * k2 > prod:
                    hit2 = True
            if hit1 or hit2:
                if hit1 and hit2:
                    if rng.standard_normal() > 0.0:
                        hit1 = False
                    else:
                        hit2 = False
                tt = (k + 0.5) * dt
                if hit1:
                    w = 1
                    cc = max(y2n, 0.0) / (s2 * root)
                else:
                    w = 2
                    cc = max(y1n, 0.0) / (s1 * root)
                break
            y1 = y1n
            y2 = y2n
        which[i] = w
        tau[i] = tt
        coord[i] = cc


@njit(nogil=True, cache=True)
def _single_chunk(rng, n_paths, n_steps, dt, y0, nu, sigma, bridge, tau):
    d = nu * dt
    sq = sigma * math.sqrt(dt)
    kk = 0.5 * sigma * sigma * dt
    thr = 36.0 * kk
    horizon = n_steps * dt
    for i in range(n_paths):
        y = y0
        tt = math.inf
        for k in range(n_steps):
            yn = y + d + sq * rng.standard_normal()
            hit = yn <= 0.0
            if (not hit) and bridge:
                prod = y * yn
                if prod < thr and rng.standard_exponential() * kk > prod:
                    hit = True
            if hit:
                tt = (k + 0.5) * dt
                break
            y = yn
        if tt > horizon:
            tt = math.inf
        tau[i] = tt


def _chunk_ranges(n: int):
    return [(lo, min(lo + _CHUNK, n)) for lo in range(0, n, _CHUNK)]


def simulate_first_passage(
    firm1: FirmParams,
    firm2: FirmParams,
    mkt: MarketParams,
    horizon: float,
    cfg: McConfig,
) -> FirstPassageSample:
    """Simulate both firms to the horizon and record the first default per path."""
    if not (horizon > 0.0):
        raise DomainError(f"horizon must be > 0, got {horizon}")
    n_steps = max(1, math.ceil(horizon * cfg.steps_per_year))
    dt = horizon / n_steps
    n = cfg.n_paths
    which = np.empty(n, dtype=np.int8)
    tau = np.empty(n, dtype=np.float64)
    coord = np.empty(n, dtype=np.float64)
    nu1, nu2 = drift_nu(firm1, mkt), drift_nu(firm2, mkt)
    ranges = _chunk_ranges(n)
    seeds = np.random.SeedSequence(cfg.seed).spawn(len(ranges))

    def run(idx: int):
        lo, hi = ranges[idx]
        _pair_chunk(
            np.random.default_rng(seeds[idx]),
            hi - lo,
            n_steps,
            dt,
            firm1.y0,
            firm2.y0,
            nu1,
            nu2,
            firm1.sigma,
            firm2.sigma,
            mkt.rho,
            cfg.bridge_correction,
            cfg.antithetic,
            which[lo:hi],
            tau[lo:hi],
            coord[lo:hi],
        )

    workers = min(worker_count(), len(ranges))
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            list(ex.map(run, range(len(ranges))))
    else:
        for idx in range(len(ranges)):
            run(idx)
    return FirstPassageSample(which=which, tau=tau, coord=coord, horizon=horizon)


def _estimate(payoffs: np.ndarray) -> McEstimate:
    n = payoffs.size
    mean = float(payoffs.mean())
    se = float(payoffs.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return McEstimate(mean=mean, std_error=se, n_effective=n)


def mc_leg(
    kind: str,
    firm1: FirmParams,
    firm2: FirmParams,
    mkt: MarketParams,
    contract,
    cfg: McConfig,
    sample: FirstPassageSample | None = None,
) -> McEstimate:
    """Monte Carlo estimate of one leg: kind in {"D_s", "D_c", "F", "D_ftd"}.

    A precomputed FirstPassageSample over the contract maturity may be shared
    across legs; otherwise one is simulated here.  The D_c estimator prices
    the CDS at the counterparty default with the closed-form single-name
    value, so it tests the joint law given the single-name formulas (which
    have their own one-dimensional oracle).
    """
    T = contract.maturity
    if sample is None:
        sample = simulate_first_passage(firm1, firm2, mkt, T, cfg)
    if abs(sample.horizon - T) > 1e-12:
        raise DomainError(
            f"sample horizon {sample.horizon} != contract maturity {T}"
        )
    r = mkt.r
    which, tau = sample.which, sample.tau
    payoffs = np.zeros(sample.n_paths)

    if kind == "D_s":
        if not isinstance(contract, CdsContract):
            raise DomainError("D_s needs a CdsContract")
        mask = which == 1
        payoffs[mask] = (
            contract.notional
            * (1.0 - contract.recovery_underlying)
            * np.exp(-r * tau[mask])
        )
    elif kind == "D_c":
        if not isinstance(contract, CdsContract):
            raise DomainError("D_c needs a CdsContract")
        coeffs = SingleNameCoeffs.from_params(firm1, mkt)
        mask = which == 2
        if np.any(mask):
            mu = sample.coord[mask] * math.sqrt(1.0 - mkt.rho * mkt.rho)
            payoffs[mask] = (1.0 - contract.recovery_counterparty) * cds_value_at_default(
                mu, tau[mask], contract, coeffs, mkt
            )
    elif kind == "F":
        if not isinstance(contract, CdsContract):
            raise DomainError("F needs a CdsContract")
        if not (r > 0.0):
            raise DomainError("fee leg requires r > 0")
        payoffs = contract.spread * contract.notional * (1.0 - np.exp(-r * tau)) / r
    elif kind == "D_ftd":
        if not isinstance(contract, FtdContract):
            raise DomainError("D_ftd needs an FtdContract")
        mask = which > 0
        payoffs[mask] = contract.notional * (1.0 - contract.recovery) * np.exp(-r * tau[mask])
    else:
        raise DomainError(f"unknown leg kind {kind!r}")
    return _estimate(payoffs)


def mc_hitting_histogram(
    boundary: str,
    firm1: FirmParams,
    firm2: FirmParams,
    mkt: MarketParams,
    horizon: float,
    t_edges,
    x_edges,
    cfg: McConfig,
    sample: FirstPassageSample | None = None,
) -> HittingHistogram:
    """Binned empirical (tau, survivor-coordinate) density on one boundary."""
    if boundary not in ("horizontal", "slanted"):
        raise DomainError(f"boundary must be 'horizontal' or 'slanted', got {boundary!r}")
    if sample is None:
        sample = simulate_first_passage(firm1, firm2, mkt, horizon, cfg)
    t_edges = np.asarray(t_edges, dtype=float)
    x_edges = np.asarray(x_edges, dtype=float)
    mask = sample.which == (2 if boundary == "horizontal" else 1)
    counts, _, _ = np.histogram2d(
        sample.tau[mask], sample.coord[mask], bins=(t_edges, x_edges)
    )
    n = sample.n_paths
    area = np.outer(np.diff(t_edges), np.diff(x_edges))
    phat = counts / n
    density = phat / area
    std_error = np.sqrt(phat * (1.0 - phat) / n) / area
    return HittingHistogram(
        t_edges=t_edges,
        x_edges=x_edges,
        counts=counts,
        density=density,
        std_error=std_error,
        n_paths=n,
    )


def mc_single_name(
    firm: FirmParams,
    mkt: MarketParams,
    mu: float,
    horizon: float,
    cfg: McConfig,
) -> tuple[McEstimate, McEstimate]:
    """1-D barrier oracle from scaled distance mu: (P(tau <= h), E[e^{-r tau} 1{tau < h}])."""
    if not (mu >= 0.0):
        raise DomainError(f"mu must be >= 0, got {mu}")
    if not (horizon > 0.0):
        raise DomainError(f"horizon must be > 0, got {horizon}")
    n_steps = max(1, math.ceil(horizon * cfg.steps_per_year))
    dt = horizon / n_steps
    n = cfg.n_paths
    tau = np.empty(n, dtype=np.float64)
    nu = drift_nu(firm, mkt)
    ranges = _chunk_ranges(n)
    seeds = np.random.SeedSequence(cfg.seed).spawn(len(ranges))

    def run(idx: int):
        lo, hi = ranges[idx]
        _single_chunk(
            np.random.default_rng(seeds[idx]),
            hi - lo,
            n_steps,
            dt,
            mu * firm.sigma,
            nu,
            firm.sigma,
            cfg.bridge_correction,
            tau[lo:hi],
        )

    workers = min(worker_count(), len(ranges))
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            list(ex.map(run, range(len(ranges))))
    else:
        for idx in range(len(ranges)):
            run(idx)

    hit = np.isfinite(tau)
    discounted = np.where(hit, np.exp(-mkt.r * np.where(hit, tau, 0.0)), 0.0)
    return _estimate(hit.astype(float)), _estimate(discounted)
