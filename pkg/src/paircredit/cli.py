"""Command-line front door: price scenarios, dump densities, cross-validate against MC.

Verbs:
    price-cds   legs, fair value and par spread of the CDS scenario
    price-ftd   default leg and fair spread of the first-to-default scenario
    density     CSV dump of the boundary and survival densities on a grid
    validate    closed-form vs Monte Carlo side-by-side with z-scores

Exit codes: 0 ok, 2 scenario validation failure, 3 numerical non-convergence,
4 validation (z-score) failure.

Reports are deterministic for a fixed scenario file and seed; the timestamp
lives on a separate header line (text) or in the meta block (json).  The
worker count is taken from PAIRCREDIT_THREADS and affects runtime only.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import replace
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .errors import (
    DegenerateContract,
    DomainError,
    NoRoot,
    OverflowSignal,
    QuadratureFailure,
    SeriesNoConvergence,
)
from .jointlaw import (
    WedgeDensityParams,
    hitting_density_horizontal,
    hitting_density_slanted,
    normalization_check,
    survival_density_q,
)
from .mc import mc_hitting_histogram, mc_leg, simulate_first_passage
from .params import derive_wedge
from .pricing import (
    cds_par_spread,
    counterparty_default_leg,
    fee_leg,
    ftd_default_leg,
    ftd_fair_spread,
    standard_default_leg,
    _fee_per_unit_spread,
)
from .scenario import Scenario, ScenarioError, load_scenario

_NUMERIC_ERRORS = (SeriesNoConvergence, QuadratureFailure, OverflowSignal, NoRoot, DegenerateContract)


def _fmt(x: float) -> str:
    return f"{x:.12g}"


def _parse_grid(spec: str, name: str):
    try:
        lo, hi, n = spec.split(":")
        lo, hi, n = float(lo), float(hi), int(n)
    except ValueError as exc:
        raise ScenarioError(name, f"grid must be MIN:MAX:N, got {spec!r}") from exc
    if n < 1 or hi < lo or (n > 1 and hi == lo):
        raise ScenarioError(name, f"need MAX >= MIN and N >= 1, got {spec!r}")
    return np.linspace(lo, hi, n)


def _emit(args, command: str, body_lines: list[str], payload: dict) -> None:
    stamp = datetime.now(timezone.utc).isoformat()
    if args.format == "json":
        doc = {
            "meta": {"command": command, "generated": stamp, "version": __version__},
            "report": payload,
        }
        print(json.dumps(doc, indent=2, sort_keys=True))
    else:
        print(f"# paircredit {command} | generated {stamp}")
        for line in body_lines:
            print(line)


def _apply_overrides(scn: Scenario, args) -> Scenario:
    if getattr(args, "seed", None) is not None:
        scn = replace(scn, mc=replace(scn.mc, seed=args.seed))
    if getattr(args, "tol", None) is not None:
        scn = replace(scn, quad=replace(scn.quad, rel_tol=args.tol))
    return scn


def _cmd_price_cds(args) -> int:
    scn = _apply_overrides(load_scenario(args.scenario), args)
    if scn.contract_kind != "cds":
        raise ScenarioError("contract.kind", "price-cds needs a cds contract")
    f1, f2, mkt, c = scn.firm1, scn.firm2, scn.market, scn.contract
    d_s = standard_default_leg(f1, f2, mkt, c, scn.quad, scn.series)
    d_c = counterparty_default_leg(f1, f2, mkt, c, scn.quad, scn.series)
    f = fee_leg(f1, f2, mkt, c, scn.quad, scn.series)
    fair = d_s.value + d_c.value - f.value
    fair_err = d_s.error_estimate + d_c.error_estimate + f.error_estimate
    fprime, fp_err, _ = _fee_per_unit_spread(f1, f2, mkt, c.maturity, c.notional, scn.quad, scn.series)
    par = cds_par_spread(f1, f2, mkt, c, scn.quad, scn.series)
    # leg error budget plus the bisection termination slack, mapped through
    # the fair value's slope in the spread (~ -fprime)
    root_slack = max(scn.quad.abs_tol, 4.0 * (d_s.error_estimate + scn.quad.rel_tol * d_s.value + fp_err))
    par_err = (d_s.error_estimate + d_c.error_estimate + par * fp_err + root_slack) / fprime

    body = [
        f"D_s = {_fmt(d_s.value)} +- {_fmt(d_s.error_estimate)}",
        f"D_c = {_fmt(d_c.value)} +- {_fmt(d_c.error_estimate)}",
        f"F = {_fmt(f.value)} +- {_fmt(f.error_estimate)}",
        f"fair_value = {_fmt(fair)} +- {_fmt(fair_err)}",
        f"par_spread = {_fmt(par)} +- {_fmt(par_err)}",
    ]
    payload = {
        "D_s": {"value": d_s.value, "error": d_s.error_estimate},
        "D_c": {"value": d_c.value, "error": d_c.error_estimate},
        "F": {"value": f.value, "error": f.error_estimate, "breakdown": f.breakdown},
        "fair_value": {"value": fair, "error": fair_err},
        "par_spread": {"value": par, "error": par_err},
    }
    _emit(args, "price-cds", body, payload)
    return 0


def _cmd_price_ftd(args) -> int:
    scn = _apply_overrides(load_scenario(args.scenario), args)
    if scn.contract_kind != "ftd":
        raise ScenarioError("contract.kind", "price-ftd needs an ftd contract")
    f1, f2, mkt, c = scn.firm1, scn.firm2, scn.market, scn.contract
    d = ftd_default_leg(f1, f2, mkt, c, scn.quad, scn.series)
    fprime, fp_err, _ = _fee_per_unit_spread(f1, f2, mkt, c.maturity, c.notional, scn.quad, scn.series)
    spread = d.value / fprime
    spread_err = (d.error_estimate + spread * fp_err) / fprime
    body = [
        f"D = {_fmt(d.value)} +- {_fmt(d.error_estimate)}",
        f"fair_spread = {_fmt(spread)} +- {_fmt(spread_err)}",
    ]
    payload = {
        "D": {"value": d.value, "error": d.error_estimate, "breakdown": d.breakdown},
        "fair_spread": {"value": spread, "error": spread_err},
    }
    _emit(args, "price-ftd", body, payload)
    return 0


def _cmd_density(args) -> int:
    scn = _apply_overrides(load_scenario(args.scenario), args)
    wedge = derive_wedge(scn.firm1, scn.firm2, scn.market)
    p = WedgeDensityParams(wedge, scn.series)
    T = scn.contract.maturity
    ts = _parse_grid(args.t_grid, "--t-grid") if args.t_grid else np.linspace(T / 10.0, T, 10)
    if args.coord_grid:
        xs = _parse_grid(args.coord_grid, "--coord-grid")
    else:
        xs = np.linspace(wedge.r0 / 10.0, wedge.r0 + 2.0 * math.sqrt(T), 10)

    print("t,coord,f_horizontal,f_slanted,f_survival")
    for t in ts:
        fh = hitting_density_horizontal(float(t), xs, p)
        fs = hitting_density_slanted(float(t), xs, p)
        fq = survival_density_q(xs, wedge.theta0, float(t), p)
        for j, x in enumerate(xs):
            print(f"{_fmt(t)},{_fmt(x)},{_fmt(fh[j])},{_fmt(fs[j])},{_fmt(fq[j])}")
    return 0


def _cmd_validate(args) -> int:
    scn = _apply_overrides(load_scenario(args.scenario), args)
    f1, f2, mkt, c = scn.firm1, scn.firm2, scn.market, scn.contract
    T = c.maturity

    # Test hook: shift the wedge opening used by every closed-form quantity
    # (through its defining correlation); the MC side keeps the true market.
    mkt_cf = mkt
    if args.corrupt_wedge_angle:
        true_alpha = derive_wedge(f1, f2, mkt).wedge_angle
        mkt_cf = replace(mkt, rho=math.sin(true_alpha + args.corrupt_wedge_angle - 0.5 * math.pi))

    sample = simulate_first_passage(f1, f2, mkt, T, scn.mc)
    flags: list[str] = []
    body = [f"seed = {scn.mc.seed}", f"n_paths = {scn.mc.n_paths}", f"steps_per_year = {scn.mc.steps_per_year}"]
    payload: dict = {"seed": scn.mc.seed, "legs": {}, "normalization": {}, "histograms": {}}

    if scn.contract_kind == "cds":
        legs = [
            ("D_s", lambda: standard_default_leg(f1, f2, mkt_cf, c, scn.quad, scn.series).value),
            ("D_c", lambda: counterparty_default_leg(f1, f2, mkt_cf, c, scn.quad, scn.series).value),
            ("F", lambda: fee_leg(f1, f2, mkt_cf, c, scn.quad, scn.series).value),
        ]
    else:
        legs = [("D_ftd", lambda: ftd_default_leg(f1, f2, mkt_cf, c, scn.quad, scn.series).value)]
    for kind, closed in legs:
        cf = closed()
        est = mc_leg(kind, f1, f2, mkt, c, scn.mc, sample=sample)
        z = est.z_score(cf)
        flagged = abs(z) > 3.0
        if flagged:
            flags.append(f"{kind} z={z:.2f}")
        body.append(
            f"{kind}: closed_form = {_fmt(cf)}  mc = {_fmt(est.mean)} +- {_fmt(est.std_error)}  z = {z:+.3f}{'  FLAG' if flagged else ''}"
        )
        payload["legs"][kind] = {
            "closed_form": cf, "mc_mean": est.mean, "mc_std_error": est.std_error,
            "z": z, "flagged": flagged,
        }

    nc = normalization_check(T, WedgeDensityParams(derive_wedge(f1, f2, mkt_cf), scn.series), scn.quad)
    n_flag = abs(nc.total - 1.0) > 2e-3
    if n_flag:
        flags.append(f"normalization |total-1|={abs(nc.total - 1.0):.2e}")
    body.append(
        f"normalization: firm1_first = {_fmt(nc.p_firm1_first)}  firm2_first = {_fmt(nc.p_firm2_first)}  "
        f"survive = {_fmt(nc.p_survive)}  total = {_fmt(nc.total)}{'  FLAG' if n_flag else ''}"
    )
    payload["normalization"] = {
        "p_firm1_first": nc.p_firm1_first, "p_firm2_first": nc.p_firm2_first,
        "p_survive": nc.p_survive, "total": nc.total, "flagged": n_flag,
    }

    wedge_cf = derive_wedge(f1, f2, mkt_cf)
    p_cf = WedgeDensityParams(wedge_cf, scn.series)
    t_edges = np.linspace(0.0, T, 7)
    x_edges = np.linspace(0.0, wedge_cf.r0 + 2.0 * math.sqrt(T), 9)
    for boundary, dens in (("horizontal", hitting_density_horizontal), ("slanted", hitting_density_slanted)):
        hist = mc_hitting_histogram(boundary, f1, f2, mkt, T, t_edges, x_edges, scn.mc, sample=sample)
        checked = within = 0
        for i in range(len(t_edges) - 1):
            for j in range(len(x_edges) - 1):
                if hist.counts[i, j] < 50.0:
                    continue
                # Bin-averaged closed form on a 3x3 midpoint grid.
                tc = t_edges[i] + (np.array([1, 3, 5]) / 6.0) * (t_edges[i + 1] - t_edges[i])
                xc = x_edges[j] + (np.array([1, 3, 5]) / 6.0) * (x_edges[j + 1] - x_edges[j])
                cf = float(np.mean([np.mean(dens(float(tt), xc, p_cf)) for tt in tc]))
                z = (hist.density[i, j] - cf) / hist.std_error[i, j]
                checked += 1
                if abs(z) <= 3.0:
                    within += 1
        frac = within / checked if checked else 1.0
        h_flag = frac < 0.95
        if h_flag:
            flags.append(f"{boundary} histogram {within}/{checked} within 3 s.e.")
        body.append(
            f"histogram[{boundary}]: {within}/{checked} populated bins within 3 s.e.{'  FLAG' if h_flag else ''}"
        )
        payload["histograms"][boundary] = {"checked": checked, "within": within, "flagged": h_flag}

    verdict = "FAIL" if flags else "PASS"
    body.append(f"verdict = {verdict}")
    payload["verdict"] = verdict
    _emit(args, "validate", body, payload)
    return 4 if flags else 0


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="paircredit", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--scenario", required=True, help="scenario JSON file")
        p.add_argument("--format", choices=("text", "json"), default="text")
        p.add_argument("--seed", type=int, default=None, help="override the MC seed")
        p.add_argument("--tol", type=float, default=None, help="override the quadrature relative tolerance")

    p = sub.add_parser("price-cds", help="price the CDS with counterparty risk")
    common(p)
    p.set_defaults(fn=_cmd_price_cds)

    p = sub.add_parser("price-ftd", help="price the first-to-default swap")
    common(p)
    p.set_defaults(fn=_cmd_price_ftd)

    p = sub.add_parser("density", help="CSV dump of boundary and survival densities")
    common(p)
    p.add_argument("--t-grid", default=None, metavar="MIN:MAX:N")
    p.add_argument("--coord-grid", default=None, metavar="MIN:MAX:N")
    p.set_defaults(fn=_cmd_density)

    p = sub.add_parser("validate", help="closed form vs Monte Carlo with z-scores")
    common(p)
    p.add_argument("--corrupt-wedge-angle", type=float, default=0.0, help=argparse.SUPPRESS)
    p.set_defaults(fn=_cmd_validate)
    return ap


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ScenarioError, DomainError) as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return 2
    except _NUMERIC_ERRORS as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
