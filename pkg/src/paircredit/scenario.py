"""Scenario files: one JSON document describing two firms, the market, one contract.

Schema (all keys case-sensitive; `numerics` and everything inside it optional):

    {
      "firm1":    {"v0": .., "k_barrier": .., "gamma": .., "sigma": .., "payout": ..},
      "firm2":    {...},
      "market":   {"r": .., "rho": ..},
      "contract": {"kind": "cds", "notional": .., "recovery_underlying": ..,
                   "recovery_counterparty": .., "spread": .., "maturity": ..}
                | {"kind": "ftd", "notional": .., "recovery": .., "maturity": ..},
      "numerics": {"quad":   {"rel_tol": .., "abs_tol": .., "mu_cutoff_sigmas": .., "max_subdivisions": ..},
                   "series": {"term_tol": .., "max_terms": ..},
                   "mc":     {"n_paths": .., "steps_per_year": .., "seed": ..,
                              "bridge_correction": .., "antithetic": ..}}
    }

Validation failures raise ScenarioError carrying the offending field path and
a best-effort line number in the source file.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, fields
from pathlib import Path

from .errors import DomainError, PairCreditError
from .mc import McConfig
from .params import CdsContract, FirmParams, FtdContract, MarketParams
from .quadrature import QuadSpec
from .specfun import SeriesTolerances

__all__ = ["Scenario", "ScenarioError", "load_scenario"]


class ScenarioError(PairCreditError):
    def __init__(self, field: str, message: str, line: int | None = None):
        self.field = field
        self.line = line
        at = f" (line {line})" if line else ""
        super().__init__(f"{field}{at}: {message}")


@dataclass(frozen=True)
class Scenario:
    firm1: FirmParams
    firm2: FirmParams
    market: MarketParams
    contract_kind: str  # "cds" | "ftd"
    contract: CdsContract | FtdContract
    quad: QuadSpec
    series: SeriesTolerances
    mc: McConfig


def _line_of(text: str, path: str) -> int | None:
    """Best-effort line of a dotted field path in the JSON source."""
    pos = 0
    for part in path.split("."):
        found = text.find(f'"{part}"', pos)
        if found < 0:
            return None
        pos = found
    return text.count("\n", 0, pos) + 1


def _build(cls, data: dict, path: str, text: str, required: tuple[str, ...]):
    if not isinstance(data, dict):
        raise ScenarioError(path, f"expected an object, got {type(data).__name__}", _line_of(text, path.split(".")[-1]))
    allowed = {f.name for f in fields(cls)}
    for key in data:
        if key not in allowed:
            raise ScenarioError(f"{path}.{key}", "unknown field", _line_of(text, key))
    for key in required:
        if key not in data:
            raise ScenarioError(f"{path}.{key}", "missing required field", _line_of(text, path.split(".")[-1]))
    try:
        return cls(**data)
    except DomainError as exc:
        # Name the first offending field if the message starts with one.
        word = str(exc).split()[0]
        field = word if word in allowed else path
        raise ScenarioError(f"{path}.{word}" if word in allowed else path, str(exc), _line_of(text, word if word in allowed else path)) from exc
    except TypeError as exc:
        raise ScenarioError(path, str(exc), _line_of(text, path.split(".")[-1])) from exc


def load_scenario(path: str | Path) -> Scenario:
    """Read and validate a scenario file."""
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ScenarioError(str(p), f"cannot read scenario: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError("<document>", f"invalid JSON: {exc.msg}", exc.lineno) from exc
    if not isinstance(doc, dict):
        raise ScenarioError("<document>", "top level must be an object")

    for key in ("firm1", "firm2", "market", "contract"):
        if key not in doc:
            raise ScenarioError(key, "missing required section")
    extra = set(doc) - {"firm1", "firm2", "market", "contract", "numerics"}
    if extra:
        raise ScenarioError(sorted(extra)[0], "unknown section", _line_of(text, sorted(extra)[0]))

    firm1 = _build(FirmParams, doc["firm1"], "firm1", text, ("v0", "k_barrier", "gamma", "sigma"))
    firm2 = _build(FirmParams, doc["firm2"], "firm2", text, ("v0", "k_barrier", "gamma", "sigma"))
    market = _build(MarketParams, doc["market"], "market", text, ("r", "rho"))

    cdata = doc["contract"]
    if not isinstance(cdata, dict) or "kind" not in cdata:
        raise ScenarioError("contract.kind", "missing contract kind", _line_of(text, "contract"))
    kind = cdata["kind"]
    body = {k: v for k, v in cdata.items() if k != "kind"}
    if kind == "cds":
        contract = _build(
            CdsContract, body, "contract", text,
            ("notional", "recovery_underlying", "recovery_counterparty", "spread", "maturity"),
        )
    elif kind == "ftd":
        contract = _build(FtdContract, body, "contract", text, ("notional", "recovery", "maturity"))
    else:
        raise ScenarioError("contract.kind", f"must be 'cds' or 'ftd', got {kind!r}", _line_of(text, "kind"))

    numerics = doc.get("numerics", {})
    if not isinstance(numerics, dict):
        raise ScenarioError("numerics", "expected an object", _line_of(text, "numerics"))
    extra = set(numerics) - {"quad", "series", "mc"}
    if extra:
        raise ScenarioError(f"numerics.{sorted(extra)[0]}", "unknown section", _line_of(text, sorted(extra)[0]))
    quad = _build(QuadSpec, numerics.get("quad", {}), "numerics.quad", text, ())
    series = _build(SeriesTolerances, numerics.get("series", {}), "numerics.series", text, ())
    mc = _build(McConfig, numerics.get("mc", {}), "numerics.mc", text, ())

    return Scenario(
        firm1=firm1,
        firm2=firm2,
        market=market,
        contract_kind=kind,
        contract=contract,
        quad=quad,
        series=series,
        mc=mc,
    )
