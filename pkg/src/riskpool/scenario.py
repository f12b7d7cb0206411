"""Scenario files: JSON documents describing a population and what to run.

Example::

    {
      "schema": 1,
      "name": "table2",
      "population": {"low": {"r": 0.02, "count": 500},
                     "high": {"r": 0.025, "count": 500}},
      "cost": {"V": 1000, "model": "insolvency", "b_p": 2},
      "schemes": ["even_split", "proportional", "max_subsidy", "shapley"],
      "analyses": ["prices", "stability"],
      "format": "markdown"
    }

``cost`` takes exactly one of ``b_p`` or ``p`` (insolvency probability) for
the insolvency model and neither for ``expected_value``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Optional

from .errors import DomainError, RiskPoolError
from .model import COST_MODELS, CostParams, Population, RiskProfile
from .pricing import SCHEMES
from .quantiles import bp_from_p

SCHEMA_VERSION = 1
ANALYSES = ("prices", "stability", "cascade", "audit", "shapley")
FORMATS = ("markdown", "csv", "json-report")
_TOP_KEYS = {"schema", "name", "population", "cost", "schemes", "analyses", "format", "strict"}


class ScenarioError(RiskPoolError):
    """A scenario document failed validation; ``field`` names the offending entry."""

    def __init__(self, field: str, constraint: str):
        super().__init__(f"{field}: {constraint}")
        self.field = field
        self.constraint = constraint


@dataclass(frozen=True)
class Scenario:
    population: Population
    params: CostParams
    schemes: tuple[str, ...] = ("even_split", "proportional", "max_subsidy", "shapley")
    analyses: tuple[str, ...] = ("prices",)
    format: str = "markdown"
    name: str = "scenario"
    p: Optional[float] = field(default=None, compare=False)

    def to_dict(self) -> dict[str, Any]:
        cost: dict[str, Any] = {"V": self.params.V, "model": self.params.model}
        if self.params.model == "insolvency":
            if self.p is not None:
                cost["p"] = self.p
            else:
                cost["b_p"] = self.params.b_p
        if self.params.capital_multiplier != 1.0:
            cost["capital_multiplier"] = self.params.capital_multiplier
        doc = {
            "schema": SCHEMA_VERSION,
            "name": self.name,
            "population": {
                kind: {"r": prof.r, "count": prof.count}
                for kind, prof in (("low", self.population.low), ("high", self.population.high))
            },
            "cost": cost,
            "schemes": list(self.schemes),
            "analyses": list(self.analyses),
            "format": self.format,
        }
        if not self.population.strict:
            doc["strict"] = False
        return doc

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"


def _require(doc: dict, key: str, where: str):
    if not isinstance(doc, dict):
        raise ScenarioError(where, "must be an object")
    if key not in doc:
        raise ScenarioError(f"{where}.{key}" if where else key, "is required")
    return doc[key]


def _number(value, where: str, *, integer: bool = False) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError(where, "must be a number")
    if integer and int(value) != value:
        raise ScenarioError(where, "must be an integer")
    return int(value) if integer else float(value)


def _identifiers(doc: dict, key: str, allowed, default) -> tuple[str, ...]:
    raw = doc.get(key, list(default))
    if not isinstance(raw, list) or not raw:
        raise ScenarioError(key, "must be a non-empty list")
    for i, item in enumerate(raw):
        if item not in allowed:
            raise ScenarioError(f"{key}[{i}]", f"{item!r} is not one of {sorted(allowed)}")
    return tuple(raw)


def from_dict(doc: Any) -> Scenario:
    """Validate a parsed scenario document."""
    if not isinstance(doc, dict):
        raise ScenarioError("<root>", "must be an object")
    unknown = set(doc) - _TOP_KEYS
    if unknown:
        raise ScenarioError(sorted(unknown)[0], "unknown field")
    if doc.get("schema") != SCHEMA_VERSION:
        raise ScenarioError("schema", f"must equal {SCHEMA_VERSION}")
    strict = doc.get("strict", True)
    if not isinstance(strict, bool):
        raise ScenarioError("strict", "must be a boolean")

    pop_doc = _require(doc, "population", "")
    profiles = {}
    for kind in ("low", "high"):
        prof = _require(pop_doc, kind, "population")
        where = f"population.{kind}"
        r = _number(_require(prof, "r", where), f"{where}.r")
        count = _number(_require(prof, "count", where), f"{where}.count", integer=True)
        try:
            profiles[kind] = RiskProfile(r, count)
        except DomainError as exc:
            raise ScenarioError(where, str(exc)) from None
    try:
        population = Population(profiles["low"], profiles["high"], strict=strict)
    except DomainError as exc:
        raise ScenarioError("population", str(exc)) from None

    cost_doc = _require(doc, "cost", "")
    model = cost_doc.get("model", "insolvency") if isinstance(cost_doc, dict) else None
    if model not in COST_MODELS:
        raise ScenarioError("cost.model", f"must be one of {list(COST_MODELS)}")
    V = _number(_require(cost_doc, "V", "cost"), "cost.V")
    has_b, has_p = "b_p" in cost_doc, "p" in cost_doc
    p = None
    if model == "insolvency":
        if has_b == has_p:
            raise ScenarioError("cost", "exactly one of b_p or p is required")
        if has_p:
            p = _number(cost_doc["p"], "cost.p")
            try:
                b_p = bp_from_p(p)
            except DomainError as exc:
                raise ScenarioError("cost.p", str(exc)) from None
        else:
            b_p = _number(cost_doc["b_p"], "cost.b_p")
    else:
        if has_b or has_p:
            raise ScenarioError("cost", "expected_value model takes neither b_p nor p")
        b_p = 0.0
    mult = _number(cost_doc.get("capital_multiplier", 1.0), "cost.capital_multiplier")
    try:
        params = CostParams(V=V, b_p=b_p, model=model, capital_multiplier=mult)
    except DomainError as exc:
        raise ScenarioError("cost", str(exc)) from None

    fmt = doc.get("format", "markdown")
    if fmt not in FORMATS:
        raise ScenarioError("format", f"must be one of {list(FORMATS)}")
    name = doc.get("name", "scenario")
    if not isinstance(name, str):
        raise ScenarioError("name", "must be a string")
    return Scenario(
        population=population,
        params=params,
        schemes=_identifiers(doc, "schemes", SCHEMES, Scenario.schemes),
        analyses=_identifiers(doc, "analyses", ANALYSES, Scenario.analyses),
        format=fmt,
        name=name,
        p=p,
    )


def loads(text: str) -> Scenario:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError("<document>", f"invalid JSON ({exc})") from None
    return from_dict(doc)


def bundled_names() -> list[str]:
    files = resources.files("riskpool").joinpath("scenarios")
    return sorted(p.name[:-5] for p in files.iterdir() if p.name.endswith(".json"))


def load(ref: str) -> Scenario:
    """Load a scenario from a path, or by bundled name (``table1`` ... ``table3``)."""
    path = Path(ref)
    if path.is_file():
        return loads(path.read_text())
    if ref in bundled_names():
        return loads(resources.files("riskpool").joinpath("scenarios", f"{ref}.json").read_text())
    raise ScenarioError("<file>", f"{ref!r} is neither a readable file nor a bundled scenario")
