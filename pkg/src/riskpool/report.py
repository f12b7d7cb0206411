"""Run scenario analyses and render the resulting report document."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Optional

import numpy as np

from . import kernels
from .audit import EFFICIENCY_RTOL, audit_scheme
from .errors import CapabilityError, DomainError
from .model import CostParams, Population, cost
from .pricing import get_scheme, shapley_exact, shapley_sampled
from .scenario import Scenario
from .stability import DEFAULT_EPSILON, cascade, evensplit_condition, is_core_stable

SWEEP_PARAMS = ("r_H", "r_L", "N_L", "N_H", "b_p")


@dataclass
class Report:
    """A report document plus the problems met while building it."""

    doc: dict[str, Any]
    capability_errors: list[str] = field(default_factory=list)
    invariant_errors: list[str] = field(default_factory=list)

    @property
    def exit_code(self) -> int:
        if self.invariant_errors:
            return 4
        if self.capability_errors:
            return 3
        return 0


def _sched(s) -> dict[str, Optional[float]]:
    return {"price_low": s.price_low, "price_high": s.price_high}


def _comp(c) -> Optional[list[int]]:
    return None if c is None else [int(c[0]), int(c[1])]


class _Runner:
    def __init__(self, scn: Scenario, epsilon: float, seed: int, permutations: int):
        self.scn = scn
        self.pop = scn.population
        self.params = scn.params
        self.epsilon = epsilon
        self.seed = seed
        self.permutations = permutations
        self.report = Report({"scenario": scn.to_dict(), "backend": kernels.BACKEND, "errors": []})

    def _guard(self, section: str, scheme: str, fn):
        try:
            return fn()
        except CapabilityError as exc:
            msg = f"{section}/{scheme}: {exc}"
            self.report.capability_errors.append(msg)
            self.report.doc["errors"].append({"kind": "capability", "where": f"{section}/{scheme}", "message": str(exc)})
            return None

    def prices(self):
        pop, params = self.pop, self.params
        N_low, N_high = pop.grand
        rows = []
        separate = {
            "price_low": cost((N_low, 0), pop, params) / N_low if N_low else None,
            "price_high": cost((0, N_high), pop, params) / N_high if N_high else None,
        }
        for name in self.scn.schemes:
            scheme = get_scheme(name)
            s = self._guard("prices", name, lambda: scheme.price(pop.grand, pop, params))
            if s is None:
                continue
            total = cost(pop.grand, pop, params)
            paid = s.total(pop.grand)
            if abs(paid - total) > EFFICIENCY_RTOL * max(total, 1.0):
                self.report.invariant_errors.append(f"prices/{name}: efficiency residual {paid - total:g}")
            rows.append({"scheme": name, **_sched(s), "total": total})
        self.report.doc["prices"] = {"separate": separate, "pooled_total": cost(pop.grand, pop, params), "schemes": rows}

    def stability(self):
        rows = []
        for name in self.scn.schemes:
            r = self._guard("stability", name, lambda: is_core_stable(name, self.pop, self.params, self.epsilon))
            if r is None:
                continue
            rows.append({
                "scheme": name,
                "stable": r.stable,
                "blocking_witness": _comp(r.blocking_witness),
                "prices_at_witness": _sched(r.prices_at_witness) if r.prices_at_witness else None,
                "witness_saving": r.witness_saving,
                "blocking_count": r.blocking_count,
                "compositions_checked": r.compositions_checked,
            })
        doc = {"epsilon": self.epsilon, "schemes": rows}
        if self.pop.low.count:
            doc["evensplit_condition"] = evensplit_condition(self.pop, self.params)
        self.report.doc["stability"] = doc

    def cascade(self):
        rows = []
        for name in self.scn.schemes:
            for policy in ("low_risk_exodus", "best_blocking"):
                t = self._guard("cascade", name, lambda: cascade(name, self.pop, self.params, policy, self.epsilon))
                if t is None:
                    break
                rows.append({
                    "scheme": name,
                    "policy": policy,
                    "final": _comp(t.final),
                    "steps": [
                        {
                            "step": s.step,
                            "departing": _comp(s.departing),
                            "remaining": _comp(s.remaining),
                            "prices_before": _sched(s.prices_before),
                            "prices_departing": _sched(s.prices_departing),
                            "prices_after": _sched(s.prices_after) if s.prices_after else None,
                        }
                        for s in t.steps
                    ],
                })
        self.report.doc["cascade"] = rows

    def audit(self):
        rows = []
        for name in self.scn.schemes:
            a = self._guard("audit", name, lambda: audit_scheme(name, self.pop, self.params, self.epsilon))
            if a is None:
                continue
            d = a.to_dict()
            for pattern, ok in d["impossibility_consistent"].items():
                if not ok:
                    self.report.invariant_errors.append(f"audit/{name}: forbidden pattern {pattern} observed")
            rows.append(d)
        self.report.doc["audit"] = rows

    def shapley(self):
        pop, params = self.pop, self.params
        exact = self._guard("shapley", "exact", lambda: shapley_exact(pop.grand, pop, params))
        est = shapley_sampled(pop.grand, pop, params, self.permutations, self.seed)
        doc: dict[str, Any] = {
            "exact": _sched(exact) if exact else None,
            "sampled": {**_sched(est.prices), "stderr_low": est.stderr_low,
                        "stderr_high": est.stderr_high, "permutations": est.permutations,
                        "seed": self.seed},
        }
        if exact:
            total = cost(pop.grand, pop, params)
            doc["efficiency_residual"] = exact.total(pop.grand) - total
            if abs(doc["efficiency_residual"]) > EFFICIENCY_RTOL * max(total, 1.0):
                self.report.invariant_errors.append("shapley: efficiency residual exceeds tolerance")
        self.report.doc["shapley"] = doc


def run_scenario(
    scn: Scenario, analyses: Optional[Iterable[str]] = None, epsilon: float = DEFAULT_EPSILON,
    seed: int = 0, permutations: int = 2_000,
) -> Report:
    runner = _Runner(scn, epsilon, seed, permutations)
    for analysis in analyses or scn.analyses:
        getattr(runner, analysis)()
    return runner.report


def _sweep_point(scn: Scenario, param: str, value):
    pop, params = scn.population, scn.params
    if param == "r_H":
        return pop.with_risks(pop.low.r, value), params
    if param == "r_L":
        return pop.with_risks(value, pop.high.r), params
    if param == "N_L":
        return Population.of(pop.low.r, pop.high.r, value, pop.high.count, pop.strict), params
    if param == "N_H":
        return Population.of(pop.low.r, pop.high.r, pop.low.count, value, pop.strict), params
    return pop, CostParams(params.V, value, params.model, params.capital_multiplier)


def sweep_values(param: str, start: float, stop: float, steps: int) -> list:
    if param not in SWEEP_PARAMS:
        raise DomainError(f"cannot sweep {param!r}; expected one of {list(SWEEP_PARAMS)}")
    if steps < 1:
        raise DomainError("steps must be at least 1")
    if start == stop or steps == 1:
        values = [start]
    else:
        values = list(np.linspace(start, stop, steps))
    if param in ("N_L", "N_H"):
        return list(dict.fromkeys(int(round(v)) for v in values))
    # trim linspace noise such as 0.037000000000000005
    return [float(f"{v:.12g}") for v in values]


def sweep(scn: Scenario, param: str, start: float, stop: float, steps: int,
          epsilon: float = DEFAULT_EPSILON) -> list[dict[str, Any]]:
    """Grand-coalition prices and even-split stability at each sampled value."""
    rows = []
    for value in sweep_values(param, start, stop, steps):
        row: dict[str, Any] = {param: value, "note": ""}
        try:
            pop, params = _sweep_point(scn, param, value)
            if pop.size == 0:
                raise DomainError("empty population")
            for name in scn.schemes:
                try:
                    s = get_scheme(name).price(pop.grand, pop, params)
                except CapabilityError as exc:
                    row["note"] = f"{name}: {exc}"
                    s = None
                row[f"{name}_low"] = s.price_low if s else None
                row[f"{name}_high"] = s.price_high if s else None
            row["evensplit_condition"] = evensplit_condition(pop, params) if pop.low.count else None
            row["even_split_stable"] = is_core_stable("even_split", pop, params, epsilon).stable
        except DomainError as exc:
            row["note"] = f"skipped: {exc}"
        rows.append(row)
    return rows


def _columns(rows: list[dict]) -> list[str]:
    cols: list[str] = []
    for r in rows:
        for k in r:
            if k not in cols:
                cols.append(k)
    cols.remove("note")
    return cols + ["note"]


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return "" if math.isnan(v) else repr(v)
    return str(v)


def rows_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    cols = _columns(rows)
    w.writerow(cols)
    for r in rows:
        w.writerow([_cell(r.get(c)) for c in cols])
    return buf.getvalue()


def rows_to_markdown(rows: list[dict]) -> str:
    cols = _columns(rows)
    lines = ["| " + " | ".join(cols) + " |", "|" + "---|" * len(cols)]
    for r in rows:
        cells = []
        for c in cols:
            v = r.get(c)
            cells.append(f"{v:.6g}" if isinstance(v, float) else _cell(v))
        lines.append("| " + " | ".join(cells) + " |")
    return "\n".join(lines) + "\n"


def _clean(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def to_json(doc: dict) -> str:
    return json.dumps(_clean(doc), indent=2) + "\n"


def _money(x) -> str:
    return "-" if x is None else f"{x:,.2f}"


def to_markdown(doc: dict) -> str:
    scn = doc["scenario"]
    pop = scn["population"]
    out = [
        f"# {scn['name']}",
        "",
        f"low: r={pop['low']['r']}, n={pop['low']['count']}; high: r={pop['high']['r']}, "
        f"n={pop['high']['count']}; cost: {json.dumps(scn['cost'])}",
        "",
    ]
    if "prices" in doc:
        p = doc["prices"]
        out += ["## Prices", "", "| scheme | low risk | high risk |", "|---|---:|---:|",
                f"| separate pools | {_money(p['separate']['price_low'])} | {_money(p['separate']['price_high'])} |"]
        out += [f"| {r['scheme']} | {_money(r['price_low'])} | {_money(r['price_high'])} |" for r in p["schemes"]]
        out += ["", f"Pooled total: {p['pooled_total']:,.2f}", ""]
    if "stability" in doc:
        s = doc["stability"]
        out += ["## Core stability", "", "| scheme | stable | witness | saving |", "|---|---|---|---:|"]
        for r in s["schemes"]:
            w = r["blocking_witness"]
            out.append(f"| {r['scheme']} | {r['stable']} | {'-' if w is None else tuple(w)} | "
                       f"{'-' if r['witness_saving'] is None else format(r['witness_saving'], '.4f')} |")
        if "evensplit_condition" in s:
            out.append(f"\nEven-split condition: {s['evensplit_condition']}")
        out.append("")
    if "cascade" in doc:
        out += ["## Defection cascades", ""]
        for c in doc["cascade"]:
            out.append(f"- {c['scheme']} ({c['policy']}): {len(c['steps'])} step(s), final pool {tuple(c['final'])}")
            for st in c["steps"]:
                after = st["prices_after"]
                out.append(f"  - step {st['step']}: {tuple(st['departing'])} leaves; remainder "
                           f"{tuple(st['remaining'])} pays low {_money(after and after['price_low'])}, "
                           f"high {_money(after and after['price_high'])}")
        out.append("")
    if "audit" in doc:
        out += ["## Audit", "", "| scheme | efficiency | indep. low | indep. high | aligned | stable (all r) | slope sign | limit c |",
                "|---|---|---|---|---|---|---|---|"]
        for a in doc["audit"]:
            v = a["verdicts"]
            c = a["limit_c"]
            out.append(
                f"| {a['scheme']} | {v['efficiency']} | {v['independence_low']} | {v['independence_high']} | "
                f"{v['aligned']} | {v['stable_for_all_probed_r']} | {a['incentive_slope_low']['sign']} | "
                f"{'n/a' if c is None else format(c, '.4f')} |"
            )
        out.append("")
    if "shapley" in doc:
        sh = doc["shapley"]
        sm = sh["sampled"]
        out += ["## Shapley", ""]
        if sh["exact"]:
            out.append(f"- exact: low {_money(sh['exact']['price_low'])}, high {_money(sh['exact']['price_high'])}")
        out.append(f"- sampled ({sm['permutations']} orders, seed {sm['seed']}): low {_money(sm['price_low'])} "
                   f"+/- {sm['stderr_low'] or 0:.4f}, high {_money(sm['price_high'])} +/- {sm['stderr_high'] or 0:.4f}")
        out.append("")
    for e in doc.get("errors", []):
        out.append(f"> {e['kind']} error in {e['where']}: {e['message']}")
    return "\n".join(out).rstrip() + "\n"


def to_csv(doc: dict) -> str:
    """Flatten a report into ``section,scheme,field,value`` rows."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["section", "scheme", "field", "value"])

    def walk(section, scheme, prefix, obj):
        if isinstance(obj, dict):
            for k, v in obj.items():
                walk(section, scheme, f"{prefix}.{k}" if prefix else k, v)
        elif isinstance(obj, list) and obj and isinstance(obj[0], (dict, list)):
            for i, v in enumerate(obj):
                walk(section, scheme, f"{prefix}[{i}]", v)
        else:
            w.writerow([section, scheme, prefix, json.dumps(_clean(obj))])

    for section, body in doc.items():
        if section == "scenario":
            continue
        if isinstance(body, list):
            for item in body:
                if isinstance(item, dict):
                    label = item.get("scheme", "") + (f"/{item['policy']}" if "policy" in item else "")
                    walk(section, label, "", {k: v for k, v in item.items() if k not in ("scheme", "policy")})
        elif isinstance(body, dict) and "schemes" in body:
            walk(section, "", "", {k: v for k, v in body.items() if k != "schemes"})
            for item in body["schemes"]:
                walk(section, item["scheme"], "", {k: v for k, v in item.items() if k != "scheme"})
        else:
            walk(section, "", "", body)
    return buf.getvalue()


def render(doc: dict, fmt: str) -> str:
    if fmt == "json-report":
        return to_json(doc)
    if fmt == "csv":
        return to_csv(doc)
    return to_markdown(doc)
