"""Regeneration of the three worked pricing tables (500 + 500 members, V = $1,000).

Display rounding is round-half-even: cents for per-person prices (a whole
number of dollars prints without cents) and whole dollars for totals. Raw
values stay available for machine-readable output.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from decimal import ROUND_HALF_EVEN, Decimal
from typing import Optional

from .model import CostParams, Population, cost
from .pricing import PriceSchedule, even_split, proportional

# totals as originally published where they differ from a recomputation
# of the unrounded components
PUBLISHED_TOTALS = {("table2", "separate"): 35_741, ("table3", "separate"): 45_024}


def round_cents(x: float) -> Decimal:
    return Decimal(x).quantize(Decimal("0.01"), rounding=ROUND_HALF_EVEN)


def round_dollars(x: float) -> Decimal:
    return Decimal(x).quantize(Decimal("1"), rounding=ROUND_HALF_EVEN)


def fmt_price(x: Optional[float]) -> str:
    if x is None:
        return "-"
    d = round_cents(x)
    if d == d.to_integral_value():
        return f"${int(d):,}"
    return f"${d:,.2f}"


def fmt_total(x: float) -> str:
    return f"${int(round_dollars(x)):,}"


@dataclass(frozen=True)
class TableRow:
    key: str
    label: str
    total: float
    price_low: float
    price_high: float


@dataclass(frozen=True)
class PricingTable:
    name: str
    caption: str
    rows: list[TableRow]
    notes: list[str] = field(default_factory=list)


SPECS = {
    "table1": ("Expected-value premiums; low risk 2%, high risk 2.5%", 0.025, "expected_value"),
    "table2": ("Insolvency-based premiums (b_p = 2); low risk 2%, high risk 2.5%", 0.025, "insolvency"),
    "table3": ("Insolvency-based premiums (b_p = 2); low risk 2%, high risk 4%", 0.04, "insolvency"),
}


def _actuarial(pop: Population, params: CostParams) -> PriceSchedule:
    # each type pays its expected loss; the proportional split of a linear cost
    return PriceSchedule(params.V * pop.low.r, params.V * pop.high.r)


def build_table(name: str) -> PricingTable:
    caption, r_high, model = SPECS[name]
    pop = Population.of(0.02, r_high, 500, 500)
    params = CostParams(V=1000.0, b_p=2.0 if model == "insolvency" else 0.0, model=model)
    N_low, N_high = pop.grand
    alone_low = cost((N_low, 0), pop, params)
    alone_high = cost((0, N_high), pop, params)
    pooled = cost(pop.grand, pop, params)
    even = even_split(pop.grand, pop, params)
    prop = proportional(pop.grand, pop, params) if model == "insolvency" else _actuarial(pop, params)
    rows = [
        TableRow("separate", "Separate pools", alone_low + alone_high, alone_low / N_low, alone_high / N_high),
        TableRow("even_split", "Pooled: even-split pricing", pooled, even.price_low, even.price_high),
        TableRow("proportional", "Pooled: proportional pricing", pooled, prop.price_low, prop.price_high),
    ]
    notes = []
    for row in rows:
        published = PUBLISHED_TOTALS.get((name, row.key))
        if published is not None and int(round_dollars(row.total)) != published:
            notes.append(
                f"{row.label}: recomputed total {fmt_total(row.total)} "
                f"(unrounded {row.total:,.2f}); published figure ${published:,}"
            )
    return PricingTable(name, caption, rows, notes)


def build_tables() -> list[PricingTable]:
    return [build_table(name) for name in SPECS]


def to_markdown(tables: list[PricingTable]) -> str:
    out = []
    for t in tables:
        out.append(f"### {t.name}: {t.caption}\n")
        out.append("| | Total | Low risk | High risk |")
        out.append("|---|---:|---:|---:|")
        for r in t.rows:
            out.append(f"| {r.label} | {fmt_total(r.total)} | {fmt_price(r.price_low)} | {fmt_price(r.price_high)} |")
        for note in t.notes:
            out.append(f"\nNote: {note}")
        out.append("")
    return "\n".join(out)


def to_csv(tables: list[PricingTable]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["table", "row", "total", "price_low", "price_high", "total_raw", "price_low_raw", "price_high_raw"])
    for t in tables:
        for r in t.rows:
            w.writerow([
                t.name, r.key, int(round_dollars(r.total)), round_cents(r.price_low),
                round_cents(r.price_high), repr(r.total), repr(r.price_low), repr(r.price_high),
            ])
    return buf.getvalue()


def to_report(tables: list[PricingTable]) -> dict:
    return {
        "tables": [
            {
                "name": t.name,
                "caption": t.caption,
                "rows": [
                    {
                        "row": r.key,
                        "label": r.label,
                        "total": r.total,
                        "price_low": r.price_low,
                        "price_high": r.price_high,
                        "display": {
                            "total": fmt_total(r.total),
                            "price_low": fmt_price(r.price_low),
                            "price_high": fmt_price(r.price_high),
                        },
                    }
                    for r in t.rows
                ],
                "notes": t.notes,
            }
            for t in tables
        ]
    }
