import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from riskpool import (
    CostParams,
    DomainError,
    PoolComposition,
    Population,
    RiskProfile,
    check_submodularity,
    check_submodularity_exhaustive,
    cost,
    marginal_cost,
)
from riskpool.model import cost_grid

from oracles import set_cost


def players(comp, pop):
    return [pop.low.r] * comp[0] + [pop.high.r] * comp[1]


# published insolvency costs for the 2% / 2.5% example
@pytest.mark.parametrize("comp,expected", [((500, 0), 16_261), ((0, 500), 19_482), ((500, 500), 31_878)])
def test_published_costs(table2, comp, expected):
    pop, params = table2
    assert abs(cost(comp, pop, params) - expected) < 1.0


def test_expected_value_model(table1):
    pop, params = table1
    assert cost((500, 500), pop, params) == pytest.approx(22_500, abs=1e-9)
    assert cost((500, 0), pop, params) == pytest.approx(10_000, abs=1e-9)


@pytest.mark.parametrize("comp", [(0, 0), (1, 0), (0, 1), (3, 7), (500, 500), (120, 33)])
def test_cost_matches_oracle(table3, comp):
    pop, params = table3
    assert cost(comp, pop, params) == pytest.approx(set_cost(players(comp, pop), 1000, 2), rel=1e-13, abs=1e-12)


def test_cost_grid_matches_scalar(table2):
    pop, params = table2
    small = pop.with_counts(7, 5)
    grid = cost_grid(small, params)
    for a, b in itertools.product(range(8), range(6)):
        assert grid[a, b] == pytest.approx(cost((a, b), small, params), rel=1e-14, abs=1e-12)


def test_zero_law(table2):
    pop, params = table2
    assert cost((0, 0), pop, params) == 0.0
    zero = Population.of(0.0, 0.0, 4, 4, strict=False)
    assert cost((4, 4), zero, params) == 0.0


def test_marginal_cost_first_member(table2):
    pop, params = table2
    # 1000 * (0.02 + 2 * sqrt(0.02 * 0.98))
    assert marginal_cost((0, 0), "low", pop, params) == pytest.approx(300.0, abs=1e-9)


def test_marginal_cost_is_cost_difference(table3):
    pop, params = table3
    for comp in [(0, 0), (10, 3), (499, 500), (500, 499)]:
        for kind in ("low", "high"):
            nxt = PoolComposition(*comp).add(kind)
            if nxt[0] > 500 or nxt[1] > 500:
                continue
            diff = cost(nxt, pop, params) - cost(comp, pop, params)
            assert marginal_cost(comp, kind, pop, params) == pytest.approx(diff, rel=1e-9)


def test_high_risk_marginal_dominates(table2):
    pop, params = table2
    pop = pop.with_counts(51, 51)
    for a, b in itertools.product(range(51), range(51)):
        assert marginal_cost((a, b), "high", pop, params) > marginal_cost((a, b), "low", pop, params)


def test_monotone_and_pooling_benefit(table2):
    pop, params = table2
    g = cost_grid(pop.with_counts(40, 40), params)
    assert (np.diff(g, axis=0) > 0).all() and (np.diff(g, axis=1) > 0).all()
    # pooling two disjoint groups is strictly cheaper than running them apart
    for (a, b), (c, d) in [((3, 0), (0, 4)), ((10, 10), (5, 1)), ((1, 0), (1, 0))]:
        assert g[a + c, b + d] < g[a, b] + g[c, d]


def test_validation():
    with pytest.raises(DomainError):
        RiskProfile(1.0, 3)
    with pytest.raises(DomainError):
        RiskProfile(0.1, -1)
    with pytest.raises(DomainError):
        RiskProfile(0.1, 2.5)
    with pytest.raises(DomainError):
        Population.of(0.03, 0.02, 1, 1)
    with pytest.raises(DomainError):
        Population.of(0.02, 0.5, 1, 1)
    Population.of(0.03, 0.02, 1, 1, strict=False)
    with pytest.raises(DomainError):
        CostParams(V=0, b_p=2)
    with pytest.raises(DomainError):
        CostParams(V=1000, b_p=0)
    with pytest.raises(DomainError):
        CostParams(V=1000, b_p=2, model="other")
    pop = Population.of(0.02, 0.04, 2, 2)
    with pytest.raises(DomainError):
        cost((3, 0), pop, CostParams(V=1000, b_p=2))


def test_capital_multiplier_scales_buffer(table2):
    pop, _ = table2
    base = CostParams(V=1000, b_p=2)
    doubled = CostParams(V=1000, b_p=2, capital_multiplier=2)
    mean = 1000 * (0.02 * 500 + 0.025 * 500)
    assert cost(pop.grand, pop, doubled) - mean == pytest.approx(2 * (cost(pop.grand, pop, base) - mean))


def test_submodularity_random_and_exhaustive(table3):
    pop, params = table3
    rep = check_submodularity(pop, params, trials=10_000, seed=1)
    assert rep.passed and rep.violations == 0 and rep.strict_failures == 0
    ex = check_submodularity_exhaustive(pop, params, max_count=6)
    assert ex.passed and ex.pairs_checked == 84 ** 2


def test_submodularity_by_labelled_subsets():
    # label every player of a 4+4 population and check all pairs of player sets
    pop = Population.of(0.05, 0.3, 4, 4)
    rs = [0.05] * 4 + [0.3] * 4
    c = lambda S: set_cost([rs[i] for i in S], 1000, 2)
    masks = range(1 << 8)
    members = [frozenset(i for i in range(8) if m >> i & 1) for m in masks]
    for S in members[::3]:
        for T in members:
            gap = c(S) + c(T) - c(S | T) - c(S & T)
            assert gap >= -1e-9
            if S - T and T - S:
                assert gap > 0


def test_submodularity_flags_linear_cost_as_not_strict():
    pop = Population.of(0.02, 0.025, 6, 6)
    rep = check_submodularity(pop, CostParams(V=1000, model="expected_value"), trials=200)
    # linear cost: modular, never violated, strictness is not claimed
    assert rep.violations == 0 and rep.passed


@settings(max_examples=60, deadline=None)
@given(
    r_low=st.floats(0.001, 0.3),
    gap=st.floats(0.001, 0.19),
    b=st.floats(0.5, 3.0),
    counts=st.tuples(st.integers(0, 30), st.integers(0, 30)),
)
def test_submodularity_property(r_low, gap, b, counts):
    pop = Population.of(r_low, r_low + gap, *counts)
    rep = check_submodularity(pop, CostParams(V=1000, b_p=b), trials=500, seed=3)
    assert rep.violations == 0


@settings(max_examples=60, deadline=None)
@given(
    r=st.tuples(st.floats(0.0, 0.49), st.floats(0.0, 0.49)),
    a=st.tuples(st.integers(0, 20), st.integers(0, 20)),
    c=st.tuples(st.integers(0, 20), st.integers(0, 20)),
)
def test_pooling_never_hurts(r, a, c):
    pop = Population.of(r[0], r[1], 40, 40, strict=False)
    params = CostParams(V=1000, b_p=2)
    union = (a[0] + c[0], a[1] + c[1])
    assert cost(union, pop, params) <= cost(a, pop, params) + cost(c, pop, params) + 1e-9
