import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from riskpool import (
    SCHEMES,
    CapabilityError,
    CostParams,
    DomainError,
    Population,
    cost,
    even_split,
    get_scheme,
    max_subsidy,
    proportional,
    shapley_exact,
    shapley_sampled,
)
from riskpool.pricing import FunctionScheme, PriceSchedule

from oracles import shapley_by_permutations, shapley_by_subsets

CENT = 0.005


@pytest.mark.parametrize("fixture,low,high", [("table2", 31.88, 31.88), ("table3", 40.77, 40.77)])
def test_even_split_published(request, fixture, low, high):
    pop, params = request.getfixturevalue(fixture)
    s = even_split(pop.grand, pop, params)
    assert abs(s.price_low - low) < CENT and abs(s.price_high - high) < CENT


@pytest.mark.parametrize("fixture,low,high", [("table2", 28.36, 35.40), ("table3", 27.28, 54.26)])
def test_proportional_published(request, fixture, low, high):
    pop, params = request.getfixturevalue(fixture)
    s = proportional(pop.grand, pop, params)
    assert abs(s.price_low - low) < CENT and abs(s.price_high - high) < CENT


def test_max_subsidy_table2(table2):
    pop, params = table2
    s = max_subsidy(pop.grand, pop, params)
    assert abs(s.price_low - 32.52) < CENT
    # (31,878.17 - 16,261.31) / 500
    assert s.price_high == pytest.approx((cost((500, 500), pop, params) - cost((500, 0), pop, params)) / 500)
    assert abs(s.price_high - 31.23) < CENT


def test_absent_types_have_no_price(table2):
    pop, params = table2
    for name in SCHEMES:
        s = get_scheme(name).price((7, 0), pop, params)
        assert s.price_high is None and s.price_low == pytest.approx(cost((7, 0), pop, params) / 7)
        s = get_scheme(name).price((0, 9), pop, params)
        assert s.price_low is None and s.price_high == pytest.approx(cost((0, 9), pop, params) / 9)


def test_empty_pool_rejected(table2):
    pop, params = table2
    for name in SCHEMES:
        with pytest.raises(DomainError):
            get_scheme(name).price((0, 0), pop, params)


def test_proportional_needs_insolvency_model(table1):
    pop, params = table1
    with pytest.raises(CapabilityError):
        proportional(pop.grand, pop, params)


def test_unknown_scheme():
    with pytest.raises(DomainError):
        get_scheme("nucleolus")


@settings(max_examples=80, deadline=None)
@given(
    r_low=st.floats(0.0, 0.3), gap=st.floats(1e-4, 0.19), b=st.floats(0.5, 3.0),
    n=st.tuples(st.integers(0, 200), st.integers(0, 200)),
    name=st.sampled_from(sorted(SCHEMES)),
)
def test_efficiency_property(r_low, gap, b, n, name):
    if n == (0, 0):
        n = (1, 0)
    pop = Population.of(r_low, r_low + gap, *n)
    params = CostParams(V=1000, b_p=b)
    total = cost(n, pop, params)
    paid = get_scheme(name).price(n, pop, params).total(n)
    assert abs(paid - total) <= 1e-9 * max(total, 1.0)


ALL_SMALL = [(a, b) for a in range(9) for b in range(9) if 1 <= a + b <= 8]


@pytest.mark.parametrize("comp", ALL_SMALL)
def test_shapley_matches_permutation_oracle(comp):
    pop = Population.of(0.02, 0.04, *comp)
    params = CostParams(V=1000, b_p=2)
    rs = [0.02] * comp[0] + [0.04] * comp[1]
    oracle = shapley_by_permutations(rs, 1000, 2)
    s = shapley_exact(comp, pop, params)
    if comp[0]:
        assert max(abs(s.price_low - v) for v in oracle[: comp[0]]) <= 1e-10
    if comp[1]:
        assert max(abs(s.price_high - v) for v in oracle[comp[0]:]) <= 1e-10


@pytest.mark.parametrize("comp", [(3, 4), (6, 3), (0, 5)])
def test_shapley_matches_subset_formula(comp):
    pop = Population.of(0.1, 0.3, *comp)
    params = CostParams(V=1000, b_p=1.5)
    oracle = shapley_by_subsets([0.1] * comp[0] + [0.3] * comp[1], 1000, 1.5)
    s = shapley_exact(comp, pop, params)
    if comp[0]:
        assert s.price_low == pytest.approx(oracle[0], abs=1e-10)
    assert s.price_high == pytest.approx(oracle[-1], abs=1e-10)


def test_shapley_table2_ordering_and_efficiency(table2):
    pop, params = table2
    s = shapley_exact(pop.grand, pop, params)
    assert s.price_low < s.price_high
    assert s.total(pop.grand) == pytest.approx(cost(pop.grand, pop, params), rel=1e-9)


def test_shapley_homogeneous(table2):
    pop, params = table2
    assert shapley_exact((40, 0), pop, params).price_low == pytest.approx(cost((40, 0), pop, params) / 40, rel=1e-12)


def test_shapley_size_limit():
    pop = Population.of(0.02, 0.04, 60_000, 60_000)
    with pytest.raises(CapabilityError):
        shapley_exact(pop.grand, pop, CostParams(V=1000, b_p=2))


def test_shapley_grid_matches_pointwise(table3):
    pop, params = table3
    pop = pop.with_counts(12, 9)
    low, high = get_scheme("shapley").price_grid(pop, params)
    for a, b in itertools.product(range(13), range(10)):
        if a == b == 0:
            continue
        s = shapley_exact((a, b), pop, params)
        if a:
            assert low[a, b] == pytest.approx(s.price_low, rel=1e-11)
        if b:
            assert high[a, b] == pytest.approx(s.price_high, rel=1e-11)


@pytest.mark.parametrize("comp,perms", [((2, 2), 100_000), ((50, 50), 20_000)])
def test_sampled_shapley_within_three_stderr(table2, comp, perms):
    pop, params = table2
    est = shapley_sampled(comp, pop, params, permutations=perms, seed=7)
    exact = shapley_exact(comp, pop, params)
    assert abs(est.prices.price_low - exact.price_low) <= 3 * est.stderr_low
    assert abs(est.prices.price_high - exact.price_high) <= 3 * est.stderr_high


def test_sampled_shapley_zero_risk():
    pop = Population.of(0.0, 0.0, 5, 5, strict=False)
    est = shapley_sampled((5, 5), pop, CostParams(V=1000, b_p=2), permutations=50)
    assert est.prices == PriceSchedule(0.0, 0.0)


def test_sampled_shapley_is_seeded(table2):
    pop, params = table2
    a = shapley_sampled((5, 5), pop, params, permutations=300, seed=11)
    b = shapley_sampled((5, 5), pop, params, permutations=300, seed=11)
    assert a == b


def test_equal_risks_make_symmetric_schemes_coincide():
    pop = Population.of(0.03, 0.03, 40, 25, strict=False)
    params = CostParams(V=1000, b_p=2)
    avg = cost(pop.grand, pop, params) / pop.size
    for name in ("even_split", "proportional", "shapley"):
        s = get_scheme(name).price(pop.grand, pop, params)
        assert s.price_low == pytest.approx(avg, rel=1e-9), name
        assert s.price_high == pytest.approx(avg, rel=1e-9), name


def test_equal_risks_max_subsidy_still_favours_the_incumbent_type():
    # max-subsidy is not symmetric in the labels: "low" keeps its stand-alone
    # average, so the prices differ even when the two risks are equal
    pop = Population.of(0.03, 0.03, 40, 25, strict=False)
    params = CostParams(V=1000, b_p=2)
    s = max_subsidy(pop.grand, pop, params)
    assert s.price_low == pytest.approx(cost((40, 0), pop, params) / 40)
    assert s.price_high < cost(pop.grand, pop, params) / pop.size < s.price_low
    assert s.total(pop.grand) == pytest.approx(cost(pop.grand, pop, params))


def test_max_subsidy_monotonicity(table3):
    pop, params = table3
    low, high = get_scheme("max_subsidy").price_grid(pop.with_counts(60, 60), params)
    lo, hi = low[1:, 1:], high[1:, 1:]
    assert (np.diff(lo, axis=0) < 0).all()
    assert (np.diff(lo, axis=1) == 0).all()
    assert (np.diff(hi, axis=0) < 0).all() and (np.diff(hi, axis=1) < 0).all()


def test_proportional_low_price_falls_as_partners_get_riskier():
    params = CostParams(V=1000, b_p=2)
    prev = math.inf
    for r_high in np.linspace(0.021, 0.49, 60):
        price = proportional((500, 500), Population.of(0.02, r_high, 500, 500), params).price_low
        assert price < prev
        prev = price


@pytest.mark.parametrize("name", sorted(SCHEMES))
def test_price_grid_matches_price(table2, name):
    pop, params = table2
    pop = pop.with_counts(6, 8)
    scheme = get_scheme(name)
    low, high = scheme.price_grid(pop, params)
    for a, b in itertools.product(range(7), range(9)):
        if a == b == 0:
            continue
        s = scheme.price((a, b), pop, params)
        if a:
            assert low[a, b] == pytest.approx(s.price_low, rel=1e-11)
        else:
            assert math.isnan(low[a, b])
        if b:
            assert high[a, b] == pytest.approx(s.price_high, rel=1e-11)
        else:
            assert math.isnan(high[a, b])


def test_function_scheme_uses_default_grid(table2):
    pop, params = table2
    pop = pop.with_counts(3, 3)
    flat = FunctionScheme("flat", lambda comp, pop, params: PriceSchedule(
        30.0 if comp[0] else None, 30.0 if comp[1] else None))
    low, high = flat.price_grid(pop, params)
    assert np.nanmax(low) == 30.0 and np.isnan(low[0, 2]) and np.isnan(high[2, 0])
