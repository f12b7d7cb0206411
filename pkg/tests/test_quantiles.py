import math

import numpy as np
import pytest
from scipy import stats

from riskpool import CapabilityError, CostParams, DomainError, Population, bp_from_p, cost, p_from_bp
from riskpool.quantiles import exact_insolvency_quantile

from oracles import exact_tail_quantile, normal_upper_tail_inverse

P_GRID = [1e-4, 5e-4, 1e-3, 0.00135, 0.005, 0.01, 0.02275, 0.05, 0.1, 0.2, 0.3, 0.4, 0.45, 0.49]


def test_two_sigma_tail():
    # 2.27% insolvency probability for a two-standard-deviation buffer
    assert p_from_bp(2.0) == pytest.approx(0.02275, abs=5e-6)


def test_three_sigma_against_integration_oracle():
    b = bp_from_p(0.00135)
    assert abs(b - float(normal_upper_tail_inverse(0.00135))) <= 1e-9
    assert b == pytest.approx(3.0, abs=1e-3)


@pytest.mark.parametrize("p", P_GRID)
def test_inverse_matches_integration_oracle(p):
    assert abs(bp_from_p(p) - float(normal_upper_tail_inverse(p))) <= 1e-9


@pytest.mark.parametrize("p", P_GRID)
def test_round_trip(p):
    assert abs(p_from_bp(bp_from_p(p)) - p) <= 1e-9


@pytest.mark.parametrize("p", [0.0, 0.5, 0.7, -0.1, math.nan])
def test_inverse_domain(p):
    with pytest.raises(DomainError):
        bp_from_p(p)


def _reference_pmf(n_low, r_low, n_high, r_high):
    return np.convolve(stats.binom.pmf(np.arange(n_low + 1), n_low, r_low),
                       stats.binom.pmf(np.arange(n_high + 1), n_high, r_high))


def test_single_member_quantile():
    pop = Population.of(0.3, 0.4, 1, 0)
    # P(K > 0) = 0.3 > 0.25, P(K > 1) = 0
    assert exact_insolvency_quantile((1, 0), pop, CostParams(V=1000, b_p=2), 0.25) == 1000


def test_zero_risk_quantile():
    pop = Population.of(0.0, 0.1, 5, 0)
    assert exact_insolvency_quantile((5, 0), pop, CostParams(V=1000, b_p=2), 0.02) == 0


@pytest.mark.parametrize("comp", [(500, 0), (0, 500), (500, 500), (37, 11)])
def test_quantile_matches_reference_distribution(table2, comp):
    pop, params = table2
    ref = exact_tail_quantile(_reference_pmf(comp[0], 0.02, comp[1], 0.025), 0.02275)
    assert exact_insolvency_quantile(comp, pop, params, 0.02275) == 1000 * ref


@pytest.mark.parametrize("comp", [(500, 0), (0, 500), (500, 500)])
def test_normal_approximation_within_one_claim(table2, comp):
    pop, params = table2
    exact = exact_insolvency_quantile(comp, pop, params, p_from_bp(2.0))
    assert abs(exact - cost(comp, pop, params)) <= params.V


def test_quantile_size_limit():
    pop = Population.of(0.02, 0.04, 3000, 3000)
    with pytest.raises(CapabilityError):
        exact_insolvency_quantile((3000, 3000), pop, CostParams(V=1, b_p=2), 0.01)
