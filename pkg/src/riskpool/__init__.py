"""Cost-sharing game engine for two-type insurance risk pools."""

from .errors import CapabilityError, DomainError, InvariantViolation, RiskPoolError
from .kernels import BACKEND
from .model import (
    CostParams,
    PoolComposition,
    Population,
    RiskProfile,
    check_submodularity,
    check_submodularity_exhaustive,
    cost,
    marginal_cost,
    variance_factor,
)
from .pricing import (
    SCHEMES,
    PriceSchedule,
    PricingScheme,
    even_split,
    get_scheme,
    max_subsidy,
    proportional,
    shapley_exact,
    shapley_sampled,
)
from .quantiles import bp_from_p, exact_insolvency_quantile, p_from_bp
from .stability import (
    cascade,
    evensplit_condition,
    is_core_stable,
    max_subsidy_tightness,
)

__version__ = "0.1.0"
