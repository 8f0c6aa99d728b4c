"""Pricing equilibria for a market in fresh data updates."""

__version__ = "0.1.0"

from .cost_models import (  # noqa: E402
    Linear,
    Monomial,
    PolynomialCoefficients,
    PowerLaw,
    Sampled,
    check_one_update_viability,
    cumulative_age_cost,
    differential_age_cost,
    age_cost,
    marginal_operational_cost,
    operational_cost,
)
from .market import (  # noqa: E402
    MarketInstance,
    OutcomeReport,
    QuantityBased,
    TimeDependent,
    TimeQuantity,
    UpdatePolicy,
    aggregate_aoi_cost,
    aoi_at,
    evaluate_outcome,
    payment,
)
from .destination import grid_best_response, quantity_best_response, upsilon  # noqa: E402
from .pricing import (  # noqa: E402
    compare_profits,
    profit_upper_bound,
    social_optimum,
    solve_quantity_based,
    solve_time_dependent,
    time_dependent_k_update_value,
)
