"""Information-driven asset pricing.

Market information about a future cash flow is modelled as a scaled signal
plus independent Brownian-bridge noise; Bayesian filtering of that process
yields the conditional payout density, and from it prices, volatilities and
option values, both analytically and by simulation.
"""

__version__ = "0.1.0"

from .filtering import (
    ConditionalDensity,
    MassCollapseError,
    condition,
    conditional_mean,
    conditional_third,
    conditional_variance,
    consistency_reinitialize,
    evolve_density_sde,
    initial_density,
)
from .market import DiscountCurve, FlatCurve, FlowSchedule, TabulatedCurve
from .numerics import (
    QuadratureRule,
    SignFixedError,
    TimeGrid,
    find_root_increasing,
    integrate_semiinfinite,
    logsumexp_weights,
    normal_cdf,
)
from .options import (
    CallSpec,
    CriticalValue,
    MCPrice,
    call_price_analytic,
    call_price_mc,
    critical_value,
    put_price_parity,
)
from .payoff import Payoff
from .pricing import (
    AssetSpec,
    CashFlowSpec,
    FactorState,
    VolatilityDecomposition,
    XFactorSpec,
    closed_form_exponential,
    closed_form_gamma,
    correlation_common_factor,
    gaussian_power_tails,
    price_asset,
    price_gbm_factor,
    price_single,
    volatility_vector,
)
from .priors import (
    DiscreteAtoms,
    Exponential,
    Gamma,
    LogNormalTerminal,
    PriorDistribution,
    StandardNormal,
    Tabulated,
)
from .scenario import Scenario, ScenarioError, load_scenario, load_scenario_file
from .stochastic import (
    InformationPath,
    RngStream,
    RoundTripResult,
    inverse_filter_roundtrip,
    reconstruct_innovation,
    sample_bridge,
    simulate_information_path,
)

__all__ = [
    "__version__",
    "AssetSpec",
    "CallSpec",
    "CashFlowSpec",
    "ConditionalDensity",
    "CriticalValue",
    "DiscountCurve",
    "DiscreteAtoms",
    "Exponential",
    "FactorState",
    "FlatCurve",
    "FlowSchedule",
    "Gamma",
    "InformationPath",
    "LogNormalTerminal",
    "MassCollapseError",
    "MCPrice",
    "Payoff",
    "PriorDistribution",
    "QuadratureRule",
    "RngStream",
    "RoundTripResult",
    "Scenario",
    "ScenarioError",
    "SignFixedError",
    "StandardNormal",
    "Tabulated",
    "TabulatedCurve",
    "TimeGrid",
    "VolatilityDecomposition",
    "XFactorSpec",
    "call_price_analytic",
    "call_price_mc",
    "closed_form_exponential",
    "closed_form_gamma",
    "condition",
    "conditional_mean",
    "conditional_third",
    "conditional_variance",
    "consistency_reinitialize",
    "correlation_common_factor",
    "critical_value",
    "evolve_density_sde",
    "find_root_increasing",
    "gaussian_power_tails",
    "initial_density",
    "integrate_semiinfinite",
    "inverse_filter_roundtrip",
    "load_scenario",
    "load_scenario_file",
    "logsumexp_weights",
    "normal_cdf",
    "price_asset",
    "price_gbm_factor",
    "price_single",
    "put_price_parity",
    "reconstruct_innovation",
    "sample_bridge",
    "simulate_information_path",
    "volatility_vector",
]
