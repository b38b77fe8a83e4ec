"""Risk-based pricing of contingent claims under volatility uncertainty.

One-period seller prices come from an entropic risk measure over a sublinear
expectation; iterating them on a grid approximates the continuous-time price.
"""

from .analytics import (
    OutOfRange,
    Payoff,
    SmoothTestFunction,
    bachelier_butterfly,
    bachelier_call,
    butterfly,
    call,
    constant,
    generator_ask,
    generator_consistency_check,
    generator_worst_case,
    implied_bachelier_vol,
    put,
    tabulated,
)
from .engine import (
    EngineConfig,
    Grid1D,
    GridFunction,
    PriceCurve,
    convergence_table,
    iterate_ask,
    iterate_bid,
    iterate_worst_case,
    padded_grid,
    price_curve,
)
from .errors import (
    ConfigError,
    DivergenceError,
    EvaluationError,
    IterationError,
    ParameterError,
    ResourceError,
    RiskPriceError,
)
from .models import (
    Scenario,
    SublinearModel,
    check_nondegeneracy,
    covariance_G,
    expect,
    make_binomial,
    make_normal_family,
    make_trinomial,
    make_uncertain_binomial,
    make_uniform,
)
from .risk import (
    RiskProfile,
    Unconstrained,
    VolumeBound,
    entropic_risk,
    minimize_convex_1d,
    trading_adjusted_risk,
)
from .stepper import (
    StepContext,
    one_step_ask,
    one_step_bid,
    one_step_worst_case,
    step_constant,
)

__version__ = "0.1.0"
