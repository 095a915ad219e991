"""Sparse-grid dynamic-programming pricer for Bermudan basket puts.

Library layout:

- ``market``: correlated GBM basket, rotation to independent coordinates.
- ``transform``: tanh cube map, boundary bubble, feasibility bound.
- ``sparse_grid``: nested Chebyshev sparse grids and barycentric evaluation.
- ``quadrature``: pluggable one-step rules (tensor/sparse Gauss-Hermite,
  nested normal family, MC, scrambled Sobol).
- ``engine``: the backward recursion itself.
- ``oracles``: independent 1-d references for geometric baskets.
- ``service`` / ``cli``: HTTP facade and batch front end.
"""

from .engine import PricingConfig, PricingEngine, PricingResult, price
from .errors import (
    ConfigError,
    FeasibilityError,
    NumericalError,
    ResourceCapError,
    SGBasketError,
)
from .market import (
    MarketParams,
    OptionSpec,
    RotatedModel,
    decorrelate,
    payoff,
    prices_from_rotated,
)
from .oracles import (
    Reduced1D,
    ReferenceOutcome,
    bermudan_put_1d,
    binomial_put_bermudan,
    european_put_closed_form,
    geometric_reduction,
    reference_price,
)
from .quadrature import (
    GaussianStepSpec,
    QuadratureConfig,
    QuadratureRule,
    build_rule,
    gauss_hermite_1d,
    inverse_normal_cdf,
)
from .sparse_grid import (
    Interpolant,
    NestedRule1D,
    PointEvaluator,
    SmolyakGrid,
    asymptotic_inner_count,
    build_grid,
    full_tensor_inner_count,
    node_rule,
)
from .transform import (
    FeasibilityResult,
    TransformConfig,
    bubble,
    feasibility_check,
    propagate,
    to_bounded,
    to_unbounded,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "ConfigError",
    "FeasibilityError",
    "NumericalError",
    "ResourceCapError",
    "SGBasketError",
    "MarketParams",
    "OptionSpec",
    "RotatedModel",
    "decorrelate",
    "payoff",
    "prices_from_rotated",
    "TransformConfig",
    "FeasibilityResult",
    "to_bounded",
    "to_unbounded",
    "bubble",
    "propagate",
    "feasibility_check",
    "NestedRule1D",
    "SmolyakGrid",
    "Interpolant",
    "PointEvaluator",
    "node_rule",
    "build_grid",
    "asymptotic_inner_count",
    "full_tensor_inner_count",
    "GaussianStepSpec",
    "QuadratureConfig",
    "QuadratureRule",
    "build_rule",
    "gauss_hermite_1d",
    "inverse_normal_cdf",
    "PricingConfig",
    "PricingEngine",
    "PricingResult",
    "price",
    "Reduced1D",
    "ReferenceOutcome",
    "geometric_reduction",
    "european_put_closed_form",
    "bermudan_put_1d",
    "binomial_put_bermudan",
    "reference_price",
]
