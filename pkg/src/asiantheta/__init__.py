"""High-precision Laguerre-series pricing of arithmetic Asian options."""

__version__ = "0.1.0"

from .errors import (
    AsianThetaError,
    ContractError,
    DomainError,
    NonConvergenceError,
    UnsupportedConfigurationError,
)
from .moments import MomentTable, first_moment_dufresne, negative_moments, positive_first_moment
from .numerics import PrecisionContext
from .pricer import MarketParams, NormalizedParams, PriceReport, denormalize, normalize, price, price_direct, price_ladder
from .theta import ThetaIntegralTable, theta_integral, theta_integral_quad, theta_table

__all__ = [
    "AsianThetaError",
    "ContractError",
    "DomainError",
    "MarketParams",
    "MomentTable",
    "NonConvergenceError",
    "NormalizedParams",
    "PrecisionContext",
    "PriceReport",
    "ThetaIntegralTable",
    "UnsupportedConfigurationError",
    "denormalize",
    "first_moment_dufresne",
    "negative_moments",
    "normalize",
    "positive_first_moment",
    "price",
    "price_direct",
    "price_ladder",
    "theta_integral",
    "theta_integral_quad",
    "theta_table",
]
