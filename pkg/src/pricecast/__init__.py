"""Demand forecasting and price optimization for a single retail product.

The package turns a raw transaction log and competitor price quotes into
a daily demand model (structural time series with price, competition and
calendar effects), projects demand over a ladder of candidate prices,
and solves for the revenue-maximizing weekly price schedule under an
inventory sell-through constraint.
"""

__version__ = "0.1.0"

from .config import ConfigError, RunConfig, load_config
from .errors import (
    EmptySeriesError,
    FitError,
    ForecastError,
    IneligibleError,
    InvalidQuoteError,
    InvalidRecordError,
    NotFoundError,
    OptimizeError,
    ParseError,
    PipelineError,
    PricecastError,
)
from .forecast import (
    ForecastGrid,
    PriceLadder,
    aggregate_weekly,
    build_price_ladder,
    forecast_demand,
    forecast_grid,
)
from .ingest import (
    CalendarConfig,
    CompetitorQuote,
    DailyObservation,
    EligibilityReport,
    EligibilityRules,
    ModelMeta,
    PreparedSeries,
    RawTransaction,
    check_eligibility,
    competitive_indicator,
    detect_outliers,
    prepare_series,
)
from .optimize import (
    PricingPlan,
    PricingProblem,
    SolveOutcome,
    brute_force,
    sell_through,
    solve,
    sweep_alpha,
)
from .pipeline import RunReport, run_pipeline
from .simulate import GroundTruth, generate, recovery_report, reference_ground_truth
from .ssm import (
    FitOptions,
    FittedModel,
    Hyperparams,
    ModelSpec,
    advance,
    elasticity,
    evaluate,
    extract_components,
    fit,
    kalman_loglik,
)
from .store import ModelStore

__all__ = [
    "__version__",
    "CalendarConfig",
    "CompetitorQuote",
    "ConfigError",
    "DailyObservation",
    "EligibilityReport",
    "EligibilityRules",
    "EmptySeriesError",
    "FitError",
    "FitOptions",
    "FittedModel",
    "ForecastError",
    "ForecastGrid",
    "GroundTruth",
    "Hyperparams",
    "IneligibleError",
    "InvalidQuoteError",
    "InvalidRecordError",
    "ModelMeta",
    "ModelSpec",
    "ModelStore",
    "NotFoundError",
    "OptimizeError",
    "ParseError",
    "PipelineError",
    "PreparedSeries",
    "PriceLadder",
    "PricecastError",
    "PricingPlan",
    "PricingProblem",
    "RawTransaction",
    "RunConfig",
    "RunReport",
    "SolveOutcome",
    "advance",
    "aggregate_weekly",
    "brute_force",
    "build_price_ladder",
    "check_eligibility",
    "competitive_indicator",
    "detect_outliers",
    "elasticity",
    "evaluate",
    "extract_components",
    "fit",
    "forecast_demand",
    "forecast_grid",
    "generate",
    "kalman_loglik",
    "load_config",
    "prepare_series",
    "recovery_report",
    "reference_ground_truth",
    "run_pipeline",
    "sell_through",
    "solve",
    "sweep_alpha",
]
