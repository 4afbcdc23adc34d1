"""Request and response bodies for the HTTP service.

Every stage endpoint takes the path to a run config file plus optional
overrides mirroring the CLI flags; responses carry the same summaries
the pipeline writes into its run report.
"""

from __future__ import annotations

from pydantic import BaseModel, Field


# ---------------------------------------------------------------------------
# requests


class StageRequest(BaseModel):
    config: str = Field(description="path to the YAML run config on the server")
    product: str | None = Field(default=None, description="override product_id")
    out: str | None = Field(default=None, description="override output directory")
    seed: int | None = Field(default=None, description="override the run seed")


class SimulateRequest(StageRequest):
    pass


class IngestRequest(StageRequest):
    pass


class EligibilityRequest(StageRequest):
    pass


class TrainRequest(StageRequest):
    pass


class ForecastRequest(StageRequest):
    weeks: int | None = Field(default=None, ge=1, description="horizon in weeks")
    levels: int | None = Field(default=None, ge=1, description="price ladder size")


class OptimizeRequest(ForecastRequest):
    s0: float | None = Field(default=None, gt=0, description="starting inventory")
    alpha: float | None = Field(default=None, ge=0, le=1, description="sell-through floor")


class SweepRequest(ForecastRequest):
    s0: float | None = Field(default=None, gt=0)
    alphas: list[float] | None = Field(default=None, description="ascending floors")


class RunRequest(StageRequest):
    s0: float | None = Field(default=None, gt=0)
    alpha: float | None = Field(default=None, ge=0, le=1)
    alphas: list[float] | None = None


class FiguresRequest(SweepRequest):
    alpha: float | None = Field(default=None, ge=0, le=1)


# ---------------------------------------------------------------------------
# responses


class HealthResponse(BaseModel):
    status: str
    name: str
    version: str


class SimulateResponse(BaseModel):
    product_id: str
    transactions: str
    competitor: str | None
    latent: str
    n_transactions: int
    n_quotes: int
    horizon_days: int


class IngestResponse(BaseModel):
    product_id: str
    start: str
    end: str
    days: int
    days_with_transactions: int
    outlier_days: int
    y_bar: float
    x_bar: float


class RuleOutcomeModel(BaseModel):
    rule: str
    observed: float | None
    threshold: float
    passed: bool | None


class EligibilityResponse(BaseModel):
    product_id: str
    eligible: bool
    outcomes: list[RuleOutcomeModel]
    reasons: list[str]


class ElasticityModel(BaseModel):
    value: float
    std_error: float
    confidence: float


class TrainResponse(BaseModel):
    product_id: str
    version: int
    loglik: float
    coefficients: dict[str, float]
    std_errors: dict[str, float]
    metrics: dict[str, float]
    elasticity: ElasticityModel
    train_start: str
    train_end: str


class ForecastResponse(BaseModel):
    product_id: str
    model_version: int
    prices: list[float]
    weeks: int
    buckets: list[str]
    daily_csv: str
    weekly_csv: str


class PlanModel(BaseModel):
    alpha: float
    status: str
    solver: str
    nodes: int
    objective: float | None = None
    sell_through: float | None = None
    levels: list[int] | None = None
    prices: list[float] | None = None
    mean_price: float | None = None


class OptimizeResponse(BaseModel):
    product_id: str
    plan: PlanModel
    path: str


class SweepResponse(BaseModel):
    product_id: str
    status: str
    plans: list[PlanModel]
    paths: list[str]


class RunResponse(BaseModel):
    product_id: str
    status: str
    stages: list[str]
    eligibility: dict | None
    model: dict | None
    plans: list[PlanModel]
    outputs: list[str]


class FiguresResponse(BaseModel):
    product_id: str
    status: str
    paths: list[str]


class VersionsResponse(BaseModel):
    product_id: str
    versions: list[int]


class ErrorResponse(BaseModel):
    detail: str
    error: str
