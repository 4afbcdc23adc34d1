"""FastAPI application exposing the pipeline stages.

The service is stateless between requests: every call names a config
file on the server and optional overrides, the relevant stages run, and
artifacts land in the configured output directory exactly as a direct
pipeline run would leave them. Model state persists only through the
model store, so the prediction endpoints always read the latest stored
version.
"""

from __future__ import annotations

import numpy as np
from fastapi import FastAPI, Query
from fastapi.responses import JSONResponse

from .. import __version__, pipeline
from ..config import ConfigError, RunConfig, load_config
from ..errors import (
    IneligibleError,
    InvalidRecordError,
    NotFoundError,
    ParseError,
    PipelineError,
    PricecastError,
)
from ..ssm import elasticity
from ..store import ModelStore, model_to_dict
from . import schemas as s

_ERROR_STATUS = (
    (NotFoundError, 404),
    (IneligibleError, 409),
    (ParseError, 500),
    (PipelineError, 500),
    (ConfigError, 400),
    (InvalidRecordError, 400),
    (PricecastError, 400),
)


def _load(req: s.StageRequest, **extra) -> RunConfig:
    overrides: dict = {
        "product_id": req.product,
        "output_dir": req.out,
        "seed": req.seed,
    }
    overrides.update(extra)
    return load_config(req.config, overrides)


def _forecast_overrides(req) -> dict:
    return {"horizon_weeks": req.weeks, "ladder_levels": req.levels}


def _plan_models(cfg, weekly, optimized) -> list:
    return [
        s.PlanModel(**pipeline._plan_summary(a, o, weekly)) for a, o in optimized.results
    ]


def create_app() -> FastAPI:
    app = FastAPI(title="pricecast", version=__version__)

    for exc_type, status in _ERROR_STATUS:

        def _handler(request, exc, status=status):
            return JSONResponse(
                status_code=status,
                content={"detail": str(exc), "error": type(exc).__name__},
            )

        app.add_exception_handler(exc_type, _handler)

    def _io_handler(request, exc):
        # a missing or unreadable input file is the caller's problem
        return JSONResponse(
            status_code=400,
            content={"detail": str(exc), "error": type(exc).__name__},
        )

    app.add_exception_handler(OSError, _io_handler)

    @app.get("/health", response_model=s.HealthResponse)
    def health():
        return s.HealthResponse(status="ok", name="pricecast", version=__version__)

    @app.post("/simulate", response_model=s.SimulateResponse)
    def simulate(req: s.SimulateRequest):
        cfg = _load(req)
        result = pipeline.run_simulate(cfg)
        return s.SimulateResponse(product_id=cfg.product_id, **result)

    @app.post("/ingest", response_model=s.IngestResponse)
    def ingest(req: s.IngestRequest):
        cfg = _load(req)
        series = pipeline.run_ingest(cfg)
        return s.IngestResponse(
            product_id=cfg.product_id,
            start=series.start.isoformat(),
            end=series.end.isoformat(),
            days=len(series),
            days_with_transactions=series.days_with_transactions(),
            outlier_days=int(np.sum(series.outlier)),
            y_bar=series.y_bar,
            x_bar=series.x_bar,
        )

    @app.post("/eligibility", response_model=s.EligibilityResponse)
    def eligibility(req: s.EligibilityRequest):
        cfg = _load(req)
        series = pipeline.run_ingest(cfg)
        elig = pipeline.run_eligibility(cfg, series)
        return s.EligibilityResponse(product_id=cfg.product_id, **elig.as_dict())

    @app.post("/train", response_model=s.TrainResponse)
    def train(req: s.TrainRequest):
        cfg = _load(req)
        series = pipeline.run_ingest(cfg)
        elig = pipeline.run_eligibility(cfg, series)
        if not elig.eligible:
            raise IneligibleError(elig)
        trained = pipeline.run_train(cfg, series)
        fitted = trained.fitted
        est = elasticity(fitted)
        return s.TrainResponse(
            product_id=cfg.product_id,
            version=trained.version,
            loglik=fitted.loglik,
            coefficients=dict(fitted.coefficients),
            std_errors=dict(fitted.std_errors),
            metrics={k: float(v) for k, v in trained.metrics.items()},
            elasticity=s.ElasticityModel(
                value=est.beta, std_error=est.se, confidence=est.confidence
            ),
            train_start=fitted.train_start.isoformat(),
            train_end=fitted.train_end.isoformat(),
        )

    def _forecast_stage(cfg: RunConfig):
        series = pipeline.run_ingest(cfg)
        fitted = ModelStore(cfg.store_dir).load_latest(cfg.product_id)
        return series, fitted, pipeline.run_forecast(cfg, fitted, series)

    @app.post("/forecast", response_model=s.ForecastResponse)
    def forecast(req: s.ForecastRequest):
        cfg = _load(req, **_forecast_overrides(req))
        _, fitted, fc = _forecast_stage(cfg)
        out = cfg.out_product_dir
        return s.ForecastResponse(
            product_id=cfg.product_id,
            model_version=fitted.version or 0,
            prices=[float(p) for p in fc.ladder.levels],
            weeks=cfg.horizon_weeks,
            buckets=[b.isoformat() for b in fc.weekly.buckets],
            daily_csv=str(out / "daily_grid.csv"),
            weekly_csv=str(out / "weekly_grid.csv"),
        )

    @app.post("/optimize", response_model=s.OptimizeResponse)
    def optimize(req: s.OptimizeRequest):
        cfg = _load(req, s0=req.s0, alpha=req.alpha, **_forecast_overrides(req))
        _, _, fc = _forecast_stage(cfg)
        optimized = pipeline.run_optimize(cfg, fc.weekly)
        plans = _plan_models(cfg, fc.weekly, optimized)
        path = cfg.out_product_dir / pipeline._plan_filename(optimized.results[0][0])
        return s.OptimizeResponse(product_id=cfg.product_id, plan=plans[0], path=str(path))

    @app.post("/sweep", response_model=s.SweepResponse)
    def sweep(req: s.SweepRequest):
        alphas = tuple(req.alphas) if req.alphas else None
        cfg = _load(req, s0=req.s0, alphas=alphas, **_forecast_overrides(req))
        _, _, fc = _forecast_stage(cfg)
        optimized = pipeline.run_sweep(cfg, fc.weekly)
        out = cfg.out_product_dir
        paths = [str(out / pipeline._plan_filename(a)) for a, _ in optimized.results]
        paths.append(str(out / "sweep.csv"))
        return s.SweepResponse(
            product_id=cfg.product_id,
            status=pipeline.STATUS_OK if optimized.any_feasible else pipeline.STATUS_INFEASIBLE,
            plans=_plan_models(cfg, fc.weekly, optimized),
            paths=paths,
        )

    @app.post("/run", response_model=s.RunResponse)
    def run(req: s.RunRequest):
        alphas = tuple(req.alphas) if req.alphas else None
        cfg = _load(req, s0=req.s0, alpha=req.alpha, alphas=alphas)
        report = pipeline.run_pipeline(cfg)
        return s.RunResponse(**report.as_dict())

    @app.post("/figures", response_model=s.FiguresResponse)
    def figures(req: s.FiguresRequest):
        alphas = tuple(req.alphas) if req.alphas else None
        cfg = _load(req, s0=req.s0, alpha=req.alpha, alphas=alphas, **_forecast_overrides(req))
        _, _, fc = _forecast_stage(cfg)
        if cfg.alphas:
            optimized = pipeline.run_sweep(cfg, fc.weekly)
        else:
            optimized = pipeline.run_optimize(cfg, fc.weekly)
        paths = pipeline.run_figures(cfg, fc.weekly, optimized)
        return s.FiguresResponse(
            product_id=cfg.product_id,
            status=pipeline.STATUS_OK if optimized.any_feasible else pipeline.STATUS_INFEASIBLE,
            paths=[str(p) for p in paths],
        )

    @app.get("/models/{product_id}/versions", response_model=s.VersionsResponse)
    def versions(product_id: str, config: str = Query(description="path to the run config")):
        cfg = load_config(config, {"product_id": product_id})
        store = ModelStore(cfg.store_dir)
        return s.VersionsResponse(product_id=product_id, versions=store.list_versions(product_id))

    @app.get("/models/{product_id}/latest")
    def latest(product_id: str, config: str = Query(description="path to the run config")):
        cfg = load_config(config, {"product_id": product_id})
        fitted = ModelStore(cfg.store_dir).load_latest(product_id)
        return model_to_dict(fitted)

    return app
