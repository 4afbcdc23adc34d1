"""End-to-end run orchestration.

Each stage is a plain function over a RunConfig plus the artifacts of the
stages before it, so the HTTP service and the CLI can invoke any prefix
of the flow: simulate -> ingest -> eligibility -> train -> forecast ->
optimize/sweep -> figures. ``run_pipeline`` strings them together and
writes a machine-readable run report.

All CSV exports format floats with repr() (shortest round-trip), so two
runs from the same config and seed produce byte-identical files.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .config import RunConfig
from .errors import (
    IneligibleError,
    NotFoundError,
    OptimizeError,
    PipelineError,
    PricecastError,
)
from .forecast import (
    ForecastGrid,
    PriceLadder,
    aggregate_weekly,
    build_price_ladder,
    forecast_grid,
    write_grid_csv,
)
from .ingest import (
    EligibilityReport,
    ModelMeta,
    PreparedSeries,
    check_eligibility,
    normalize,
    prepare_series,
    read_competitor_csv,
    read_transactions_csv,
)
from .optimize import PricingProblem, SolveOutcome, solve, sweep_alpha, write_plan_csv
from .simulate import (
    generate,
    write_competitor_csv,
    write_latent_csv,
    write_transactions_csv,
)
from .ssm import FittedModel, advance, elasticity, evaluate, fit
from .store import ModelStore

STATUS_OK = "ok"
STATUS_INELIGIBLE = "ineligible"
STATUS_INFEASIBLE = "infeasible"


# ---------------------------------------------------------------------------
# stage artifacts


@dataclass
class TrainArtifacts:
    fitted: FittedModel  # state advanced through the holdout, as stored
    version: int
    metrics: dict
    elasticity_confidence: float


@dataclass
class ForecastArtifacts:
    ladder: PriceLadder
    daily: ForecastGrid
    weekly: ForecastGrid


@dataclass
class OptimizeArtifacts:
    results: list  # [(alpha, SolveOutcome)], ascending alpha
    is_sweep: bool

    @property
    def any_feasible(self) -> bool:
        return any(o.status == "optimal" for _, o in self.results)

    def best_feasible(self):
        """Lowest-alpha feasible outcome; the least constrained plan."""
        for a, o in self.results:
            if o.status == "optimal":
                return a, o
        return None


@dataclass
class RunReport:
    product_id: str
    status: str
    stages: list = field(default_factory=list)
    eligibility: dict | None = None
    model: dict | None = None
    plans: list = field(default_factory=list)
    outputs: list = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "product_id": self.product_id,
            "status": self.status,
            "stages": self.stages,
            "eligibility": self.eligibility,
            "model": self.model,
            "plans": self.plans,
            "outputs": self.outputs,
        }


def _out_dir(cfg: RunConfig) -> Path:
    d = Path(cfg.out_product_dir)
    d.mkdir(parents=True, exist_ok=True)
    return d


def _record(report: RunReport, path: Path) -> Path:
    report.outputs.append(str(path))
    return path


# ---------------------------------------------------------------------------
# stages


def run_simulate(cfg: RunConfig, report: RunReport | None = None) -> dict:
    """Generate the configured synthetic product and write its files.

    Transactions and quotes land at the configured input paths, so the
    rest of the pipeline reads them exactly as it would real data. The
    latent state traces go next to the other outputs for diagnostics.
    """
    if cfg.simulation is None:
        raise PricecastError("config has no simulation block")
    transactions, quotes, traces = generate(cfg.simulation)
    tx_path = Path(cfg.transactions)
    tx_path.parent.mkdir(parents=True, exist_ok=True)
    write_transactions_csv(transactions, tx_path)
    paths = [tx_path]
    if cfg.competitor is not None:
        cp_path = Path(cfg.competitor)
        cp_path.parent.mkdir(parents=True, exist_ok=True)
        write_competitor_csv(quotes, cp_path)
        paths.append(cp_path)
    latent_path = _out_dir(cfg) / "latent.csv"
    write_latent_csv(traces, latent_path)
    paths.append(latent_path)
    if report is not None:
        report.stages.append("simulate")
        for p in paths:
            _record(report, p)
    return {
        "transactions": str(tx_path),
        "competitor": str(cfg.competitor) if cfg.competitor is not None else None,
        "latent": str(latent_path),
        "n_transactions": len(transactions),
        "n_quotes": len(quotes),
        "horizon_days": cfg.simulation.horizon_days,
    }


def run_ingest(cfg: RunConfig, report: RunReport | None = None) -> PreparedSeries:
    """Read the input files and build the model-ready daily series.

    The series is cut to the eligibility lookback window ending at the
    last observed day; normalization constants are recomputed on the
    window so the model scale reflects the data it will actually see.
    Outlier flags are detected over the full provided history first.
    """
    transactions = read_transactions_csv(cfg.transactions)
    quotes = read_competitor_csv(cfg.competitor) if cfg.competitor is not None else []
    series = prepare_series(transactions, quotes, cfg.calendar, c_mad=cfg.c_mad)
    window = cfg.eligibility.lookback_window
    if len(series) > window:
        series = normalize(series.observations[-window:])
    if report is not None:
        report.stages.append("ingest")
    return series


def run_eligibility(
    cfg: RunConfig,
    series: PreparedSeries,
    report: RunReport | None = None,
    write: bool = True,
) -> EligibilityReport:
    """Gate the product; model-quality rules use the last stored model."""
    meta = None
    try:
        prior = ModelStore(cfg.store_dir).load_latest(cfg.product_id)
        meta = ModelMeta(
            metrics=prior.metrics,
            elasticity_confidence=elasticity(prior).confidence,
        )
    except NotFoundError:
        pass
    elig = check_eligibility(series, meta, cfg.eligibility)
    if write:
        path = _out_dir(cfg) / "eligibility.json"
        with open(path, "w") as fh:
            json.dump(elig.as_dict(), fh, indent=1, sort_keys=True)
            fh.write("\n")
        if report is not None:
            _record(report, path)
    if report is not None:
        report.stages.append("eligibility")
        report.eligibility = elig.as_dict()
    return elig


def model_summary(fitted: FittedModel, version: int, metrics: dict) -> dict:
    """Flat JSON view of a stored model, shared by reports and the service."""
    est = elasticity(fitted)
    return {
        "version": version,
        "loglik": fitted.loglik,
        "coefficients": dict(fitted.coefficients),
        "std_errors": dict(fitted.std_errors),
        "metrics": metrics,
        "elasticity": {
            "value": est.beta,
            "std_error": est.se,
            "confidence": est.confidence,
        },
        "train_start": fitted.train_start.isoformat(),
        "train_end": fitted.train_end.isoformat(),
    }


def run_train(
    cfg: RunConfig, series: PreparedSeries, report: RunReport | None = None
) -> TrainArtifacts:
    """Fit on the series minus the holdout tail, score, advance, store.

    Hyperparameters and coefficients are estimated without the last
    ``holdout_days`` days, which then score the model one step ahead
    before being folded into the stored state. The stored model therefore
    carries honest out-of-sample metrics and forecasts from the latest
    observed day.
    """
    n = len(series)
    hd = cfg.holdout_days if 0 < cfg.holdout_days < n else 0
    if hd:
        train = normalize(series.observations[:-hd])
        fitted = fit(train, cfg.model, cfg.fit)
        holdout = normalize(series.observations[-hd:], y_bar=train.y_bar, x_bar=train.x_bar)
        metrics = evaluate(fitted, holdout)
        fitted = advance(fitted, holdout, metrics=metrics)
    else:
        fitted = fit(series, cfg.model, cfg.fit)
        metrics = {}
    version = ModelStore(cfg.store_dir).save_model(cfg.product_id, fitted)
    if report is not None:
        report.stages.append("train")
        report.model = model_summary(fitted, version, metrics)
    return TrainArtifacts(
        fitted=fitted,
        version=version,
        metrics=metrics,
        elasticity_confidence=elasticity(fitted).confidence,
    )


def run_forecast(
    cfg: RunConfig,
    fitted: FittedModel,
    series: PreparedSeries,
    report: RunReport | None = None,
) -> ForecastArtifacts:
    """Ladder from observed prices, then daily and weekly demand grids."""
    ladder = build_price_ladder(series, cfg.ladder_levels)
    daily = forecast_grid(
        fitted,
        ladder,
        cfg.horizon_weeks * 7,
        calendar=cfg.calendar,
        min_other_price=cfg.min_other_price,
        mean_corrected=cfg.mean_corrected,
    )
    weekly = aggregate_weekly(daily)
    out = _out_dir(cfg)
    write_grid_csv(daily, out / "daily_grid.csv")
    write_grid_csv(weekly, out / "weekly_grid.csv")
    if report is not None:
        report.stages.append("forecast")
        _record(report, out / "daily_grid.csv")
        _record(report, out / "weekly_grid.csv")
    return ForecastArtifacts(ladder=ladder, daily=daily, weekly=weekly)


def _problem(cfg: RunConfig, weekly: ForecastGrid, alpha: float) -> PricingProblem:
    return PricingProblem(
        prices=np.asarray(weekly.ladder.levels, dtype=float),
        demand=weekly.demand,
        s0=cfg.s0,
        alpha=alpha,
    )


def _plan_filename(alpha: float) -> str:
    return f"plan_alpha_{alpha:g}.csv"


def _plan_summary(alpha: float, outcome: SolveOutcome, weekly: ForecastGrid) -> dict:
    entry = {
        "alpha": alpha,
        "status": outcome.status,
        "solver": outcome.solver,
        "nodes": outcome.nodes,
    }
    if outcome.plan is not None:
        prices = [float(weekly.ladder.levels[i]) for i in outcome.plan.levels]
        entry.update(
            {
                "objective": outcome.plan.objective,
                "sell_through": outcome.plan.sell_through,
                "levels": [i + 1 for i in outcome.plan.levels],
                "prices": prices,
                "mean_price": sum(prices) / len(prices),
            }
        )
    return entry


def run_optimize(
    cfg: RunConfig,
    weekly: ForecastGrid,
    alpha: float | None = None,
    report: RunReport | None = None,
) -> OptimizeArtifacts:
    """Solve a single sell-through floor and write the plan CSV."""
    a = cfg.alpha if alpha is None else float(alpha)
    outcome = solve(_problem(cfg, weekly, a))
    path = _out_dir(cfg) / _plan_filename(a)
    write_plan_csv(weekly, outcome, path)
    if report is not None:
        report.stages.append("optimize")
        _record(report, path)
        report.plans.append(_plan_summary(a, outcome, weekly))
    return OptimizeArtifacts(results=[(a, outcome)], is_sweep=False)


def _write_sweep_csv(weekly: ForecastGrid, results, path) -> None:
    """One file across all alphas; infeasible alphas contribute no rows."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["alpha", "bucket", "level", "price", "demand", "revenue", "remaining_inventory"])
        for a, outcome in results:
            if outcome.plan is None:
                continue
            plan = outcome.plan
            for t, i in enumerate(plan.levels):
                w.writerow(
                    [
                        repr(float(a)),
                        weekly.buckets[t].isoformat(),
                        i + 1,
                        repr(float(weekly.ladder.levels[i])),
                        repr(float(weekly.demand[i, t])),
                        repr(float(weekly.revenue[i, t])),
                        repr(float(plan.inventory[t + 1])),
                    ]
                )


def run_sweep(
    cfg: RunConfig,
    weekly: ForecastGrid,
    alphas=None,
    report: RunReport | None = None,
) -> OptimizeArtifacts:
    """Solve each alpha, write one plan CSV per alpha plus a summary."""
    values = tuple(alphas) if alphas is not None else cfg.alphas
    if not values:
        raise OptimizeError("sweep requested but no alpha list configured")
    results = sweep_alpha(_problem(cfg, weekly, values[0]), values)
    out = _out_dir(cfg)
    paths = []
    for a, outcome in results:
        p = out / _plan_filename(a)
        write_plan_csv(weekly, outcome, p)
        paths.append(p)
    sweep_path = out / "sweep.csv"
    _write_sweep_csv(weekly, results, sweep_path)
    paths.append(sweep_path)
    if report is not None:
        report.stages.append("sweep")
        for p in paths:
            _record(report, p)
        for a, outcome in results:
            report.plans.append(_plan_summary(a, outcome, weekly))
    return OptimizeArtifacts(results=results, is_sweep=True)


def run_figures(
    cfg: RunConfig,
    weekly: ForecastGrid,
    optimized: OptimizeArtifacts,
    report: RunReport | None = None,
) -> list:
    """Figure-data CSVs plus static SVG charts; see the figures module."""
    from . import figures

    out = _out_dir(cfg) / "figures"
    out.mkdir(parents=True, exist_ok=True)
    paths = figures.emit_figures(weekly, optimized, out)
    if report is not None:
        report.stages.append("figures")
        for p in paths:
            _record(report, p)
    return paths


# ---------------------------------------------------------------------------
# the full flow


def _write_report(cfg: RunConfig, report: RunReport) -> Path:
    path = _out_dir(cfg) / "run_report.json"
    with open(path, "w") as fh:
        json.dump(report.as_dict(), fh, indent=1, sort_keys=True)
        fh.write("\n")
    return path


def run_pipeline(cfg: RunConfig) -> RunReport:
    """Execute every configured stage in order.

    An ineligible product halts the run after the eligibility report and
    never writes a model. A run whose every alpha is infeasible is marked
    infeasible. Any stage exception is re-raised as PipelineError with
    the stage name attached; the partial report is still written.
    """
    report = RunReport(product_id=cfg.product_id, status=STATUS_OK)
    stage = "setup"
    try:
        if cfg.simulation is not None:
            stage = "simulate"
            run_simulate(cfg, report)
        stage = "ingest"
        series = run_ingest(cfg, report)
        stage = "eligibility"
        elig = run_eligibility(cfg, series, report)
        if not elig.eligible:
            report.status = STATUS_INELIGIBLE
            _write_report(cfg, report)
            return report
        stage = "train"
        trained = run_train(cfg, series, report)
        stage = "forecast"
        forecasted = run_forecast(cfg, trained.fitted, series, report)
        if cfg.alphas:
            stage = "sweep"
            optimized = run_sweep(cfg, forecasted.weekly, report=report)
        else:
            stage = "optimize"
            optimized = run_optimize(cfg, forecasted.weekly, report=report)
        if not optimized.any_feasible:
            report.status = STATUS_INFEASIBLE
        stage = "figures"
        run_figures(cfg, forecasted.weekly, optimized, report)
    except IneligibleError:
        raise
    except (PricecastError, OSError) as exc:
        report.status = "error"
        report.stages.append(f"{stage}:failed")
        try:
            _write_report(cfg, report)
        except OSError:
            pass
        raise PipelineError(stage, exc) from exc
    _write_report(cfg, report)
    return report
