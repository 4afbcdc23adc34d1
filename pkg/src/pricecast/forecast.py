"""Price ladder construction and demand/revenue forecast grids.

A fitted model is propagated forward (no data updates) once per candidate
price, giving the demand matrix d_it and revenue matrix r_it = p_i * d_it
that the optimizer consumes, at daily resolution and aggregated to weekly
buckets.
"""
from __future__ import annotations

import csv
import datetime as dt
from dataclasses import dataclass

import numpy as np

from .errors import ForecastError
from .ingest import CalendarConfig, calendar_features, competitive_indicator
from .ssm import FittedModel, StateLayout, _initial_state, _obs_row, _transition
from .ingest import PreparedSeries


@dataclass(frozen=True)
class PriceLadder:
    """Evenly spaced candidate prices between the historical extremes."""

    levels: tuple
    hist_min: float
    hist_max: float

    def __post_init__(self):
        if len(self.levels) > 1:
            diffs = np.diff(self.levels)
            if not np.all(diffs > 0):
                raise ForecastError(f"ladder must be strictly increasing: {self.levels}")

    @property
    def k(self) -> int:
        return len(self.levels)


def build_price_ladder(series: PreparedSeries, k: int = 10) -> PriceLadder:
    """Ladder endpoints come from the observed daily prices.

    A degenerate price history (min = max) collapses to a single level
    regardless of k; otherwise k must be at least 2.
    """
    prices = series.retail_price[np.isfinite(series.retail_price)]
    if prices.size == 0:
        raise ForecastError("series has no observed prices")
    lo = float(prices.min())
    hi = float(prices.max())
    if lo == hi:
        return PriceLadder(levels=(lo,), hist_min=lo, hist_max=hi)
    if k < 2:
        raise ForecastError(f"need k >= 2 levels for a non-degenerate price range, got {k}")
    levels = tuple(float(p) for p in np.linspace(lo, hi, k))
    return PriceLadder(levels=levels, hist_min=lo, hist_max=hi)


def _future_dates(fitted: FittedModel, horizon: int) -> list:
    first = fitted.train_end + dt.timedelta(days=1)
    return [first + dt.timedelta(days=h) for h in range(horizon)]


def forecast_demand(
    fitted: FittedModel,
    prices,
    calendar: CalendarConfig | None = None,
    min_other_price: float | None = None,
    mean_corrected: bool = False,
) -> np.ndarray:
    """Daily demand forecast for an arbitrary future price path.

    The state starts at the end-of-training filtered mean and evolves with
    no updates, so the AR disturbance decays by rho each day and the trend
    extrapolates linearly. The competitive indicator is recomputed from
    each day's candidate price against the assumed competitor price (the
    last observed quote unless overridden). The default point forecast is
    the median y_bar*exp(z); ``mean_corrected`` adds the lognormal
    half-variance term.
    """
    prices = np.asarray(prices, dtype=float)
    if prices.ndim != 1 or prices.size < 1:
        raise ForecastError("price path must be a nonempty 1-D sequence")
    if not np.all(prices > 0):
        raise ForecastError("prices must be > 0")
    calendar = calendar or CalendarConfig()
    spec = fitted.spec
    layout = StateLayout.for_spec(spec)
    mop = min_other_price if min_other_price is not None else fitted.last_min_other_price
    if spec.use_competitor and mop is None:
        raise ForecastError(
            "competitor regressor is enabled but no competitor price is available"
        )

    T, Q = _transition(layout, fitted.hyperparams, spec)
    a = fitted.final_state.copy()
    P = fitted.final_cov.copy() if mean_corrected else None
    dates = _future_dates(fitted, prices.size)
    out = np.empty(prices.size)
    for h, (day, price) in enumerate(zip(dates, prices)):
        a = T @ a
        if mean_corrected:
            P = T @ P @ T.T + Q
        hol, wkd = calendar_features(day, calendar)
        row = [float(np.log(price / fitted.x_bar))]
        if spec.use_competitor:
            row.append(competitive_indicator(price, mop))
        if spec.use_holiday:
            row.append(float(hol))
        if spec.use_weekend:
            row.append(float(wkd))
        Z = _obs_row(layout, np.asarray(row))
        z_hat = float(Z @ a)
        if mean_corrected:
            z_hat += 0.5 * float(Z @ P @ Z + spec.obs_ridge)
        out[h] = fitted.y_bar * np.exp(z_hat)
    return out


@dataclass(frozen=True)
class ForecastGrid:
    """Demand and revenue per (price level, time bucket)."""

    ladder: PriceLadder
    buckets: tuple  # bucket start dates
    demand: np.ndarray  # (k, n)
    revenue: np.ndarray  # (k, n)
    freq: str  # "daily" or "weekly"
    assumptions: dict

    @property
    def shape(self) -> tuple:
        return self.demand.shape


def forecast_grid(
    fitted: FittedModel,
    ladder: PriceLadder,
    horizon_days: int,
    calendar: CalendarConfig | None = None,
    min_other_price: float | None = None,
    mean_corrected: bool = False,
) -> ForecastGrid:
    """Daily grid: one constant-price forecast per ladder level."""
    if horizon_days < 1:
        raise ForecastError(f"horizon must be >= 1 day, got {horizon_days}")
    rows = []
    for p in ladder.levels:
        path = np.full(horizon_days, p)
        rows.append(forecast_demand(fitted, path, calendar, min_other_price, mean_corrected))
    demand = np.vstack(rows)
    prices = np.asarray(ladder.levels)
    revenue = prices[:, None] * demand
    mop = min_other_price if min_other_price is not None else fitted.last_min_other_price
    return ForecastGrid(
        ladder=ladder,
        buckets=tuple(_future_dates(fitted, horizon_days)),
        demand=demand,
        revenue=revenue,
        freq="daily",
        assumptions={
            "min_other_price": mop,
            "mean_corrected": mean_corrected,
        },
    )


def aggregate_weekly(grid: ForecastGrid) -> ForecastGrid:
    """Sum daily demand into 7-day buckets; revenue rebuilt as p_i * demand."""
    if grid.freq != "daily":
        raise ForecastError(f"can only aggregate a daily grid, got {grid.freq}")
    k, n = grid.shape
    if n % 7 != 0:
        raise ForecastError(f"horizon of {n} days does not divide into whole weeks")
    weeks = n // 7
    demand = grid.demand.reshape(k, weeks, 7).sum(axis=2)
    prices = np.asarray(grid.ladder.levels)
    revenue = prices[:, None] * demand
    return ForecastGrid(
        ladder=grid.ladder,
        buckets=tuple(grid.buckets[w * 7] for w in range(weeks)),
        demand=demand,
        revenue=revenue,
        freq="weekly",
        assumptions=dict(grid.assumptions),
    )


def write_grid_csv(grid: ForecastGrid, path) -> None:
    """Export the grid; one row per (level, bucket), levels 1-based."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["level", "price", "bucket", "demand", "revenue"])
        for i, price in enumerate(grid.ladder.levels):
            for t, bucket in enumerate(grid.buckets):
                w.writerow(
                    [
                        i + 1,
                        repr(float(price)),
                        bucket.isoformat(),
                        repr(float(grid.demand[i, t])),
                        repr(float(grid.revenue[i, t])),
                    ]
                )
