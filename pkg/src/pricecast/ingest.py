"""Raw transaction and competitor-quote ingestion.

Turns hourly transaction logs into a cleaned, contiguous daily feature
series (sales, weighted price, competitor minimum, calendar flags,
outlier marks, normalized log quantities) and gates products through
configurable eligibility rules before any model is fit.
"""
from __future__ import annotations

import csv
import datetime as dt
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence
from zoneinfo import ZoneInfo

import numpy as np

from .errors import EmptySeriesError, InvalidQuoteError, InvalidRecordError

MAD_SCALE = 1.4826  # consistency factor for Gaussian data


# ---------------------------------------------------------------------------
# raw records


@dataclass(frozen=True)
class RawTransaction:
    """One sale event: timestamp, unit price paid, units, discount."""

    timestamp: dt.datetime
    retail_price: float
    quantity: int
    discount_amount: float = 0.0

    def __post_init__(self):
        if not self.retail_price > 0:
            raise InvalidRecordError(f"retail_price must be > 0, got {self.retail_price}")
        if self.quantity < 1:
            raise InvalidRecordError(f"quantity must be >= 1, got {self.quantity}")
        if self.discount_amount < 0:
            raise InvalidRecordError(f"discount_amount must be >= 0, got {self.discount_amount}")


@dataclass(frozen=True)
class CompetitorQuote:
    """Lowest price observed at any other retailer on a given date."""

    date: dt.date
    min_other_price: float

    def __post_init__(self):
        if not self.min_other_price > 0:
            raise InvalidQuoteError(f"min_other_price must be > 0, got {self.min_other_price}")


@dataclass(frozen=True)
class DailyObservation:
    """One day of aggregated data. None marks a missing value."""

    date: dt.date
    unit_sales: float | None
    retail_price: float | None
    min_other_price: float | None
    is_holiday: int
    is_weekend: int
    competitive_indicator: float | None
    outlier_flag: bool = False


@dataclass(frozen=True)
class CalendarConfig:
    """Holiday list, weekend-day set and the day-boundary timezone.

    Weekend days use Python's weekday numbering (Monday=0 .. Sunday=6);
    the default is Saturday and Sunday. Timestamps carrying an offset are
    converted to ``timezone`` before being bucketed into calendar days;
    naive timestamps are taken as already local.
    """

    holidays: frozenset = frozenset()
    weekend_days: frozenset = frozenset({5, 6})
    timezone: str = "UTC"

    def tzinfo(self) -> ZoneInfo:
        return ZoneInfo(self.timezone)


# ---------------------------------------------------------------------------
# aggregation and feature construction


def aggregate_daily(
    transactions: Iterable[RawTransaction],
    tz: ZoneInfo | None = None,
) -> dict[dt.date, dict]:
    """Collapse transactions into per-day totals.

    Returns a map date -> {"unit_sales", "retail_price"} where the daily
    price is the sales-weighted mean of transaction prices. Dates with no
    transactions are simply absent.
    """
    sales: dict[dt.date, float] = {}
    weighted: dict[dt.date, float] = {}
    for tx in transactions:
        ts = tx.timestamp
        if ts.tzinfo is not None and tz is not None:
            ts = ts.astimezone(tz)
        day = ts.date()
        sales[day] = sales.get(day, 0.0) + tx.quantity
        weighted[day] = weighted.get(day, 0.0) + tx.retail_price * tx.quantity
    return {
        day: {"unit_sales": sales[day], "retail_price": weighted[day] / sales[day]}
        for day in sorted(sales)
    }


def calendar_features(day: dt.date, calendar: CalendarConfig) -> tuple[int, int]:
    """Return (is_holiday, is_weekend) for one date."""
    h = 1 if day in calendar.holidays else 0
    w = 1 if day.weekday() in calendar.weekend_days else 0
    return h, w


def competitive_indicator(retail_price: float, min_other_price: float) -> float:
    """Price-competitiveness ratio in (0,1); smaller means more competitive."""
    if not retail_price > 0 or not min_other_price > 0:
        raise InvalidQuoteError(
            f"prices must be > 0, got retail={retail_price} other={min_other_price}"
        )
    return retail_price / (retail_price + min_other_price)


def detect_outliers(unit_sales: Sequence[float | None], c_mad: float = 5.0) -> np.ndarray:
    """Flag days whose sales are extreme on a robust log scale.

    A day is flagged when |log(1+y) - median| / (1.4826 * MAD) exceeds
    ``c_mad``, with median and MAD taken over the non-missing days. When
    MAD is zero the ratio is 0/0 := 0 for days sitting on the median, so a
    constant series produces no flags, while any deviant day in an
    otherwise constant series has infinite score and is flagged.
    """
    if len(unit_sales) == 0:
        raise EmptySeriesError("cannot score outliers on an empty series")
    if not c_mad > 0:
        raise ValueError(f"c_mad must be > 0, got {c_mad}")
    y = np.array([np.nan if v is None else float(v) for v in unit_sales])
    flags = np.zeros(len(y), dtype=bool)
    present = ~np.isnan(y)
    if not present.any():
        return flags
    logy = np.log1p(y[present])
    med = float(np.median(logy))
    dev = np.abs(logy - med)
    mad = float(np.median(dev))
    with np.errstate(divide="ignore", invalid="ignore"):
        score = dev / (MAD_SCALE * mad)
    score[np.isnan(score)] = 0.0  # 0/0: the day sits exactly on the median
    flags[present] = score > c_mad
    return flags


def fill_missing(
    daily: Mapping[dt.date, Mapping],
    date_range: tuple[dt.date, dt.date],
    quotes: Iterable[CompetitorQuote] = (),
    calendar: CalendarConfig | None = None,
) -> list[DailyObservation]:
    """Expand a daily map into a contiguous observation list.

    Every date in the closed range appears exactly once, in order. Days
    absent from ``daily`` carry missing sales and price. Competitor
    quotes are carried forward from the most recent prior quote date;
    days before the first quote stay missing.
    """
    start, end = date_range
    if end < start:
        raise ValueError(f"empty date range {start}..{end}")
    calendar = calendar or CalendarConfig()
    quote_list = sorted(quotes, key=lambda q: q.date)
    out: list[DailyObservation] = []
    qi = 0
    current_quote: float | None = None
    day = start
    while day <= end:
        while qi < len(quote_list) and quote_list[qi].date <= day:
            current_quote = quote_list[qi].min_other_price
            qi += 1
        rec = daily.get(day)
        sales = float(rec["unit_sales"]) if rec else None
        price = float(rec["retail_price"]) if rec else None
        comp = None
        if price is not None and current_quote is not None:
            comp = competitive_indicator(price, current_quote)
        h, w = calendar_features(day, calendar)
        out.append(
            DailyObservation(
                date=day,
                unit_sales=sales,
                retail_price=price,
                min_other_price=current_quote,
                is_holiday=h,
                is_weekend=w,
                competitive_indicator=comp,
            )
        )
        day += dt.timedelta(days=1)
    return out


# ---------------------------------------------------------------------------
# normalization


@dataclass(frozen=True)
class PreparedSeries:
    """Cleaned contiguous daily series ready for model estimation.

    ``z`` holds log(y_t / y_bar) and is NaN on days where sales are
    missing, zero, or outlier-flagged. ``log_price`` holds
    log(x_t / x_bar) wherever a price exists. The float arrays all share
    one index aligned with ``observations``.
    """

    observations: tuple
    y_bar: float
    x_bar: float
    z: np.ndarray
    log_price: np.ndarray
    comp: np.ndarray
    holiday: np.ndarray
    weekend: np.ndarray
    unit_sales: np.ndarray
    retail_price: np.ndarray
    outlier: np.ndarray

    def __len__(self) -> int:
        return len(self.observations)

    @property
    def start(self) -> dt.date:
        return self.observations[0].date

    @property
    def end(self) -> dt.date:
        return self.observations[-1].date

    @property
    def dates(self) -> list[dt.date]:
        return [o.date for o in self.observations]

    def days_with_transactions(self) -> int:
        return int(np.sum(~np.isnan(self.unit_sales)))


def normalize(
    observations: Sequence[DailyObservation],
    y_bar: float | None = None,
    x_bar: float | None = None,
) -> PreparedSeries:
    """Build a PreparedSeries, computing the normalization constants.

    y_bar is the arithmetic mean of unit sales over non-missing,
    non-outlier days with positive sales; x_bar the mean retail price over
    those same days. Either may be passed explicitly (e.g. to prepare a
    holdout window on the training scale).
    """
    n = len(observations)
    if n == 0:
        raise EmptySeriesError("no observations")
    y = np.array([np.nan if o.unit_sales is None else float(o.unit_sales) for o in observations])
    x = np.array(
        [np.nan if o.retail_price is None else float(o.retail_price) for o in observations]
    )
    comp = np.array(
        [
            np.nan if o.competitive_indicator is None else float(o.competitive_indicator)
            for o in observations
        ]
    )
    out = np.array([o.outlier_flag for o in observations], dtype=bool)
    usable = ~np.isnan(y) & (y > 0) & ~np.isnan(x) & (x > 0) & ~out
    if y_bar is None or x_bar is None:
        if not usable.any():
            raise EmptySeriesError("no usable day with positive sales and price")
        y_bar = float(np.mean(y[usable])) if y_bar is None else y_bar
        x_bar = float(np.mean(x[usable])) if x_bar is None else x_bar
    if not (y_bar > 0 and x_bar > 0):
        raise EmptySeriesError(f"normalization constants must be > 0, got {y_bar}, {x_bar}")
    z = np.full(n, np.nan)
    z[usable] = np.log(y[usable] / y_bar)
    log_price = np.full(n, np.nan)
    has_price = ~np.isnan(x)
    log_price[has_price] = np.log(x[has_price] / x_bar)
    return PreparedSeries(
        observations=tuple(observations),
        y_bar=float(y_bar),
        x_bar=float(x_bar),
        z=z,
        log_price=log_price,
        comp=comp,
        holiday=np.array([float(o.is_holiday) for o in observations]),
        weekend=np.array([float(o.is_weekend) for o in observations]),
        unit_sales=y,
        retail_price=x,
        outlier=out,
    )


def prepare_series(
    transactions: Iterable[RawTransaction],
    quotes: Iterable[CompetitorQuote] = (),
    calendar: CalendarConfig | None = None,
    date_range: tuple[dt.date, dt.date] | None = None,
    c_mad: float = 5.0,
    y_bar: float | None = None,
    x_bar: float | None = None,
) -> PreparedSeries:
    """Full cleaning pass: aggregate, fill, flag outliers, normalize."""
    calendar = calendar or CalendarConfig()
    daily = aggregate_daily(transactions, calendar.tzinfo())
    if date_range is None:
        if not daily:
            raise EmptySeriesError("no transactions and no explicit date range")
        date_range = (min(daily), max(daily))
    obs = fill_missing(daily, date_range, quotes, calendar)
    flags = detect_outliers([o.unit_sales for o in obs], c_mad)
    obs = [replace(o, outlier_flag=bool(f)) for o, f in zip(obs, flags)]
    return normalize(obs, y_bar=y_bar, x_bar=x_bar)


# ---------------------------------------------------------------------------
# eligibility gate


@dataclass(frozen=True)
class EligibilityRules:
    """Thresholds a product must clear before a model is fit."""

    min_days_with_transactions: int = 90
    min_distinct_prices: int = 5
    lookback_window: int = 730
    max_error_metric: float | None = None
    min_elasticity_confidence: float | None = None

    def __post_init__(self):
        if self.min_days_with_transactions < 1 or self.min_distinct_prices < 1:
            raise ValueError("count thresholds must be >= 1")
        if self.lookback_window < 1:
            raise ValueError("lookback_window must be >= 1")


@dataclass(frozen=True)
class ModelMeta:
    """The slice of a stored model that eligibility rules inspect."""

    metrics: Mapping = field(default_factory=dict)
    elasticity_confidence: float | None = None


@dataclass(frozen=True)
class RuleOutcome:
    rule: str
    observed: float | None
    threshold: float
    passed: bool | None  # None = rule skipped (no model data available)

    def as_dict(self) -> dict:
        return {
            "rule": self.rule,
            "observed": self.observed,
            "threshold": self.threshold,
            "passed": self.passed,
        }


@dataclass(frozen=True)
class EligibilityReport:
    eligible: bool
    outcomes: tuple

    @property
    def reasons(self) -> list[str]:
        return [
            f"{o.rule}: observed {o.observed}, required threshold {o.threshold}"
            for o in self.outcomes
            if o.passed is False
        ]

    def as_dict(self) -> dict:
        return {
            "eligible": self.eligible,
            "outcomes": [o.as_dict() for o in self.outcomes],
            "reasons": self.reasons,
        }


def check_eligibility(
    series: PreparedSeries,
    model_meta: ModelMeta | None,
    rules: EligibilityRules,
) -> EligibilityReport:
    """Evaluate every configured rule over the lookback window.

    Data rules always run. Model-quality rules run only when prior model
    metadata is supplied; otherwise they are recorded as skipped and do
    not affect the verdict.
    """
    cutoff = series.end - dt.timedelta(days=rules.lookback_window - 1)
    in_window = np.array([o.date >= cutoff for o in series.observations], dtype=bool)
    sales = series.unit_sales[in_window]
    prices = series.retail_price[in_window]
    days = int(np.sum(~np.isnan(sales)))
    # distinct price points, at cent resolution so float noise does not inflate the count
    distinct = len({round(float(p), 2) for p in prices[~np.isnan(prices)]})

    outcomes = [
        RuleOutcome(
            "min_days_with_transactions",
            days,
            rules.min_days_with_transactions,
            days >= rules.min_days_with_transactions,
        ),
        RuleOutcome(
            "min_distinct_prices",
            distinct,
            rules.min_distinct_prices,
            distinct >= rules.min_distinct_prices,
        ),
    ]
    if rules.max_error_metric is not None:
        if model_meta is not None and "rmse_log" in model_meta.metrics:
            observed = float(model_meta.metrics["rmse_log"])
            outcomes.append(
                RuleOutcome(
                    "max_error_metric",
                    observed,
                    rules.max_error_metric,
                    observed <= rules.max_error_metric,
                )
            )
        else:
            outcomes.append(RuleOutcome("max_error_metric", None, rules.max_error_metric, None))
    if rules.min_elasticity_confidence is not None:
        if model_meta is not None and model_meta.elasticity_confidence is not None:
            observed = float(model_meta.elasticity_confidence)
            outcomes.append(
                RuleOutcome(
                    "min_elasticity_confidence",
                    observed,
                    rules.min_elasticity_confidence,
                    observed >= rules.min_elasticity_confidence,
                )
            )
        else:
            outcomes.append(
                RuleOutcome(
                    "min_elasticity_confidence", None, rules.min_elasticity_confidence, None
                )
            )
    eligible = all(o.passed is not False for o in outcomes)
    return EligibilityReport(eligible=eligible, outcomes=tuple(outcomes))


# ---------------------------------------------------------------------------
# CSV interfaces

TRANSACTIONS_HEADER = ["timestamp", "retail_price", "quantity", "discount_amount"]
COMPETITOR_HEADER = ["date", "min_other_price"]


def _parse_timestamp(text: str) -> dt.datetime:
    # datetime.fromisoformat on 3.10 rejects the Z suffix
    return dt.datetime.fromisoformat(text.replace("Z", "+00:00"))


def read_transactions_csv(path) -> list[RawTransaction]:
    """Load transactions from CSV with the canonical 4-column header."""
    out = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != TRANSACTIONS_HEADER:
            raise InvalidRecordError(
                f"{path}: expected header {TRANSACTIONS_HEADER}, got {reader.fieldnames}"
            )
        for i, row in enumerate(reader, start=2):
            try:
                out.append(
                    RawTransaction(
                        timestamp=_parse_timestamp(row["timestamp"]),
                        retail_price=float(row["retail_price"]),
                        quantity=int(row["quantity"]),
                        discount_amount=float(row["discount_amount"]),
                    )
                )
            except (ValueError, TypeError) as exc:
                raise InvalidRecordError(f"{path}:{i}: {exc}") from exc
    return out


def read_competitor_csv(path) -> list[CompetitorQuote]:
    """Load competitor quotes from CSV with the canonical 2-column header."""
    out = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != COMPETITOR_HEADER:
            raise InvalidQuoteError(
                f"{path}: expected header {COMPETITOR_HEADER}, got {reader.fieldnames}"
            )
        for i, row in enumerate(reader, start=2):
            try:
                out.append(
                    CompetitorQuote(
                        date=dt.date.fromisoformat(row["date"]),
                        min_other_price=float(row["min_other_price"]),
                    )
                )
            except (ValueError, TypeError) as exc:
                raise InvalidQuoteError(f"{path}:{i}: {exc}") from exc
    return out
