"""Shared fixtures and small builders used across the test modules."""
import datetime as dt

import numpy as np
import pytest

from pricecast.ingest import DailyObservation, normalize, prepare_series
from pricecast.simulate import generate, reference_ground_truth
from pricecast.ssm import FitOptions, ModelSpec, fit

START = dt.date(2024, 1, 1)  # a Monday


def make_obs(
    day,
    unit_sales=None,
    retail_price=None,
    min_other_price=None,
    is_holiday=0,
    is_weekend=0,
    competitive_indicator=None,
    outlier_flag=False,
):
    if isinstance(day, int):
        day = START + dt.timedelta(days=day)
    return DailyObservation(
        date=day,
        unit_sales=unit_sales,
        retail_price=retail_price,
        min_other_price=min_other_price,
        is_holiday=is_holiday,
        is_weekend=is_weekend,
        competitive_indicator=competitive_indicator,
        outlier_flag=outlier_flag,
    )


def series_from_z(z_values, x_bar=20.0, price=None, comp=None, holiday=None, weekend=None):
    """Build a PreparedSeries whose z column equals ``z_values``.

    None entries become missing days. Sales are exp(z) against y_bar=1 so
    the normalized series reproduces z up to one exp/log round trip.
    Optional per-day regressor columns default to price=x_bar (log-price
    0) and calendar zeros.
    """
    n = len(z_values)
    obs = []
    for t in range(n):
        zt = z_values[t]
        obs.append(
            make_obs(
                t,
                unit_sales=None if zt is None else float(np.exp(zt)),
                retail_price=float(price[t]) if price is not None else x_bar,
                competitive_indicator=None if comp is None else float(comp[t]),
                is_holiday=int(holiday[t]) if holiday is not None else 0,
                is_weekend=int(weekend[t]) if weekend is not None else 0,
            )
        )
    return normalize(obs, y_bar=1.0, x_bar=x_bar)


@pytest.fixture(scope="session")
def reference_data():
    gt = reference_ground_truth(seed=0)
    transactions, quotes, traces = generate(gt)
    return gt, transactions, quotes, traces


@pytest.fixture(scope="session")
def reference_series(reference_data):
    gt, transactions, quotes, _ = reference_data
    return prepare_series(transactions, quotes, gt.calendar)


@pytest.fixture(scope="session")
def reference_fit(reference_series):
    # one shared full-history fit; individual tests must not mutate it
    return fit(reference_series, ModelSpec(), FitOptions())
