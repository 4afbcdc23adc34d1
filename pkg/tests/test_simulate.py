"""Synthetic data generation and parameter recovery reporting."""
import dataclasses
import datetime as dt

import numpy as np
import pytest

from pricecast.ingest import aggregate_daily, prepare_series
from pricecast.simulate import (
    GroundTruth,
    PriceProcess,
    RecoveryReport,
    TRANSACTION_HOURS,
    generate,
    recovery_report,
    reference_ground_truth,
    write_latent_csv,
    write_transactions_csv,
)

from test_ssm import toy_model

FLAT = GroundTruth(
    beta_x=0.0,
    beta_c=0.0,
    beta_h=0.0,
    beta_w=0.0,
    rho=0.0,
    sigma_tau=0.0,
    sigma_omega=0.0,
    sigma_eta=0.0,
    price=PriceProcess("constant", value=20.0),
    horizon_days=30,
)


# ---------------------------------------------------------------------------
# determinism


def test_same_seed_identical_output(reference_data):
    gt = reference_data[0]
    tx_a, quotes_a, traces_a = generate(gt)
    tx_b, quotes_b, traces_b = generate(gt)
    assert tx_a == tx_b
    assert quotes_a == quotes_b
    np.testing.assert_array_equal(traces_a.z, traces_b.z)
    np.testing.assert_array_equal(traces_a.price, traces_b.price)


def test_different_seed_differs():
    _, _, traces_a = generate(reference_ground_truth(seed=0))
    _, _, traces_b = generate(reference_ground_truth(seed=1))
    assert not np.array_equal(traces_a.z, traces_b.z)


def test_csv_outputs_byte_identical(tmp_path, reference_data):
    gt = reference_data[0]
    paths = []
    for tag in ("a", "b"):
        tx, _, traces = generate(gt)
        p = tmp_path / f"tx_{tag}.csv"
        write_transactions_csv(tx, p)
        lp = tmp_path / f"latent_{tag}.csv"
        write_latent_csv(traces, lp)
        paths.append((p, lp))
    assert paths[0][0].read_bytes() == paths[1][0].read_bytes()
    assert paths[0][1].read_bytes() == paths[1][1].read_bytes()


# ---------------------------------------------------------------------------
# zero-noise closed forms


def test_flat_zero_noise_constant_sales():
    _, _, traces = generate(FLAT)
    np.testing.assert_array_equal(traces.z, np.zeros(30))
    np.testing.assert_array_equal(traces.unit_sales, np.full(30, 50.0))


def test_zero_noise_price_step_halves_demand():
    gt = dataclasses.replace(
        FLAT,
        beta_x=-1.0,
        price=PriceProcess("sequence", values=tuple([20.0] * 5 + [40.0] * 5)),
        horizon_days=10,
    )
    _, _, traces = generate(gt)
    np.testing.assert_array_equal(traces.unit_sales[:5], np.full(5, 50.0))
    np.testing.assert_array_equal(traces.unit_sales[5:], np.full(5, 25.0))


def test_zero_noise_matches_structural_equation():
    # every day's z must reproduce the deterministic part exactly
    cal_holidays = frozenset({FLAT.start_date + dt.timedelta(days=3)})
    from pricecast.ingest import CalendarConfig

    gt = dataclasses.replace(
        FLAT,
        beta_x=-1.5,
        beta_h=0.3,
        beta_w=0.2,
        mu0=0.05,
        gamma0=0.001,
        price=PriceProcess("constant", value=25.0),
        calendar=CalendarConfig(holidays=cal_holidays),
        horizon_days=21,
    )
    _, _, traces = generate(gt)
    for t, day in enumerate(traces.dates):
        mu = 0.05 + 0.001 * t
        hol = 1.0 if day in cal_holidays else 0.0
        wkd = 1.0 if day.weekday() >= 5 else 0.0
        z = -1.5 * np.log(25.0 / 20.0) + 0.3 * hol + 0.2 * wkd + mu
        assert traces.z[t] == pytest.approx(z, abs=1e-12)


def test_competitor_channel_enters_z():
    gt = dataclasses.replace(
        FLAT,
        beta_c=-0.8,
        competitor=PriceProcess("constant", value=30.0),
        horizon_days=5,
    )
    _, _, traces = generate(gt)
    expected = -0.8 * (20.0 / (20.0 + 30.0))
    np.testing.assert_allclose(traces.z, np.full(5, expected), atol=1e-12)
    assert traces.min_other_price is not None
    np.testing.assert_array_equal(traces.min_other_price, np.full(5, 30.0))


# ---------------------------------------------------------------------------
# transaction structure


def test_transactions_split_preserves_daily_totals(reference_data):
    _, transactions, _, traces = reference_data
    daily = aggregate_daily(transactions)
    by_date = {d: rec for d, rec in daily.items()}
    for t, day in enumerate(traces.dates):
        y = traces.unit_sales[t]
        if y > 0:
            rec = by_date[day]
            assert rec["unit_sales"] == y
            assert rec["retail_price"] == pytest.approx(traces.price[t], abs=1e-12)
        else:
            assert day not in by_date


def test_transactions_per_day_structure(reference_data):
    _, transactions, _, _ = reference_data
    by_day = {}
    for tx in transactions:
        by_day.setdefault(tx.timestamp.date(), []).append(tx)
    counts = set()
    for day, txs in by_day.items():
        counts.add(len(txs))
        assert 1 <= len(txs) <= 3
        assert len({tx.retail_price for tx in txs}) == 1  # same price all day
        hours = [tx.timestamp.hour for tx in txs]
        assert hours == list(TRANSACTION_HOURS[: len(txs)])
    assert counts == {1, 2, 3}  # all split sizes occur over 730 days


def test_price_walk_stays_in_bounds(reference_data):
    gt, _, _, traces = reference_data
    assert traces.price.min() >= gt.price.lo
    assert traces.price.max() <= gt.price.hi
    steps = np.abs(np.diff(traces.price))
    assert steps.max() <= 2 * gt.price.step + 1e-12  # one reflection can double a step
    assert traces.min_other_price.min() >= gt.competitor.lo
    assert traces.min_other_price.max() <= gt.competitor.hi


def test_ingest_roundtrip_recovers_daily_series(reference_data):
    gt, transactions, quotes, traces = reference_data
    series = prepare_series(
        transactions,
        quotes,
        gt.calendar,
        date_range=(gt.start_date, gt.start_date + dt.timedelta(days=gt.horizon_days - 1)),
    )
    assert len(series) == gt.horizon_days
    for t in range(gt.horizon_days):
        y = traces.unit_sales[t]
        if y > 0:
            assert series.unit_sales[t] == y
            assert series.retail_price[t] == pytest.approx(traces.price[t], abs=1e-12)
        else:
            assert np.isnan(series.unit_sales[t])


# ---------------------------------------------------------------------------
# reference fixture values


def test_reference_ground_truth_parameters():
    gt = reference_ground_truth(seed=0)
    assert (gt.beta_x, gt.beta_c, gt.beta_h, gt.beta_w) == (-1.5, -0.8, 0.3, 0.2)
    assert gt.rho == 0.4
    assert (gt.sigma_tau, gt.sigma_omega, gt.sigma_eta) == (0.001, 0.01, 0.1)
    assert gt.periodicity == 7
    assert (gt.y_bar, gt.x_bar) == (50.0, 20.0)
    assert gt.horizon_days == 730
    assert gt.price.kind == "random_walk" and (gt.price.lo, gt.price.hi) == (10.0, 30.0)
    assert gt.competitor is not None
    assert gt.calendar.holidays  # ships with a holiday pattern


def test_ground_truth_validation():
    with pytest.raises(ValueError):
        dataclasses.replace(FLAT, rho=1.0)
    with pytest.raises(ValueError):
        dataclasses.replace(FLAT, sigma_eta=-0.1)
    with pytest.raises(ValueError):
        dataclasses.replace(FLAT, horizon_days=0)
    with pytest.raises(ValueError):
        dataclasses.replace(FLAT, seasonal0=(0.1, 0.2))  # needs k-1 = 6 values


# ---------------------------------------------------------------------------
# recovery report


def _stub_fit(beta_x, se):
    m = toy_model()
    return dataclasses.replace(
        m,
        coefficients={"log_price": beta_x},
        std_errors={"log_price": se},
    )


def test_recovery_pass_within_two_se():
    gt = dataclasses.replace(FLAT, beta_x=-1.5)
    report = recovery_report(gt, _stub_fit(-1.4, 0.1))
    assert isinstance(report, RecoveryReport)
    assert report.beta_x_passed is True


def test_recovery_fail_beyond_two_se():
    gt = dataclasses.replace(FLAT, beta_x=-1.5)
    report = recovery_report(gt, _stub_fit(-1.1, 0.1))
    assert report.beta_x_passed is False


def test_recovery_noise_rows_have_no_flag():
    gt = dataclasses.replace(FLAT, beta_x=-1.5)
    report = recovery_report(gt, _stub_fit(-1.5, 0.1))
    noise_rows = [r for r in report.rows if r.name.startswith("sigma") or r.name == "rho"]
    assert len(noise_rows) == 4
    assert all(r.passed is None and r.se is None for r in noise_rows)
    # sigma_tau truth sits at zero: reported, never judged
    tau = next(r for r in noise_rows if r.name == "sigma_tau")
    assert tau.truth == 0.0


def test_recovery_skips_disabled_channels():
    gt = dataclasses.replace(FLAT, beta_x=-1.5)
    report = recovery_report(gt, _stub_fit(-1.5, 0.1))
    names = {r.name for r in report.rows}
    assert "beta_c" not in names and "beta_w" not in names


def test_recovery_report_serializable():
    gt = dataclasses.replace(FLAT, beta_x=-1.5)
    doc = recovery_report(gt, _stub_fit(-1.5, 0.1)).as_dict()
    assert {r["name"] for r in doc["rows"]} >= {"beta_x", "rho", "sigma_eta"}
