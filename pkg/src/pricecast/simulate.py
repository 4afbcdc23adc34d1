"""Synthetic transaction generator with known ground truth.

Simulates the exact data-generating process the model assumes (trend +
seasonal + AR(1) disturbance + price/competition/calendar effects on the
log scale), emits the same CSV shapes the ingest module consumes, and
keeps the latent component paths so tests can assert against them.

Randomness comes from numpy's Philox bit generator: a counter-based
64-bit PRNG (Philox-4x64 with 10 rounds, the constants published with
numpy) whose streams are reproducible across platforms for a given seed.
Draws happen in a fixed documented order per day: state noises (tau,
omega, eta), then the price-walk step, then the competitor-walk step,
then the transaction split count.
"""
from __future__ import annotations

import csv
import datetime as dt
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import PricecastError
from .ingest import CalendarConfig, CompetitorQuote, RawTransaction, calendar_features

TRANSACTION_HOURS = (10, 14, 18)  # same-price hourly slots within a day


@dataclass(frozen=True)
class PriceProcess:
    """Price path policy: a fixed constant, an explicit sequence, or a
    reflected random walk inside [lo, hi] starting at the midpoint."""

    kind: str  # "constant" | "sequence" | "random_walk"
    value: float | None = None
    values: tuple | None = None
    lo: float | None = None
    hi: float | None = None
    step: float = 0.0

    def __post_init__(self):
        if self.kind == "constant":
            if self.value is None or not self.value > 0:
                raise ValueError("constant process needs value > 0")
        elif self.kind == "sequence":
            if not self.values or any(not v > 0 for v in self.values):
                raise ValueError("sequence process needs positive values")
        elif self.kind == "random_walk":
            if self.lo is None or self.hi is None or not 0 < self.lo <= self.hi:
                raise ValueError("random walk needs 0 < lo <= hi")
            if self.step < 0:
                raise ValueError("step must be >= 0")
        else:
            raise ValueError(f"unknown process kind {self.kind!r}")

    def as_dict(self) -> dict:
        return {k: v for k, v in vars(self).items() if v is not None}


@dataclass(frozen=True)
class GroundTruth:
    """Everything the generator needs, and the answers recovery tests check."""

    beta_x: float
    beta_c: float
    beta_h: float
    beta_w: float
    rho: float
    sigma_tau: float
    sigma_omega: float
    sigma_eta: float
    periodicity: int = 7
    y_bar: float = 50.0
    x_bar: float = 20.0
    mu0: float = 0.0
    gamma0: float = 0.0
    seasonal0: tuple = ()  # k-1 initial seasonal states, zeros if empty
    price: PriceProcess = field(default_factory=lambda: PriceProcess("constant", value=20.0))
    competitor: PriceProcess | None = None
    horizon_days: int = 730
    seed: int = 0
    start_date: dt.date = dt.date(2023, 1, 2)
    calendar: CalendarConfig = field(default_factory=CalendarConfig)

    def __post_init__(self):
        if not abs(self.rho) < 1:
            raise ValueError(f"|rho| must be < 1, got {self.rho}")
        if min(self.sigma_tau, self.sigma_omega, self.sigma_eta) < 0:
            raise ValueError("noise scales must be >= 0")
        if not (self.y_bar > 0 and self.x_bar > 0):
            raise ValueError("y_bar and x_bar must be > 0")
        if self.periodicity < 2:
            raise ValueError("periodicity must be >= 2")
        if self.horizon_days < 1:
            raise ValueError("horizon_days must be >= 1")
        if self.seasonal0 and len(self.seasonal0) != self.periodicity - 1:
            raise ValueError(
                f"seasonal0 needs {self.periodicity - 1} values, got {len(self.seasonal0)}"
            )


@dataclass(frozen=True)
class LatentTraces:
    """Per-day latent states and observables kept for assertions."""

    dates: list
    mu: np.ndarray
    gamma: np.ndarray
    seasonal: np.ndarray
    epsilon: np.ndarray
    z: np.ndarray
    price: np.ndarray
    min_other_price: np.ndarray | None
    unit_sales: np.ndarray


class _Walk:
    """Reflected random walk used for price and competitor paths."""

    def __init__(self, proc: PriceProcess, rng):
        self.proc = proc
        self.rng = rng
        if proc.kind == "random_walk":
            self.current = 0.5 * (proc.lo + proc.hi)
        elif proc.kind == "constant":
            self.current = proc.value

    def value(self, t: int) -> float:
        p = self.proc
        if p.kind == "constant":
            return self.current
        if p.kind == "sequence":
            return float(p.values[min(t, len(p.values) - 1)])
        if t > 0:
            step = p.step * float(self.rng.uniform(-1.0, 1.0))
            x = self.current + step
            # reflect into [lo, hi]
            if x < p.lo:
                x = 2 * p.lo - x
            if x > p.hi:
                x = 2 * p.hi - x
            self.current = float(np.clip(x, p.lo, p.hi))
        return self.current


def generate(gt: GroundTruth):
    """Simulate one product history.

    Returns (transactions, quotes, traces). Daily units are
    round(y_bar * exp(z_t)) with ties to even; a zero-unit day emits no
    transactions (it will ingest as a missing day, which is exactly how
    real data presents zero sales). Positive days split into 1-3
    same-price transactions at fixed hours.
    """
    rng = np.random.Generator(np.random.Philox(gt.seed))
    k = gt.periodicity
    n = gt.horizon_days

    mu = gt.mu0
    gamma = gt.gamma0
    seas = list(gt.seasonal0) if gt.seasonal0 else [0.0] * (k - 1)
    if gt.sigma_eta > 0.0:
        eps = float(gt.sigma_eta / math.sqrt(1.0 - gt.rho**2) * rng.standard_normal())
    else:
        eps = 0.0

    price_walk = _Walk(gt.price, rng)
    comp_walk = _Walk(gt.competitor, rng) if gt.competitor is not None else None

    dates = [gt.start_date + dt.timedelta(days=t) for t in range(n)]
    tr_mu = np.empty(n)
    tr_gamma = np.empty(n)
    tr_seas = np.empty(n)
    tr_eps = np.empty(n)
    tr_z = np.empty(n)
    tr_price = np.empty(n)
    tr_comp = np.empty(n) if comp_walk is not None else None
    tr_y = np.empty(n)

    transactions: list[RawTransaction] = []
    quotes: list[CompetitorQuote] = []

    for t, day in enumerate(dates):
        if t > 0:
            mu = mu + gamma
            gamma = gamma + gt.sigma_tau * float(rng.standard_normal())
            s_new = -sum(seas) + gt.sigma_omega * float(rng.standard_normal())
            seas = [s_new] + seas[:-1]
            eps = gt.rho * eps + gt.sigma_eta * float(rng.standard_normal())
        price = price_walk.value(t)
        comp_price = comp_walk.value(t) if comp_walk is not None else None
        hol, wkd = calendar_features(day, gt.calendar)

        z = (
            gt.beta_x * math.log(price / gt.x_bar)
            + (gt.beta_c * price / (price + comp_price) if comp_price is not None else 0.0)
            + gt.beta_h * hol
            + gt.beta_w * wkd
            + mu
            + seas[0]
            + eps
        )
        y = int(np.rint(gt.y_bar * math.exp(z)))

        tr_mu[t] = mu
        tr_gamma[t] = gamma
        tr_seas[t] = seas[0]
        tr_eps[t] = eps
        tr_z[t] = z
        tr_price[t] = price
        if tr_comp is not None:
            tr_comp[t] = comp_price
        tr_y[t] = y

        if comp_price is not None:
            quotes.append(CompetitorQuote(date=day, min_other_price=comp_price))
        if y > 0:
            parts = min(int(rng.integers(1, 4)), y)
            base, rem = divmod(y, parts)
            for j in range(parts):
                q = base + (1 if j < rem else 0)
                ts = dt.datetime.combine(day, dt.time(hour=TRANSACTION_HOURS[j]))
                transactions.append(
                    RawTransaction(timestamp=ts, retail_price=price, quantity=q)
                )

    traces = LatentTraces(
        dates=dates,
        mu=tr_mu,
        gamma=tr_gamma,
        seasonal=tr_seas,
        epsilon=tr_eps,
        z=tr_z,
        price=tr_price,
        min_other_price=tr_comp,
        unit_sales=tr_y,
    )
    return transactions, quotes, traces


# ---------------------------------------------------------------------------
# reference fixture


def default_holidays(start: dt.date, end: dt.date) -> frozenset:
    """A plausible fixed national-holiday pattern for synthetic calendars."""
    month_days = [(1, 1), (2, 14), (5, 1), (7, 4), (9, 1), (10, 31), (11, 25), (12, 25), (12, 26), (12, 31)]
    days = set()
    for year in range(start.year, end.year + 1):
        for m, d in month_days:
            day = dt.date(year, m, d)
            if start <= day <= end:
                days.add(day)
    return frozenset(days)


def reference_ground_truth(seed: int = 0) -> GroundTruth:
    """The in-repo reference product: a strongly elastic two-year history."""
    start = dt.date(2023, 1, 2)
    end = start + dt.timedelta(days=729)
    return GroundTruth(
        beta_x=-1.5,
        beta_c=-0.8,
        beta_h=0.3,
        beta_w=0.2,
        rho=0.4,
        sigma_tau=0.001,
        sigma_omega=0.01,
        sigma_eta=0.1,
        periodicity=7,
        y_bar=50.0,
        x_bar=20.0,
        price=PriceProcess("random_walk", lo=10.0, hi=30.0, step=0.5),
        competitor=PriceProcess("random_walk", lo=10.0, hi=30.0, step=0.5),
        horizon_days=730,
        seed=seed,
        start_date=start,
        calendar=CalendarConfig(holidays=default_holidays(start, end)),
    )


# ---------------------------------------------------------------------------
# recovery reporting


@dataclass(frozen=True)
class ParamRecovery:
    name: str
    truth: float
    estimate: float
    se: float | None
    z_score: float | None  # |error| / se
    passed: bool | None  # None when no pass flag applies

    def as_dict(self) -> dict:
        return {
            "name": self.name,
            "truth": self.truth,
            "estimate": self.estimate,
            "se": self.se,
            "z_score": self.z_score,
            "passed": self.passed,
        }


@dataclass(frozen=True)
class RecoveryReport:
    rows: tuple

    @property
    def beta_x_passed(self) -> bool:
        return next(r.passed for r in self.rows if r.name == "beta_x")

    def as_dict(self) -> dict:
        return {"rows": [r.as_dict() for r in self.rows]}


_COEF_KEYS = {"beta_x": "log_price", "beta_c": "comp", "beta_h": "holiday", "beta_w": "weekend"}


def recovery_report(gt: GroundTruth, fitted) -> RecoveryReport:
    """Truth-vs-estimate table.

    Coefficients carry a pass flag at two standard errors. Noise
    hyperparameters are reported without flags: the search gives no
    standard errors, and truths at the boundary (a zero variance) make
    the usual two-sigma rule meaningless anyway.
    """
    rows = []
    for name, key in _COEF_KEYS.items():
        if key not in fitted.coefficients:
            continue
        truth = getattr(gt, name)
        est = float(fitted.coefficients[key])
        se = float(fitted.std_errors[key])
        z = abs(est - truth) / se if se > 0 else math.inf
        rows.append(ParamRecovery(name, truth, est, se, z, bool(z <= 2.0)))
    hp = fitted.hyperparams
    for name, truth, est in [
        ("rho", gt.rho, hp.rho),
        ("sigma_tau", gt.sigma_tau, math.sqrt(hp.sigma2_tau)),
        ("sigma_omega", gt.sigma_omega, math.sqrt(hp.sigma2_omega)),
        ("sigma_eta", gt.sigma_eta, math.sqrt(hp.sigma2_eta)),
    ]:
        rows.append(ParamRecovery(name, float(truth), float(est), None, None, None))
    return RecoveryReport(rows=tuple(rows))


# ---------------------------------------------------------------------------
# CSV emission (same schemas ingest reads)


def write_transactions_csv(transactions, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["timestamp", "retail_price", "quantity", "discount_amount"])
        for tx in transactions:
            w.writerow(
                [
                    tx.timestamp.isoformat(timespec="seconds"),
                    repr(float(tx.retail_price)),
                    tx.quantity,
                    repr(float(tx.discount_amount)),
                ]
            )


def write_competitor_csv(quotes, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["date", "min_other_price"])
        for q in quotes:
            w.writerow([q.date.isoformat(), repr(float(q.min_other_price))])


def write_latent_csv(traces: LatentTraces, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["date", "mu", "gamma", "seasonal", "epsilon", "z"])
        for i, day in enumerate(traces.dates):
            w.writerow(
                [
                    day.isoformat(),
                    repr(float(traces.mu[i])),
                    repr(float(traces.gamma[i])),
                    repr(float(traces.seasonal[i])),
                    repr(float(traces.epsilon[i])),
                    repr(float(traces.z[i])),
                ]
            )
