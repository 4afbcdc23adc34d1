"""Structural demand model: local linear trend + weekly seasonal + AR(1)
disturbance + static price/competition/calendar coefficients, estimated by
Kalman-filter maximum likelihood.

Observation equation (daily, on the normalized log scale):

    z_t = log(y_t/y_bar)
        = beta_x * log(x_t/x_bar) + beta_c * c_t + beta_h * h_t + beta_w * w_t
          + mu_t + s_t + eps_t

with mu_t a local linear trend (slope noise sigma2_tau), s_t a
sum-to-zero seasonal of period k (noise sigma2_omega), and eps_t an AR(1)
disturbance (coefficient rho, innovation variance sigma2_eta). There is
no intercept: the level state absorbs it. All coefficients ride along as
zero-noise diffuse states, so one filter pass yields the likelihood, the
coefficient posteriors, and the forecast state simultaneously.
"""
from __future__ import annotations

import datetime as dt
import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np
import scipy.optimize

from . import kalman
from .errors import FitError
from .ingest import PreparedSeries

REGRESSOR_ORDER = ("log_price", "comp", "holiday", "weekend")


@dataclass(frozen=True)
class ModelSpec:
    """Structural layout and estimation constants.

    The log-price regressor is mandatory (it carries the elasticity);
    competitor, holiday and weekend regressors can be toggled off when the
    data cannot support them. ``kappa`` is the large prior variance used
    to approximate diffuse initialization; ``obs_ridge`` is a small
    observation-noise floor available for numerical rescue only (default
    0, faithful to the all-noise-in-state formulation).
    """

    periodicity: int = 7
    use_competitor: bool = True
    use_holiday: bool = True
    use_weekend: bool = True
    kappa: float = 1.0e7
    obs_ridge: float = 0.0
    sigma2_min: float = 1.0e-12
    sigma2_max: float = 1.0e4
    rho_max: float = 0.999

    def __post_init__(self):
        if self.periodicity < 2:
            raise ValueError(f"periodicity must be >= 2, got {self.periodicity}")
        if self.kappa < 0 or self.obs_ridge < 0:
            raise ValueError("kappa and obs_ridge must be >= 0")
        if not (0 < self.sigma2_min < self.sigma2_max):
            raise ValueError("need 0 < sigma2_min < sigma2_max")
        if not (0 < self.rho_max < 1):
            raise ValueError("rho_max must lie in (0,1)")

    @property
    def regressors(self) -> tuple:
        names = ["log_price"]
        if self.use_competitor:
            names.append("comp")
        if self.use_holiday:
            names.append("holiday")
        if self.use_weekend:
            names.append("weekend")
        return tuple(names)

    def as_dict(self) -> dict:
        return {
            "periodicity": self.periodicity,
            "use_competitor": self.use_competitor,
            "use_holiday": self.use_holiday,
            "use_weekend": self.use_weekend,
            "kappa": self.kappa,
            "obs_ridge": self.obs_ridge,
            "sigma2_min": self.sigma2_min,
            "sigma2_max": self.sigma2_max,
            "rho_max": self.rho_max,
        }


@dataclass(frozen=True)
class StateLayout:
    """Index map of the stacked state vector.

    Order: [level, slope] + [s_t ... s_{t-k+2}] + [ar] + coefficient
    states, one per enabled regressor. Dimension m = 2 + (k-1) + 1 + #reg.
    """

    periodicity: int
    regressors: tuple

    @classmethod
    def for_spec(cls, spec: ModelSpec) -> "StateLayout":
        return cls(periodicity=spec.periodicity, regressors=spec.regressors)

    @property
    def m(self) -> int:
        return 2 + (self.periodicity - 1) + 1 + len(self.regressors)

    level = 0
    slope = 1

    @property
    def seasonal(self) -> slice:
        return slice(2, 2 + self.periodicity - 1)

    @property
    def ar(self) -> int:
        return self.periodicity + 1

    @property
    def coef(self) -> slice:
        return slice(self.periodicity + 2, self.m)

    def coef_index(self, name: str) -> int:
        return self.periodicity + 2 + self.regressors.index(name)


@dataclass(frozen=True)
class Hyperparams:
    """Noise hyperparameters of the state recursions."""

    rho: float
    sigma2_tau: float
    sigma2_omega: float
    sigma2_eta: float

    def __post_init__(self):
        if not abs(self.rho) < 1:
            raise ValueError(f"|rho| must be < 1, got {self.rho}")
        if self.sigma2_tau < 0 or self.sigma2_omega < 0:
            raise ValueError("variances must be >= 0")
        if not self.sigma2_eta > 0:
            raise ValueError(f"sigma2_eta must be > 0, got {self.sigma2_eta}")

    def as_dict(self) -> dict:
        return {
            "rho": self.rho,
            "sigma2_tau": self.sigma2_tau,
            "sigma2_omega": self.sigma2_omega,
            "sigma2_eta": self.sigma2_eta,
        }


def build_state_space(spec: ModelSpec, hp: Hyperparams, regressor_row: Sequence[float]):
    """System matrices for one day: transition T, state noise Q, obs row Z_t.

    ``regressor_row`` lists the values of the enabled regressors in spec
    order, e.g. (log(x_t/x_bar), c_t, h_t, w_t) when all four are on.
    """
    layout = StateLayout.for_spec(spec)
    row = np.asarray(regressor_row, dtype=float)
    if row.shape != (len(layout.regressors),):
        raise ValueError(
            f"regressor row must have {len(layout.regressors)} values, got shape {row.shape}"
        )
    if not np.all(np.isfinite(row)):
        raise ValueError(f"regressor row contains non-finite values: {row}")
    T, Q = _transition(layout, hp, spec)
    Z = _obs_row(layout, row)
    return T, Q, Z


def _transition(layout: StateLayout, hp: Hyperparams, spec: ModelSpec):
    m = layout.m
    k = layout.periodicity
    T = np.zeros((m, m))
    T[0, 0] = 1.0
    T[0, 1] = 1.0
    T[1, 1] = 1.0
    T[2, 2 : k + 1] = -1.0  # new lead seasonal = -(sum of current k-1 states)
    for i in range(3, k + 1):
        T[i, i - 1] = 1.0
    T[layout.ar, layout.ar] = hp.rho
    for i in range(layout.coef.start, m):
        T[i, i] = 1.0
    Q = np.zeros((m, m))
    Q[1, 1] = hp.sigma2_tau
    Q[2, 2] = hp.sigma2_omega
    Q[layout.ar, layout.ar] = hp.sigma2_eta
    return T, Q


def _obs_row(layout: StateLayout, regressor_row: np.ndarray) -> np.ndarray:
    Z = np.zeros(layout.m)
    Z[layout.level] = 1.0
    Z[2] = 1.0  # lead seasonal state
    Z[layout.ar] = 1.0
    Z[layout.coef] = regressor_row
    return Z


def _initial_state(layout: StateLayout, hp: Hyperparams, spec: ModelSpec):
    m = layout.m
    a0 = np.zeros(m)
    P0 = np.eye(m) * spec.kappa
    P0[layout.ar, layout.ar] = hp.sigma2_eta / (1.0 - hp.rho**2)
    return a0, P0


def _design(spec: ModelSpec, series: PreparedSeries):
    """Observation vector, availability mask and Z matrix for a series.

    A day is usable only when z_t and every enabled regressor are present;
    days lacking an enabled regressor (e.g. no competitor quote yet) are
    treated as missing observations.
    """
    layout = StateLayout.for_spec(spec)
    cols = {"log_price": series.log_price, "comp": series.comp,
            "holiday": series.holiday, "weekend": series.weekend}
    reg = np.column_stack([cols[name] for name in layout.regressors])
    mask = np.isfinite(series.z) & np.all(np.isfinite(reg), axis=1)
    n = len(series)
    Zmat = np.zeros((n, layout.m))
    Zmat[:, layout.level] = 1.0
    Zmat[:, 2] = 1.0
    Zmat[:, layout.ar] = 1.0
    safe = np.where(np.isfinite(reg), reg, 0.0)  # masked rows never reach the filter
    Zmat[:, layout.coef] = safe
    z = np.where(mask, series.z, 0.0)
    return z, mask, Zmat, layout


def kalman_loglik(spec: ModelSpec, hp: Hyperparams, series: PreparedSeries) -> float:
    """Exact Gaussian log-likelihood by the prediction-error decomposition."""
    z, mask, Zmat, layout = _design(spec, series)
    if not mask.any():
        raise FitError("no observed days: every z_t or regressor value is missing")
    T, Q = _transition(layout, hp, spec)
    a0, P0 = _initial_state(layout, hp, spec)
    ll, status, t_bad = kalman.filter_loglik(z, mask, Zmat, T, Q, a0, P0, spec.obs_ridge)
    if status == kalman.BAD_INNOVATION:
        raise FitError(f"non-positive innovation variance at t={t_bad}")
    return float(ll)


# ---------------------------------------------------------------------------
# estimation


@dataclass(frozen=True)
class FitOptions:
    """Controls for the simplex search over hyperparameters.

    Any of the three fixable entries pins that hyperparameter instead of
    searching over it (used by recovery tests and degenerate-noise fits).
    """

    n_starts: int = 5
    seed: int = 0
    max_iter: int = 500
    fatol: float = 1.0e-7
    xatol: float = 1.0e-5
    fix_rho: float | None = None
    fix_sigma2_tau: float | None = None
    fix_sigma2_omega: float | None = None


@dataclass(frozen=True)
class FittedModel:
    """Estimation output carried through forecasting and storage."""

    spec: ModelSpec
    hyperparams: Hyperparams
    coefficients: dict
    std_errors: dict
    final_state: np.ndarray
    final_cov: np.ndarray
    y_bar: float
    x_bar: float
    loglik: float
    metrics: dict
    train_start: dt.date
    train_end: dt.date
    last_min_other_price: float | None
    version: int | None = None
    fitted_at: str | None = None

    @property
    def layout(self) -> StateLayout:
        return StateLayout.for_spec(self.spec)


class _Transform:
    """Bijection between the free search vector and Hyperparams.

    rho passes through a scaled tanh so the search stays inside
    (-rho_max, rho_max); variances are searched on the log scale and
    clipped into [sigma2_min, sigma2_max].
    """

    def __init__(self, spec: ModelSpec, options: FitOptions):
        self.spec = spec
        self.options = options
        self.names = []
        if options.fix_rho is None:
            self.names.append("rho")
        if options.fix_sigma2_tau is None:
            self.names.append("sigma2_tau")
        if options.fix_sigma2_omega is None:
            self.names.append("sigma2_omega")
        self.names.append("sigma2_eta")  # always free: the model needs it > 0

    def to_hyperparams(self, u: np.ndarray) -> Hyperparams:
        vals = dict(
            rho=self.options.fix_rho,
            sigma2_tau=self.options.fix_sigma2_tau,
            sigma2_omega=self.options.fix_sigma2_omega,
        )
        for name, ui in zip(self.names, u):
            if name == "rho":
                vals["rho"] = self.spec.rho_max * math.tanh(ui)
            else:
                vals[name] = float(
                    np.clip(math.exp(ui), self.spec.sigma2_min, self.spec.sigma2_max)
                )
        return Hyperparams(**vals)

    def from_values(self, rho: float, s2_tau: float, s2_omega: float, s2_eta: float):
        u = []
        by_name = {"rho": rho, "sigma2_tau": s2_tau, "sigma2_omega": s2_omega,
                   "sigma2_eta": s2_eta}
        for name in self.names:
            v = by_name[name]
            if name == "rho":
                r = np.clip(v / self.spec.rho_max, -0.999999, 0.999999)
                u.append(math.atanh(r))
            else:
                u.append(math.log(np.clip(v, self.spec.sigma2_min, self.spec.sigma2_max)))
        return np.array(u)


def fit(series: PreparedSeries, spec: ModelSpec, options: FitOptions | None = None) -> FittedModel:
    """Maximum-likelihood fit by multi-start Nelder-Mead simplex search.

    Deterministic for a given (series, spec, options): starts are drawn
    from a seeded generator and ties between equally good starts break by
    start index. Coefficient estimates are the final smoothed means of the
    coefficient states; standard errors come from the matching smoothed
    variances.
    """
    options = options or FitOptions()
    z, mask, Zmat, layout = _design(spec, series)
    n_obs = int(mask.sum())
    if n_obs <= layout.m:
        raise FitError(f"series too short: {n_obs} observed days <= state dimension {layout.m}")

    transform = _Transform(spec, options)

    def neg_loglik(u):
        try:
            hp = transform.to_hyperparams(u)
        except ValueError:
            return np.inf
        T, Q = _transition(layout, hp, spec)
        a0, P0 = _initial_state(layout, hp, spec)
        ll, status, _ = kalman.filter_loglik(z, mask, Zmat, T, Q, a0, P0, spec.obs_ridge)
        if status != kalman.OK or not np.isfinite(ll):
            return np.inf
        return -ll
    zvar = float(np.var(z[mask])) if n_obs > 1 else 1.0
    zvar = max(zvar, 1e-6)
    base = transform.from_values(
        rho=0.3, s2_tau=1e-6 * zvar, s2_omega=1e-3 * zvar, s2_eta=0.5 * zvar
    )
    rng = np.random.default_rng(options.seed)
    starts = [base]
    for _ in range(options.n_starts - 1):
        starts.append(base + rng.normal(scale=1.5, size=base.shape))

    best_u = None
    best_fun = np.inf
    tried = []
    for idx, u0 in enumerate(starts):
        res = scipy.optimize.minimize(
            neg_loglik,
            u0,
            method="Nelder-Mead",
            options=dict(
                maxiter=options.max_iter,
                maxfev=2 * options.max_iter,
                fatol=options.fatol,
                xatol=options.xatol,
            ),
        )
        tried.append((idx, res.fun, res.success))
        if np.isfinite(res.fun) and res.fun < best_fun:
            best_fun = res.fun
            best_u = res.x
    if best_u is None:
        raise FitError(f"optimizer failed on every start: {tried}")

    hp = transform.to_hyperparams(best_u)
    T, Q = _transition(layout, hp, spec)
    a0, P0 = _initial_state(layout, hp, spec)
    ll, status, t_bad, a_pred, P_pred, a_filt, P_filt, a_fin, P_fin = kalman.filter_pass(
        z, mask, Zmat, T, Q, a0, P0, spec.obs_ridge
    )
    if status != kalman.OK:
        raise FitError(f"filter failed at the optimum (t={t_bad})")
    a_sm, P_sm = kalman.smooth(T, a_pred, P_pred, a_filt, P_filt)

    coefficients = {}
    std_errors = {}
    last = len(series) - 1
    for name in layout.regressors:
        i = layout.coef_index(name)
        coefficients[name] = float(a_sm[last, i])
        std_errors[name] = float(math.sqrt(max(P_sm[last, i, i], 0.0)))

    last_quote = None
    for obs_day in reversed(series.observations):
        if obs_day.min_other_price is not None:
            last_quote = float(obs_day.min_other_price)
            break

    return FittedModel(
        spec=spec,
        hyperparams=hp,
        coefficients=coefficients,
        std_errors=std_errors,
        final_state=np.asarray(a_fin, dtype=float),
        final_cov=np.asarray(P_fin, dtype=float),
        y_bar=series.y_bar,
        x_bar=series.x_bar,
        loglik=float(ll),
        metrics={},
        train_start=series.start,
        train_end=series.end,
        last_min_other_price=last_quote,
        fitted_at=dt.datetime.now(dt.timezone.utc).isoformat(timespec="seconds"),
    )


# ---------------------------------------------------------------------------
# post-fit analysis


@dataclass(frozen=True)
class ComponentPaths:
    """Smoothed per-day decomposition of the observation equation."""

    dates: list
    trend: np.ndarray
    slope: np.ndarray
    seasonal: np.ndarray
    ar: np.ndarray
    regression: np.ndarray

    @property
    def z_hat(self) -> np.ndarray:
        return self.trend + self.seasonal + self.ar + self.regression


def extract_components(fitted: FittedModel, series: PreparedSeries) -> ComponentPaths:
    """Fixed-interval smoothed trend, seasonal and AR paths.

    On non-missing days the reconstruction trend + seasonal + ar +
    regression reproduces z_t exactly (zero observation noise).
    """
    if series.start != fitted.train_start or series.end != fitted.train_end:
        raise FitError(
            f"series window {series.start}..{series.end} does not match the "
            f"fitted window {fitted.train_start}..{fitted.train_end}"
        )
    if series.y_bar != fitted.y_bar or series.x_bar != fitted.x_bar:
        raise FitError("series normalization constants differ from the fitted model")
    spec, hp = fitted.spec, fitted.hyperparams
    z, mask, Zmat, layout = _design(spec, series)
    T, Q = _transition(layout, hp, spec)
    a0, P0 = _initial_state(layout, hp, spec)
    _, status, t_bad, a_pred, P_pred, a_filt, P_filt, _, _ = kalman.filter_pass(
        z, mask, Zmat, T, Q, a0, P0, spec.obs_ridge
    )
    if status != kalman.OK:
        raise FitError(f"filter failed at t={t_bad}")
    a_sm, _ = kalman.smooth(T, a_pred, P_pred, a_filt, P_filt)
    regression = np.einsum("ij,ij->i", Zmat[:, layout.coef], a_sm[:, layout.coef])
    return ComponentPaths(
        dates=series.dates,
        trend=a_sm[:, layout.level].copy(),
        slope=a_sm[:, layout.slope].copy(),
        seasonal=a_sm[:, 2].copy(),
        ar=a_sm[:, layout.ar].copy(),
        regression=regression,
    )


@dataclass(frozen=True)
class ElasticityEstimate:
    beta: float
    se: float
    confidence: float


def elasticity(fitted: FittedModel) -> ElasticityEstimate:
    """Price-elasticity estimate with a two-sided Gaussian confidence level.

    confidence = erf(|beta| / (se * sqrt(2))), the probability mass a
    Gaussian centered on the estimate puts on the estimate's own sign.
    Zero estimate means no evidence: confidence 0 even when se = 0.
    """
    beta = fitted.coefficients["log_price"]
    se = fitted.std_errors["log_price"]
    if beta == 0.0:
        conf = 0.0
    elif se == 0.0:
        conf = 1.0
    else:
        conf = math.erf(abs(beta) / (se * math.sqrt(2.0)))
    return ElasticityEstimate(beta=beta, se=se, confidence=conf)


def _continue_filter(fitted: FittedModel, series: PreparedSeries):
    """Run the filter over new days starting from the stored final state."""
    spec, hp = fitted.spec, fitted.hyperparams
    z, mask, Zmat, layout = _design(spec, series)
    T, Q = _transition(layout, hp, spec)
    a0 = fitted.final_state
    P0 = fitted.final_cov
    ll, status, t_bad, a_pred, P_pred, a_filt, P_filt, a_fin, P_fin = kalman.filter_pass(
        z, mask, Zmat, T, Q, a0, P0, spec.obs_ridge
    )
    if status != kalman.OK:
        raise FitError(f"filter failed at holdout step t={t_bad}")
    z_pred = np.einsum("ij,ij->i", Zmat, a_pred)
    return z_pred, mask, a_fin, P_fin


def evaluate(fitted: FittedModel, holdout: PreparedSeries) -> dict:
    """One-step-ahead accuracy over a later, disjoint window.

    Returns {"rmse_log", "mape_units", "n_log", "n_units"}. The holdout
    must be prepared on the training normalization constants so its z
    values live on the model's scale.
    """
    if len(holdout) == 0:
        raise FitError("empty holdout")
    if holdout.start <= fitted.train_end:
        raise FitError(
            f"holdout must start after the training window "
            f"({holdout.start} <= {fitted.train_end})"
        )
    if holdout.y_bar != fitted.y_bar or holdout.x_bar != fitted.x_bar:
        raise FitError("holdout must be normalized with the training constants")
    z_pred, mask, _, _ = _continue_filter(fitted, holdout)

    err_z = z_pred[mask] - holdout.z[mask]
    if err_z.size == 0:
        raise FitError("holdout has no usable observation")
    rmse = float(np.sqrt(np.mean(err_z**2)))

    # unit-scale errors on positive-sales, non-outlier days with a defined prediction
    y = holdout.unit_sales
    pos = mask & np.isfinite(y) & (y > 0)
    if not pos.any():
        raise FitError("holdout has no positive-sales day; MAPE undefined")
    y_hat = fitted.y_bar * np.exp(z_pred[pos])
    mape = float(np.mean(np.abs(y_hat - y[pos]) / y[pos]))
    return {
        "rmse_log": rmse,
        "mape_units": mape,
        "n_log": int(err_z.size),
        "n_units": int(pos.sum()),
    }


def advance(fitted: FittedModel, series: PreparedSeries, metrics: dict | None = None) -> FittedModel:
    """Fold newer observed days into the state without re-estimating.

    Hyperparameters and coefficient summaries stay as fitted; the final
    state, covariance and training end move forward so forecasts start
    from the latest data.
    """
    if len(series) == 0:
        return fitted
    if series.start <= fitted.train_end:
        raise FitError("advance window must start after the training window")
    _, _, a_fin, P_fin = _continue_filter(fitted, series)
    last_quote = fitted.last_min_other_price
    for obs_day in reversed(series.observations):
        if obs_day.min_other_price is not None:
            last_quote = float(obs_day.min_other_price)
            break
    return replace(
        fitted,
        final_state=np.asarray(a_fin, dtype=float),
        final_cov=np.asarray(P_fin, dtype=float),
        train_end=series.end,
        last_min_other_price=last_quote,
        metrics=dict(metrics) if metrics is not None else fitted.metrics,
    )
