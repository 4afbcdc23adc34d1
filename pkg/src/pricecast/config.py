"""Toolkit configuration: one YAML file drives every pipeline stage."""
from __future__ import annotations

import datetime as dt
from dataclasses import dataclass, field, replace
from pathlib import Path

import yaml

from .errors import PricecastError
from .ingest import CalendarConfig, EligibilityRules
from .simulate import GroundTruth, PriceProcess, default_holidays, reference_ground_truth
from .ssm import FitOptions, ModelSpec


class ConfigError(PricecastError):
    """The config file is missing, malformed, or inconsistent."""


@dataclass(frozen=True)
class RunConfig:
    """Everything a full pipeline run needs.

    ``alphas`` empty means a single solve at ``alpha``; non-empty means a
    sweep. ``simulation`` (optional) parameterizes the simulate stage;
    the string "reference" selects the in-repo reference product.
    """

    product_id: str
    transactions: str
    competitor: str | None
    output_dir: str
    store_dir: str
    calendar: CalendarConfig = field(default_factory=CalendarConfig)
    eligibility: EligibilityRules = field(default_factory=EligibilityRules)
    model: ModelSpec = field(default_factory=ModelSpec)
    fit: FitOptions = field(default_factory=FitOptions)
    c_mad: float = 5.0
    holdout_days: int = 28
    ladder_levels: int = 10
    horizon_weeks: int = 8
    s0: float = 1000.0
    alpha: float = 0.4
    alphas: tuple = ()
    min_other_price: float | None = None  # forecast assumption override
    mean_corrected: bool = False
    seed: int = 0
    simulation: GroundTruth | None = None

    def __post_init__(self):
        if self.horizon_weeks < 1:
            raise ConfigError(f"horizon_weeks must be >= 1, got {self.horizon_weeks}")
        if self.ladder_levels < 1:
            raise ConfigError(f"ladder_levels must be >= 1, got {self.ladder_levels}")
        if self.holdout_days < 0:
            raise ConfigError(f"holdout_days must be >= 0, got {self.holdout_days}")
        if not self.s0 > 0:
            raise ConfigError(f"s0 must be > 0, got {self.s0}")

    @property
    def out_product_dir(self) -> Path:
        return Path(self.output_dir) / self.product_id


def _parse_calendar(node: dict) -> CalendarConfig:
    holidays = frozenset(
        d if isinstance(d, dt.date) else dt.date.fromisoformat(str(d))
        for d in node.get("holidays", [])
    )
    weekend = frozenset(int(d) for d in node.get("weekend_days", (5, 6)))
    return CalendarConfig(
        holidays=holidays, weekend_days=weekend, timezone=node.get("timezone", "UTC")
    )


def _parse_process(node) -> PriceProcess:
    if isinstance(node, (int, float)):
        return PriceProcess("constant", value=float(node))
    kind = node.get("kind")
    kwargs = {k: v for k, v in node.items() if k != "kind"}
    if "values" in kwargs:
        kwargs["values"] = tuple(float(v) for v in kwargs["values"])
    return PriceProcess(kind, **kwargs)


def _parse_simulation(node, seed: int, default_calendar: CalendarConfig | None) -> GroundTruth:
    """Build the data-generating parameters for the simulate stage.

    When the config file carries an explicit calendar it also governs the
    simulation, so generated holiday effects stay visible to ingest.
    """
    if node == "reference" or node is True:
        gt = reference_ground_truth(seed=seed)
        return replace(gt, calendar=default_calendar) if default_calendar else gt
    if not isinstance(node, dict):
        raise ConfigError(f"simulation must be 'reference' or a mapping, got {node!r}")
    if node.get("base") == "reference":
        gt = reference_ground_truth(seed=seed)
        if default_calendar:
            gt = replace(gt, calendar=default_calendar)
        overrides = {}
        for key in ("horizon_days", "y_bar", "x_bar", "beta_x", "beta_c", "beta_h", "beta_w",
                    "rho", "sigma_tau", "sigma_omega", "sigma_eta", "periodicity", "seed"):
            if key in node:
                overrides[key] = node[key]
        if "competitor" in node:
            comp = node["competitor"]
            overrides["competitor"] = None if comp is None else _parse_process(comp)
        return replace(gt, **overrides) if overrides else gt
    kwargs = dict(node)
    kwargs.pop("base", None)
    kwargs.setdefault("seed", seed)
    if "start_date" in kwargs and not isinstance(kwargs["start_date"], dt.date):
        kwargs["start_date"] = dt.date.fromisoformat(str(kwargs["start_date"]))
    if "price" in kwargs:
        kwargs["price"] = _parse_process(kwargs["price"])
    if "competitor" in kwargs and kwargs["competitor"] is not None:
        kwargs["competitor"] = _parse_process(kwargs["competitor"])
    if "seasonal0" in kwargs:
        kwargs["seasonal0"] = tuple(float(v) for v in kwargs["seasonal0"])
    if "calendar" in kwargs:
        kwargs["calendar"] = _parse_calendar(kwargs["calendar"])
    elif default_calendar is not None:
        kwargs["calendar"] = default_calendar
    elif "horizon_days" in kwargs and "start_date" in kwargs:
        start = kwargs["start_date"]
        end = start + dt.timedelta(days=int(kwargs["horizon_days"]) - 1)
        kwargs["calendar"] = CalendarConfig(holidays=default_holidays(start, end))
    try:
        return GroundTruth(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad simulation block: {exc}") from exc


def load_config(path, overrides: dict | None = None) -> RunConfig:
    """Parse the YAML config; ``overrides`` (CLI flags) win over file values."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    with open(path) as fh:
        raw = yaml.safe_load(fh) or {}
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    overrides = overrides or {}
    merged = dict(raw)
    merged.update({k: v for k, v in overrides.items() if v is not None})

    base_dir = path.parent

    def _resolve(p):
        if p is None:
            return None
        return str(p) if Path(p).is_absolute() else str(base_dir / p)

    try:
        seed = int(merged.get("seed", 0))
        cal_node = merged.get("calendar")
        calendar = _parse_calendar(cal_node or {})
        sim_node = merged.get("simulation")
        simulation = None
        if sim_node is not None:
            simulation = _parse_simulation(
                sim_node, seed, calendar if cal_node is not None else None
            )
            if cal_node is None:
                calendar = simulation.calendar
        cfg = RunConfig(
            product_id=str(merged["product_id"]),
            transactions=_resolve(merged["transactions"]),
            competitor=_resolve(merged.get("competitor")),
            output_dir=_resolve(merged.get("output_dir", "out")),
            store_dir=_resolve(merged.get("store_dir", "store")),
            calendar=calendar,
            eligibility=EligibilityRules(**merged.get("eligibility", {})),
            model=ModelSpec(**merged.get("model", {})),
            fit=FitOptions(**merged.get("fit", {})),
            c_mad=float(merged.get("c_mad", 5.0)),
            holdout_days=int(merged.get("holdout_days", 28)),
            ladder_levels=int(merged.get("ladder_levels", 10)),
            horizon_weeks=int(merged.get("horizon_weeks", 8)),
            s0=float(merged.get("s0", 1000.0)),
            alpha=float(merged.get("alpha", 0.4)),
            alphas=tuple(float(a) for a in merged.get("alphas", ())),
            min_other_price=(
                float(merged["min_other_price"]) if merged.get("min_other_price") is not None else None
            ),
            mean_corrected=bool(merged.get("mean_corrected", False)),
            seed=seed,
            simulation=simulation,
        )
    except KeyError as exc:
        raise ConfigError(f"{path}: missing required key {exc}") from exc
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return cfg
