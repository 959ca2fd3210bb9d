"""Horizon simulation of the coupled growth, stock and processing chain.

Yearly order of events: the season's harvest (predicted by the growth
surrogate) is credited to the stock, then the year's production periods
draw their planned soybean feed oldest-first, then at the year boundary
stock reaching the expiry age goes to waste, so each harvest can feed at most
three production years. A period whose draw cannot be met in full is a
failure: the plants are fed nothing and the shortfall is tallied as a
required import that never enters the stock.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..exceptions import HorizonMismatch, SchemaMismatch, UntrainedModels
from ..synth import GROWTH_INPUTS, HOURS_PER_YEAR, ClimateSeries, humidity_proxy
from ..training.estimators import LtcController, LtcRegressor
from .cascade import CascadePlan, controller_cascade
from .stock import Stock

PERIOD_HOURS = 168
PERIODS_PER_YEAR = 52
TRACE_SCHEMA = "ecoltc.trace"
TRACE_VERSION = 1

YEARLY_COLUMNS = (
    "year", "harvest_Mg", "stock_Mg", "waste_cum_Mg", "import_cum_Mg", "failures_count",
    "waste_Mg", "import_Mg", "withdrawn_Mg", "soybean_required_Mg",
)
HOURLY_COLUMNS = (
    "t_hours", "demand_Mg_h", "soybean_required_Mg_h", "soybean_fed_Mg_h", "oil_Mg_h", "diesel_Mg_h",
)
PERIOD_COLUMNS = ("year", "week", "required_Mg", "withdrawn_Mg", "shortfall_Mg", "failure")


def period_bounds(hours_per_year: int = HOURS_PER_YEAR, period_hours: int = PERIOD_HOURS,
                  n_periods: int = PERIODS_PER_YEAR) -> np.ndarray:
    """Start offsets of each production period plus the year length; the last period absorbs the remainder."""
    starts = np.arange(n_periods) * period_hours
    if starts[-1] >= hours_per_year:
        raise ValueError("periods do not fit in a year")
    return np.append(starts, hours_per_year)


@dataclass
class EcosystemGraph:
    """Trained node surrogates, controllers and the port bindings between them.

    ``bindings`` maps ``"node.port"`` to its source: another node's output
    (``"node.port"``), the stock (``"stock:soybean"``), or an exogenous
    series (``"climate:..."``, ``"demand:diesel"``, ``"clock:..."``,
    ``"aux:ratio"``).
    """

    growth: LtcRegressor
    oil_plant: LtcRegressor
    diesel_plant: LtcRegressor
    oil_controller: LtcController
    diesel_controller: LtcController
    bindings: dict = field(default_factory=dict)
    humidity_seed: int = 0

    def __post_init__(self):
        for label in ("growth", "oil_plant", "diesel_plant", "oil_controller", "diesel_controller"):
            model = getattr(self, label)
            if model is None or not hasattr(model, "network_"):
                raise UntrainedModels(f"{label} model is missing or untrained")
        if not self.bindings:
            self.bindings = self.default_bindings()
        self.validate()

    def nodes(self) -> dict:
        return {
            "growth": self.growth,
            "oil_plant": self.oil_plant,
            "diesel_plant": self.diesel_plant,
            "oil_controller": self.oil_controller,
            "diesel_controller": self.diesel_controller,
        }

    def default_bindings(self) -> dict:
        climate_sources = {
            "time_h": "clock:hours_since_sowing",
            "precipitation_mm_h": "climate:precipitation",
            "temperature_C": "climate:temperature",
            "humidity_proxy": "climate:humidity_proxy",
        }
        b = {f"growth.{n}": climate_sources.get(n, f"climate:{n}") for n in self.growth.input_names_}
        oil_in, diesel_in = self.oil_plant.input_names_, self.diesel_plant.input_names_
        b[f"oil_plant.{oil_in[0]}"] = "stock:soybean"
        for n in oil_in[1:]:
            b[f"oil_plant.{n}"] = f"oil_controller.{n}"
        b[f"diesel_plant.{diesel_in[0]}"] = f"oil_plant.{self.oil_plant.output_names_[0]}"
        for n in diesel_in[1:]:
            b[f"diesel_plant.{n}"] = f"diesel_controller.{n}"
        dc_in = self.diesel_controller.input_names_
        b[f"diesel_controller.{dc_in[0]}"] = "demand:diesel"
        for n in dc_in[1:]:
            b[f"diesel_controller.{n}"] = "aux:ratio"
        oc_in = self.oil_controller.input_names_
        b[f"oil_controller.{oc_in[0]}"] = f"diesel_controller.{self.diesel_controller.output_names_[0]}"
        for n in oc_in[1:]:
            b[f"oil_controller.{n}"] = "aux:ratio"
        return b

    def validate(self) -> None:
        """Every node input port bound exactly once, to a known source."""
        nodes = self.nodes()
        ports = {f"{k}.{n}" for k, m in nodes.items() for n in m.input_names_}
        outputs = {f"{k}.{n}" for k, m in nodes.items() for n in m.output_names_}
        unbound = sorted(ports - set(self.bindings))
        unknown = sorted(set(self.bindings) - ports)
        if unbound or unknown:
            raise SchemaMismatch(f"unbound ports {unbound}, unknown ports {unknown}")
        for port, src in self.bindings.items():
            if ":" not in src and src not in outputs:
                raise SchemaMismatch(f"{port} bound to unknown output {src}")
        for n in self.growth.input_names_:
            if n not in GROWTH_INPUTS:
                raise SchemaMismatch(f"growth input {n} has no climate source")


@dataclass
class SimulationTrace:
    """Hourly, per-period and yearly records of one horizon run (masses in Mg, rates in Mg/h)."""

    start_year: int
    end_year: int
    farm_ha: float
    demand: np.ndarray
    soybean_required: np.ndarray
    soybean_fed: np.ndarray
    oil_production: np.ndarray
    diesel_production: np.ndarray
    harvest: np.ndarray
    stock_level: np.ndarray
    waste_increment: np.ndarray
    import_increment: np.ndarray
    withdrawn: np.ndarray
    period_required: np.ndarray
    period_withdrawn: np.ndarray
    period_shortfall: np.ndarray
    failures: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def years(self) -> np.ndarray:
        return np.arange(self.start_year, self.end_year)

    @property
    def n_years(self) -> int:
        return self.end_year - self.start_year

    @property
    def failures_per_year(self) -> np.ndarray:
        return self.failures.sum(axis=1).astype(int)

    @property
    def waste_cumulative(self) -> np.ndarray:
        return np.cumsum(self.waste_increment)

    @property
    def import_cumulative(self) -> np.ndarray:
        return np.cumsum(self.import_increment)

    @property
    def total_imports(self) -> float:
        return float(self.import_increment.sum())

    @property
    def first_failure_year(self) -> int | None:
        rows = np.flatnonzero(self.failures.any(axis=1))
        return int(self.start_year + rows[0]) if rows.size else None

    def weekly_production(self) -> np.ndarray:
        """Mean diesel production per period, shape (years, periods)."""
        bounds = period_bounds(n_periods=self.failures.shape[1])
        out = np.empty(self.failures.shape)
        for k in range(self.n_years):
            seg = self.diesel_production[k * HOURS_PER_YEAR:(k + 1) * HOURS_PER_YEAR]
            for w in range(len(bounds) - 1):
                out[k, w] = seg[bounds[w]:bounds[w + 1]].mean()
        return out

    def yearly_table(self) -> dict:
        return {
            "year": self.years,
            "harvest_Mg": self.harvest,
            "stock_Mg": self.stock_level,
            "waste_cum_Mg": self.waste_cumulative,
            "import_cum_Mg": self.import_cumulative,
            "failures_count": self.failures_per_year,
            "waste_Mg": self.waste_increment,
            "import_Mg": self.import_increment,
            "withdrawn_Mg": self.withdrawn,
            "soybean_required_Mg": self.period_required.sum(axis=1),
        }


def _check_horizon(climate: ClimateSeries, demand, start_year, end_year):
    if end_year <= start_year:
        raise HorizonMismatch("end_year must be after start_year")
    if climate.start_year > start_year or climate.start_year + climate.n_years < end_year:
        raise HorizonMismatch(
            f"climate covers {climate.start_year}-{climate.start_year + climate.n_years}, "
            f"simulation needs {start_year}-{end_year}"
        )
    need = (end_year - start_year) * HOURS_PER_YEAR
    if len(demand) < need:
        raise HorizonMismatch(f"demand has {len(demand)} hours, simulation needs {need}")


def season_inputs(climate: ClimateSeries, years, names, humidity_seed: int = 0) -> list[np.ndarray]:
    """Growth-model input arrays for each season, columns ordered as ``names``."""
    rng = np.random.default_rng(humidity_seed)
    out = []
    for year in years:
        sl = climate.season_slice(int(year))
        T, P = climate.temperature[sl], climate.precipitation[sl]
        cols = {
            "time_h": np.arange(len(T), dtype=np.float64),
            "precipitation_mm_h": P,
            "temperature_C": T,
        }
        hum = humidity_proxy(T, P, rng)
        cols["humidity_proxy"] = hum
        out.append(np.column_stack([cols[n] for n in names]))
    return out


def predict_yields(growth: LtcRegressor, climate: ClimateSeries, years, humidity_seed: int = 0) -> np.ndarray:
    """End-of-season surrogate biomass per hectare for each year, floored at zero."""
    segs = season_inputs(climate, years, growth.input_names_, humidity_seed)
    preds = growth.predict(segs)
    return np.array([max(float(p[-1, 0]), 0.0) for p in preds])


def simulate_horizon(graph: EcosystemGraph, climate: ClimateSeries, demand, farm_ha: float,
                     start_year: int = 2006, end_year: int = 2096, yields_per_ha=None,
                     plan: CascadePlan | None = None, meta: dict | None = None) -> SimulationTrace:
    """Run the coupled chain over ``[start_year, end_year)``.

    ``demand`` is hourly diesel demand starting on Jan 1 of ``start_year``.
    ``yields_per_ha`` and ``plan`` may be supplied to reuse the growth
    predictions and the feedstock plan across farm sizes; both depend only
    on climate and demand.
    """
    if not farm_ha > 0:
        raise ValueError("farm_ha must be positive")
    demand = np.asarray(demand, dtype=np.float64).reshape(-1)
    _check_horizon(climate, demand, start_year, end_year)
    n_years = end_year - start_year
    n_hours = n_years * HOURS_PER_YEAR
    demand = demand[:n_hours]
    years = np.arange(start_year, end_year)

    if yields_per_ha is None:
        yields_per_ha = predict_yields(graph.growth, climate, years, graph.humidity_seed)
    yields_per_ha = np.asarray(yields_per_ha, dtype=np.float64)
    if plan is None:
        plan = controller_cascade(demand, graph.oil_controller, graph.diesel_controller)
    harvest = yields_per_ha * farm_ha

    bounds = period_bounds()
    n_periods = len(bounds) - 1
    stock = Stock()
    stock_level = np.empty(n_years)
    waste = np.empty(n_years)
    imports = np.empty(n_years)
    withdrawn = np.empty(n_years)
    p_req = np.empty((n_years, n_periods))
    p_wd = np.empty((n_years, n_periods))
    p_short = np.empty((n_years, n_periods))
    failures = np.zeros((n_years, n_periods), dtype=bool)
    fed = np.ones(n_hours, dtype=bool)

    for k, year in enumerate(years):
        stock.deposit(int(year), float(harvest[k]))
        imported = 0.0
        base = k * HOURS_PER_YEAR
        for w in range(n_periods):
            a, b = base + bounds[w], base + bounds[w + 1]
            need = float(plan.soybean[a:b].sum())
            got, short = stock.withdraw(need)
            p_req[k, w], p_wd[k, w], p_short[k, w] = need, got, short
            if short > 0:
                failures[k, w] = True
                fed[a:b] = False
                stock.record_import(short)
                imported += short
        # year-boundary pass: the clock reads Jan 1 of the next year
        waste[k] = stock.expire(int(year) + 1)
        stock_level[k] = stock.level
        imports[k] = imported
        withdrawn[k] = p_wd[k].sum()

    soy_fed = np.where(fed, plan.soybean, 0.0)
    hexane_fed = np.where(fed, plan.hexane, 0.0)
    water_fed = np.where(fed, plan.water, 0.0)
    oil = np.clip(graph.oil_plant.predict(np.column_stack([soy_fed, hexane_fed]))[:, 0], 0.0, None)
    oil = np.where(fed, oil, 0.0)
    diesel = np.clip(graph.diesel_plant.predict(np.column_stack([oil, water_fed]))[:, 0], 0.0, None)
    diesel = np.where(fed, diesel, 0.0)

    info = {"farm_ha": float(farm_ha), "start_year": int(start_year), "end_year": int(end_year),
            "climate_scenario": climate.scenario}
    info.update(meta or {})
    return SimulationTrace(
        start_year=int(start_year), end_year=int(end_year), farm_ha=float(farm_ha),
        demand=demand, soybean_required=plan.soybean, soybean_fed=soy_fed,
        oil_production=oil, diesel_production=diesel, harvest=harvest, stock_level=stock_level,
        waste_increment=waste, import_increment=imports, withdrawn=withdrawn,
        period_required=p_req, period_withdrawn=p_wd, period_shortfall=p_short, failures=failures,
        meta=info,
    )


# -- persistence ---------------------------------------------------------------


def _fmt_row(values) -> list[str]:
    out = []
    for v in values:
        if isinstance(v, (bool, np.bool_)):
            out.append("1" if v else "0")
        elif isinstance(v, (int, np.integer)):
            out.append(str(int(v)))
        else:
            out.append(repr(float(v)))
    return out


def trace_paths(directory) -> dict:
    d = Path(directory)
    return {
        "hourly": d / "hourly.csv",
        "yearly": d / "yearly.csv",
        "periods": d / "periods.csv",
        "meta": d / "trace.meta.json",
    }


def write_trace(trace: SimulationTrace, directory) -> dict:
    """Write hourly, yearly and per-period CSVs plus a JSON metadata sidecar."""
    paths = trace_paths(directory)
    paths["meta"].parent.mkdir(parents=True, exist_ok=True)
    hourly = np.column_stack([
        np.arange(len(trace.demand), dtype=np.float64), trace.demand, trace.soybean_required,
        trace.soybean_fed, trace.oil_production, trace.diesel_production,
    ])
    with open(paths["hourly"], "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(HOURLY_COLUMNS) + "\n")
        np.savetxt(fh, hourly, fmt="%.17g", delimiter=",")
    table = trace.yearly_table()
    with open(paths["yearly"], "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(YEARLY_COLUMNS)
        for k in range(trace.n_years):
            writer.writerow(_fmt_row(table[c][k] for c in YEARLY_COLUMNS))
    with open(paths["periods"], "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(PERIOD_COLUMNS)
        for k, year in enumerate(trace.years):
            for w in range(trace.failures.shape[1]):
                writer.writerow(_fmt_row([int(year), w + 1, trace.period_required[k, w],
                                          trace.period_withdrawn[k, w], trace.period_shortfall[k, w],
                                          bool(trace.failures[k, w])]))
    meta = {"schema": TRACE_SCHEMA, "version": TRACE_VERSION, "period_hours": PERIOD_HOURS,
            "periods_per_year": int(trace.failures.shape[1]), **trace.meta}
    with open(paths["meta"], "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return paths


def _read_table(path: Path, columns) -> np.ndarray:
    if not path.exists():
        raise SchemaMismatch(f"missing trace file {path}")
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
    if tuple(header) != tuple(columns):
        raise SchemaMismatch(f"{path}: unexpected columns {header}")
    return np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)


def read_trace(directory) -> SimulationTrace:
    paths = trace_paths(directory)
    if not paths["meta"].exists():
        raise SchemaMismatch(f"{directory}: no trace metadata")
    meta = json.loads(paths["meta"].read_text(encoding="utf-8"))
    if meta.get("schema") != TRACE_SCHEMA:
        raise SchemaMismatch(f"{directory}: not a {TRACE_SCHEMA} document")
    hourly = _read_table(paths["hourly"], HOURLY_COLUMNS)
    yearly = _read_table(paths["yearly"], YEARLY_COLUMNS)
    periods = _read_table(paths["periods"], PERIOD_COLUMNS)
    n_years = len(yearly)
    n_periods = int(meta["periods_per_year"])
    if len(periods) != n_years * n_periods:
        raise SchemaMismatch(f"{directory}: period table does not match the yearly table")
    col = {c: k for k, c in enumerate(YEARLY_COLUMNS)}
    per = periods.reshape(n_years, n_periods, len(PERIOD_COLUMNS))
    info = {k: v for k, v in meta.items() if k not in ("schema", "version", "period_hours", "periods_per_year")}
    return SimulationTrace(
        start_year=int(meta["start_year"]), end_year=int(meta["end_year"]), farm_ha=float(meta["farm_ha"]),
        demand=hourly[:, 1], soybean_required=hourly[:, 2], soybean_fed=hourly[:, 3],
        oil_production=hourly[:, 4], diesel_production=hourly[:, 5],
        harvest=yearly[:, col["harvest_Mg"]], stock_level=yearly[:, col["stock_Mg"]],
        waste_increment=yearly[:, col["waste_Mg"]], import_increment=yearly[:, col["import_Mg"]],
        withdrawn=yearly[:, col["withdrawn_Mg"]],
        period_required=per[:, :, 2], period_withdrawn=per[:, :, 3], period_shortfall=per[:, :, 4],
        failures=per[:, :, 5] > 0, meta=info,
    )
