"""The gen-data -> train -> simulate -> assess -> plot pipeline.

Each stage reads only the files written by earlier stages under the run's
output directory::

    data/      plant, climate, growth and demand CSVs with JSON sidecars
    models/    serialized surrogates and controllers, loss histories, metrics.json
    traces/    one directory per (preset, farm size) simulation
    reports/   resilience reports (JSON and text)
    plots/     SVG figures
"""

from __future__ import annotations

import csv
import json
import logging
from pathlib import Path

import numpy as np

from .config import ScenarioConfig, dump_config
from .coupling import EcosystemGraph, controller_cascade, predict_yields, read_trace, simulate_horizon, write_trace
from .exceptions import IoError, MissingDataset, SchemaMismatch, UntrainedModels
from .synth import (
    HOURS_PER_YEAR,
    ClimateSeries,
    DemandSpec,
    climate_preset,
    diesel_plant_spec,
    gen_climate,
    gen_demand,
    gen_growth_data,
    gen_plant_data,
    GrowthSpec,
    oil_plant_spec,
)
from .training import (
    LtcController,
    LtcRegressor,
    TrainConfig,
    hidden_size_search,
    load_model,
    read_dataset_csv,
    rmse,
    save_model,
    split_dataset,
    write_dataset_csv,
)

log = logging.getLogger(__name__)

PLANTS = {"oil_plant": oil_plant_spec, "diesel_plant": diesel_plant_spec}
CONTROLLERS = {"oil_controller": "oil_plant", "diesel_controller": "diesel_plant"}


def _dirs(out) -> dict:
    root = Path(out)
    return {k: root / k for k in ("data", "models", "traces", "reports", "plots")} | {"root": root}


def _ensure(path: Path) -> Path:
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoError(f"cannot create {path}: {exc}") from exc
    return path


def _write_json(path: Path, doc) -> Path:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def run_name(preset: str, farm_ha: float) -> str:
    return f"{preset}_{float(farm_ha):g}ha"


# -- series files --------------------------------------------------------------


def write_series_csv(path: Path, columns: dict, meta: dict) -> Path:
    """Uniform hourly multichannel series, first column ``t_hours``."""
    names = list(columns)
    n = len(next(iter(columns.values())))
    table = np.column_stack([np.arange(n, dtype=np.float64)] + [np.asarray(columns[k], dtype=np.float64) for k in names])
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(["t_hours"] + names) + "\n")
        np.savetxt(fh, table, fmt="%.17g", delimiter=",")
    _write_json(path.with_name(path.name + ".meta.json"), {**meta, "channels": names})
    return path


def read_series_csv(path: Path, names) -> tuple[dict, dict]:
    path = Path(path)
    if not path.exists():
        raise MissingDataset(f"dataset not found: {path}")
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
    missing = [n for n in names if n not in header]
    if header[0] != "t_hours" or missing:
        raise SchemaMismatch(f"{path}: missing columns {missing}")
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    sidecar = path.with_name(path.name + ".meta.json")
    meta = json.loads(sidecar.read_text(encoding="utf-8")) if sidecar.exists() else {}
    return {n: data[:, header.index(n)] for n in names}, meta


def load_climate(out, preset: str) -> ClimateSeries:
    cols, meta = read_series_csv(_dirs(out)["data"] / f"climate_{preset}.csv", ["temperature_C", "precipitation_mm_h"])
    return ClimateSeries(cols["temperature_C"], cols["precipitation_mm_h"], int(meta["start_year"]), preset)


def load_demand(out) -> tuple[np.ndarray, dict]:
    cols, meta = read_series_csv(_dirs(out)["data"] / "demand.csv", ["diesel_demand_Mg_h"])
    return cols["diesel_demand_Mg_h"], meta


# -- gen-data ------------------------------------------------------------------


def climate_spec(cfg: ScenarioConfig, preset: str):
    overrides = dict(cfg.climate_overrides.get(preset, {}))
    return climate_preset(preset, start_year=cfg.start_year, end_year=cfg.end_year, seed=cfg.seeds.data, **overrides)


def gen_data(cfg: ScenarioConfig, out=None) -> list[Path]:
    """Write plant, climate, growth and demand datasets."""
    d = _dirs(out or cfg.output_dir)
    _ensure(d["data"])
    dump_config(cfg, d["root"] / "config.resolved.yaml")
    written = []
    for k, (name, make) in enumerate(PLANTS.items()):
        spec = make()
        ds = gen_plant_data(spec, cfg.plant_hours, seed=cfg.seeds.data + 101 * (k + 1))
        written.append(write_dataset_csv(ds, d["data"] / f"{name}.csv", {"spec": spec.to_dict(), "kind": "plant"}))
    growth_spec = GrowthSpec(**cfg.growth_overrides)
    for preset in cfg.presets:
        spec = climate_spec(cfg, preset)
        climate = gen_climate(spec)
        written.append(write_series_csv(
            d["data"] / f"climate_{preset}.csv",
            {"temperature_C": climate.temperature, "precipitation_mm_h": climate.precipitation},
            {"kind": "climate", "start_year": cfg.start_year, "end_year": cfg.end_year, "spec": spec.to_dict()},
        ))
        growth = gen_growth_data(climate, cfg.growth_data_farm_ha, seed=cfg.seeds.data, spec=growth_spec)
        written.append(write_dataset_csv(growth.dataset, d["data"] / f"growth_{preset}.csv", {
            "kind": "growth", "scenario": preset, "farm_ha": growth.farm_ha, "spec": growth_spec.to_dict(),
            "harvest_Mg": growth.harvest_Mg.tolist(), "years": growth.years.tolist(),
        }))
    demand_spec = DemandSpec(seed=cfg.seeds.data, **vars(cfg.demand))
    demand = gen_demand(demand_spec, cfg.n_years)
    written.append(write_series_csv(d["data"] / "demand.csv", {"diesel_demand_Mg_h": demand},
                                    {"kind": "demand", "start_year": cfg.start_year, "spec": demand_spec.to_dict()}))
    return written


# -- train ---------------------------------------------------------------------


def _train_config(node, seed: int) -> TrainConfig:
    return TrainConfig(epochs=node.epochs, learning_rate=node.learning_rate, bptt_window=node.bptt_window,
                       batch=node.batch, seed=seed, early_stop_epoch=node.early_stop_epoch)


def _regressor(node, n_hidden: int, seed: int) -> LtcRegressor:
    return LtcRegressor(n_hidden=n_hidden, normalization=node.normalization, epochs=node.epochs,
                        learning_rate=node.learning_rate, bptt_window=node.bptt_window, batch=node.batch, seed=seed,
                        early_stop_epoch=node.early_stop_epoch, validation_fraction=node.validation_fraction)


def chain_tracking_rmse(ctrl: LtcController, plant: LtcRegressor, desired: np.ndarray) -> float:
    """Normalized RMSE of plant(controller(desired)) against the desired main channel."""
    feed = np.clip(ctrl.predict(desired), 0.0, None)
    out = plant.predict(feed)
    k = list(ctrl.controlled)[0]
    err = (out[:, k] - desired[:, k]) / plant.output_normalizer_.scale_[k]
    return float(np.sqrt(np.mean(err * err)))


def cascade_tracking_rmse(models: dict, demand: np.ndarray) -> float:
    """Normalized RMSE of the full open-loop chain against a diesel demand series."""
    plan = controller_cascade(demand, models["oil_controller"], models["diesel_controller"])
    oil = np.clip(models["oil_plant"].predict(np.column_stack([plan.soybean, plan.hexane]))[:, 0], 0.0, None)
    diesel = models["diesel_plant"].predict(np.column_stack([oil, plan.water]))[:, 0]
    err = (diesel - demand) / models["diesel_plant"].output_normalizer_.scale_[0]
    return float(np.sqrt(np.mean(err * err)))


def train(cfg: ScenarioConfig, out=None) -> dict:
    """Train plants, controllers through the frozen plants, and one growth model per preset."""
    d = _dirs(out or cfg.output_dir)
    _ensure(d["models"])
    seed = cfg.seeds.training
    metrics = {"test_rmse": {}, "hidden": {}}
    models = {}

    for name in PLANTS:
        node = getattr(cfg, name)
        ds = read_dataset_csv(d["data"] / f"{name}.csv")
        tr, te = split_dataset(ds, cfg.train_fraction)
        h = node.n_hidden
        if h == "auto":
            s = cfg.search
            search_cfg = TrainConfig(epochs=s.epochs, learning_rate=node.learning_rate, bptt_window=node.bptt_window,
                                     batch=node.batch, seed=seed)
            h = hidden_size_search(tr, search_cfg, s.h_start, s.h_step, s.h_max, node.normalization,
                                   node.validation_fraction)
        model = _regressor(node, int(h), seed).fit(tr)
        models[name] = model
        save_model(model, d["models"] / f"{name}.json")
        metrics["hidden"][name] = int(h)
        metrics["test_rmse"][name] = rmse(model, te).tolist()
        log.info("%s: hidden=%d test rmse=%s", name, h, metrics["test_rmse"][name])

    for name, plant_name in CONTROLLERS.items():
        node = getattr(cfg, name)
        plant = models[plant_name]
        ds = read_dataset_csv(d["data"] / f"{plant_name}.csv")
        tr, te = split_dataset(ds, cfg.train_fraction)
        ctrl = LtcController(plant=plant, n_hidden=int(node.n_hidden), controlled=(0,), epochs=node.epochs,
                             learning_rate=node.learning_rate, bptt_window=node.bptt_window, batch=node.batch,
                             seed=seed, early_stop_epoch=node.early_stop_epoch,
                             validation_fraction=node.validation_fraction).fit(tr.targets)
        models[name] = ctrl
        save_model(ctrl, d["models"] / f"{name}.json")
        metrics["hidden"][name] = int(node.n_hidden)
        metrics["test_rmse"][name] = [chain_tracking_rmse(ctrl, plant, te.targets[0])]

    demand, _ = load_demand(d["root"])
    n_test = int(round((1 - cfg.train_fraction) * len(demand)))
    metrics["cascade_tracking_rmse"] = cascade_tracking_rmse(models, demand[len(demand) - n_test:])

    for preset in cfg.presets:
        ds = read_dataset_csv(d["data"] / f"growth_{preset}.csv", input_names=cfg.growth_inputs)
        tr, te = split_dataset(ds, cfg.train_fraction)
        model = _regressor(cfg.growth, int(cfg.growth.n_hidden), seed).fit(tr)
        save_model(model, d["models"] / f"growth_{preset}.json")
        metrics["hidden"][f"growth_{preset}"] = int(cfg.growth.n_hidden)
        metrics["test_rmse"][f"growth_{preset}"] = rmse(model, te).tolist()

    _write_json(d["models"] / "metrics.json", metrics)
    return metrics


def load_models(out, preset: str) -> dict:
    mdir = _dirs(out)["models"]
    names = ["oil_plant", "diesel_plant", "oil_controller", "diesel_controller", f"growth_{preset}"]
    missing = [n for n in names if not (mdir / f"{n}.json").exists()]
    if missing:
        raise UntrainedModels(f"missing trained models {missing} in {mdir}")
    models = {n: load_model(mdir / f"{n}.json") for n in names}
    models["growth"] = models.pop(f"growth_{preset}")
    return models


# -- simulate / sweep ----------------------------------------------------------


def simulate(cfg: ScenarioConfig, out=None, presets=None, farm_sizes=None) -> list[Path]:
    """Simulate every (preset, farm size) pair; returns the trace directories."""
    d = _dirs(out or cfg.output_dir)
    _ensure(d["traces"])
    demand, _ = load_demand(d["root"])
    written = []
    for preset in presets or cfg.presets:
        models = load_models(d["root"], preset)
        graph = EcosystemGraph(models["growth"], models["oil_plant"], models["diesel_plant"],
                               models["oil_controller"], models["diesel_controller"],
                               humidity_seed=cfg.seeds.simulation)
        climate = load_climate(d["root"], preset)
        years = np.arange(cfg.start_year, cfg.end_year)
        yields = predict_yields(graph.growth, climate, years, graph.humidity_seed)
        plan = controller_cascade(demand[:cfg.n_years * HOURS_PER_YEAR], graph.oil_controller, graph.diesel_controller)
        for farm in farm_sizes or cfg.farm_sizes:
            trace = simulate_horizon(graph, climate, demand, farm, cfg.start_year, cfg.end_year,
                                     yields_per_ha=yields, plan=plan,
                                     meta={"preset": preset, "seeds": vars(cfg.seeds)})
            target = d["traces"] / run_name(preset, farm)
            write_trace(trace, target)
            written.append(target)
    return written


COMPARISON_COLUMNS = ("preset", "farm_ha", "first_failure_year", "failures_total", "waste_cum_Mg", "import_cum_Mg",
                      "import_events", "final_stock_Mg")


def comparison_rows(traces) -> list[dict]:
    rows = []
    for tr in traces:
        rows.append({
            "preset": tr.meta.get("preset", tr.meta.get("climate_scenario", "")),
            "farm_ha": tr.farm_ha,
            "first_failure_year": tr.first_failure_year,
            "failures_total": int(tr.failures.sum()),
            "waste_cum_Mg": float(tr.waste_increment.sum()),
            "import_cum_Mg": tr.total_imports,
            "import_events": int((tr.period_shortfall > 0).sum()),
            "final_stock_Mg": float(tr.stock_level[-1]),
        })
    return sorted(rows, key=lambda r: (r["preset"], r["farm_ha"]))


def write_comparison(rows, path: Path) -> Path:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(COMPARISON_COLUMNS)
        for r in rows:
            writer.writerow(["" if r[c] is None else (repr(r[c]) if isinstance(r[c], float) else r[c])
                             for c in COMPARISON_COLUMNS])
    return path


def sweep(cfg: ScenarioConfig, out=None) -> tuple[list[Path], Path]:
    """Simulate the full farm x preset grid and merge a comparison table."""
    d = _dirs(out or cfg.output_dir)
    dirs = simulate(cfg, d["root"])
    rows = comparison_rows([read_trace(p) for p in dirs])
    return dirs, write_comparison(rows, d["root"] / "comparison.csv")


def trace_dirs(out) -> list[Path]:
    tdir = _dirs(out)["traces"]
    found = sorted(p for p in tdir.glob("*") if (p / "trace.meta.json").exists()) if tdir.exists() else []
    if not found:
        raise MissingDataset(f"no traces under {tdir}")
    return found
