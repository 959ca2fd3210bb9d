"""Scenario configuration: a YAML document mapped onto dataclasses.

Every field has a default that encodes the case study (three farm sizes,
two climate presets, 2006 up to 2096), so an empty file is a valid config.
``--set key.sub=value`` overrides are applied to the parsed mapping before
validation; values are parsed as YAML scalars.
"""

from __future__ import annotations

import copy
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import yaml

from .exceptions import IoError, SchemaMismatch
from .synth import CLIMATE_PRESETS


@dataclass
class NodeConfig:
    """Architecture and training budget of one LTC node model.

    ``n_hidden`` may be ``"auto"`` to run the hidden-size search first.
    """

    n_hidden: int | str = 16
    epochs: int = 125
    learning_rate: float = 0.01
    bptt_window: int | None = 64
    batch: int = 16
    early_stop_epoch: int | None = None
    normalization: str = "zscore"
    validation_fraction: float = 0.1


def _growth_default():
    return NodeConfig(n_hidden=20, epochs=200, bptt_window=None, batch=8)


def _oil_plant_default():
    return NodeConfig(n_hidden="auto")


def _diesel_plant_default():
    return NodeConfig(n_hidden="auto")


def _oil_ctrl_default():
    return NodeConfig(n_hidden=8)


def _diesel_ctrl_default():
    return NodeConfig(n_hidden=12)


@dataclass
class SearchConfig:
    h_start: int = 4
    h_step: int = 4
    h_max: int = 64
    epochs: int = 40


@dataclass
class SeedConfig:
    data: int = 0
    training: int = 0
    simulation: int = 0


@dataclass
class DemandConfig:
    base: float = 0.0296
    growth_rate: float = 0.0015
    seasonal_amplitude: float = 0.1
    peak_doy: float = 180.0
    noise_std: float = 0.001
    noise_ar: float = 0.9


@dataclass
class ThresholdConfig:
    """Explicit bounds in Mg, or ``None`` to derive them from the mean annual soybean requirement."""

    min_Mg: float | None = None
    max_Mg: float | None = None
    min_fraction: float = 0.1
    max_fraction: float = 3.0
    persistence_years: int = 3
    plateau_eps: float = 0.01


@dataclass
class ScenarioConfig:
    output_dir: str = "runs/default"
    start_year: int = 2006
    end_year: int = 2096
    farm_sizes: list[float] = field(default_factory=lambda: [450.0, 500.0, 550.0])
    presets: list[str] = field(default_factory=lambda: ["rcp45", "rcp85"])
    climate_overrides: dict = field(default_factory=dict)
    growth_overrides: dict = field(default_factory=dict)
    plant_hours: int = 10_000
    train_fraction: float = 0.8
    growth_inputs: list[str] = field(default_factory=lambda: ["time_h", "precipitation_mm_h", "temperature_C"])
    growth_data_farm_ha: float = 500.0
    seeds: SeedConfig = field(default_factory=SeedConfig)
    demand: DemandConfig = field(default_factory=DemandConfig)
    growth: NodeConfig = field(default_factory=_growth_default)
    oil_plant: NodeConfig = field(default_factory=_oil_plant_default)
    diesel_plant: NodeConfig = field(default_factory=_diesel_plant_default)
    oil_controller: NodeConfig = field(default_factory=_oil_ctrl_default)
    diesel_controller: NodeConfig = field(default_factory=_diesel_ctrl_default)
    search: SearchConfig = field(default_factory=SearchConfig)
    thresholds: ThresholdConfig = field(default_factory=ThresholdConfig)

    def __post_init__(self):
        if self.end_year - self.start_year < 1:
            raise SchemaMismatch("horizon must span at least one year")
        if not self.farm_sizes or any(not float(a) > 0 for a in self.farm_sizes):
            raise SchemaMismatch("farm sizes must be positive")
        self.farm_sizes = [float(a) for a in self.farm_sizes]
        unknown = [p for p in self.presets if p not in CLIMATE_PRESETS]
        if unknown or not self.presets:
            raise SchemaMismatch(f"unknown climate presets {unknown}; available {sorted(CLIMATE_PRESETS)}")
        if self.plant_hours < 100:
            raise SchemaMismatch("plant_hours must be >= 100")

    @property
    def n_years(self) -> int:
        return self.end_year - self.start_year

    def to_dict(self) -> dict:
        return asdict(self)


_NESTED = {
    "seeds": SeedConfig,
    "demand": DemandConfig,
    "growth": NodeConfig,
    "oil_plant": NodeConfig,
    "diesel_plant": NodeConfig,
    "oil_controller": NodeConfig,
    "diesel_controller": NodeConfig,
    "search": SearchConfig,
    "thresholds": ThresholdConfig,
}


def _build(cls, data: dict, where: str):
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise SchemaMismatch(f"{where or 'config'} must be a mapping")
    names = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        raise SchemaMismatch(f"unknown config keys {unknown} in {where or 'top level'}")
    return data


def from_dict(data: dict | None) -> ScenarioConfig:
    data = copy.deepcopy(_build(ScenarioConfig, data or {}, ""))
    defaults = ScenarioConfig()
    kwargs = {}
    for key, value in data.items():
        if key in _NESTED:
            base = asdict(getattr(defaults, key))
            base.update(_build(_NESTED[key], value, key))
            kwargs[key] = _NESTED[key](**base)
        else:
            kwargs[key] = value
    try:
        return ScenarioConfig(**kwargs)
    except TypeError as exc:
        raise SchemaMismatch(str(exc)) from exc


def parse_override(item: str) -> tuple[list[str], object]:
    if "=" not in item:
        raise SchemaMismatch(f"override {item!r} is not key=value")
    key, raw = item.split("=", 1)
    return key.strip().split("."), yaml.safe_load(raw)


def apply_overrides(data: dict, overrides) -> dict:
    data = copy.deepcopy(data or {})
    for item in overrides or []:
        path, value = parse_override(item)
        node = data
        for part in path[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise SchemaMismatch(f"override {item!r} descends into a scalar")
        node[path[-1]] = value
    return data


def load_config(path=None, overrides=None) -> ScenarioConfig:
    data = {}
    if path is not None:
        path = Path(path)
        if not path.exists():
            raise IoError(f"config file not found: {path}")
        data = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
    return from_dict(apply_overrides(data, overrides))


def dump_config(cfg: ScenarioConfig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(yaml.safe_dump(cfg.to_dict(), sort_keys=True), encoding="utf-8")
    return path
