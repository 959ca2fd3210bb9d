"""Parametric stand-ins for the node data sources.

* a lagged-yield process simulator for the oil and diesel plants,
* a two-scenario hourly climate generator,
* a degree-day logistic crop-growth simulator driven by that climate,
* an economic diesel-demand signal.

Calendar convention: every simulated year has 365 days (8760 hours); years
run from ``start_year`` up to but not including ``end_year``.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, replace

import numpy as np
from scipy.signal import lfilter

from .training.dataset import Dataset
from .training.preprocessing import rolling_average

HOURS_PER_DAY = 24
DAYS_PER_YEAR = 365
HOURS_PER_YEAR = HOURS_PER_DAY * DAYS_PER_YEAR

SEASON_START_DOY = 140
SEASON_END_DOY = 270
SEASON_HOURS = (SEASON_END_DOY - SEASON_START_DOY + 1) * HOURS_PER_DAY

GROWTH_INPUTS = ("time_h", "precipitation_mm_h", "temperature_C", "humidity_proxy")
GROWTH_TARGET = "biomass_Mg_ha"


# -- plants --------------------------------------------------------------------


@dataclass
class PlantSpec:
    """A lagged linear-yield process with multiplicative noise.

    ``yield_matrix[k, j]`` is the mass fraction of input ``j`` that leaves
    through output ``k``; flows are in Mg/h.
    """

    name: str
    input_names: list[str]
    input_ranges: list[tuple[float, float]]
    output_names: list[str]
    yield_matrix: list[list[float]]
    lags: list[float]
    noise_std: float = 0.02
    hold_hours: tuple[int, int] = (6, 48)
    smoothing: int = 4

    def __post_init__(self):
        Y = np.asarray(self.yield_matrix, dtype=np.float64)
        if Y.shape != (len(self.output_names), len(self.input_names)):
            raise ValueError(f"{self.name}: yield matrix must be (outputs, inputs)")
        if np.any(Y < 0) or np.any(Y.sum(axis=0) > 1 + 1e-12):
            raise ValueError(f"{self.name}: yields must be nonnegative with column sums <= 1")
        if len(self.input_ranges) != len(self.input_names):
            raise ValueError(f"{self.name}: one (low, high) range per input")
        for lo, hi in self.input_ranges:
            if not 0 <= lo <= hi:
                raise ValueError(f"{self.name}: bad input range ({lo}, {hi})")
        if len(self.lags) != len(self.output_names) or min(self.lags) <= 0:
            raise ValueError(f"{self.name}: one positive lag per output")
        if not 0 <= self.noise_std <= 0.2:
            raise ValueError(f"{self.name}: noise_std must be in [0, 0.2]")
        if not 1 <= self.hold_hours[0] <= self.hold_hours[1]:
            raise ValueError(f"{self.name}: bad hold_hours")

    @property
    def Y(self) -> np.ndarray:
        return np.asarray(self.yield_matrix, dtype=np.float64)

    def to_dict(self) -> dict:
        return asdict(self)


def oil_plant_spec(**overrides) -> PlantSpec:
    """Soybean crushing and hexane extraction: (soybean, hexane) -> (oil, meal)."""
    spec = PlantSpec(
        name="oil_plant",
        input_names=["soybean_Mg_h", "hexane_Mg_h"],
        input_ranges=[(0.05, 0.45), (0.001, 0.01)],
        output_names=["oil_Mg_h", "meal_Mg_h"],
        yield_matrix=[[0.18, 0.01], [0.78, 0.02]],
        lags=[3.0, 2.0],
    )
    return replace(spec, **overrides)


def diesel_plant_spec(**overrides) -> PlantSpec:
    """Transesterification: (oil, water) -> (diesel, recycled oil)."""
    spec = PlantSpec(
        name="diesel_plant",
        input_names=["oil_Mg_h", "water_Mg_h"],
        input_ranges=[(0.005, 0.09), (0.001, 0.01)],
        output_names=["diesel_Mg_h", "oil_recycled_Mg_h"],
        yield_matrix=[[0.96, 0.02], [0.03, 0.01]],
        lags=[4.0, 4.0],
    )
    return replace(spec, **overrides)


def excitation(ranges, hours: int, rng: np.random.Generator, hold_hours=(6, 48), smoothing: int = 4) -> np.ndarray:
    """Band-limited random feed: held random levels, lightly smoothed, inside each range."""
    out = np.empty((hours, len(ranges)))
    for j, (lo, hi) in enumerate(ranges):
        t = 0
        while t < hours:
            n = int(rng.integers(hold_hours[0], hold_hours[1] + 1))
            out[t:t + n, j] = rng.uniform(lo, hi)
            t += n
    if smoothing > 1:
        out = rolling_average(out, min(smoothing, hours))
    return out


def simulate_plant(spec: PlantSpec, inputs, noise: np.ndarray | None = None, y0=None) -> np.ndarray:
    """Lagged response ``y += (1 - exp(-1/lag)) * (Y u - y)`` per hourly step.

    ``noise`` (same shape as the output) is applied multiplicatively to the
    observed output, not to the internal state.
    """
    U = np.atleast_2d(np.asarray(inputs, dtype=np.float64))
    target = U @ spec.Y.T
    alpha = 1.0 - np.exp(-1.0 / np.asarray(spec.lags, dtype=np.float64))
    y = np.zeros(len(spec.output_names)) if y0 is None else np.asarray(y0, dtype=np.float64).copy()
    out = np.empty_like(target)
    for t in range(len(U)):
        y = y + alpha * (target[t] - y)
        out[t] = y
    if noise is not None:
        out = out * (1.0 + noise)
    return out


def gen_plant_data(spec: PlantSpec, hours: int = 10_000, seed: int = 0) -> Dataset:
    """Hourly excitation/response records of a plant, one continuous segment."""
    if hours < 100:
        raise ValueError("hours must be >= 100")
    rng = np.random.default_rng(seed)
    U = excitation(spec.input_ranges, hours, rng, spec.hold_hours, spec.smoothing)
    noise = spec.noise_std * rng.standard_normal((hours, len(spec.output_names)))
    Y = simulate_plant(spec, U, noise)
    return Dataset([U], [Y], [np.arange(hours, dtype=np.float64)], list(spec.input_names),
                   list(spec.output_names), seasonal=False)


# -- climate -------------------------------------------------------------------


@dataclass
class ClimateScenarioSpec:
    """Hourly temperature (°C) and precipitation (mm/h) generator settings.

    Temperature is an annual sinusoid plus a diurnal cycle, a linear warming
    trend and AR(1) weather noise scaled by ``variability``. Precipitation
    falls in daily events whose probability follows a seasonal profile.
    Heat waves and dry spells start on a day with a probability that grows
    geometrically per decade.
    """

    name: str = "custom"
    temp_mean: float = 11.0
    temp_amplitude: float = 14.0
    temp_peak_doy: float = 200.0
    diurnal_amplitude: float = 5.0
    trend_per_decade: float = 0.0
    noise_std: float = 2.0
    ar_coef: float = 0.95
    variability: float = 1.0
    precip_mean: float = 0.11
    precip_seasonal_amplitude: float = 0.3
    wet_day_probability: float = 0.3
    heatwave_rate: float = 0.01
    heatwave_anomaly: float = 6.0
    heatwave_days: int = 5
    dry_spell_rate: float = 0.004
    dry_spell_days: int = 15
    extreme_growth_per_decade: float = 0.0
    start_year: int = 2006
    end_year: int = 2096
    seed: int = 0

    def __post_init__(self):
        if self.end_year - self.start_year < 1:
            raise ValueError("horizon must span at least one year")
        if self.variability < 0 or self.noise_std < 0 or self.precip_mean < 0:
            raise ValueError("variability, noise_std and precip_mean must be nonnegative")
        if not 0 <= self.ar_coef < 1:
            raise ValueError("ar_coef must be in [0, 1)")
        if not 0 <= self.wet_day_probability <= 1:
            raise ValueError("wet_day_probability must be in [0, 1]")

    @property
    def n_years(self) -> int:
        return self.end_year - self.start_year

    def to_dict(self) -> dict:
        return asdict(self)


CLIMATE_PRESETS = {
    "rcp45": dict(name="rcp45", trend_per_decade=0.25, variability=1.0, extreme_growth_per_decade=0.05),
    "rcp85": dict(name="rcp85", trend_per_decade=0.5, variability=1.2, extreme_growth_per_decade=0.15),
}


def climate_preset(name: str, **overrides) -> ClimateScenarioSpec:
    """``rcp45``-like or ``rcp85``-like scenario; any field may be overridden."""
    key = name.lower().replace(".", "").replace("-like", "").replace("_like", "")
    if key not in CLIMATE_PRESETS:
        raise KeyError(f"unknown climate preset {name!r}; choose from {sorted(CLIMATE_PRESETS)}")
    return ClimateScenarioSpec(**{**CLIMATE_PRESETS[key], **overrides})


@dataclass
class ClimateSeries:
    """Hourly climate over whole years; ``t_hours`` counts from Jan 1 of ``start_year``."""

    temperature: np.ndarray
    precipitation: np.ndarray
    start_year: int
    scenario: str = "custom"

    @property
    def n_years(self) -> int:
        return len(self.temperature) // HOURS_PER_YEAR

    @property
    def years(self) -> np.ndarray:
        return self.start_year + np.arange(self.n_years)

    @property
    def t_hours(self) -> np.ndarray:
        return np.arange(len(self.temperature), dtype=np.float64)

    def year_slice(self, year: int) -> slice:
        k = year - self.start_year
        if not 0 <= k < self.n_years:
            raise IndexError(f"year {year} outside climate horizon")
        return slice(k * HOURS_PER_YEAR, (k + 1) * HOURS_PER_YEAR)

    def season_slice(self, year: int) -> slice:
        s = self.year_slice(year).start
        return slice(s + (SEASON_START_DOY - 1) * HOURS_PER_DAY, s + SEASON_END_DOY * HOURS_PER_DAY)

    def to_dataset(self) -> Dataset:
        X = np.column_stack([self.temperature, self.precipitation])
        return Dataset([X], [X[:, :0]], [self.t_hours], ["temperature_C", "precipitation_mm_h"], [], seasonal=False)


def ar1(innovations, coef: float, x0: float = 0.0) -> np.ndarray:
    """``x[k] = coef * x[k-1] + innovations[k]`` with ``x[-1] = x0``."""
    out, _ = lfilter([1.0], [1.0, -coef], innovations, zi=[coef * x0])
    return out


def _seasonal_phase(doy):
    return np.cos(2 * np.pi * (doy - 1) / DAYS_PER_YEAR)


def gen_climate(spec: ClimateScenarioSpec) -> ClimateSeries:
    """Deterministic hourly climate for ``spec``.

    Every random component draws from its own child stream of ``spec.seed``
    and event occurrence compares a shared uniform draw per day against the
    event rate. Two specs with the same seed therefore see the same weather
    noise, and a spec with higher event rates sees a superset of the events
    of the milder one.
    """
    n_years = spec.n_years
    n_days = n_years * DAYS_PER_YEAR
    n = n_days * HOURS_PER_DAY
    noise_rng, wet_rng, amount_rng, hour_rng, heat_rng, dry_rng = (
        np.random.default_rng(s) for s in np.random.SeedSequence(spec.seed).spawn(6)
    )

    h = np.arange(n)
    day = h // HOURS_PER_DAY
    doy = day % DAYS_PER_YEAR + 1
    hod = h % HOURS_PER_DAY
    decades = (h / HOURS_PER_YEAR) / 10.0

    seasonal = spec.temp_amplitude * np.cos(2 * np.pi * (doy - spec.temp_peak_doy) / DAYS_PER_YEAR)
    diurnal = spec.diurnal_amplitude * np.cos(2 * np.pi * (hod - 15) / HOURS_PER_DAY)
    temp = spec.temp_mean + seasonal + diurnal + spec.trend_per_decade * decades

    # AR(1) weather noise with stationary std = noise_std * variability
    eps = noise_rng.standard_normal(n) * np.sqrt(1 - spec.ar_coef**2)
    ar = ar1(eps, spec.ar_coef, x0=noise_rng.standard_normal())
    temp += spec.noise_std * spec.variability * ar

    day_decades = (np.arange(n_days) / DAYS_PER_YEAR) / 10.0
    extreme_scale = (1.0 + spec.extreme_growth_per_decade) ** day_decades
    day_doy = np.arange(n_days) % DAYS_PER_YEAR + 1
    summer = (day_doy >= 150) & (day_doy <= 250)

    heat_start = (heat_rng.random(n_days) < spec.heatwave_rate * extreme_scale) & summer
    heat_days = _spread(heat_start, spec.heatwave_days)
    temp += np.repeat(heat_days, HOURS_PER_DAY) * spec.heatwave_anomaly * spec.variability

    dry_start = dry_rng.random(n_days) < spec.dry_spell_rate * extreme_scale
    dry_days = _spread(dry_start, spec.dry_spell_days)

    wet_p = np.clip(spec.wet_day_probability * (1 + spec.precip_seasonal_amplitude * -_seasonal_phase(day_doy)), 0, 1)
    wet = (wet_rng.random(n_days) < wet_p) & ~dry_days
    # mean daily total per wet day so that the long-run hourly mean is precip_mean
    mean_event = spec.precip_mean * HOURS_PER_DAY / max(spec.wet_day_probability, 1e-12)
    amounts = amount_rng.exponential(mean_event, n_days)
    durations = hour_rng.integers(2, 9, n_days)
    starts = hour_rng.integers(0, HOURS_PER_DAY, n_days)
    precip = np.zeros(n + HOURS_PER_DAY)
    for d in np.flatnonzero(wet):
        k = d * HOURS_PER_DAY + starts[d]
        precip[k:k + durations[d]] += amounts[d] / durations[d]
    precip = precip[:n]
    return ClimateSeries(temp, np.clip(precip, 0.0, None), spec.start_year, spec.name)


def _spread(starts: np.ndarray, length: int) -> np.ndarray:
    """Mark ``length`` days from every start day."""
    out = np.zeros(len(starts), dtype=bool)
    for d in np.flatnonzero(starts):
        out[d:d + length] = True
    return out


# -- crop growth ---------------------------------------------------------------


@dataclass
class GrowthSpec:
    """Degree-day logistic growth with water and heat penalties on carrying capacity."""

    carrying_capacity: float = 3.5
    gdd_base: float = 10.0
    gdd_cap: float = 30.0
    gdd_maturity: float = 1400.0
    steepness: float = 10.0
    soil_capacity: float = 150.0
    soil_critical_fraction: float = 0.5
    et_coefficient: float = 0.1
    water_penalty: float = 0.5
    heat_threshold: float = 35.0
    heat_penalty: float = 0.0004
    humidity_noise: float = 0.1

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class GrowthData:
    """Per-season growth records and yearly harvests."""

    dataset: Dataset
    years: np.ndarray
    harvest_Mg: np.ndarray
    farm_ha: float
    yield_Mg_ha: np.ndarray = field(default=None)


def logistic_progress(p, steepness: float = 10.0):
    """Logistic shape on [0, 1] rescaled so that 0 -> 0 and 1 -> 1 exactly."""
    p = np.asarray(p, dtype=np.float64)
    lo = 1.0 / (1.0 + np.exp(steepness * 0.5))
    hi = 1.0 / (1.0 + np.exp(-steepness * 0.5))
    out = (1.0 / (1.0 + np.exp(-steepness * (p - 0.5))) - lo) / (hi - lo)
    return np.where(p >= 1.0, 1.0, np.where(p <= 0.0, 0.0, out))


def season_biomass(temperature, precipitation, spec: GrowthSpec | None = None) -> np.ndarray:
    """Hourly biomass (Mg/ha) over one growing season.

    ``B(t) = K(t) g(p(t))`` where ``p`` is growing-degree-day progress to
    maturity and ``K`` is the carrying capacity reduced by cumulative water
    stress (soil bucket below its critical level) and cumulative hours above
    the heat threshold. Both penalties only accumulate, so more stress never
    raises the yield.
    """
    spec = spec or GrowthSpec()
    T = np.asarray(temperature, dtype=np.float64)
    P = np.asarray(precipitation, dtype=np.float64)
    gdd = np.cumsum(np.clip(T, spec.gdd_base, spec.gdd_cap) - spec.gdd_base) / HOURS_PER_DAY
    progress = np.minimum(gdd / spec.gdd_maturity, 1.0)

    et = spec.et_coefficient * np.maximum(T - 5.0, 0.0) / 20.0
    w = spec.soil_capacity
    critical = spec.soil_critical_fraction * spec.soil_capacity
    deficit = np.empty(len(T))
    for k in range(len(T)):
        w = min(max(w + P[k] - et[k], 0.0), spec.soil_capacity)
        deficit[k] = max(0.0, 1.0 - w / critical)
    water_stress = np.cumsum(deficit) / SEASON_HOURS
    heat_hours = np.cumsum(T > spec.heat_threshold)

    K = spec.carrying_capacity * np.exp(-spec.water_penalty * water_stress - spec.heat_penalty * heat_hours)
    return K * logistic_progress(progress, spec.steepness)


def humidity_proxy(temperature, precipitation, rng: np.random.Generator, noise: float = 0.1) -> np.ndarray:
    """A plausible but yield-irrelevant moisture index (smoothed rain, cooled by heat, plus noise)."""
    T = np.asarray(temperature, dtype=np.float64)
    wet = rolling_average(np.asarray(precipitation, dtype=np.float64), min(48, len(T)))
    return 0.6 + 2.0 * wet - 0.01 * (T - 20.0) + noise * rng.standard_normal(len(T))


def gen_growth_data(climate: ClimateSeries, farm_ha: float = 500.0, seed: int = 0,
                    spec: GrowthSpec | None = None) -> GrowthData:
    """One hourly segment per growing season plus the harvest of each year.

    Inputs are hours since sowing, precipitation, temperature and a humidity
    proxy that the biomass does not depend on. The target is biomass per
    hectare; harvest is end-of-season biomass times ``farm_ha``.
    """
    if farm_ha <= 0:
        raise ValueError("farm_ha must be positive")
    if len(climate.temperature) % HOURS_PER_YEAR:
        raise ValueError("climate must cover whole years")
    spec = spec or GrowthSpec()
    rng = np.random.default_rng(seed)
    inputs, targets, times = [], [], []
    yields = []
    for year in climate.years:
        sl = climate.season_slice(int(year))
        T, P = climate.temperature[sl], climate.precipitation[sl]
        B = season_biomass(T, P, spec)
        hum = humidity_proxy(T, P, rng, spec.humidity_noise)
        inputs.append(np.column_stack([np.arange(len(T), dtype=np.float64), P, T, hum]))
        targets.append(B[:, None])
        times.append(np.arange(sl.start, sl.stop, dtype=np.float64))
        yields.append(B[-1])
    ds = Dataset(inputs, targets, times, list(GROWTH_INPUTS), [GROWTH_TARGET], seasonal=True,
                 segment_ids=[int(y) for y in climate.years])
    yields = np.asarray(yields)
    return GrowthData(ds, climate.years.copy(), yields * farm_ha, float(farm_ha), yields)


# -- demand --------------------------------------------------------------------


@dataclass
class DemandSpec:
    """Hourly diesel demand (Mg/h): geometric growth, annual cycle, AR(1) noise."""

    base: float = 0.0296
    growth_rate: float = 0.0015
    seasonal_amplitude: float = 0.1
    peak_doy: float = 180.0
    noise_std: float = 0.001
    noise_ar: float = 0.9
    seed: int = 0

    def __post_init__(self):
        if not self.base > 0:
            raise ValueError("base demand must be positive")
        if not 0 <= self.noise_ar < 1:
            raise ValueError("noise_ar must be in [0, 1)")

    def to_dict(self) -> dict:
        return asdict(self)


def gen_demand(spec: DemandSpec, years: int) -> np.ndarray:
    """``base (1+g)^year (1 + a sin) + noise`` per hour, clipped at zero."""
    if years < 1:
        raise ValueError("years must be >= 1")
    n = years * HOURS_PER_YEAR
    h = np.arange(n)
    year = h // HOURS_PER_YEAR
    phase = 2 * np.pi * (h % HOURS_PER_YEAR) / HOURS_PER_YEAR - 2 * np.pi * (spec.peak_doy - 1) / DAYS_PER_YEAR
    d = spec.base * (1.0 + spec.growth_rate) ** year * (1.0 + spec.seasonal_amplitude * np.cos(phase))
    if spec.noise_std > 0:
        rng = np.random.default_rng(spec.seed)
        eps = rng.standard_normal(n) * np.sqrt(1 - spec.noise_ar**2)
        d = d + spec.noise_std * ar1(eps, spec.noise_ar)
    return np.clip(d, 0.0, None)
