import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ecoltc.synth import (
    HOURS_PER_YEAR,
    SEASON_HOURS,
    ClimateScenarioSpec,
    ClimateSeries,
    DemandSpec,
    GrowthSpec,
    PlantSpec,
    climate_preset,
    diesel_plant_spec,
    gen_climate,
    gen_demand,
    gen_growth_data,
    gen_plant_data,
    logistic_progress,
    oil_plant_spec,
    season_biomass,
    simulate_plant,
)

# -- plants ----------------------------------------------------------------------


def test_plant_spec_invariants():
    with pytest.raises(ValueError):
        oil_plant_spec(yield_matrix=[[0.6, 0.0], [0.6, 0.0]])
    with pytest.raises(ValueError):
        oil_plant_spec(lags=[0.0, 1.0])
    with pytest.raises(ValueError):
        oil_plant_spec(noise_std=0.3)
    assert np.all(oil_plant_spec().Y.sum(axis=0) <= 1)
    assert np.all(diesel_plant_spec().Y.sum(axis=0) <= 1)


def test_oil_steady_state():
    spec = oil_plant_spec(lags=[2.0, 2.0], noise_std=0.0)
    U = np.column_stack([np.full(200, 10.0), np.zeros(200)])
    out = simulate_plant(spec, U)
    assert out[-1, 0] == pytest.approx(1.8, rel=1e-12)
    assert out[-1, 1] == pytest.approx(7.8, rel=1e-12)
    # first-order lag: the gap shrinks by exp(-1/lag) per hour
    assert out[0, 0] == pytest.approx(1.8 * (1 - np.exp(-0.5)), rel=1e-12)


def test_zero_input_zero_output():
    spec = oil_plant_spec(noise_std=0.0)
    assert np.all(simulate_plant(spec, np.zeros((50, 2))) == 0)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_plant_cumulative_mass_balance(seed):
    rng = np.random.default_rng(seed)
    for spec in (oil_plant_spec(noise_std=0.0), diesel_plant_spec(noise_std=0.0)):
        U = rng.uniform(0, 1, size=(300, 2)) * (rng.random((300, 1)) < 0.7)
        out = simulate_plant(spec, U)
        cum_in = np.cumsum(U.sum(axis=1))
        cum_out = np.cumsum(out.sum(axis=1))
        assert np.all(cum_out <= cum_in + 1e-12)


def test_plant_data_shape_ranges_and_determinism():
    spec = oil_plant_spec()
    a = gen_plant_data(spec, hours=500, seed=3)
    b = gen_plant_data(spec, hours=500, seed=3)
    assert a.n_samples == 500 and a.input_names == spec.input_names
    np.testing.assert_array_equal(a.inputs[0], b.inputs[0])
    np.testing.assert_array_equal(a.targets[0], b.targets[0])
    for j, (lo, hi) in enumerate(spec.input_ranges):
        assert a.inputs[0][:, j].min() >= lo - 1e-15 and a.inputs[0][:, j].max() <= hi + 1e-15
    assert not np.array_equal(a.inputs[0], gen_plant_data(spec, hours=500, seed=4).inputs[0])
    with pytest.raises(ValueError):
        gen_plant_data(spec, hours=99)


def test_custom_plant_spec():
    spec = PlantSpec("p", ["a"], [(0.0, 1.0)], ["b"], [[0.5]], [1.0], noise_std=0.0)
    out = simulate_plant(spec, np.ones((40, 1)))
    assert out[-1, 0] == pytest.approx(0.5, rel=1e-12)


# -- climate ---------------------------------------------------------------------


def _quiet(**kw):
    base = dict(noise_std=0.0, heatwave_rate=0.0, dry_spell_rate=0.0, start_year=2006, end_year=2096)
    return ClimateScenarioSpec(**{**base, **kw})


def _july_mean(c: ClimateSeries, year):
    sl = c.year_slice(year)
    doy = np.arange(HOURS_PER_YEAR) // 24 + 1
    return c.temperature[sl][(doy >= 182) & (doy <= 212)].mean()


def test_stationary_without_trend_or_noise():
    c = gen_climate(_quiet(trend_per_decade=0.0))
    assert _july_mean(c, 2055) == pytest.approx(_july_mean(c, 2006), abs=1e-9)


def _decade_gap(spec):
    c = gen_climate(spec)
    dec = (c.start_year + np.arange(len(c.temperature)) // HOURS_PER_YEAR) // 10
    return c.temperature[dec == 209].mean() - c.temperature[dec == 200].mean()


@pytest.mark.parametrize("preset, approx", [("rcp45", 2.25), ("rcp85", 4.5)])
def test_trend_arithmetic(preset, approx):
    trend = climate_preset(preset).trend_per_decade
    gap = _decade_gap(_quiet(trend_per_decade=trend))
    # the horizon starts in 2006, so the two decade blocks sit 8.5 decades apart
    assert gap == pytest.approx(8.5 * trend, rel=1e-6)
    assert gap == pytest.approx(approx, rel=0.1)


def test_precipitation_nonnegative_and_mean():
    c = gen_climate(climate_preset("rcp45", end_year=2016))
    assert np.all(c.precipitation >= 0)
    assert len(c.temperature) == 10 * HOURS_PER_YEAR
    assert 0.05 < c.precipitation.mean() < 0.2


def test_climate_deterministic_and_seeded():
    a = gen_climate(climate_preset("rcp85", end_year=2010, seed=5))
    b = gen_climate(climate_preset("rcp85", end_year=2010, seed=5))
    np.testing.assert_array_equal(a.temperature, b.temperature)
    np.testing.assert_array_equal(a.precipitation, b.precipitation)
    c = gen_climate(climate_preset("rcp85", end_year=2010, seed=6))
    assert not np.array_equal(a.temperature, c.temperature)


def test_preset_lookup_and_ordering():
    mild, harsh = climate_preset("RCP4.5-like"), climate_preset("rcp85")
    assert harsh.trend_per_decade > mild.trend_per_decade
    assert harsh.variability >= mild.variability
    assert harsh.extreme_growth_per_decade > mild.extreme_growth_per_decade
    with pytest.raises(KeyError):
        climate_preset("rcp26")
    with pytest.raises(ValueError):
        ClimateScenarioSpec(start_year=2000, end_year=2000)


@pytest.fixture(scope="module")
def scenario_pair():
    return gen_climate(climate_preset("rcp45")), gen_climate(climate_preset("rcp85"))


def test_scenario_decadal_temperature_ordering(scenario_pair):
    mild, harsh = scenario_pair
    dec = (mild.start_year + np.arange(len(mild.temperature)) // HOURS_PER_YEAR) // 10
    for d in np.unique(dec)[1:]:
        assert harsh.temperature[dec == d].mean() >= mild.temperature[dec == d].mean()


def test_scenario_yield_decline_ordering(scenario_pair):
    mild, harsh = scenario_pair
    ym = gen_growth_data(mild, seed=0).yield_Mg_ha
    yh = gen_growth_data(harsh, seed=0).yield_Mg_ha
    dec = (mild.years // 10)
    dm = np.array([ym[dec == d].mean() for d in np.unique(dec)])
    dh = np.array([yh[dec == d].mean() for d in np.unique(dec)])
    assert np.all(dh <= dm)
    slope_m = np.polyfit(np.arange(len(dm)), dm, 1)[0]
    slope_h = np.polyfit(np.arange(len(dh)), dh, 1)[0]
    assert slope_h < slope_m < 0.01


# -- growth ------------------------------------------------------------------------


def test_logistic_progress_endpoints():
    np.testing.assert_allclose(logistic_progress([0.0, 0.5, 1.0]), [0.0, 0.5, 1.0], atol=1e-15)
    assert logistic_progress(2.0) == 1.0 and logistic_progress(-1.0) == 0.0


def _ideal_climate(years=2, heat_hours=0):
    n = years * HOURS_PER_YEAR
    T = np.full(n, 25.0)
    P = np.full(n, 1.0)
    c = ClimateSeries(T, P, 2006)
    for y in c.years:
        sl = c.season_slice(int(y))
        T[sl.start + 500 : sl.start + 500 + heat_hours] = 36.0
    return c


def test_zero_stress_season_reaches_capacity():
    spec = GrowthSpec()
    g = gen_growth_data(_ideal_climate(), farm_ha=450.0, spec=spec)
    np.testing.assert_allclose(g.yield_Mg_ha, spec.carrying_capacity, rtol=0, atol=0)
    np.testing.assert_allclose(g.harvest_Mg, spec.carrying_capacity * 450.0, rtol=1e-15)
    assert g.dataset.n_segments == 2 and len(g.dataset.inputs[0]) == SEASON_HOURS
    assert g.dataset.segment_ids == [2006, 2007]


def test_farm_size_linearity():
    c = gen_climate(climate_preset("rcp85", end_year=2012))
    a = gen_growth_data(c, farm_ha=450.0, seed=1)
    b = gen_growth_data(c, farm_ha=550.0, seed=1)
    np.testing.assert_allclose(a.harvest_Mg / b.harvest_Mg, 450.0 / 550.0, rtol=1e-14)


def test_more_heat_lowers_yield():
    base = season_biomass(*_season(_ideal_climate(1, heat_hours=40)))[-1]
    hot = season_biomass(*_season(_ideal_climate(1, heat_hours=120)))[-1]
    assert hot < base < GrowthSpec().carrying_capacity


def _season(c):
    sl = c.season_slice(2006)
    return c.temperature[sl], c.precipitation[sl]


def test_drought_lowers_yield():
    T = np.full(SEASON_HOURS, 25.0)
    wet = season_biomass(T, np.full(SEASON_HOURS, 1.0))[-1]
    dry = season_biomass(T, np.zeros(SEASON_HOURS))[-1]
    assert dry < wet


def test_biomass_is_nonnegative_and_monotone_in_ideal_season():
    B = season_biomass(*_season(_ideal_climate(1)))
    assert np.all(B >= 0) and np.all(np.diff(B) >= 0)


def test_growth_rejects_partial_years():
    c = ClimateSeries(np.zeros(100), np.zeros(100), 2006)
    with pytest.raises(ValueError):
        gen_growth_data(c)


# -- demand ----------------------------------------------------------------------


def test_constant_demand():
    d = gen_demand(DemandSpec(base=0.03, growth_rate=0.0, seasonal_amplitude=0.0, noise_std=0.0), 2)
    assert len(d) == 2 * HOURS_PER_YEAR
    np.testing.assert_array_equal(d, 0.03)


def test_demand_growth_ratio():
    d = gen_demand(DemandSpec(growth_rate=0.01, seasonal_amplitude=0.1, noise_std=0.0), 11)
    years = d.reshape(11, HOURS_PER_YEAR).mean(axis=1)
    assert years[10] / years[0] == pytest.approx(1.01**10, rel=1e-12)
    assert years[10] / years[0] == pytest.approx(1.1046, abs=1e-4)


def test_demand_nonnegative_and_deterministic():
    spec = DemandSpec(base=0.001, noise_std=0.01, seed=2)
    a = gen_demand(spec, 3)
    assert np.all(a >= 0) and a.min() == 0.0
    np.testing.assert_array_equal(a, gen_demand(spec, 3))
    with pytest.raises(ValueError):
        DemandSpec(base=0.0)
    with pytest.raises(ValueError):
        gen_demand(DemandSpec(), 0)
