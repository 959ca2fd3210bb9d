import numpy as np
import pytest

from ecoltc.coupling import EcosystemGraph
from ecoltc.synth import climate_preset, diesel_plant_spec, gen_climate, gen_growth_data, gen_plant_data, oil_plant_spec
from ecoltc.training import LtcController, LtcRegressor

QUICK = dict(epochs=2, bptt_window=48, batch=8)


@pytest.fixture(scope="session")
def toy_graph():
    """Briefly trained surrogates with the production port names; accuracy is irrelevant here."""
    oil = LtcRegressor(n_hidden=3, **QUICK).fit(gen_plant_data(oil_plant_spec(), hours=600, seed=1))
    diesel = LtcRegressor(n_hidden=3, **QUICK).fit(gen_plant_data(diesel_plant_spec(), hours=600, seed=2))
    oil_ctrl = LtcController(oil, n_hidden=3, **QUICK).fit(gen_plant_data(oil_plant_spec(), hours=600, seed=3))
    diesel_ctrl = LtcController(diesel, n_hidden=3, **QUICK).fit(gen_plant_data(diesel_plant_spec(), hours=600, seed=4))
    climate = gen_climate(climate_preset("rcp45", end_year=2010))
    growth_ds = gen_growth_data(climate).dataset.select_inputs([0, 1, 2])
    growth = LtcRegressor(n_hidden=3, epochs=1, bptt_window=None, batch=4).fit(growth_ds)
    return EcosystemGraph(growth, oil, diesel, oil_ctrl, diesel_ctrl)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE = pytest.StashKey[dict]()


def pytest_configure(config):
    config.stash[ACCEPTANCE] = {}


@pytest.fixture
def acceptance(request):
    """Record one pass/fail line per acceptance criterion for the terminal summary."""
    results = request.config.stash[ACCEPTANCE]

    def record(number: int, ok: bool, detail: str) -> bool:
        results[number] = (bool(ok), detail)
        print(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}")
        return bool(ok)

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    results = config.stash.get(ACCEPTANCE, {})
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        ok, detail = results[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}")
