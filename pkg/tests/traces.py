"""Hand-built simulation traces for the resilience checks."""

import numpy as np

from ecoltc.coupling import SimulationTrace

N_PERIODS = 52


def make_trace(n_years=90, start_year=2006, stock=None, failures=None, waste=None, imports=None,
               required=100.0, farm_ha=500.0):
    """Yearly-level trace; hourly arrays are left minimal since the assessment never reads them."""
    stock = np.full(n_years, 150.0) if stock is None else np.asarray(stock, dtype=float)
    failures = np.zeros((n_years, N_PERIODS), bool) if failures is None else np.asarray(failures, bool)
    waste = np.zeros(n_years) if waste is None else np.asarray(waste, dtype=float)
    imports = np.zeros(n_years) if imports is None else np.asarray(imports, dtype=float)
    shortfall = np.zeros((n_years, N_PERIODS))
    shortfall[failures] = 1.0
    req = np.full((n_years, N_PERIODS), required / N_PERIODS)
    z = np.zeros(1)
    return SimulationTrace(
        start_year=start_year, end_year=start_year + n_years, farm_ha=farm_ha,
        demand=z, soybean_required=z, soybean_fed=z, oil_production=z, diesel_production=z,
        harvest=np.full(n_years, required), stock_level=stock, waste_increment=waste,
        import_increment=imports, withdrawn=np.full(n_years, required), period_required=req,
        period_withdrawn=req - shortfall, period_shortfall=shortfall, failures=failures,
        meta={"preset": "fixture"},
    )
