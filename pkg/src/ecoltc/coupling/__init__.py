"""Coupling of node surrogates through stocks, controllers and exogenous signals."""

from .cascade import CascadePlan, controller_cascade
from .signals import apply_delay, resample
from .simulate import (
    PERIOD_HOURS,
    PERIODS_PER_YEAR,
    EcosystemGraph,
    SimulationTrace,
    period_bounds,
    predict_yields,
    read_trace,
    season_inputs,
    simulate_horizon,
    write_trace,
)
from .stock import EXPIRY_YEARS, Stock, stock_deposit, stock_expire, stock_withdraw

__all__ = [
    "EXPIRY_YEARS",
    "PERIODS_PER_YEAR",
    "PERIOD_HOURS",
    "CascadePlan",
    "EcosystemGraph",
    "SimulationTrace",
    "Stock",
    "apply_delay",
    "controller_cascade",
    "period_bounds",
    "predict_yields",
    "read_trace",
    "resample",
    "season_inputs",
    "simulate_horizon",
    "stock_deposit",
    "stock_expire",
    "stock_withdraw",
    "write_trace",
]
