"""Open-loop feedstock planning: diesel controller feeding the oil controller."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..exceptions import UntrainedController
from ..training.estimators import LtcController


@dataclass
class CascadePlan:
    """Hourly feedstock plan in Mg/h."""

    soybean: np.ndarray
    hexane: np.ndarray
    water: np.ndarray
    oil: np.ndarray


def _check(ctrl, label):
    if not isinstance(ctrl, LtcController) or not hasattr(ctrl, "network_"):
        raise UntrainedController(f"{label} controller is missing or untrained")


def controller_cascade(demand, oil_ctrl: LtcController, diesel_ctrl: LtcController,
                       aux_diesel=None, aux_oil=None) -> CascadePlan:
    """Translate a diesel demand series into the feedstocks that should meet it.

    The diesel controller reads (diesel demand, recycled-oil desired) and
    emits (oil, water); the oil controller reads (that oil, meal desired) and
    emits (soybean, hexane). Auxiliary desired channels default to each
    controller's learned byproduct ratio times its main channel. Every
    output is clipped at zero. No realized production is fed back.
    """
    _check(diesel_ctrl, "diesel")
    _check(oil_ctrl, "oil")
    demand = np.asarray(demand, dtype=np.float64).reshape(-1)

    d_in = diesel_ctrl.desired_inputs(demand)
    if aux_diesel is not None:
        d_in[:, 1:] = np.asarray(aux_diesel, dtype=np.float64).reshape(len(demand), -1)
    oil, water = np.clip(diesel_ctrl.predict(d_in), 0.0, None).T

    o_in = oil_ctrl.desired_inputs(oil)
    if aux_oil is not None:
        o_in[:, 1:] = np.asarray(aux_oil, dtype=np.float64).reshape(len(demand), -1)
    soybean, hexane = np.clip(oil_ctrl.predict(o_in), 0.0, None).T
    return CascadePlan(soybean.copy(), hexane.copy(), water.copy(), oil.copy())
