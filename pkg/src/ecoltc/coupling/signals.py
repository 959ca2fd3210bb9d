"""Retiming helpers for exchanging series between nodes."""

from __future__ import annotations

import numpy as np

from ..exceptions import EmptySeries


def resample(series, target_dt: float, source_dt: float = 1.0) -> np.ndarray:
    """Linear interpolation of a uniformly sampled series onto a ``target_dt`` grid.

    Both grids start at 0; the target grid covers the source span and any
    point past the last source sample takes that sample's value. Rates are
    interpolated as rates, without rescaling. Multichannel input is handled
    column by column.
    """
    x = np.asarray(series, dtype=np.float64)
    if x.size == 0 or x.shape[0] == 0:
        raise EmptySeries("cannot resample an empty series")
    if not (target_dt > 0 and source_dt > 0):
        raise ValueError("sampling intervals must be positive")
    span = (x.shape[0] - 1) * source_dt
    n_out = int(np.floor(span / target_dt + 1e-9)) + 1
    t_src = np.arange(x.shape[0]) * source_dt
    t_out = np.arange(n_out) * target_dt
    if x.ndim == 1:
        return np.interp(t_out, t_src, x)
    return np.column_stack([np.interp(t_out, t_src, x[:, k]) for k in range(x.shape[1])])


def apply_delay(series, lag: float, dt: float = 1.0) -> np.ndarray:
    """Shift right by ``lag``, holding the first value over the gap."""
    x = np.asarray(series, dtype=np.float64)
    if lag < 0:
        raise ValueError("lag must be nonnegative")
    k = lag / dt
    if abs(k - round(k)) > 1e-9:
        raise ValueError("lag must be a multiple of dt")
    k = int(round(k))
    if k == 0 or x.shape[0] == 0:
        return x.copy()
    k = min(k, x.shape[0])
    head = np.repeat(x[:1], k, axis=0)
    return np.concatenate([head, x[:x.shape[0] - k]], axis=0)
