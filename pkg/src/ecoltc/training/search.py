"""Architecture searches: hidden-layer growth and greedy input elimination."""

from __future__ import annotations

import logging

import numpy as np

from ..exceptions import SearchExhausted
from ..ltc.network import NeuronLayout, init_network, integrate
from .bptt import TrainConfig, train_bptt
from .dataset import Dataset, carve_validation
from .preprocessing import Normalizer

log = logging.getLogger(__name__)

FLATNESS_RATIO = 0.1


def _prepare(ds: Dataset, normalization: str, validation_fraction: float):
    """Normalize on the full set and carve a validation tail."""
    in_norm = Normalizer(normalization).fit(ds.stacked_inputs())
    out_norm = Normalizer(normalization).fit(ds.stacked_targets())
    fit_part, val_part = carve_validation(ds.normalized(in_norm, out_norm), validation_fraction)
    if val_part is None:
        val_part = fit_part
    return fit_part, val_part


def _predict(net, ds: Dataset, dt):
    return [integrate(net, u, dt) @ net.motor_weight.T + net.motor_bias for u in ds.inputs]


def _train(ds_fit, ds_val, n_hidden, cfg: TrainConfig):
    layout = NeuronLayout(ds_fit.n_inputs, n_hidden, ds_fit.n_targets)
    net = init_network(layout, cfg.seed)
    net, _ = train_bptt(net, ds_fit, ds_val, cfg)
    return net


def is_flat(pred, target, ratio: float = FLATNESS_RATIO) -> bool:
    """True when some output channel's prediction variance is below ``ratio`` x the target's.

    Channels whose target has zero variance never count as flat.
    """
    pred = np.concatenate([np.atleast_2d(np.asarray(p).T).T for p in pred], axis=0)
    target = np.concatenate([np.atleast_2d(np.asarray(t).T).T for t in target], axis=0)
    vt = target.var(axis=0)
    vp = pred.var(axis=0)
    return bool(np.any((vt > 0) & (vp < ratio * vt)))


def hidden_size_search(dataset: Dataset, cfg: TrainConfig, h_start: int = 4, h_step: int = 4, h_max: int = 64,
                       normalization: str = "zscore", validation_fraction: float = 0.1) -> int:
    """Smallest hidden count whose integrated validation prediction is not a flat line.

    Sizes ``h_start, h_start + h_step, ...`` up to ``h_max`` are trained in turn.
    A model is flat when the variance of its prediction is below 0.1 of the
    target variance on the validation data.
    """
    if h_start < 1 or h_step < 1 or h_max < h_start:
        raise ValueError("need 1 <= h_start <= h_max and h_step >= 1")
    targets = dataset.stacked_targets()
    if np.all(targets.var(axis=0) == 0):
        return h_start
    ds_fit, ds_val = _prepare(dataset, normalization, validation_fraction)
    for h in range(h_start, h_max + 1, h_step):
        net = _train(ds_fit, ds_val, h, cfg)
        flat = is_flat(_predict(net, ds_val, cfg.dt), ds_val.targets)
        log.info("hidden_size_search: h=%d flat=%s", h, flat)
        if not flat:
            return h
    raise SearchExhausted(f"prediction still flat at h_max={h_max}")


def _val_rmse(net, ds_val, dt) -> float:
    err = np.concatenate([p - y for p, y in zip(_predict(net, ds_val, dt), ds_val.targets)], axis=0)
    return float(np.sqrt(np.mean(err * err)))


def input_ablation(channels, dataset: Dataset, cfg: TrainConfig, rmse_tolerance: float = 0.02, n_hidden: int = 31,
                   normalization: str = "zscore", validation_fraction: float = 0.1) -> list[str]:
    """Greedy backward elimination of input channels at a fixed hidden size.

    Each round retrains once per remaining channel with that channel removed
    and drops the one whose removal raises validation RMSE least, provided the
    rise over the current subset is below ``rmse_tolerance`` (normalized
    units). Returns the retained channel names in their original order.
    """
    names = [c if isinstance(c, str) else dataset.input_names[c] for c in channels]
    if len(names) < 2:
        raise ValueError("input_ablation needs at least two candidate channels")
    index = {n: k for k, n in enumerate(dataset.input_names)}
    missing = [n for n in names if n not in index]
    if missing:
        raise KeyError(f"unknown channels {missing}")
    ds_fit, ds_val = _prepare(dataset, normalization, validation_fraction)

    def score(subset):
        cols = [index[n] for n in subset]
        fit, val = ds_fit.select_inputs(cols), ds_val.select_inputs(cols)
        return _val_rmse(_train(fit, val, n_hidden, cfg), val, cfg.dt)

    kept = list(names)
    current = score(kept)
    log.info("input_ablation: %s rmse=%.4f", kept, current)
    while len(kept) > 1:
        trials = [(score([n for n in kept if n != drop]), k, drop) for k, drop in enumerate(kept)]
        best, _, drop = min(trials)
        log.info("input_ablation: best drop %s rmse=%.4f (current %.4f)", drop, best, current)
        if best - current >= rmse_tolerance:
            break
        kept.remove(drop)
        current = best
    return kept
