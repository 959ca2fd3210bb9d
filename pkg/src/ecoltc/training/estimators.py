"""scikit-learn style wrappers: node surrogates and algorithmic controllers.

A fitted :class:`LtcRegressor` *is* the surrogate model of a node: the trained
network plus the input/output normalizers and port names needed to exchange
physical quantities with neighbouring nodes.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from ..exceptions import SchemaMismatch, UntrainedController
from ..ltc.network import DEFAULT_DT, PARAM_NAMES, LtcNetwork, LtcState, NeuronLayout, init_network, integrate, run_with_state
from .bptt import TrainConfig, train_bptt, train_controller_network
from .dataset import Dataset, carve_validation
from .preprocessing import Normalizer

FORMAT = "ecoltc.surrogate"
FORMAT_VERSION = 1


def _as_segments(X):
    if isinstance(X, (list, tuple)):
        return [np.asarray(x, dtype=np.float64) for x in X], True
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    return [X], False


def _to_dataset(X, y, seasonal) -> Dataset:
    if isinstance(X, Dataset):
        return X
    U, _ = _as_segments(X)
    Y, _ = _as_segments(y)
    return Dataset(U, Y, seasonal=seasonal)


class _LtcModel(BaseEstimator):
    """Shared plumbing: fitted network, normalizers, inference and persistence."""

    def _config(self) -> TrainConfig:
        return TrainConfig(
            epochs=self.epochs,
            learning_rate=self.learning_rate,
            bptt_window=self.bptt_window,
            batch=self.batch,
            seed=self.seed,
            early_stop_epoch=self.early_stop_epoch,
            dt=self.dt,
        )

    def predict_normalized(self, X, x0=None):
        check_is_fitted(self, "network_")
        U, many = _as_segments(X)
        outs = []
        for u in U:
            Xh = integrate(self.network_, u, self.dt, x0)
            outs.append(Xh @ self.network_.motor_weight.T + self.network_.motor_bias)
        return outs if many else outs[0]

    def predict(self, X, x0=None):
        """Integrate the network over physical inputs and return physical outputs."""
        check_is_fitted(self, "network_")
        U, many = _as_segments(X)
        outs = [
            self.output_normalizer_.inverse_transform(self.predict_normalized(self.input_normalizer_.transform(u), x0))
            for u in U
        ]
        return outs if many else outs[0]

    def step_physical(self, inputs, state: LtcState):
        """Advance ``state`` over a chunk of physical inputs; returns (physical outputs, new state)."""
        u = self.input_normalizer_.transform(np.atleast_2d(inputs))
        y, new_state = run_with_state(self.network_, u, state, self.dt)
        return self.output_normalizer_.inverse_transform(y), new_state

    def initial_state(self) -> LtcState:
        check_is_fitted(self, "network_")
        return LtcState.zeros(self.network_)

    # -- persistence ---------------------------------------------------------

    _kind = "regressor"

    def to_dict(self) -> dict:
        check_is_fitted(self, "network_")
        net = self.network_
        hyper = {k: v for k, v in self.get_params(deep=False).items() if k != "plant"}
        return {
            "format": FORMAT,
            "version": FORMAT_VERSION,
            "kind": self._kind,
            "dt": float(self.dt),
            "layout": {
                "n_sensory": net.layout.n_sensory,
                "n_hidden": net.layout.n_hidden,
                "n_motor": net.layout.n_motor,
            },
            "params": {name: getattr(net, name).tolist() for name in PARAM_NAMES},
            "input_names": list(self.input_names_),
            "output_names": list(self.output_names_),
            "input_normalizer": self.input_normalizer_.to_dict(),
            "output_normalizer": self.output_normalizer_.to_dict(),
            "hyperparameters": hyper,
            "extra": self._extra_dict(),
        }

    def _extra_dict(self) -> dict:
        return {}

    def _load_extra(self, extra: dict) -> None:
        pass

    @staticmethod
    def _network_from_dict(d: dict) -> LtcNetwork:
        layout = NeuronLayout(**d["layout"])
        return LtcNetwork(layout=layout, **{k: np.asarray(v, dtype=np.float64) for k, v in d["params"].items()})


class LtcRegressor(RegressorMixin, _LtcModel):
    """Sequence-to-sequence LTC regressor used as a node surrogate.

    ``fit`` accepts either a :class:`Dataset` or input/target arrays (a single
    ``(T, channels)`` array or a list of per-segment arrays). Inputs and
    targets are normalized internally; ``predict`` works in physical units.
    """

    def __init__(self, n_hidden: int = 16, normalization: str = "zscore", epochs: int = 125,
                 learning_rate: float = 0.01, bptt_window: int | None = 64, batch: int = 16,
                 seed: int = 0, early_stop_epoch: int | None = None, validation_fraction: float = 0.1,
                 dt: float = DEFAULT_DT):
        self.n_hidden = n_hidden
        self.normalization = normalization
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.bptt_window = bptt_window
        self.batch = batch
        self.seed = seed
        self.early_stop_epoch = early_stop_epoch
        self.validation_fraction = validation_fraction
        self.dt = dt

    def fit(self, X, y=None, seasonal: bool = False):
        ds = _to_dataset(X, y, seasonal)
        self.input_normalizer_ = Normalizer(self.normalization).fit(ds.stacked_inputs())
        self.output_normalizer_ = Normalizer(self.normalization).fit(ds.stacked_targets())
        self.input_names_ = list(ds.input_names)
        self.output_names_ = list(ds.target_names)
        norm = ds.normalized(self.input_normalizer_, self.output_normalizer_)
        fit_part, val_part = carve_validation(norm, self.validation_fraction)
        layout = NeuronLayout(ds.n_inputs, self.n_hidden, ds.n_targets)
        net = init_network(layout, self.seed)
        self.network_, self.loss_history_ = train_bptt(net, fit_part, val_part, self._config())
        self.n_features_in_ = ds.n_inputs
        return self

    @classmethod
    def from_dict(cls, d: dict) -> "LtcRegressor":
        if d.get("format") != FORMAT or d.get("kind") != "regressor":
            raise SchemaMismatch("document is not an LTC regressor")
        model = cls(**d["hyperparameters"])
        _restore(model, d)
        return model


class LtcController(_LtcModel):
    """Open-loop controller trained through a frozen plant surrogate.

    The controller reads desired plant outputs (controlled channels and
    auxiliary channels, in the plant's output order) and emits plant
    feedstocks. It works in the plant's normalized coordinates: its input
    normalizer is the plant's output normalizer and its output normalizer is
    the plant's input normalizer. Only the ``controlled`` channels enter the
    loss.
    """

    _kind = "controller"

    def __init__(self, plant: LtcRegressor | None = None, n_hidden: int = 8, controlled=(0,), epochs: int = 125,
                 learning_rate: float = 0.01, bptt_window: int | None = 64, batch: int = 16, seed: int = 0,
                 early_stop_epoch: int | None = None, validation_fraction: float = 0.1, dt: float = DEFAULT_DT):
        self.plant = plant
        self.n_hidden = n_hidden
        self.controlled = controlled
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.bptt_window = bptt_window
        self.batch = batch
        self.seed = seed
        self.early_stop_epoch = early_stop_epoch
        self.validation_fraction = validation_fraction
        self.dt = dt

    def fit(self, desired, y=None):
        """``desired``: physical plant-output trajectories, array or list of segments."""
        if self.plant is None:
            raise ValueError("a fitted plant surrogate is required")
        check_is_fitted(self.plant, "network_")
        plant = self.plant
        if isinstance(desired, Dataset):
            segments = desired.targets
        else:
            segments, _ = _as_segments(desired)
        self.input_normalizer_ = Normalizer.from_dict(plant.output_normalizer_.to_dict())
        self.output_normalizer_ = Normalizer.from_dict(plant.input_normalizer_.to_dict())
        self.input_names_ = [f"{n}_desired" for n in plant.output_names_]
        self.output_names_ = list(plant.input_names_)
        controlled = list(self.controlled)
        aux = [k for k in range(len(plant.output_names_)) if k not in controlled]
        stacked = np.concatenate(segments, axis=0)
        main_mean = stacked[:, controlled[0]].mean()
        self.aux_ratio_ = [float(stacked[:, k].mean() / main_mean) if main_mean else 0.0 for k in aux]
        norm = [self.input_normalizer_.transform(d) for d in segments]
        ds = Dataset(norm, norm, seasonal=len(norm) > 1)
        fit_part, val_part = carve_validation(ds, self.validation_fraction)
        layout = NeuronLayout(len(plant.output_names_), self.n_hidden, len(plant.input_names_))
        net = init_network(layout, self.seed)
        self.network_, self.loss_history_ = train_controller_network(
            net, plant.network_, fit_part, val_part, self._config(), controlled
        )
        return self

    def desired_inputs(self, main) -> np.ndarray:
        """Controller input matrix from the main desired channel, auxiliary channels at the byproduct ratio."""
        if not hasattr(self, "network_"):
            raise UntrainedController("controller has not been trained")
        main = np.asarray(main, dtype=np.float64).reshape(-1)
        cols = [main] + [r * main for r in self.aux_ratio_]
        return np.column_stack(cols)

    def _extra_dict(self) -> dict:
        return {"aux_ratio": list(self.aux_ratio_), "controlled": list(self.controlled)}

    def _load_extra(self, extra: dict) -> None:
        self.aux_ratio_ = list(extra["aux_ratio"])

    @classmethod
    def from_dict(cls, d: dict) -> "LtcController":
        if d.get("format") != FORMAT or d.get("kind") != "controller":
            raise SchemaMismatch("document is not an LTC controller")
        hyper = dict(d["hyperparameters"])
        hyper["controlled"] = tuple(hyper.get("controlled", (0,)))
        model = cls(plant=None, **hyper)
        _restore(model, d)
        return model


def _restore(model: _LtcModel, d: dict) -> None:
    model.network_ = _LtcModel._network_from_dict(d)
    model.input_normalizer_ = Normalizer.from_dict(d["input_normalizer"])
    model.output_normalizer_ = Normalizer.from_dict(d["output_normalizer"])
    model.input_names_ = list(d["input_names"])
    model.output_names_ = list(d["output_names"])
    model.n_features_in_ = model.network_.layout.n_sensory
    model._load_extra(d.get("extra", {}))


def save_model(model: _LtcModel, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model.to_dict(), fh, indent=1, sort_keys=True)
        fh.write("\n")
    if getattr(model, "loss_history_", None) is not None:
        model.loss_history_.to_csv(path.with_suffix(".loss.csv"))
    return path


def load_model(path):
    d = json.loads(Path(path).read_text(encoding="utf-8"))
    if d.get("format") != FORMAT:
        raise SchemaMismatch(f"{path}: not an {FORMAT} document")
    if d.get("kind") == "controller":
        return LtcController.from_dict(d)
    return LtcRegressor.from_dict(d)


def train_controller(ctrl: LtcController, plant: LtcRegressor, desired, cfg: TrainConfig | None = None) -> LtcController:
    """Functional form: train ``ctrl`` through the frozen ``plant`` on desired trajectories."""
    ctrl.set_params(plant=plant)
    if cfg is not None:
        ctrl.set_params(epochs=cfg.epochs, learning_rate=cfg.learning_rate, bptt_window=cfg.bptt_window,
                        batch=cfg.batch, seed=cfg.seed, early_stop_epoch=cfg.early_stop_epoch, dt=cfg.dt)
    return ctrl.fit(desired)


def rmse(model, test: Dataset) -> np.ndarray:
    """Per-output RMSE of the integrated trajectory, in normalized units.

    ``model`` is either a fitted :class:`LtcRegressor` (the test set is given in
    physical units) or a bare network (the test set is already normalized).
    """
    if isinstance(model, LtcNetwork):
        net, norm = model, test
    else:
        check_is_fitted(model, "network_")
        net = model.network_
        norm = test.normalized(model.input_normalizer_, model.output_normalizer_)
    dt = getattr(model, "dt", DEFAULT_DT)
    errs = []
    for u, y in zip(norm.inputs, norm.targets):
        Xh = integrate(net, u, dt)
        errs.append(Xh @ net.motor_weight.T + net.motor_bias - y)
    err = np.concatenate(errs, axis=0)
    return np.sqrt(np.mean(err * err, axis=0))
