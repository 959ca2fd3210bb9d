"""Backpropagation through the fused LTC recurrence.

Gradients are exact adjoints of the discrete fused-step recurrence (not of the
underlying ODE), so they agree with finite differences of :func:`ltc.forward`.
Long sequences are cut into ``bptt_window``-step windows; each window starts
from the state reached by a gradient-free pass with the epoch's parameters.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..exceptions import NonFiniteLoss
from ..ltc import _kernels
from ..ltc.network import DEFAULT_DT, PARAM_NAMES, LtcNetwork, integrate, sigmoid
from .dataset import Dataset

GRAD_CLIP = 10.0


@dataclass
class TrainConfig:
    epochs: int = 125
    learning_rate: float = 0.01
    bptt_window: int | None = 64
    batch: int = 16
    seed: int = 0
    early_stop_epoch: int | None = None
    dt: float = DEFAULT_DT

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.bptt_window is not None and self.bptt_window < 2:
            raise ValueError("bptt_window must be >= 2 (or None for whole segments)")
        if self.batch < 1:
            raise ValueError("batch must be >= 1")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")


@dataclass
class LossHistory:
    train_mse: list[float] = field(default_factory=list)
    val_mse: list[float] = field(default_factory=list)
    best_epoch: int = -1

    def __len__(self):
        return len(self.train_mse)

    def to_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("epoch,train_mse,val_mse\n")
            for k, (tr, va) in enumerate(zip(self.train_mse, self.val_mse)):
                fh.write(f"{k + 1},{tr!r},{va!r}\n")


# -- forward / adjoint primitives ---------------------------------------------


class _Pass:
    """Cached forward pass over a batch of padded windows."""

    def __init__(self, net: LtcNetwork, U: np.ndarray, x0: np.ndarray, dt: float):
        self.net = net
        self.U = np.ascontiguousarray(U, dtype=np.float64)
        self.dt = dt
        self.kp = net.kernel_params()
        B, T, _ = self.U.shape
        H, P = net.layout.n_hidden, net.layout.n_presynaptic
        self.X = np.empty((B, T + 1, H))
        self.SIG = np.empty((B, T, H, P))
        self.DEN = np.empty((B, T, H))
        _kernels.forward_cached(*self.kp, self.U, np.ascontiguousarray(x0), dt, self.X, self.SIG, self.DEN)
        self.Y = self.X[:, 1:] @ net.motor_weight.T + net.motor_bias

    def adjoint(self, gY: np.ndarray):
        """Parameter gradients, input gradients and initial-state gradients for ``dL/dY``."""
        net = self.net
        H, P = net.layout.n_hidden, net.layout.n_presynaptic
        Xs = self.X[:, 1:]
        grads = {
            "motor_weight": np.einsum("btm,bth->mh", gY, Xs),
            "motor_bias": gY.sum(axis=(0, 1)),
        }
        gX = np.ascontiguousarray(gY @ net.motor_weight)
        g_tau = np.zeros(H)
        g_w, g_gamma, g_mu, g_A = (np.zeros((H, P)) for _ in range(4))
        gU = np.empty_like(self.U)
        gx0 = np.empty((self.U.shape[0], H))
        _kernels.backward(
            *self.kp, self.U, self.X, self.SIG, self.DEN, gX, self.dt,
            g_tau, g_w, g_gamma, g_mu, g_A, gU, gx0,
        )
        grads["tau"] = g_tau
        grads["w_raw"] = g_w.T * sigmoid(net.w_raw)
        grads["gamma"] = g_gamma.T.copy()
        grads["mu"] = g_mu.T.copy()
        grads["A"] = g_A.T.copy()
        return grads, gU, gx0


def _masked_mse(Y, target, mask, channels=None):
    if channels is not None:
        Y = Y[..., channels]
        target = target[..., channels]
    err = (Y - target) * mask[..., None]
    n = mask.sum() * Y.shape[-1]
    return float(np.sum(err * err) / n), 2.0 * err / n


def loss_and_gradient(net: LtcNetwork, inputs, targets, dt: float = DEFAULT_DT, x0=None):
    """MSE of :func:`ltc.forward` against ``targets`` and its exact gradient.

    Accepts a single sequence ``(T, S)`` or a batch ``(B, T, S)``.
    """
    U = np.asarray(inputs, dtype=np.float64)
    Yt = np.asarray(targets, dtype=np.float64)
    if U.ndim == 2:
        U, Yt = U[None], Yt[None]
    B, T, _ = U.shape
    x0 = np.zeros((B, net.layout.n_hidden)) if x0 is None else np.broadcast_to(x0, (B, net.layout.n_hidden))
    run = _Pass(net, U, x0, dt)
    loss, gY = _masked_mse(run.Y, Yt, np.ones((B, T)))
    grads, _, _ = run.adjoint(gY)
    return loss, grads


def chain_loss_and_gradient(ctrl: LtcNetwork, plant: LtcNetwork, desired, controlled, dt: float = DEFAULT_DT,
                            x0_ctrl=None, x0_plant=None, mask=None):
    """Loss of ``plant(ctrl(desired))`` on the controlled channels; gradient w.r.t. the controller only.

    ``desired`` holds the controller inputs (controlled channels first, then
    auxiliary channels); the auxiliary channels are inputs only and do not
    enter the loss.
    """
    D = np.asarray(desired, dtype=np.float64)
    if D.ndim == 2:
        D = D[None]
    B, T, _ = D.shape
    mask = np.ones((B, T)) if mask is None else mask
    xc = np.zeros((B, ctrl.layout.n_hidden)) if x0_ctrl is None else x0_ctrl
    xp = np.zeros((B, plant.layout.n_hidden)) if x0_plant is None else x0_plant
    run_c = _Pass(ctrl, D, xc, dt)
    run_p = _Pass(plant, run_c.Y, xp, dt)
    loss, gY = _masked_mse(run_p.Y, D, mask, list(controlled))
    gY_full = np.zeros_like(run_p.Y)
    gY_full[..., list(controlled)] = gY
    _, gU, _ = run_p.adjoint(gY_full)
    grads, _, _ = run_c.adjoint(gU)
    return loss, grads


# -- optimizer -----------------------------------------------------------------


class Adam:
    """Adaptive-moment descent over the network parameters (log-parameterized tau)."""

    def __init__(self, lr: float, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m: dict[str, np.ndarray] = {}
        self.v: dict[str, np.ndarray] = {}
        self.t = 0

    def step(self, net: LtcNetwork, grads: dict[str, np.ndarray]) -> None:
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        for name in PARAM_NAMES:
            g = grads[name]
            if name == "tau":
                g = g * net.tau
            g = np.clip(g, -GRAD_CLIP, GRAD_CLIP)
            m = self.m.get(name)
            if m is None:
                m = self.m[name] = np.zeros_like(g)
                self.v[name] = np.zeros_like(g)
            v = self.v[name]
            m *= b1
            m += (1 - b1) * g
            v *= b2
            v += (1 - b2) * g * g
            update = self.lr * (m / (1 - b1 ** self.t)) / (np.sqrt(v / (1 - b2 ** self.t)) + self.eps)
            if name == "tau":
                net.tau = net.tau * np.exp(-update)
            else:
                setattr(net, name, getattr(net, name) - update)


# -- windowing -------------------------------------------------------------------


def _windows(lengths, window):
    """(segment, start, stop) triples covering every segment."""
    out = []
    for seg, n in enumerate(lengths):
        step = n if window is None else window
        for start in range(0, n, step):
            out.append((seg, start, min(start + step, n)))
    return out


def _pad_batch(chunks, length, width):
    out = np.zeros((len(chunks), length, width))
    for b, c in enumerate(chunks):
        out[b, : len(c)] = c
    return out


def _mask(lengths, length):
    return (np.arange(length)[None, :] < np.asarray(lengths)[:, None]).astype(np.float64)


def _segment_states(net, segments, dt):
    """Hidden trajectories (with initial zero state) for each segment."""
    out = []
    for u in segments:
        X = integrate(net, u, dt)
        out.append(np.vstack([np.zeros((1, net.layout.n_hidden)), X]))
    return out


def _sequence_mse(net, ds: Dataset, dt) -> float:
    sse, n = 0.0, 0
    for u, y in zip(ds.inputs, ds.targets):
        X = integrate(net, u, dt)
        err = X @ net.motor_weight.T + net.motor_bias - y
        sse += float(np.sum(err * err))
        n += err.size
    return sse / n


def _chain_mse(ctrl, plant, ds: Dataset, controlled, dt) -> float:
    sse, n = 0.0, 0
    for d in ds.inputs:
        u = integrate(ctrl, d, dt) @ ctrl.motor_weight.T + ctrl.motor_bias
        y = integrate(plant, u, dt) @ plant.motor_weight.T + plant.motor_bias
        err = y[:, controlled] - d[:, controlled]
        sse += float(np.sum(err * err))
        n += err.size
    return sse / n


def _fit(net: LtcNetwork, train: Dataset, val: Dataset | None, cfg: TrainConfig, objective):
    """Shared epoch loop: windowed minibatches, Adam, best-validation selection."""
    rng = np.random.default_rng(cfg.seed)
    opt = Adam(cfg.learning_rate)
    lengths = [len(u) for u in train.inputs]
    windows = _windows(lengths, cfg.bptt_window)
    history = LossHistory()
    best_val, best_params, stale = np.inf, None, 0
    for epoch in range(cfg.epochs):
        starts = objective.window_states(net, train, windows)
        order = rng.permutation(len(windows))
        sse, count = 0.0, 0.0
        for lo in range(0, len(order), cfg.batch):
            idx = order[lo : lo + cfg.batch]
            loss, weight, grads = objective.batch(net, train, [windows[k] for k in idx], [starts[k] for k in idx])
            if not np.isfinite(loss) or not all(np.all(np.isfinite(g)) for g in grads.values()):
                raise NonFiniteLoss(f"non-finite loss at epoch {epoch + 1}; lower the learning rate or check the data")
            sse += loss * weight
            count += weight
            opt.step(net, grads)
        train_mse = sse / count
        val_mse = objective.evaluate(net, val) if val is not None else train_mse
        if not np.isfinite(val_mse):
            raise NonFiniteLoss(f"non-finite validation loss at epoch {epoch + 1}")
        history.train_mse.append(train_mse)
        history.val_mse.append(val_mse)
        if val_mse < best_val:
            best_val, best_params, stale = val_mse, {k: v.copy() for k, v in net.params().items()}, 0
            history.best_epoch = epoch
        else:
            stale += 1
            if cfg.early_stop_epoch is not None and stale >= cfg.early_stop_epoch:
                break
    for name, value in best_params.items():
        setattr(net, name, value)
    return net, history


class _Supervised:
    def __init__(self, dt):
        self.dt = dt

    def window_states(self, net, ds, windows):
        if all(start == 0 for _, start, _ in windows):
            return [np.zeros(net.layout.n_hidden)] * len(windows)
        states = _segment_states(net, ds.inputs, self.dt)
        return [states[seg][start] for seg, start, _ in windows]

    def batch(self, net, ds, wins, x0s):
        length = max(stop - start for _, start, stop in wins)
        U = _pad_batch([ds.inputs[s][a:b] for s, a, b in wins], length, ds.n_inputs)
        Yt = _pad_batch([ds.targets[s][a:b] for s, a, b in wins], length, ds.n_targets)
        mask = _mask([b - a for _, a, b in wins], length)
        run = _Pass(net, U, np.array(x0s), self.dt)
        loss, gY = _masked_mse(run.Y, Yt, mask)
        grads, _, _ = run.adjoint(gY)
        return loss, mask.sum(), grads

    def evaluate(self, net, ds):
        return _sequence_mse(net, ds, self.dt)


class _Controller:
    def __init__(self, plant, controlled, dt):
        self.plant = plant
        self.controlled = list(controlled)
        self.dt = dt

    def window_states(self, ctrl, ds, windows):
        H_c, H_p = ctrl.layout.n_hidden, self.plant.layout.n_hidden
        if all(start == 0 for _, start, _ in windows):
            return [(np.zeros(H_c), np.zeros(H_p))] * len(windows)
        out = []
        cstates, pstates = [], []
        for d in ds.inputs:
            Xc = integrate(ctrl, d, self.dt)
            u = Xc @ ctrl.motor_weight.T + ctrl.motor_bias
            Xp = integrate(self.plant, u, self.dt)
            cstates.append(np.vstack([np.zeros((1, H_c)), Xc]))
            pstates.append(np.vstack([np.zeros((1, H_p)), Xp]))
        for seg, start, _ in windows:
            out.append((cstates[seg][start], pstates[seg][start]))
        return out

    def batch(self, ctrl, ds, wins, x0s):
        length = max(stop - start for _, start, stop in wins)
        D = _pad_batch([ds.inputs[s][a:b] for s, a, b in wins], length, ds.n_inputs)
        mask = _mask([b - a for _, a, b in wins], length)
        xc = np.array([x[0] for x in x0s])
        xp = np.array([x[1] for x in x0s])
        loss, grads = chain_loss_and_gradient(ctrl, self.plant, D, self.controlled, self.dt, xc, xp, mask)
        return loss, mask.sum(), grads

    def evaluate(self, ctrl, ds):
        return _chain_mse(ctrl, self.plant, ds, self.controlled, self.dt)


def train_bptt(net: LtcNetwork, train: Dataset, val: Dataset | None, cfg: TrainConfig):
    """Fit ``net`` to pre-normalized data; returns (net, LossHistory).

    ``net`` is updated in place and ends holding the parameters of the epoch
    with the lowest validation MSE.
    """
    lay = net.layout
    if train.n_inputs != lay.n_sensory or train.n_targets != lay.n_motor:
        raise ValueError(
            f"dataset has {train.n_inputs} inputs / {train.n_targets} targets, "
            f"network expects {lay.n_sensory} / {lay.n_motor}"
        )
    return _fit(net, train, val, cfg, _Supervised(cfg.dt))


def train_controller_network(ctrl: LtcNetwork, plant: LtcNetwork, train: Dataset, val: Dataset | None,
                             cfg: TrainConfig, controlled=(0,)):
    """Fit a controller through a frozen plant on pre-normalized desired trajectories.

    ``train.inputs`` are the controller inputs in plant-output units. The plant
    network is read but never written.
    """
    if ctrl.layout.n_motor != plant.layout.n_sensory:
        raise ValueError("controller motor count must equal plant sensory count")
    if train.n_inputs != ctrl.layout.n_sensory:
        raise ValueError("controller sensory count must equal the number of desired channels")
    return _fit(ctrl, train, val, cfg, _Controller(plant, controlled, cfg.dt))
