"""Liquid time-constant network: parameters, state and the fused solver.

Each hidden neuron ``i`` obeys

    dx_i/dt = -(1/tau_i + sum_j s_ij) * x_i + sum_j s_ij * A_ij
    s_ij    = w_ij * sigmoid(gamma_ij * pre_j + mu_ij)

where ``pre`` is the concatenation of the sensory inputs and the hidden
activations. Synapse arrays are stored presynaptic-major with shape
``(n_sensory + n_hidden, n_hidden)``. The conductance scale ``w`` is kept
nonnegative by storing its softplus preimage ``w_raw``.
"""

from __future__ import annotations

import copy
from dataclasses import dataclass

import numpy as np

from ..exceptions import NonFiniteState
from . import _kernels

DEFAULT_DT = 1.0  # hours


def sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def softplus(z):
    return np.logaddexp(0.0, z)


@dataclass(frozen=True)
class NeuronLayout:
    n_sensory: int
    n_hidden: int
    n_motor: int

    def __post_init__(self):
        for name in ("n_sensory", "n_hidden", "n_motor"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise ValueError(f"{name} must be a positive integer, got {value!r}")

    @property
    def n_total(self) -> int:
        return self.n_sensory + self.n_hidden + self.n_motor

    @property
    def n_presynaptic(self) -> int:
        return self.n_sensory + self.n_hidden


PARAM_NAMES = ("tau", "w_raw", "gamma", "mu", "A", "motor_weight", "motor_bias")


@dataclass
class LtcNetwork:
    """Dense-wired LTC network with an affine motor readout."""

    layout: NeuronLayout
    tau: np.ndarray
    w_raw: np.ndarray
    gamma: np.ndarray
    mu: np.ndarray
    A: np.ndarray
    motor_weight: np.ndarray
    motor_bias: np.ndarray

    def __post_init__(self):
        lay = self.layout
        shapes = {
            "tau": (lay.n_hidden,),
            "w_raw": (lay.n_presynaptic, lay.n_hidden),
            "gamma": (lay.n_presynaptic, lay.n_hidden),
            "mu": (lay.n_presynaptic, lay.n_hidden),
            "A": (lay.n_presynaptic, lay.n_hidden),
            "motor_weight": (lay.n_motor, lay.n_hidden),
            "motor_bias": (lay.n_motor,),
        }
        for name, shape in shapes.items():
            arr = np.array(getattr(self, name), dtype=np.float64)
            if arr.shape != shape:
                raise ValueError(f"{name} has shape {arr.shape}, expected {shape}")
            setattr(self, name, arr)
        if np.any(self.tau <= 0):
            raise ValueError("time constants must be positive")

    @property
    def w(self) -> np.ndarray:
        return softplus(self.w_raw)

    @property
    def n_synapses(self) -> int:
        return self.w_raw.size

    def params(self) -> dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in PARAM_NAMES}

    def copy(self) -> "LtcNetwork":
        return copy.deepcopy(self)

    def kernel_params(self):
        """Contiguous postsynaptic-major arrays consumed by the compiled kernels."""
        return (
            np.ascontiguousarray(self.tau),
            np.ascontiguousarray(self.w.T),
            np.ascontiguousarray(self.gamma.T),
            np.ascontiguousarray(self.mu.T),
            np.ascontiguousarray(self.A.T),
        )


@dataclass
class LtcState:
    x: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        self.x = np.array(self.x, dtype=np.float64)

    @classmethod
    def zeros(cls, net: LtcNetwork, t: float = 0.0) -> "LtcState":
        return cls(np.zeros(net.layout.n_hidden), t)


def init_network(layout: NeuronLayout, seed: int) -> LtcNetwork:
    """Draw a network deterministically from ``seed``."""
    rng = np.random.default_rng(seed)
    p, h, m = layout.n_presynaptic, layout.n_hidden, layout.n_motor
    return LtcNetwork(
        layout=layout,
        tau=rng.uniform(0.5, 2.0, h),
        w_raw=rng.normal(0.0, 0.1, (p, h)),
        gamma=rng.uniform(0.5, 1.5, (p, h)),
        mu=rng.uniform(-0.5, 0.5, (p, h)),
        A=rng.uniform(-1.0, 1.0, (p, h)),
        motor_weight=rng.normal(0.0, 0.1, (m, h)),
        motor_bias=rng.normal(0.0, 0.1, m),
    )


def _presynaptic(net, x, u):
    u = np.asarray(u, dtype=np.float64)
    if u.shape != (net.layout.n_sensory,):
        raise ValueError(f"expected {net.layout.n_sensory} sensory values, got shape {u.shape}")
    return np.concatenate([u, x])


def _conductances(net, pre):
    return net.w * sigmoid(net.gamma * pre[:, None] + net.mu)


def fused_step(net: LtcNetwork, state: LtcState, inputs, dt: float) -> LtcState:
    """One fused semi-implicit step.

    ``x' = (x + dt * sum_j s_ij A_ij) / (1 + dt * (1/tau_i + sum_j s_ij))``,
    with the conductances evaluated at the current time. The denominator is
    always above one, so the update is stable for any positive ``dt``.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    x = state.x
    s = _conductances(net, _presynaptic(net, x, inputs))
    num = x + dt * np.sum(s * net.A, axis=0)
    den = 1.0 + dt * (1.0 / net.tau + np.sum(s, axis=0))
    x_new = num / den
    if not np.all(np.isfinite(x_new)):
        raise NonFiniteState("hidden state became non-finite; parameters are corrupted")
    return LtcState(x_new, state.t + dt)


def read_motor(net: LtcNetwork, state: LtcState) -> np.ndarray:
    return net.motor_weight @ state.x + net.motor_bias


def derivative(net: LtcNetwork, x: np.ndarray, inputs) -> np.ndarray:
    s = _conductances(net, _presynaptic(net, x, inputs))
    return -(1.0 / net.tau + s.sum(axis=0)) * x + np.sum(s * net.A, axis=0)


def reference_step(net: LtcNetwork, state: LtcState, inputs, dt: float, dt_fine: float = 1e-4) -> LtcState:
    """Explicit Euler integration of the LTC ODE over ``dt`` in substeps of ``dt_fine``.

    Inputs are held constant over the interval. Used as an independent oracle for
    :func:`fused_step`.
    """
    if dt_fine > 1e-3:
        raise ValueError("reference integration requires dt_fine <= 1e-3")
    n_sub = max(1, int(round(dt / dt_fine)))
    u = np.array(inputs, dtype=np.float64, ndmin=1)
    if u.shape != (net.layout.n_sensory,):
        raise ValueError(f"expected {net.layout.n_sensory} sensory values, got shape {u.shape}")
    x = state.x.astype(np.float64)
    _kernels.euler(*net.kernel_params(), u, x, dt / n_sub, n_sub)
    return LtcState(x, state.t + dt)


def fixed_point(net: LtcNetwork, inputs, x: np.ndarray) -> np.ndarray:
    """Closed-form fixed point of each neuron given frozen presynaptic activity."""
    s = _conductances(net, _presynaptic(net, x, inputs))
    return np.sum(s * net.A, axis=0) / (1.0 / net.tau + s.sum(axis=0))


def integrate(net: LtcNetwork, inputs: np.ndarray, dt: float = DEFAULT_DT, x0=None) -> np.ndarray:
    """Hidden trajectories for one or many sequences.

    ``inputs`` has shape ``(T, n_sensory)`` or ``(B, T, n_sensory)``; the result
    has the matching shape with ``n_hidden`` trailing, excluding the initial state.
    """
    U = np.asarray(inputs, dtype=np.float64)
    single = U.ndim == 2
    if single:
        U = U[None]
    B, T, S = U.shape
    if S != net.layout.n_sensory:
        raise ValueError(f"expected {net.layout.n_sensory} input channels, got {S}")
    if x0 is None:
        x0 = np.zeros((B, net.layout.n_hidden))
    else:
        x0 = np.broadcast_to(np.asarray(x0, dtype=np.float64), (B, net.layout.n_hidden))
    params = net.kernel_params()
    if not all(np.all(np.isfinite(a)) for a in params) or not np.all(np.isfinite(U)):
        raise NonFiniteState("non-finite parameters or inputs")
    X = np.empty((B, T + 1, net.layout.n_hidden))
    _kernels.forward(*params, np.ascontiguousarray(U), np.ascontiguousarray(x0), float(dt), X)
    if not np.all(np.isfinite(X)):
        raise NonFiniteState("hidden state became non-finite; parameters are corrupted")
    X = X[:, 1:]
    return X[0] if single else X


def forward(net: LtcNetwork, inputs: np.ndarray, dt: float = DEFAULT_DT, x0: LtcState | None = None) -> np.ndarray:
    """Motor outputs after each fused step; output length equals input length."""
    x_init = None if x0 is None else x0.x
    X = integrate(net, inputs, dt, x_init)
    return X @ net.motor_weight.T + net.motor_bias


def run_with_state(net: LtcNetwork, inputs: np.ndarray, state: LtcState, dt: float = DEFAULT_DT):
    """Advance ``state`` through a chunk of inputs; returns (motor outputs, final state)."""
    X = integrate(net, inputs, dt, state.x)
    if len(X) == 0:
        return np.empty((0, net.layout.n_motor)), LtcState(state.x.copy(), state.t)
    return X @ net.motor_weight.T + net.motor_bias, LtcState(X[-1].copy(), state.t + dt * len(X))
