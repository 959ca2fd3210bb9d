import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ecoltc.exceptions import NonFiniteState
from ecoltc.ltc import (
    LtcNetwork,
    LtcState,
    NeuronLayout,
    forward,
    fused_step,
    init_network,
    integrate,
    read_motor,
    reference_step,
    run_with_state,
)
from ecoltc.ltc.network import fixed_point

from . import oracles

W_ONE = math.log(math.e - 1.0)  # softplus preimage of 1


def hand_net(w_in=1.0, gamma=1.0, mu=0.0, A=1.0, tau=1.0):
    """One sensory, one hidden, one motor; the recurrent synapse is switched off."""
    lay = NeuronLayout(1, 1, 1)
    w_raw = np.array([[math.log(math.expm1(w_in)) if w_in > 0 else -np.inf], [-np.inf]])
    return LtcNetwork(lay, np.array([tau]), w_raw, np.array([[gamma], [0.0]]), np.array([[mu], [0.0]]),
                      np.array([[A], [0.0]]), np.ones((1, 1)), np.zeros(1))


def leak_net(tau, n_sensory=1):
    lay = NeuronLayout(n_sensory, len(tau), 1)
    P = lay.n_presynaptic
    H = lay.n_hidden
    return LtcNetwork(lay, np.asarray(tau, dtype=float), np.full((P, H), -np.inf), np.ones((P, H)),
                      np.zeros((P, H)), np.ones((P, H)), np.ones((1, H)), np.zeros(1))


# -- layout and initialization -----------------------------------------------


def test_layout_counts():
    lay = NeuronLayout(3, 20, 1)
    assert lay.n_total == 24
    assert lay.n_presynaptic == 23


@pytest.mark.parametrize("counts", [(0, 4, 1), (2, 0, 1), (2, 4, 0)])
def test_layout_rejects_empty_groups(counts):
    with pytest.raises(ValueError):
        NeuronLayout(*counts)


def test_init_is_deterministic():
    a = init_network(NeuronLayout(2, 8, 2), seed=42)
    b = init_network(NeuronLayout(2, 8, 2), seed=42)
    for k, v in a.params().items():
        assert np.array_equal(v, b.params()[k]), k


def test_init_seed_changes_parameters():
    a = init_network(NeuronLayout(2, 8, 2), seed=1)
    b = init_network(NeuronLayout(2, 8, 2), seed=2)
    assert not np.array_equal(a.A, b.A)


def test_dense_synapse_count_growth_layout():
    net = init_network(NeuronLayout(3, 20, 1), seed=0)
    assert net.n_synapses == 3 * 20 + 20 * 20 == 460


def test_init_ranges():
    net = init_network(NeuronLayout(2, 12, 2), seed=3)
    assert net.tau.shape == (12,) and np.all(net.tau > 0)
    assert np.all((net.tau >= 0.5) & (net.tau <= 2.0))
    assert np.all((net.gamma >= 0.5) & (net.gamma <= 1.5))
    assert np.all((net.mu >= -0.5) & (net.mu <= 0.5))
    assert np.all((net.A >= -1) & (net.A <= 1))
    assert np.all(net.w >= 0)


def test_network_rejects_bad_shapes_and_tau():
    net = init_network(NeuronLayout(2, 3, 1), seed=0)
    p = net.params()
    with pytest.raises(ValueError):
        LtcNetwork(net.layout, **{**p, "tau": -p["tau"]})
    with pytest.raises(ValueError):
        LtcNetwork(net.layout, **{**p, "A": p["A"][:, :2]})


# -- fused step ----------------------------------------------------------------


def test_pure_leak_step():
    net = leak_net([1.0])
    out = fused_step(net, LtcState(np.array([1.0])), [0.0], dt=1.0)
    assert out.x[0] == pytest.approx(0.5, abs=1e-15)
    assert out.t == 1.0


def test_single_synapse_hand_value():
    net = hand_net()
    out = fused_step(net, LtcState(np.zeros(1)), [0.0], dt=0.1)
    assert out.x[0] == pytest.approx(0.05 / 1.15, rel=1e-12)
    assert out.x[0] == pytest.approx(0.043478, abs=1e-6)


def test_fused_step_matches_loop_oracle():
    rng = np.random.default_rng(0)
    net = init_network(NeuronLayout(3, 5, 2), seed=7)
    x = rng.uniform(-1, 1, 5)
    u = rng.normal(size=3)
    got = fused_step(net, LtcState(x), u, 0.3).x
    want = oracles.fused_step(oracles.params_as_lists(net), x.tolist(), u.tolist(), 0.3)
    np.testing.assert_allclose(got, want, rtol=1e-13, atol=1e-15)


def test_fused_step_preconditions():
    net = init_network(NeuronLayout(2, 3, 1), seed=0)
    with pytest.raises(ValueError):
        fused_step(net, LtcState.zeros(net), [0.0, 0.0], dt=0.0)
    with pytest.raises(ValueError):
        fused_step(net, LtcState.zeros(net), [0.0], dt=1.0)


def test_nonfinite_parameters_raise():
    net = init_network(NeuronLayout(1, 2, 1), seed=0)
    net.A[0, 0] = np.nan
    with pytest.raises(NonFiniteState):
        fused_step(net, LtcState.zeros(net), [1.0], 1.0)
    with pytest.raises(NonFiniteState):
        integrate(net, np.ones((5, 1)))


def test_leak_closed_form_many_steps():
    tau = np.array([0.7, 1.0, 3.0])
    net = leak_net(tau)
    x0 = np.array([1.0, -2.0, 0.5])
    dt, n = 0.25, 40
    state = LtcState(x0.copy())
    for _ in range(n):
        state = fused_step(net, state, [0.3], dt)
    np.testing.assert_allclose(state.x, x0 * (1 + dt / tau) ** (-n), rtol=1e-12)
    X = integrate(net, np.full((n, 1), 0.3), dt, x0)
    np.testing.assert_allclose(X[-1], x0 * (1 + dt / tau) ** (-n), rtol=1e-12)


@settings(max_examples=60, deadline=None)
@given(
    seed=st.integers(0, 10_000),
    dt=st.floats(1e-3, 1e3),
    scale=st.floats(0.1, 50.0),
)
def test_unconditional_stability_and_bound(seed, dt, scale):
    rng = np.random.default_rng(seed)
    net = init_network(NeuronLayout(2, 4, 1), seed=seed)
    net.w_raw *= scale * 10
    net.gamma *= scale
    net.A *= scale
    x0 = rng.uniform(-scale, scale, 4)
    X = integrate(net, rng.normal(scale=scale, size=(30, 2)), dt, x0)
    assert np.all(np.isfinite(X))
    bound = np.abs(net.A).max() + np.abs(x0).max()
    assert np.all(np.abs(X) <= bound * (1 + 1e-12))


# -- reference integrator and convergence ------------------------------------


def test_reference_requires_fine_step():
    net = leak_net([1.0])
    with pytest.raises(ValueError):
        reference_step(net, LtcState(np.ones(1)), [0.0], 1.0, dt_fine=1e-2)


def test_reference_pure_decay():
    tau = np.array([0.8, 2.0])
    net = leak_net(tau)
    x0 = np.array([1.0, -1.5])
    out = reference_step(net, LtcState(x0.copy()), [0.0], 1.0, dt_fine=1e-4)
    np.testing.assert_allclose(out.x, x0 * np.exp(-1.0 / tau), atol=1e-3)


def _random_oracle_error(dt, steps, n_nets=5, seed=11):
    """Worst max-abs state gap between fused and fine explicit integration from rest."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for k in range(n_nets):
        lay = NeuronLayout(int(rng.integers(1, 5)), int(rng.integers(1, 9)), 1)
        net = init_network(lay, seed=100 + k)
        u = rng.normal(size=(steps, lay.n_sensory))
        a = LtcState.zeros(net)
        b = LtcState.zeros(net)
        for t in range(steps):
            a = fused_step(net, a, u[t], dt)
            b = reference_step(net, b, u[t], dt, dt_fine=1e-5)
            worst = max(worst, float(np.max(np.abs(a.x - b.x))))
    return worst


def test_fused_global_error_is_first_order():
    # same 0.2 h window at three step sizes
    errs = [_random_oracle_error(dt, int(round(0.2 / dt))) for dt in (0.02, 0.01, 0.005)]
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(orders > 0.9), orders


def test_fused_matches_reference_at_fine_step():
    assert _random_oracle_error(0.001, 200) < 1e-3


def test_local_error_is_second_order():
    net = init_network(NeuronLayout(2, 4, 1), seed=5)
    x = np.linspace(-0.5, 0.5, 4)
    u = [0.4, -0.2]
    errs = []
    for dt in (0.04, 0.02, 0.01):
        a = fused_step(net, LtcState(x.copy()), u, dt).x
        b = reference_step(net, LtcState(x.copy()), u, dt, dt_fine=1e-5).x
        errs.append(np.max(np.abs(a - b)))
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(orders > 1.8), orders


def test_single_synapse_fixed_point():
    net = hand_net(w_in=0.7, gamma=1.3, mu=0.2, A=0.9, tau=1.5)
    u = 0.6
    s = 0.7 / (1 + math.exp(-(1.3 * u + 0.2)))
    expected = s * 0.9 / (1 / 1.5 + s)
    X = integrate(net, np.full((400, 1), u), dt=0.5)
    assert X[-1, 0] == pytest.approx(expected, abs=1e-6)


def test_random_net_converges_to_its_fixed_point():
    net = init_network(NeuronLayout(2, 6, 1), seed=9)
    u = np.array([0.3, -0.7])
    X = integrate(net, np.tile(u, (3000, 1)), dt=0.5)
    x = X[-1]
    np.testing.assert_allclose(fixed_point(net, u, x), x, atol=1e-6)


# -- readout and forward -------------------------------------------------------


def test_read_motor_zero_weight_gives_bias():
    net = init_network(NeuronLayout(2, 3, 2), seed=0)
    net.motor_weight[:] = 0
    net.motor_bias[:] = [0.25, -1.0]
    np.testing.assert_array_equal(read_motor(net, LtcState(np.ones(3))), [0.25, -1.0])


def test_read_motor_identity():
    net = hand_net()
    assert read_motor(net, LtcState(np.array([0.3])))[0] == pytest.approx(0.3)


def test_read_motor_lipschitz():
    rng = np.random.default_rng(2)
    net = init_network(NeuronLayout(2, 6, 3), seed=2)
    L = np.linalg.norm(net.motor_weight, 2)
    for _ in range(50):
        x = rng.normal(size=6)
        dx = rng.normal(size=6) * 1e-3
        dy = read_motor(net, LtcState(x + dx)) - read_motor(net, LtcState(x))
        assert np.linalg.norm(dy) <= L * np.linalg.norm(dx) * (1 + 1e-9)


def test_forward_zero_weights_constant_bias():
    net = leak_net([1.0, 2.0], n_sensory=2)
    net.motor_bias[:] = 0.7
    Y = forward(net, np.zeros((12, 2)), 1.0)
    assert Y.shape == (12, 1)
    np.testing.assert_array_equal(Y, 0.7)


def test_forward_matches_chained_hand_steps():
    net = hand_net()
    u = np.linspace(-1, 1, 10)[:, None]
    Y = forward(net, u, 0.1)
    x = 0.0
    want = []
    for k in range(10):
        s = 1.0 / (1.0 + math.exp(-u[k, 0]))
        x = (x + 0.1 * s) / (1 + 0.1 * (1 + s))
        want.append(x)
    np.testing.assert_allclose(Y[:, 0], want, rtol=1e-12)


def test_forward_matches_loop_oracle_and_is_deterministic():
    rng = np.random.default_rng(4)
    net = init_network(NeuronLayout(3, 6, 2), seed=4)
    U = rng.normal(size=(25, 3))
    Y = forward(net, U, 0.5)
    want = oracles.forward(oracles.params_as_lists(net), U.tolist(), 0.5)
    np.testing.assert_allclose(Y, want, rtol=1e-11, atol=1e-13)
    assert np.array_equal(Y, forward(net, U, 0.5))


def test_batched_integrate_matches_single():
    rng = np.random.default_rng(8)
    net = init_network(NeuronLayout(2, 5, 1), seed=8)
    U = rng.normal(size=(3, 20, 2))
    X = integrate(net, U, 1.0)
    for b in range(3):
        np.testing.assert_array_equal(X[b], integrate(net, U[b], 1.0))


def test_run_with_state_chunks_equal_one_pass():
    rng = np.random.default_rng(6)
    net = init_network(NeuronLayout(2, 4, 1), seed=6)
    U = rng.normal(size=(30, 2))
    full = forward(net, U, 1.0)
    state = LtcState.zeros(net)
    parts = []
    for chunk in (U[:7], U[7:7], U[7:30]):
        y, state = run_with_state(net, chunk, state, 1.0)
        parts.append(y)
    np.testing.assert_array_equal(np.concatenate(parts), full)
    assert state.t == 30.0
