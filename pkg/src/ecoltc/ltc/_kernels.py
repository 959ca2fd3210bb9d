"""Compiled sequence kernels for the fused LTC step and its adjoint.

Synapse arrays arrive postsynaptic-major, shape ``(n_hidden, n_presynaptic)``.
The training forward pass caches the synaptic sigmoids so the adjoint pass
does not re-evaluate any exponentials.
"""

import math

import numpy as np
from numba import njit


@njit(cache=True, fastmath=True, inline="always")
def _sig(z):
    return 1.0 / (1.0 + math.exp(-z))


@njit(cache=True, fastmath=True)
def forward(tau, w, gamma, mu, A, U, x0, dt, X):
    """Fill ``X[b, 0] = x0[b]`` and ``X[b, t + 1]`` with the state after step ``t``."""
    B, T, S = U.shape
    H = tau.shape[0]
    P = S + H
    pre = np.empty(P)
    for b in range(B):
        for i in range(H):
            X[b, 0, i] = x0[b, i]
        for t in range(T):
            for j in range(S):
                pre[j] = U[b, t, j]
            for j in range(H):
                pre[S + j] = X[b, t, j]
            for i in range(H):
                num = X[b, t, i]
                den = 1.0 + dt / tau[i]
                for j in range(P):
                    s = w[i, j] * _sig(gamma[i, j] * pre[j] + mu[i, j])
                    num += dt * s * A[i, j]
                    den += dt * s
                X[b, t + 1, i] = num / den


@njit(cache=True, fastmath=True)
def forward_cached(tau, w, gamma, mu, A, U, x0, dt, X, SIG, DEN):
    """Same as :func:`forward`, also storing sigmoids ``SIG[b, t, i, j]`` and denominators."""
    B, T, S = U.shape
    H = tau.shape[0]
    P = S + H
    pre = np.empty(P)
    for b in range(B):
        for i in range(H):
            X[b, 0, i] = x0[b, i]
        for t in range(T):
            for j in range(S):
                pre[j] = U[b, t, j]
            for j in range(H):
                pre[S + j] = X[b, t, j]
            for i in range(H):
                num = X[b, t, i]
                den = 1.0 + dt / tau[i]
                for j in range(P):
                    sg = _sig(gamma[i, j] * pre[j] + mu[i, j])
                    SIG[b, t, i, j] = sg
                    s = w[i, j] * sg
                    num += dt * s * A[i, j]
                    den += dt * s
                DEN[b, t, i] = den
                X[b, t + 1, i] = num / den


@njit(cache=True, fastmath=True)
def backward(tau, w, gamma, mu, A, U, X, SIG, DEN, gX, dt, g_tau, g_w, g_gamma, g_mu, g_A, gU, gx0):
    """Adjoint of :func:`forward_cached` given ``gX = dL/dX[:, 1:]`` (direct terms only).

    Parameter gradients are accumulated into the ``g_*`` buffers (``g_w`` is
    with respect to the conductance scale, not its softplus preimage); ``gU``
    and ``gx0`` are overwritten.
    """
    B, T, S = U.shape
    H = tau.shape[0]
    P = S + H
    pre = np.empty(P)
    g_pre = np.empty(P)
    carry = np.zeros(H)
    for b in range(B):
        for i in range(H):
            carry[i] = 0.0
        for t in range(T - 1, -1, -1):
            for j in range(S):
                pre[j] = U[b, t, j]
            for j in range(H):
                pre[S + j] = X[b, t, j]
            for j in range(P):
                g_pre[j] = 0.0
            for i in range(H):
                g = gX[b, t, i] + carry[i]
                if g == 0.0:
                    continue
                den = DEN[b, t, i]
                g_num = g / den
                g_den = -g * X[b, t + 1, i] / den
                g_pre[S + i] += g_num
                g_tau[i] -= g_den * dt / (tau[i] * tau[i])
                for j in range(P):
                    sg = SIG[b, t, i, j]
                    wij = w[i, j]
                    g_s = dt * (g_num * A[i, j] + g_den)
                    g_A[i, j] += g_num * dt * wij * sg
                    g_w[i, j] += g_s * sg
                    g_z = g_s * wij * sg * (1.0 - sg)
                    g_gamma[i, j] += g_z * pre[j]
                    g_mu[i, j] += g_z
                    g_pre[j] += g_z * gamma[i, j]
            for j in range(S):
                gU[b, t, j] = g_pre[j]
            for i in range(H):
                carry[i] = g_pre[S + i]
        for i in range(H):
            gx0[b, i] = carry[i]


@njit(cache=True)
def euler(tau, w, gamma, mu, A, u, x, h, n_sub):
    """``n_sub`` explicit Euler substeps of the LTC ODE with inputs held at ``u``; updates ``x`` in place."""
    S = u.shape[0]
    H = tau.shape[0]
    P = S + H
    pre = np.empty(P)
    for j in range(S):
        pre[j] = u[j]
    dx = np.empty(H)
    for _ in range(n_sub):
        for j in range(H):
            pre[S + j] = x[j]
        for i in range(H):
            leak = 1.0 / tau[i]
            drive = 0.0
            for j in range(P):
                s = w[i, j] / (1.0 + math.exp(-(gamma[i, j] * pre[j] + mu[i, j])))
                leak += s
                drive += s * A[i, j]
            dx[i] = drive - leak * x[i]
        for i in range(H):
            x[i] += h * dx[i]
