"""Pure-numpy LSTM sequence kernels (fallback when the compiled extension is
absent). Gate order inside the stacked weight matrix is forget, input,
candidate, output; the candidate uses tanh, the cell-output activation is
tanh (act_id 0) or softsign (act_id 1)."""

from __future__ import annotations

import numpy as np

from .activations import sigmoid

ACT_TANH = 0
ACT_SOFTSIGN = 1


def lstm_seq_forward(X, W, b, act_id):
    """Unroll over time.

    X: (B, L, D) step inputs; W: (4U, U+D) stacked gate weights over the
    concatenated [h_prev, x_t]; b: (4U,). Returns (h_last, cache).
    """
    B, L, D = X.shape
    U = W.shape[0] // 4
    h = np.zeros((B, U))
    c = np.zeros((B, U))
    Z = np.empty((B, L, U + D))
    F = np.empty((B, L, U))
    I = np.empty((B, L, U))
    G = np.empty((B, L, U))
    O = np.empty((B, L, U))
    C = np.empty((B, L, U))
    A = np.empty((B, L, U))
    Wt = W.T
    for t in range(L):
        z = np.concatenate([h, X[:, t, :]], axis=1)
        pre = z @ Wt + b
        f = sigmoid(pre[:, :U])
        i = sigmoid(pre[:, U : 2 * U])
        g = np.tanh(pre[:, 2 * U : 3 * U])
        o = sigmoid(pre[:, 3 * U :])
        c = f * c + i * g
        a = np.tanh(c) if act_id == ACT_TANH else c / (1.0 + np.abs(c))
        h = o * a
        Z[:, t] = z
        F[:, t] = f
        I[:, t] = i
        G[:, t] = g
        O[:, t] = o
        C[:, t] = c
        A[:, t] = a
    return h, (Z, F, I, G, O, C, A)


def lstm_seq_backward(cache, W, act_id, dh_last):
    """Backpropagation through time; returns (dW, db) for the stacked gates."""
    Z, F, I, G, O, C, A = cache
    B, L, U = F.shape
    dW = np.zeros_like(W)
    db = np.zeros(W.shape[0])
    dh = dh_last.copy()
    dc = np.zeros((B, U))
    for t in range(L - 1, -1, -1):
        f, i, g, o, c, a, z = F[:, t], I[:, t], G[:, t], O[:, t], C[:, t], A[:, t], Z[:, t]
        do = dh * a
        da = dh * o
        if act_id == ACT_TANH:
            dc = dc + da * (1.0 - a * a)
        else:
            denom = 1.0 + np.abs(c)
            dc = dc + da / (denom * denom)
        c_prev = C[:, t - 1] if t > 0 else np.zeros((B, U))
        df = dc * c_prev
        di = dc * g
        dg = dc * i
        dc = dc * f
        dpre = np.concatenate(
            [
                df * f * (1.0 - f),
                di * i * (1.0 - i),
                dg * (1.0 - g * g),
                do * o * (1.0 - o),
            ],
            axis=1,
        )
        dW += dpre.T @ z
        db += dpre.sum(axis=0)
        dh = (dpre @ W)[:, :U]
    return dW, db
