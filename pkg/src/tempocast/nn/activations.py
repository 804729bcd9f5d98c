"""Activation functions and their exact derivatives (float64)."""

from __future__ import annotations

import numpy as np
from scipy.special import erf

_SQRT2 = np.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)


def sigmoid(x):
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def dsigmoid_from_out(y):
    return y * (1.0 - y)


def tanh(x):
    return np.tanh(x)


def dtanh_from_out(y):
    return 1.0 - y * y


def softsign(x):
    return x / (1.0 + np.abs(x))


def dsoftsign_from_in(x):
    d = 1.0 + np.abs(x)
    return 1.0 / (d * d)


def gelu(x):
    return 0.5 * x * (1.0 + erf(x / _SQRT2))


def dgelu_from_in(x):
    return 0.5 * (1.0 + erf(x / _SQRT2)) + x * _INV_SQRT_2PI * np.exp(-0.5 * x * x)


def identity(x):
    return x


ACTIVATIONS = {
    "tanh": (tanh, None),
    "sigmoid": (sigmoid, None),
    "identity": (identity, None),
    "gelu": (gelu, dgelu_from_in),
}
