"""Dense layers and the multi-layer perceptron regressor."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ShapeError
from .activations import dsigmoid_from_out, dtanh_from_out, gelu, identity, sigmoid, tanh

_ACT = {"tanh": tanh, "sigmoid": sigmoid, "identity": identity, "gelu": gelu}

DEFAULT_MLP_HIDDEN = (100, 200, 50)


def uniform_init(rng: np.random.Generator, shape: tuple[int, ...], fan_in: int) -> np.ndarray:
    bound = 1.0 / np.sqrt(fan_in)
    return rng.uniform(-bound, bound, size=shape)


@dataclass(frozen=True)
class DenseLayer:
    """Affine map plus pointwise activation; W is (out, in)."""

    W: np.ndarray
    b: np.ndarray
    activation: str = "identity"

    def __post_init__(self):
        if self.W.ndim != 2 or self.b.shape != (self.W.shape[0],):
            raise ShapeError(f"inconsistent dense shapes W{self.W.shape} b{self.b.shape}")
        if self.activation not in _ACT:
            raise ShapeError(f"unknown activation {self.activation!r}")
        if not (np.isfinite(self.W).all() and np.isfinite(self.b).all()):
            raise ShapeError("non-finite dense parameters")

    def __call__(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.W.shape[1]:
            raise ShapeError(f"input dim {x.shape[-1]} != layer fan-in {self.W.shape[1]}")
        return _ACT[self.activation](x @ self.W.T + self.b)


def mlp_forward(layers: list[DenseLayer], x: np.ndarray) -> np.ndarray:
    """Apply a layer stack to one input vector or a batch of rows."""
    out = np.asarray(x, dtype=np.float64)
    for layer in layers:
        out = layer(out)
    return out


class MLPNet:
    """Perceptron with tanh hidden layers and a sigmoid output head.

    Parameters are kept in a flat name->array dict so the optimizer,
    serializer, and gradient checks can treat every architecture alike.
    """

    kind = "mlp"

    def __init__(self, input_dim: int, hidden=DEFAULT_MLP_HIDDEN, out_dim: int = 6):
        self.input_dim = int(input_dim)
        self.hidden = tuple(int(h) for h in hidden)
        self.out_dim = int(out_dim)
        self.dims = (self.input_dim,) + self.hidden + (self.out_dim,)

    def spec(self) -> dict:
        return {
            "kind": self.kind,
            "input_dim": self.input_dim,
            "hidden": list(self.hidden),
            "out_dim": self.out_dim,
        }

    def init_params(self, rng: np.random.Generator) -> dict[str, np.ndarray]:
        params = {}
        for i in range(len(self.dims) - 1):
            fan_in, fan_out = self.dims[i], self.dims[i + 1]
            params[f"W{i}"] = uniform_init(rng, (fan_out, fan_in), fan_in)
            params[f"b{i}"] = uniform_init(rng, (fan_out,), fan_in)
        return params

    def _check_input(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.input_dim:
            raise ShapeError(f"expected (n, {self.input_dim}) inputs, got {X.shape}")
        return X

    def _forward_cached(self, params, X):
        acts = [X]
        n_layers = len(self.dims) - 1
        out = X
        for i in range(n_layers):
            z = out @ params[f"W{i}"].T + params[f"b{i}"]
            out = sigmoid(z) if i == n_layers - 1 else np.tanh(z)
            acts.append(out)
        return acts

    def forward(self, params: dict[str, np.ndarray], X: np.ndarray) -> np.ndarray:
        return self._forward_cached(params, self._check_input(X))[-1]

    def loss_and_grads(self, params, X, T):
        X = self._check_input(X)
        T = np.asarray(T, dtype=np.float64)
        acts = self._forward_cached(params, X)
        Y = acts[-1]
        if Y.shape != T.shape:
            raise ShapeError(f"target shape {T.shape} != output shape {Y.shape}")
        resid = Y - T
        loss = float(np.mean(resid * resid))
        grads = {}
        n_layers = len(self.dims) - 1
        delta = (2.0 / resid.size) * resid * dsigmoid_from_out(Y)
        for i in range(n_layers - 1, -1, -1):
            grads[f"W{i}"] = delta.T @ acts[i]
            grads[f"b{i}"] = delta.sum(axis=0)
            if i > 0:
                delta = (delta @ params[f"W{i}"]) * dtanh_from_out(acts[i])
        return loss, grads
