"""Recurrent regressor: gate-level cell math plus the batched sequence net.

The cell follows the usual three-gate construction: forget/input/output
gates are sigmoids over the concatenated [h_prev, x_t], the candidate is a
tanh, and the hidden state is the output gate times an activation of the
cell state (tanh by default, softsign as a configuration switch).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ShapeError
from . import backend
from .activations import sigmoid, softsign
from .layers import uniform_init

CELL_ACTIVATIONS = ("tanh", "softsign")
DEFAULT_UNITS = 4


@dataclass(frozen=True)
class LSTMCell:
    """Gate weights over [h_prev, x_t]; all gate matrices are (units, units+input_dim)."""

    Wf: np.ndarray
    Wi: np.ndarray
    Wc: np.ndarray
    Wo: np.ndarray
    bf: np.ndarray
    bi: np.ndarray
    bc: np.ndarray
    bo: np.ndarray
    Wy: np.ndarray  # (out, units) readout
    by: np.ndarray
    cell_activation: str = "tanh"

    def __post_init__(self):
        u, z = self.Wf.shape
        for name in ("Wi", "Wc", "Wo"):
            if getattr(self, name).shape != (u, z):
                raise ShapeError(f"gate matrix {name} shape {getattr(self, name).shape} != {(u, z)}")
        for name in ("bf", "bi", "bc", "bo"):
            if getattr(self, name).shape != (u,):
                raise ShapeError(f"gate bias {name} must have shape ({u},)")
        if self.Wy.shape[1] != u or self.by.shape != (self.Wy.shape[0],):
            raise ShapeError("readout shapes inconsistent with hidden size")
        if self.cell_activation not in CELL_ACTIVATIONS:
            raise ShapeError(f"cell activation must be one of {CELL_ACTIVATIONS}")

    @property
    def units(self) -> int:
        return self.Wf.shape[0]

    @property
    def input_dim(self) -> int:
        return self.Wf.shape[1] - self.Wf.shape[0]


def lstm_step(cell: LSTMCell, x_t, h_prev, c_prev):
    """One recurrence step; returns (h_t, c_t, y_t)."""
    x_t = np.asarray(x_t, dtype=np.float64)
    h_prev = np.asarray(h_prev, dtype=np.float64)
    c_prev = np.asarray(c_prev, dtype=np.float64)
    if x_t.shape != (cell.input_dim,) or h_prev.shape != (cell.units,) or c_prev.shape != (cell.units,):
        raise ShapeError(
            f"step shapes x{x_t.shape} h{h_prev.shape} c{c_prev.shape} do not match "
            f"cell (input_dim={cell.input_dim}, units={cell.units})"
        )
    z = np.concatenate([h_prev, x_t])
    f = sigmoid(cell.Wf @ z + cell.bf)
    i = sigmoid(cell.Wi @ z + cell.bi)
    g = np.tanh(cell.Wc @ z + cell.bc)
    o = sigmoid(cell.Wo @ z + cell.bo)
    c_t = f * c_prev + i * g
    a = np.tanh(c_t) if cell.cell_activation == "tanh" else softsign(c_t)
    h_t = o * a
    y_t = sigmoid(cell.Wy @ h_t + cell.by)
    return h_t, c_t, y_t


def lstm_forward(cell: LSTMCell, sequence) -> np.ndarray:
    """Unroll from zero state over an (L, input_dim) sequence; the readout of
    the final hidden state is the multi-horizon prediction."""
    seq = np.asarray(sequence, dtype=np.float64)
    if seq.ndim != 2 or seq.shape[0] < 1:
        raise ShapeError("sequence must be a non-empty (L, input_dim) matrix")
    h = np.zeros(cell.units)
    c = np.zeros(cell.units)
    y = None
    for t in range(seq.shape[0]):
        h, c, y = lstm_step(cell, seq[t], h, c)
    return y


@dataclass
class LSTMNet:
    """Batched LSTM over flat assembled inputs.

    The flat vector is carved into the (L, 8) window plus the per-sample
    feature block, which is broadcast to every time step; the sequence
    kernels come from the selected backend.
    """

    lookback: int
    n_features: int
    units: int = DEFAULT_UNITS
    out_dim: int = 6
    cell_activation: str = "tanh"
    n_channels: int = 8
    kind: str = field(default="lstm", init=False)

    def __post_init__(self):
        if self.cell_activation not in CELL_ACTIVATIONS:
            raise ShapeError(f"cell activation must be one of {CELL_ACTIVATIONS}")
        self.step_dim = self.n_channels + self.n_features
        self.input_dim = self.n_channels * self.lookback + self.n_features
        self._act_id = backend.ACT_TANH if self.cell_activation == "tanh" else backend.ACT_SOFTSIGN

    def spec(self) -> dict:
        return {
            "kind": self.kind,
            "lookback": self.lookback,
            "n_features": self.n_features,
            "units": self.units,
            "out_dim": self.out_dim,
            "cell_activation": self.cell_activation,
            "n_channels": self.n_channels,
        }

    def init_params(self, rng: np.random.Generator) -> dict[str, np.ndarray]:
        z = self.units + self.step_dim
        params = {}
        for gate in ("f", "i", "c", "o"):
            params[f"W{gate}"] = uniform_init(rng, (self.units, z), z)
            params[f"b{gate}"] = uniform_init(rng, (self.units,), z)
        params["Wy"] = uniform_init(rng, (self.out_dim, self.units), self.units)
        params["by"] = uniform_init(rng, (self.out_dim,), self.units)
        return params

    def _carve(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.input_dim:
            raise ShapeError(f"expected (n, {self.input_dim}) inputs, got {X.shape}")
        B = X.shape[0]
        window = X[:, : self.n_channels * self.lookback].reshape(B, self.lookback, self.n_channels)
        if self.n_features == 0:
            return np.ascontiguousarray(window)
        feats = X[:, self.n_channels * self.lookback :]
        tiled = np.broadcast_to(feats[:, None, :], (B, self.lookback, self.n_features))
        return np.ascontiguousarray(np.concatenate([window, tiled], axis=2))

    @staticmethod
    def _stack(params) -> tuple[np.ndarray, np.ndarray]:
        W = np.vstack([params["Wf"], params["Wi"], params["Wc"], params["Wo"]])
        b = np.concatenate([params["bf"], params["bi"], params["bc"], params["bo"]])
        return W, b

    def forward(self, params, X) -> np.ndarray:
        seq = self._carve(X)
        W, b = self._stack(params)
        h_last, _ = backend.lstm_seq_forward(seq, W, b, self._act_id)
        return sigmoid(h_last @ params["Wy"].T + params["by"])

    def loss_and_grads(self, params, X, T):
        seq = self._carve(X)
        T = np.asarray(T, dtype=np.float64)
        W, b = self._stack(params)
        h_last, cache = backend.lstm_seq_forward(seq, W, b, self._act_id)
        Y = sigmoid(h_last @ params["Wy"].T + params["by"])
        if Y.shape != T.shape:
            raise ShapeError(f"target shape {T.shape} != output shape {Y.shape}")
        resid = Y - T
        loss = float(np.mean(resid * resid))
        dy = (2.0 / resid.size) * resid * Y * (1.0 - Y)
        grads = {
            "Wy": dy.T @ h_last,
            "by": dy.sum(axis=0),
        }
        dh_last = dy @ params["Wy"]
        dW, db = backend.lstm_seq_backward(cache, W, self._act_id, dh_last)
        u = self.units
        for k, gate in enumerate(("f", "i", "c", "o")):
            grads[f"W{gate}"] = dW[k * u : (k + 1) * u]
            grads[f"b{gate}"] = db[k * u : (k + 1) * u]
        return loss, grads

    def cell_from_params(self, params) -> LSTMCell:
        return LSTMCell(
            Wf=params["Wf"],
            Wi=params["Wi"],
            Wc=params["Wc"],
            Wo=params["Wo"],
            bf=params["bf"],
            bi=params["bi"],
            bc=params["bc"],
            bo=params["bo"],
            Wy=params["Wy"],
            by=params["by"],
            cell_activation=self.cell_activation,
        )
