"""Token/channel mixing regressor over the lookback window.

Each block layer-normalizes, mixes across time steps (token MLP on the
transposed matrix), adds the residual, then layer-normalizes and mixes
across per-step channels, again with a residual. Mean pooling over tokens
feeds a sigmoid head.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import ParameterError, ShapeError
from .activations import dgelu_from_in, gelu, sigmoid
from .layers import uniform_init

LN_EPS = 1e-6

DEFAULT_BLOCKS = 4
DEFAULT_TOKEN_HIDDEN = 64
DEFAULT_CHANNEL_HIDDEN = 128


@dataclass(frozen=True)
class MixerConfig:
    blocks: int
    tokens: int
    channels: int
    token_hidden: int
    channel_hidden: int
    out_dim: int = 6

    def __post_init__(self):
        for name in ("blocks", "tokens", "channels", "token_hidden", "channel_hidden", "out_dim"):
            if getattr(self, name) < 1:
                raise ParameterError(f"MixerConfig.{name} must be positive")

    @property
    def input_dim(self) -> int:
        return self.tokens * self.channels


def _ln_forward(x, gamma, beta):
    mu = x.mean(axis=-1, keepdims=True)
    var = x.var(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + LN_EPS)
    xhat = (x - mu) * inv
    return xhat * gamma + beta, (xhat, inv)

def _ln_backward(dy, gamma, cache):
    xhat, inv = cache
    dgamma = np.einsum("blc,blc->c", dy, xhat)
    dbeta = dy.reshape(-1, dy.shape[-1]).sum(axis=0)
    dxhat = dy * gamma
    dx = inv * (
        dxhat
        - dxhat.mean(axis=-1, keepdims=True)
        - xhat * (dxhat * xhat).mean(axis=-1, keepdims=True)
    )
    return dx, dgamma, dbeta


def mixer_forward(cfg: MixerConfig, params: dict[str, np.ndarray], tokens: np.ndarray) -> np.ndarray:
    """Forward pass for a single (tokens, channels) matrix."""
    t = np.asarray(tokens, dtype=np.float64)
    if t.shape != (cfg.tokens, cfg.channels):
        raise ShapeError(f"expected ({cfg.tokens}, {cfg.channels}) tokens, got {t.shape}")
    net = MixerNet.from_config(cfg)
    return net.forward(params, t.reshape(1, -1))[0]


@dataclass
class MixerNet:
    """Batched mixer over flat assembled inputs.

    The flat vector is carved into (L, 8) window channels plus an even
    per-token share of the feature block (zero-padded so the share divides).
    """

    lookback: int
    n_features: int
    blocks: int = DEFAULT_BLOCKS
    token_hidden: int = DEFAULT_TOKEN_HIDDEN
    channel_hidden: int = DEFAULT_CHANNEL_HIDDEN
    out_dim: int = 6
    n_channels: int = 8
    kind: str = field(default="mixer", init=False)

    def __post_init__(self):
        self.share = math.ceil(self.n_features / self.lookback) if self.n_features else 0
        self.pad = self.share * self.lookback - self.n_features
        self.channels = self.n_channels + self.share
        self.input_dim = self.n_channels * self.lookback + self.n_features
        self.cfg = MixerConfig(
            blocks=self.blocks,
            tokens=self.lookback,
            channels=self.channels,
            token_hidden=self.token_hidden,
            channel_hidden=self.channel_hidden,
            out_dim=self.out_dim,
        )

    @classmethod
    def from_config(cls, cfg: MixerConfig) -> "MixerNet":
        net = cls(
            lookback=cfg.tokens,
            n_features=0,
            blocks=cfg.blocks,
            token_hidden=cfg.token_hidden,
            channel_hidden=cfg.channel_hidden,
            out_dim=cfg.out_dim,
            n_channels=cfg.channels,
        )
        return net

    def spec(self) -> dict:
        return {
            "kind": self.kind,
            "lookback": self.lookback,
            "n_features": self.n_features,
            "blocks": self.blocks,
            "token_hidden": self.token_hidden,
            "channel_hidden": self.channel_hidden,
            "out_dim": self.out_dim,
            "n_channels": self.n_channels,
        }

    def init_params(self, rng: np.random.Generator) -> dict[str, np.ndarray]:
        L, C, Ht, Hc = self.lookback, self.channels, self.token_hidden, self.channel_hidden
        params = {}
        for k in range(self.blocks):
            p = f"blk{k}."
            params[p + "ln1.g"] = np.ones(C)
            params[p + "ln1.b"] = np.zeros(C)
            params[p + "tok.W1"] = uniform_init(rng, (Ht, L), L)
            params[p + "tok.b1"] = uniform_init(rng, (Ht,), L)
            params[p + "tok.W2"] = uniform_init(rng, (L, Ht), Ht)
            params[p + "tok.b2"] = uniform_init(rng, (L,), Ht)
            params[p + "ln2.g"] = np.ones(C)
            params[p + "ln2.b"] = np.zeros(C)
            params[p + "chan.W1"] = uniform_init(rng, (Hc, C), C)
            params[p + "chan.b1"] = uniform_init(rng, (Hc,), C)
            params[p + "chan.W2"] = uniform_init(rng, (C, Hc), Hc)
            params[p + "chan.b2"] = uniform_init(rng, (C,), Hc)
        params["head.W"] = uniform_init(rng, (self.out_dim, C), C)
        params["head.b"] = uniform_init(rng, (self.out_dim,), C)
        return params

    def _carve(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.input_dim:
            raise ShapeError(f"expected (n, {self.input_dim}) inputs, got {X.shape}")
        B = X.shape[0]
        window = X[:, : self.n_channels * self.lookback].reshape(B, self.lookback, self.n_channels)
        if self.share == 0:
            return window
        feats = X[:, self.n_channels * self.lookback :]
        if self.pad:
            feats = np.concatenate([feats, np.zeros((B, self.pad))], axis=1)
        feats = feats.reshape(B, self.lookback, self.share)
        return np.concatenate([window, feats], axis=2)

    def _forward_cached(self, params, x):
        caches = []
        for k in range(self.blocks):
            p = f"blk{k}."
            u, ln1_cache = _ln_forward(x, params[p + "ln1.g"], params[p + "ln1.b"])
            uT = u.transpose(0, 2, 1)
            t1 = uT @ params[p + "tok.W1"].T + params[p + "tok.b1"]
            t1a = gelu(t1)
            t2 = t1a @ params[p + "tok.W2"].T + params[p + "tok.b2"]
            x1 = x + t2.transpose(0, 2, 1)
            v, ln2_cache = _ln_forward(x1, params[p + "ln2.g"], params[p + "ln2.b"])
            c1 = v @ params[p + "chan.W1"].T + params[p + "chan.b1"]
            c1a = gelu(c1)
            c2 = c1a @ params[p + "chan.W2"].T + params[p + "chan.b2"]
            x2 = x1 + c2
            caches.append((x, ln1_cache, uT, t1, t1a, x1, ln2_cache, v, c1, c1a))
            x = x2
        pooled = x.mean(axis=1)
        Y = sigmoid(pooled @ params["head.W"].T + params["head.b"])
        return Y, pooled, caches

    def forward(self, params, X) -> np.ndarray:
        Y, _, _ = self._forward_cached(params, self._carve(X))
        return Y

    def loss_and_grads(self, params, X, T):
        x0 = self._carve(X)
        T = np.asarray(T, dtype=np.float64)
        Y, pooled, caches = self._forward_cached(params, x0)
        if Y.shape != T.shape:
            raise ShapeError(f"target shape {T.shape} != output shape {Y.shape}")
        resid = Y - T
        loss = float(np.mean(resid * resid))
        grads = {}
        dy = (2.0 / resid.size) * resid * Y * (1.0 - Y)
        grads["head.W"] = dy.T @ pooled
        grads["head.b"] = dy.sum(axis=0)
        dpooled = dy @ params["head.W"]
        # mean pooling spreads the gradient evenly over tokens
        dx = np.repeat(dpooled[:, None, :] / self.lookback, self.lookback, axis=1)
        for k in range(self.blocks - 1, -1, -1):
            p = f"blk{k}."
            x, ln1_cache, uT, t1, t1a, x1, ln2_cache, v, c1, c1a = caches[k]
            # channel-mixing branch
            dc2 = dx
            grads[p + "chan.W2"] = np.einsum("blc,blh->ch", dc2, c1a)
            grads[p + "chan.b2"] = dc2.sum(axis=(0, 1))
            dc1 = (dc2 @ params[p + "chan.W2"]) * dgelu_from_in(c1)
            grads[p + "chan.W1"] = np.einsum("blh,blc->hc", dc1, v)
            grads[p + "chan.b1"] = dc1.sum(axis=(0, 1))
            dv = dc1 @ params[p + "chan.W1"]
            dxv, dg2, db2 = _ln_backward(dv, params[p + "ln2.g"], ln2_cache)
            grads[p + "ln2.g"] = dg2
            grads[p + "ln2.b"] = db2
            dx1 = dx + dxv
            # token-mixing branch
            dt2 = dx1.transpose(0, 2, 1)
            grads[p + "tok.W2"] = np.einsum("bcl,bch->lh", dt2, t1a)
            grads[p + "tok.b2"] = dt2.sum(axis=(0, 1))
            dt1 = (dt2 @ params[p + "tok.W2"]) * dgelu_from_in(t1)
            grads[p + "tok.W1"] = np.einsum("bch,bcl->hl", dt1, uT)
            grads[p + "tok.b1"] = dt1.sum(axis=(0, 1))
            du = (dt1 @ params[p + "tok.W1"]).transpose(0, 2, 1)
            dxu, dg1, db1 = _ln_backward(du, params[p + "ln1.g"], ln1_cache)
            grads[p + "ln1.g"] = dg1
            grads[p + "ln1.b"] = db1
            dx = dx1 + dxu
        return loss, grads
