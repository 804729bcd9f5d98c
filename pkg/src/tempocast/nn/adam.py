"""Adam with bias correction, functional over flat parameter dicts."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import TrainingDivergedError


@dataclass
class AdamState:
    step: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def adam_step(state: AdamState, params, grads, cfg):
    """One update; returns (new_params, new_state) without mutating inputs.

    m <- b1*m + (1-b1)*g ; v <- b2*v + (1-b2)*g^2 ;
    p <- p - lr * mhat / (sqrt(vhat) + eps)
    """
    t = state.step + 1
    c1 = 1.0 - cfg.beta1**t
    c2 = 1.0 - cfg.beta2**t
    new_m, new_v, new_p = {}, {}, {}
    for name, g in grads.items():
        if not np.all(np.isfinite(g)):
            raise TrainingDivergedError(f"non-finite gradient for {name}")
        m = cfg.beta1 * state.m.get(name, 0.0) + (1.0 - cfg.beta1) * g
        v = cfg.beta2 * state.v.get(name, 0.0) + (1.0 - cfg.beta2) * (g * g)
        new_m[name] = m
        new_v[name] = v
        new_p[name] = params[name] - cfg.learning_rate * (m / c1) / (np.sqrt(v / c2) + cfg.eps)
    for name in params:
        if name not in grads:
            new_p[name] = params[name]
    return new_p, AdamState(step=t, m=new_m, v=new_v)
