"""Adam optimizer over flat parameter dicts."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import TrainConfig
from .network import Parameters


@dataclass
class AdamState:
    m: Parameters
    v: Parameters
    t: int = 0


def init_adam(params: Parameters) -> AdamState:
    return AdamState(
        m={k: np.zeros_like(p) for k, p in params.items()},
        v={k: np.zeros_like(p) for k, p in params.items()},
        t=0,
    )


def adam_step(
    params: Parameters,
    grads: Parameters,
    state: AdamState,
    config: TrainConfig,
) -> tuple[Parameters, AdamState]:
    """One bias-corrected Adam update; returns fresh params and state."""
    if grads.keys() != params.keys():
        missing = params.keys() ^ grads.keys()
        raise ValueError(f"gradient keys do not match parameters: {sorted(missing)}")
    b1, b2, eps, lr = config.beta1, config.beta2, config.eps, config.learning_rate
    t = state.t + 1
    new_params: Parameters = {}
    new_m: Parameters = {}
    new_v: Parameters = {}
    for key, p in params.items():
        g = grads[key]
        m = b1 * state.m[key] + (1.0 - b1) * g
        v = b2 * state.v[key] + (1.0 - b2) * g * g
        m_hat = m / (1.0 - b1**t)
        v_hat = v / (1.0 - b2**t)
        new_params[key] = p - lr * m_hat / (np.sqrt(v_hat) + eps)
        new_m[key] = m
        new_v[key] = v
    return new_params, AdamState(m=new_m, v=new_v, t=t)


def global_norm(grads: Parameters) -> float:
    return float(np.sqrt(sum(float(np.sum(g * g)) for g in grads.values())))


def clip_gradients(grads: Parameters, max_norm: float) -> tuple[Parameters, float]:
    """Scale all gradients so the global L2 norm is at most max_norm."""
    norm = global_norm(grads)
    if norm <= max_norm or norm == 0.0:
        return grads, norm
    factor = max_norm / norm
    return {k: g * factor for k, g in grads.items()}, norm
