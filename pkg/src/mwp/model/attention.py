"""Attention primitives: masked softmax, scaled dot-product, multi-head.

All arrays are float64 and batch-first. Masks are boolean with True meaning
"may attend"; they broadcast against the score shape. A row whose mask is
all False gets all-zero weights and an all-zero output row rather than NaN,
so padding-only rows stay inert through the rest of the network.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class AttentionOutput:
    output: np.ndarray
    weights: np.ndarray


def masked_softmax(scores: np.ndarray, mask: np.ndarray | None = None) -> np.ndarray:
    """Softmax over the last axis, restricted to positions where mask is True."""
    if mask is None:
        e = np.exp(scores - scores.max(axis=-1, keepdims=True))
        return e / e.sum(axis=-1, keepdims=True)
    allowed = np.broadcast_to(np.asarray(mask, dtype=bool), scores.shape)
    row_max = np.where(allowed, scores, -np.inf).max(axis=-1, keepdims=True)
    row_max = np.where(np.isfinite(row_max), row_max, 0.0)
    e = np.where(allowed, np.exp(np.where(allowed, scores, 0.0) - row_max), 0.0)
    denom = e.sum(axis=-1, keepdims=True)
    return np.divide(e, denom, out=np.zeros_like(e), where=denom > 0)


def softmax_backward(d_weights: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Gradient through (masked) softmax given weights from the forward pass."""
    inner = (d_weights * weights).sum(axis=-1, keepdims=True)
    return weights * (d_weights - inner)


def scaled_dot_attention(
    q: np.ndarray,
    k: np.ndarray,
    v: np.ndarray,
    mask: np.ndarray | None = None,
) -> AttentionOutput:
    """softmax(q kᵀ / sqrt(d_k)) v over the trailing two axes.

    q is (..., T_q, d_k), k is (..., T_k, d_k), v is (..., T_k, d_v); the
    returned output is (..., T_q, d_v) and weights are (..., T_q, T_k).
    """
    d_k = q.shape[-1]
    scores = q @ k.swapaxes(-1, -2) / np.sqrt(d_k)
    weights = masked_softmax(scores, mask)
    return AttentionOutput(output=weights @ v, weights=weights)


def multi_head_attention(
    query: np.ndarray,
    key: np.ndarray,
    value: np.ndarray,
    w_q: np.ndarray,
    w_k: np.ndarray,
    w_v: np.ndarray,
    w_o: np.ndarray,
    mask: np.ndarray | None = None,
) -> AttentionOutput:
    """Multi-head attention with per-head projections and a shared output map.

    query/key/value are (B, T, d_model); w_q, w_k and w_v are (H, d_model,
    d_k) and w_o is (H * d_k, d_model). Weights come back per head as
    (B, H, T_q, T_k).
    """
    q = np.einsum("btd,hdk->bhtk", query, w_q)
    k = np.einsum("btd,hdk->bhtk", key, w_k)
    v = np.einsum("btd,hdk->bhtk", value, w_v)
    att = scaled_dot_attention(q, k, v, mask=mask)
    b, h, t_q, d_k = att.output.shape
    concat = att.output.transpose(0, 2, 1, 3).reshape(b, t_q, h * d_k)
    return AttentionOutput(output=concat @ w_o, weights=att.weights)


def positional_encoding(max_len: int, d_model: int) -> np.ndarray:
    """Sinusoidal position table (max_len, d_model): sin on even dims, cos on odd."""
    if max_len < 1 or d_model < 1:
        raise ValueError("max_len and d_model must be positive")
    if d_model % 2:
        raise ValueError("d_model must be even")
    position = np.arange(max_len, dtype=np.float64)[:, None]
    dim = np.arange(d_model, dtype=np.float64)[None, :]
    angles = position / np.power(10000.0, 2.0 * np.floor(dim / 2.0) / d_model)
    table = np.empty((max_len, d_model), dtype=np.float64)
    table[:, 0::2] = np.sin(angles[:, 0::2])
    table[:, 1::2] = np.cos(angles[:, 1::2])
    return table


def causal_mask(size: int) -> np.ndarray:
    """(size, size) bool mask where position t may attend to positions <= t."""
    return np.tril(np.ones((size, size), dtype=bool))


def padding_mask(ids: np.ndarray, pad_id: int) -> np.ndarray:
    """(B, 1, 1, T) bool mask that hides PAD key positions from every query."""
    ids = np.asarray(ids)
    return (ids != pad_id)[:, None, None, :]
