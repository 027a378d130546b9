"""Encoder-decoder transformer in plain numpy with hand-written backprop.

Parameters live in a flat dict keyed by dotted names ("enc0.att.w_q",
"dec1.ff.b2", ...), which keeps the optimizer and gradient checking generic.
Everything is float64. The forward pass records the intermediates backward
needs in a tape dict; backward walks the blocks in reverse and fills a grads
dict with exactly the same keys as the parameters.

Layout per layer (post-layer-norm residual blocks):

* encoder:  x = LN1(x + drop(SelfAtt(x)));  x = LN2(x + drop(FF(x)))
* decoder:  y = LN1(y + drop(SelfAtt(y)));  y = LN2(y + drop(Cross(y, mem)));
            y = LN3(y + drop(FF(y)))

Token embeddings are scaled by sqrt(d_model) before the sinusoidal position
table is added, and the final projection to vocabulary logits is a plain
affine map from the decoder output.
"""

from __future__ import annotations

import numpy as np

from .attention import causal_mask, masked_softmax, padding_mask, positional_encoding, softmax_backward
from .config import ModelConfig

Parameters = dict[str, np.ndarray]

LN_EPS = 1e-5


def init_parameters(config: ModelConfig, rng: np.random.Generator) -> Parameters:
    """Glorot-uniform weights, zero biases, unit layer-norm gains."""
    d, h, d_k, d_ff = config.d_model, config.n_heads, config.d_k, config.d_ff
    params: Parameters = {}

    def glorot(shape: tuple[int, ...], fan_in: int, fan_out: int) -> np.ndarray:
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        return rng.uniform(-limit, limit, size=shape)

    def add_mha(prefix: str) -> None:
        params[f"{prefix}.w_q"] = glorot((h, d, d_k), d, d_k)
        params[f"{prefix}.w_k"] = glorot((h, d, d_k), d, d_k)
        params[f"{prefix}.w_v"] = glorot((h, d, d_k), d, d_k)
        params[f"{prefix}.w_o"] = glorot((h * d_k, d), h * d_k, d)

    def add_ln(prefix: str) -> None:
        params[f"{prefix}.g"] = np.ones(d)
        params[f"{prefix}.b"] = np.zeros(d)

    def add_ff(prefix: str) -> None:
        params[f"{prefix}.w1"] = glorot((d, d_ff), d, d_ff)
        params[f"{prefix}.b1"] = np.zeros(d_ff)
        params[f"{prefix}.w2"] = glorot((d_ff, d), d_ff, d)
        params[f"{prefix}.b2"] = np.zeros(d)

    params["src_embed"] = glorot((config.src_vocab_size, d), config.src_vocab_size, d)
    params["tgt_embed"] = glorot((config.tgt_vocab_size, d), config.tgt_vocab_size, d)
    for i in range(config.n_encoder_layers):
        add_mha(f"enc{i}.att")
        add_ln(f"enc{i}.ln1")
        add_ff(f"enc{i}.ff")
        add_ln(f"enc{i}.ln2")
    for i in range(config.n_decoder_layers):
        add_mha(f"dec{i}.self")
        add_ln(f"dec{i}.ln1")
        add_mha(f"dec{i}.cross")
        add_ln(f"dec{i}.ln2")
        add_ff(f"dec{i}.ff")
        add_ln(f"dec{i}.ln3")
    params["out.w"] = glorot((d, config.tgt_vocab_size), d, config.tgt_vocab_size)
    params["out.b"] = np.zeros(config.tgt_vocab_size)
    return params


# --- primitive blocks (paired forward/backward) -----------------------------
# The contractions below are written as flat reshape + matmul so they hit
# BLAS; einsum keeps these shapes out of dgemm and is several times slower.


def _mm(x: np.ndarray, w: np.ndarray) -> np.ndarray:
    """(..., D) @ (D, F) as a single flat matrix product."""
    lead = x.shape[:-1]
    return (x.reshape(-1, x.shape[-1]) @ w).reshape(*lead, w.shape[-1])


def _project_heads(x: np.ndarray, w: np.ndarray) -> np.ndarray:
    """(B, T, D) x (H, D, K) -> (B, H, T, K)."""
    h, d, k = w.shape
    b, t, _ = x.shape
    out = x.reshape(b * t, d) @ w.transpose(1, 0, 2).reshape(d, h * k)
    return out.reshape(b, t, h, k).transpose(0, 2, 1, 3)


def _project_heads_wgrad(x: np.ndarray, d_heads: np.ndarray) -> np.ndarray:
    """(B, T, D) x (B, H, T, K) -> (H, D, K)."""
    b, h, t, k = d_heads.shape
    d = x.shape[-1]
    g = x.reshape(b * t, d).T @ d_heads.transpose(0, 2, 1, 3).reshape(b * t, h * k)
    return np.ascontiguousarray(g.reshape(d, h, k).transpose(1, 0, 2))


def _project_heads_xgrad(d_heads: np.ndarray, w: np.ndarray) -> np.ndarray:
    """(B, H, T, K) x (H, D, K) -> (B, T, D)."""
    h, d, k = w.shape
    b, _, t, _ = d_heads.shape
    out = d_heads.transpose(0, 2, 1, 3).reshape(b * t, h * k) @ w.transpose(0, 2, 1).reshape(h * k, d)
    return out.reshape(b, t, d)


def _outer_grad(x: np.ndarray, d_out: np.ndarray) -> np.ndarray:
    """(B, T, F) x (B, T, D) -> (F, D), summing over batch and time."""
    return x.reshape(-1, x.shape[-1]).T @ d_out.reshape(-1, d_out.shape[-1])


def _dropout_fwd(x, p, train, rng, tape, key):
    if not train or p == 0.0:
        tape[key] = None
        return x
    if rng is None:
        raise ValueError("training-mode forward with dropout needs an rng")
    mask = (rng.random(x.shape) >= p) / (1.0 - p)
    tape[key] = mask
    return x * mask


def _dropout_bwd(d_out, tape, key):
    mask = tape[key]
    return d_out if mask is None else d_out * mask


def _ln_fwd(params, prefix, x, tape):
    inv = 1.0 / np.sqrt(x.var(axis=-1, keepdims=True) + LN_EPS)
    xhat = (x - x.mean(axis=-1, keepdims=True)) * inv
    tape[prefix] = (xhat, inv)
    return params[f"{prefix}.g"] * xhat + params[f"{prefix}.b"]


def _ln_bwd(params, prefix, d_out, tape, grads):
    xhat, inv = tape[prefix]
    axes = tuple(range(d_out.ndim - 1))
    grads[f"{prefix}.g"] = (d_out * xhat).sum(axis=axes)
    grads[f"{prefix}.b"] = d_out.sum(axis=axes)
    dxhat = d_out * params[f"{prefix}.g"]
    return inv * (
        dxhat
        - dxhat.mean(axis=-1, keepdims=True)
        - xhat * (dxhat * xhat).mean(axis=-1, keepdims=True)
    )


def _mha_fwd(params, prefix, query, key, value, mask, tape):
    q = _project_heads(query, params[f"{prefix}.w_q"])
    k = _project_heads(key, params[f"{prefix}.w_k"])
    v = _project_heads(value, params[f"{prefix}.w_v"])
    scores = q @ k.swapaxes(-1, -2) / np.sqrt(q.shape[-1])
    weights = masked_softmax(scores, mask)
    heads = weights @ v
    b, h, t_q, d_k = heads.shape
    concat = heads.transpose(0, 2, 1, 3).reshape(b, t_q, h * d_k)
    tape[prefix] = (query, key, value, q, k, v, weights, concat)
    return _mm(concat, params[f"{prefix}.w_o"])


def _mha_bwd(params, prefix, d_out, tape, grads):
    query, key, value, q, k, v, weights, concat = tape[prefix]
    w_q, w_k, w_v, w_o = (params[f"{prefix}.{n}"] for n in ("w_q", "w_k", "w_v", "w_o"))
    grads[f"{prefix}.w_o"] = _outer_grad(concat, d_out)
    d_concat = _mm(d_out, w_o.T)
    b, t_q, _ = d_concat.shape
    h, _, d_k = w_q.shape
    d_heads = d_concat.reshape(b, t_q, h, d_k).transpose(0, 2, 1, 3)
    d_weights = d_heads @ v.swapaxes(-1, -2)
    d_v = weights.swapaxes(-1, -2) @ d_heads
    d_scores = softmax_backward(d_weights, weights) / np.sqrt(d_k)
    d_q = d_scores @ k
    d_k_heads = d_scores.swapaxes(-1, -2) @ q
    grads[f"{prefix}.w_q"] = _project_heads_wgrad(query, d_q)
    grads[f"{prefix}.w_k"] = _project_heads_wgrad(key, d_k_heads)
    grads[f"{prefix}.w_v"] = _project_heads_wgrad(value, d_v)
    d_query = _project_heads_xgrad(d_q, w_q)
    d_key = _project_heads_xgrad(d_k_heads, w_k)
    d_value = _project_heads_xgrad(d_v, w_v)
    return d_query, d_key, d_value


def _ff_fwd(params, prefix, x, tape):
    pre = _mm(x, params[f"{prefix}.w1"]) + params[f"{prefix}.b1"]
    hidden = np.maximum(pre, 0.0)
    tape[prefix] = (x, pre, hidden)
    return _mm(hidden, params[f"{prefix}.w2"]) + params[f"{prefix}.b2"]


def _ff_bwd(params, prefix, d_out, tape, grads):
    x, pre, hidden = tape[prefix]
    grads[f"{prefix}.w2"] = _outer_grad(hidden, d_out)
    grads[f"{prefix}.b2"] = d_out.sum(axis=(0, 1))
    d_hidden = _mm(d_out, params[f"{prefix}.w2"].T) * (pre > 0)
    grads[f"{prefix}.w1"] = _outer_grad(x, d_hidden)
    grads[f"{prefix}.b1"] = d_hidden.sum(axis=(0, 1))
    return _mm(d_hidden, params[f"{prefix}.w1"].T)


# --- full model -------------------------------------------------------------


def _check_batch(name, ids, max_len):
    ids = np.asarray(ids)
    if ids.ndim != 2:
        raise ValueError(f"{name} must be a (batch, time) integer array, got shape {ids.shape}")
    if ids.shape[1] == 0:
        raise ValueError(f"{name} has zero time steps")
    if ids.shape[1] > max_len:
        raise ValueError(f"{name} length {ids.shape[1]} exceeds max_len {max_len}")
    return ids.astype(np.int64, copy=False)


def forward_with_tape(
    params: Parameters,
    config: ModelConfig,
    src_ids,
    tgt_in_ids,
    pad_id: int | None = 0,
    train: bool = False,
    rng: np.random.Generator | None = None,
) -> tuple[np.ndarray, dict]:
    """Batched logits (B, T_tgt, tgt_vocab) plus the tape backward consumes."""
    src = _check_batch("src_ids", src_ids, config.max_len)
    tgt = _check_batch("tgt_in_ids", tgt_in_ids, config.max_len)
    if src.shape[0] != tgt.shape[0]:
        raise ValueError("src and tgt batch sizes differ")
    p = config.dropout
    pe = positional_encoding(config.max_len, config.d_model)
    scale = np.sqrt(config.d_model)
    tape: dict = {"src": src, "tgt": tgt, "scale": scale}

    if pad_id is None:
        src_mask = np.ones((src.shape[0], 1, 1, src.shape[1]), dtype=bool)
        tgt_mask = causal_mask(tgt.shape[1])[None, None]
    else:
        src_mask = padding_mask(src, pad_id)
        tgt_mask = causal_mask(tgt.shape[1])[None, None] & padding_mask(tgt, pad_id)
    tape["src_mask"] = src_mask

    x = params["src_embed"][src] * scale + pe[: src.shape[1]]
    x = _dropout_fwd(x, p, train, rng, tape, "drop.src_embed")
    for i in range(config.n_encoder_layers):
        a = _mha_fwd(params, f"enc{i}.att", x, x, x, src_mask, tape)
        a = _dropout_fwd(a, p, train, rng, tape, f"drop.enc{i}.att")
        x = _ln_fwd(params, f"enc{i}.ln1", x + a, tape)
        f = _ff_fwd(params, f"enc{i}.ff", x, tape)
        f = _dropout_fwd(f, p, train, rng, tape, f"drop.enc{i}.ff")
        x = _ln_fwd(params, f"enc{i}.ln2", x + f, tape)
    memory = x

    y = params["tgt_embed"][tgt] * scale + pe[: tgt.shape[1]]
    y = _dropout_fwd(y, p, train, rng, tape, "drop.tgt_embed")
    for i in range(config.n_decoder_layers):
        a = _mha_fwd(params, f"dec{i}.self", y, y, y, tgt_mask, tape)
        a = _dropout_fwd(a, p, train, rng, tape, f"drop.dec{i}.self")
        y = _ln_fwd(params, f"dec{i}.ln1", y + a, tape)
        c = _mha_fwd(params, f"dec{i}.cross", y, memory, memory, src_mask, tape)
        c = _dropout_fwd(c, p, train, rng, tape, f"drop.dec{i}.cross")
        y = _ln_fwd(params, f"dec{i}.ln2", y + c, tape)
        f = _ff_fwd(params, f"dec{i}.ff", y, tape)
        f = _dropout_fwd(f, p, train, rng, tape, f"drop.dec{i}.ff")
        y = _ln_fwd(params, f"dec{i}.ln3", y + f, tape)
    tape["dec_out"] = y
    return _mm(y, params["out.w"]) + params["out.b"], tape


def forward(params: Parameters, config: ModelConfig, src_ids, tgt_in_ids, pad_id: int | None = 0) -> np.ndarray:
    """Evaluation-mode logits; accepts a single example (1-D) or a batch (2-D)."""
    src = np.asarray(src_ids)
    tgt = np.asarray(tgt_in_ids)
    single = src.ndim == 1
    if single != (tgt.ndim == 1):
        raise ValueError("src_ids and tgt_in_ids must both be 1-D or both 2-D")
    if single:
        src, tgt = src[None], tgt[None]
    logits, _ = forward_with_tape(params, config, src, tgt, pad_id=pad_id, train=False)
    return logits[0] if single else logits


def _ce_with_grad(logits, targets, pad_id):
    targets = np.asarray(targets, dtype=np.int64)
    shifted = logits - logits.max(axis=-1, keepdims=True)
    logz = np.log(np.exp(shifted).sum(axis=-1, keepdims=True))
    logp = shifted - logz
    mask = np.ones(targets.shape, dtype=bool) if pad_id is None else targets != pad_id
    n = int(mask.sum())
    if n == 0:
        raise ValueError("every target position is padding; nothing to score")
    picked = np.take_along_axis(logp, targets[..., None], axis=-1)[..., 0]
    loss = -(picked * mask).sum() / n
    d_logits = np.exp(logp)
    idx = targets[..., None]
    np.put_along_axis(d_logits, idx, np.take_along_axis(d_logits, idx, axis=-1) - 1.0, axis=-1)
    d_logits *= mask[..., None] / n
    return float(loss), d_logits


def cross_entropy_loss(logits, targets, pad_id: int | None = 0) -> float:
    """Mean token-level cross entropy over non-padding target positions."""
    loss, _ = _ce_with_grad(np.asarray(logits, dtype=np.float64), targets, pad_id)
    return loss


def backward(
    params: Parameters,
    config: ModelConfig,
    src_ids,
    tgt_in_ids,
    tgt_out_ids,
    pad_id: int | None = 0,
    train: bool = False,
    rng: np.random.Generator | None = None,
) -> tuple[float, Parameters]:
    """Loss and gradients for one batch; grads share the parameter dict keys."""
    logits, tape = forward_with_tape(params, config, src_ids, tgt_in_ids, pad_id=pad_id, train=train, rng=rng)
    loss, d_logits = _ce_with_grad(logits, tgt_out_ids, pad_id)
    grads: Parameters = {}
    src, tgt, scale = tape["src"], tape["tgt"], tape["scale"]

    y = tape["dec_out"]
    grads["out.w"] = _outer_grad(y, d_logits)
    grads["out.b"] = d_logits.sum(axis=(0, 1))
    d_y = _mm(d_logits, params["out.w"].T)

    d_memory = 0.0
    for i in reversed(range(config.n_decoder_layers)):
        d_u = _ln_bwd(params, f"dec{i}.ln3", d_y, tape, grads)
        d_f = _dropout_bwd(d_u, tape, f"drop.dec{i}.ff")
        d_y = d_u + _ff_bwd(params, f"dec{i}.ff", d_f, tape, grads)
        d_u = _ln_bwd(params, f"dec{i}.ln2", d_y, tape, grads)
        d_c = _dropout_bwd(d_u, tape, f"drop.dec{i}.cross")
        d_q, d_k, d_v = _mha_bwd(params, f"dec{i}.cross", d_c, tape, grads)
        d_memory = d_memory + d_k + d_v
        d_y = d_u + d_q
        d_u = _ln_bwd(params, f"dec{i}.ln1", d_y, tape, grads)
        d_a = _dropout_bwd(d_u, tape, f"drop.dec{i}.self")
        d_q, d_k, d_v = _mha_bwd(params, f"dec{i}.self", d_a, tape, grads)
        d_y = d_u + d_q + d_k + d_v
    d_y = _dropout_bwd(d_y, tape, "drop.tgt_embed")
    grads["tgt_embed"] = np.zeros_like(params["tgt_embed"])
    np.add.at(grads["tgt_embed"], tgt, d_y * scale)

    d_x = d_memory
    for i in reversed(range(config.n_encoder_layers)):
        d_u = _ln_bwd(params, f"enc{i}.ln2", d_x, tape, grads)
        d_f = _dropout_bwd(d_u, tape, f"drop.enc{i}.ff")
        d_x = d_u + _ff_bwd(params, f"enc{i}.ff", d_f, tape, grads)
        d_u = _ln_bwd(params, f"enc{i}.ln1", d_x, tape, grads)
        d_a = _dropout_bwd(d_u, tape, f"drop.enc{i}.att")
        d_q, d_k, d_v = _mha_bwd(params, f"enc{i}.att", d_a, tape, grads)
        d_x = d_u + d_q + d_k + d_v
    d_x = _dropout_bwd(d_x, tape, "drop.src_embed")
    grads["src_embed"] = np.zeros_like(params["src_embed"])
    np.add.at(grads["src_embed"], src, d_x * scale)
    return loss, grads


def encode(params: Parameters, config: ModelConfig, src_ids, pad_id: int | None = 0):
    """Encoder memory and source mask for incremental decoding."""
    src = _check_batch("src_ids", np.atleast_2d(np.asarray(src_ids)), config.max_len)
    pe = positional_encoding(config.max_len, config.d_model)
    scale = np.sqrt(config.d_model)
    tape: dict = {}
    if pad_id is None:
        src_mask = np.ones((src.shape[0], 1, 1, src.shape[1]), dtype=bool)
    else:
        src_mask = padding_mask(src, pad_id)
    x = params["src_embed"][src] * scale + pe[: src.shape[1]]
    for i in range(config.n_encoder_layers):
        a = _mha_fwd(params, f"enc{i}.att", x, x, x, src_mask, tape)
        x = _ln_fwd(params, f"enc{i}.ln1", x + a, tape)
        f = _ff_fwd(params, f"enc{i}.ff", x, tape)
        x = _ln_fwd(params, f"enc{i}.ln2", x + f, tape)
    return x, src_mask


def decode_logits(params: Parameters, config: ModelConfig, memory, src_mask, tgt_in_ids, pad_id: int | None = 0):
    """Logits (B, T_tgt, V) for a target prefix against precomputed memory."""
    tgt = _check_batch("tgt_in_ids", np.atleast_2d(np.asarray(tgt_in_ids)), config.max_len)
    pe = positional_encoding(config.max_len, config.d_model)
    scale = np.sqrt(config.d_model)
    tape: dict = {}
    tgt_mask = causal_mask(tgt.shape[1])[None, None]
    if pad_id is not None:
        tgt_mask = tgt_mask & padding_mask(tgt, pad_id)
    y = params["tgt_embed"][tgt] * scale + pe[: tgt.shape[1]]
    for i in range(config.n_decoder_layers):
        a = _mha_fwd(params, f"dec{i}.self", y, y, y, tgt_mask, tape)
        y = _ln_fwd(params, f"dec{i}.ln1", y + a, tape)
        c = _mha_fwd(params, f"dec{i}.cross", y, memory, memory, src_mask, tape)
        y = _ln_fwd(params, f"dec{i}.ln2", y + c, tape)
        f = _ff_fwd(params, f"dec{i}.ff", y, tape)
        y = _ln_fwd(params, f"dec{i}.ln3", y + f, tape)
    return _mm(y, params["out.w"]) + params["out.b"]
