"""Greedy and beam-search decoding for a single source sequence.

Both decoders compute the encoder memory once and re-run only the decoder
stack as the prefix grows. Returned ids exclude BOS and EOS. Ties are broken
toward the smaller token id, so decoding is fully deterministic; beam search
with beam_size=1 reproduces greedy decoding exactly.
"""

from __future__ import annotations

import numpy as np

from ..preprocess import BOS_ID, EOS_ID, PAD_ID
from .config import ModelConfig
from .network import Parameters, decode_logits, encode


def _log_softmax(row: np.ndarray) -> np.ndarray:
    shifted = row - row.max()
    return shifted - np.log(np.exp(shifted).sum())


def greedy_decode(
    params: Parameters,
    config: ModelConfig,
    src_ids,
    max_steps: int | None = None,
    bos_id: int = BOS_ID,
    eos_id: int = EOS_ID,
    pad_id: int = PAD_ID,
) -> list[int]:
    """Repeatedly append the argmax token until EOS or the step limit."""
    src = np.atleast_2d(np.asarray(src_ids, dtype=np.int64))
    memory, src_mask = encode(params, config, src, pad_id=pad_id)
    limit = config.max_len - 1 if max_steps is None else max_steps
    seq = [bos_id]
    for _ in range(limit):
        logits = decode_logits(params, config, memory, src_mask, np.array([seq]), pad_id=pad_id)
        next_id = int(np.argmax(logits[0, -1]))
        if next_id == eos_id:
            break
        seq.append(next_id)
    return seq[1:]


def beam_decode(
    params: Parameters,
    config: ModelConfig,
    src_ids,
    beam_size: int = 4,
    max_steps: int | None = None,
    bos_id: int = BOS_ID,
    eos_id: int = EOS_ID,
    pad_id: int = PAD_ID,
) -> list[int]:
    """Length-normalized beam search; returns the best token sequence.

    Hypotheses are scored by summed log probability during the search and by
    mean log probability per generated token (EOS included) for the final
    ranking, which keeps short and long candidates comparable.
    """
    if beam_size < 1:
        raise ValueError("beam_size must be >= 1")
    src = np.atleast_2d(np.asarray(src_ids, dtype=np.int64))
    memory, src_mask = encode(params, config, src, pad_id=pad_id)
    limit = config.max_len - 1 if max_steps is None else max_steps

    # hypothesis: (token tuple starting with BOS, summed logprob, finished)
    beams: list[tuple[tuple[int, ...], float, bool]] = [((bos_id,), 0.0, False)]
    for _ in range(limit):
        live = [h for h in beams if not h[2]]
        if not live:
            break
        prefixes = np.array([h[0] for h in live], dtype=np.int64)
        mem = np.repeat(memory, len(live), axis=0)
        msk = np.repeat(src_mask, len(live), axis=0)
        logits = decode_logits(params, config, mem, msk, prefixes, pad_id=pad_id)
        candidates = [h for h in beams if h[2]]
        for row, (tokens, score, _) in enumerate(live):
            logp = _log_softmax(logits[row, -1])
            order = np.argsort(-logp, kind="stable")[: beam_size + 1]
            for token in order:
                token = int(token)
                if token == eos_id:
                    candidates.append((tokens, score + float(logp[token]), True))
                else:
                    candidates.append((tokens + (token,), score + float(logp[token]), False))
        candidates.sort(key=lambda h: (-h[1], h[0]))
        beams = candidates[:beam_size]
        if all(h[2] for h in beams):
            break
    # unfinished survivors count their generated tokens; finished ones also
    # paid for EOS, so normalize by generated length including EOS
    def final_score(h: tuple[tuple[int, ...], float, bool]) -> float:
        generated = len(h[0]) - 1 + (1 if h[2] else 0)
        return h[1] / max(generated, 1)

    best = min(beams, key=lambda h: (-final_score(h), h[0]))
    return list(best[0][1:])
