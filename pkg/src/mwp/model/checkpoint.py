"""Deterministic binary checkpoints.

Layout: a magic line, an 8-byte little-endian length, a canonical JSON
metadata blob (model config, both vocabularies, tensor manifest, optional
extras), then the raw float64 tensor bytes concatenated in manifest order.
The encoding has no timestamps or other ambient state, so saving the same
model twice yields byte-identical files; tests rely on that.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..preprocess import RESERVED_TOKENS, Vocab
from .config import ModelConfig
from .network import Parameters

MAGIC = b"MWPCKPT1\n"
FORMAT_VERSION = 1


@dataclass
class Checkpoint:
    params: Parameters
    config: ModelConfig
    src_vocab: Vocab
    tgt_vocab: Vocab
    extra: dict = field(default_factory=dict)


def save_checkpoint(
    path: str | Path,
    params: Parameters,
    config: ModelConfig,
    src_vocab: Vocab,
    tgt_vocab: Vocab,
    extra: dict | None = None,
) -> None:
    """Write params plus everything needed to decode with them."""
    manifest = [{"key": k, "shape": list(params[k].shape)} for k in sorted(params)]
    meta = {
        "version": FORMAT_VERSION,
        "model_config": config.as_dict(),
        "src_vocab": src_vocab.id_to_token,
        "tgt_vocab": tgt_vocab.id_to_token,
        "tensors": manifest,
        "extra": extra or {},
    }
    blob = json.dumps(meta, sort_keys=True, ensure_ascii=False, separators=(",", ":")).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<Q", len(blob)))
        fh.write(blob)
        for entry in manifest:
            fh.write(np.ascontiguousarray(params[entry["key"]], dtype=np.float64).tobytes())


def load_checkpoint(path: str | Path) -> Checkpoint:
    data = Path(path).read_bytes()
    if not data.startswith(MAGIC):
        raise ValueError(f"{path}: not a model checkpoint (bad magic)")
    offset = len(MAGIC)
    if len(data) < offset + 8:
        raise ValueError(f"{path}: truncated checkpoint header")
    (meta_len,) = struct.unpack_from("<Q", data, offset)
    offset += 8
    if len(data) < offset + meta_len:
        raise ValueError(f"{path}: truncated checkpoint metadata")
    meta = json.loads(data[offset : offset + meta_len].decode("utf-8"))
    offset += meta_len
    if meta.get("version") != FORMAT_VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version {meta.get('version')!r}")
    config = ModelConfig.from_dict(meta["model_config"])
    params: Parameters = {}
    for entry in meta["tensors"]:
        shape = tuple(entry["shape"])
        size = int(np.prod(shape)) if shape else 1
        nbytes = size * 8
        if len(data) < offset + nbytes:
            raise ValueError(f"{path}: truncated tensor data for {entry['key']!r}")
        params[entry["key"]] = (
            np.frombuffer(data, dtype=np.float64, count=size, offset=offset).reshape(shape).copy()
        )
        offset += nbytes
    if offset != len(data):
        raise ValueError(f"{path}: {len(data) - offset} trailing bytes after tensor data")
    return Checkpoint(
        params=params,
        config=config,
        src_vocab=_vocab_from_tokens(path, "src_vocab", meta["src_vocab"]),
        tgt_vocab=_vocab_from_tokens(path, "tgt_vocab", meta["tgt_vocab"]),
        extra=meta.get("extra", {}),
    )


def _vocab_from_tokens(path, name, tokens) -> Vocab:
    if tuple(tokens[:4]) != RESERVED_TOKENS:
        raise ValueError(f"{path}: {name} does not start with the reserved tokens")
    return Vocab(tokens[4:])
