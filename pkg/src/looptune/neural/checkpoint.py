"""Versioned binary checkpoints: header with architecture constants, then
shape-prefixed little-endian float64 tensors in a fixed parameter order.
Loading re-derives the expected shapes from the header and validates."""

from __future__ import annotations

import struct

import numpy as np

from .model import Model, ModelConfig, init_params

MAGIC = b"LTCKPT01"
_HEADER = "<8s9I"


class CheckpointError(Exception):
    pass


def _ordered_names(cfg: ModelConfig) -> list[str]:
    return list(init_params(cfg).keys())


def save_model(path, model: Model) -> None:
    cfg = model.cfg
    with open(path, "wb") as fh:
        fh.write(struct.pack(_HEADER, MAGIC, cfg.in_channels, cfg.max_len,
                             cfg.init_channels, cfg.n_blocks, cfg.growth,
                             cfg.kernel, cfg.hidden, cfg.tvec_len, cfg.seed))
        for name in _ordered_names(cfg):
            arr = np.asarray(model.params[name], dtype="<f8")
            fh.write(struct.pack("<I", arr.ndim))
            fh.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
            fh.write(arr.tobytes())


def load_model(path) -> Model:
    with open(path, "rb") as fh:
        head = fh.read(struct.calcsize(_HEADER))
        if len(head) != struct.calcsize(_HEADER):
            raise CheckpointError("truncated header")
        magic, *fields = struct.unpack(_HEADER, head)
        if magic != MAGIC:
            raise CheckpointError(f"bad magic {magic!r}")
        cfg = ModelConfig(in_channels=fields[0], max_len=fields[1],
                          init_channels=fields[2], n_blocks=fields[3],
                          growth=fields[4], kernel=fields[5], hidden=fields[6],
                          tvec_len=fields[7], seed=fields[8])
        expected = init_params(cfg)
        params = {}
        for name in _ordered_names(cfg):
            raw_ndim = fh.read(4)
            if len(raw_ndim) != 4:
                raise CheckpointError(f"tensor {name}: truncated shape header")
            (ndim,) = struct.unpack("<I", raw_ndim)
            raw_shape = fh.read(4 * ndim)
            if len(raw_shape) != 4 * ndim:
                raise CheckpointError(f"tensor {name}: truncated shape header")
            shape = struct.unpack(f"<{ndim}I", raw_shape)
            if shape != expected[name].shape:
                raise CheckpointError(
                    f"tensor {name}: shape {shape} does not match "
                    f"architecture-derived {expected[name].shape}")
            count = int(np.prod(shape)) if shape else 1
            raw = fh.read(8 * count)
            if len(raw) != 8 * count:
                raise CheckpointError(f"tensor {name}: truncated data")
            params[name] = np.frombuffer(raw, dtype="<f8").reshape(shape).copy()
    return Model(cfg, params)
