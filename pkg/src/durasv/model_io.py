"""Versioned binary container for model parameters.

Layout: 8 magic bytes, u16 format version, u32-length-prefixed JSON
config, u32 tensor count, then per tensor a u16-length-prefixed name, a
u8 rank, u64 dimensions, and raw little-endian float64 data, all in
declaration order. Loading is bitwise lossless.
"""

from __future__ import annotations

import json
import struct
from pathlib import Path

import numpy as np

from .errors import CorruptPayloadError, FormatVersionError
from .model import ModelConfig, ModelParams

MAGIC = b"DURASVM\x00"
FORMAT_VERSION = 1


def save_model(params: ModelParams, path: str | Path) -> None:
    cfg = params.config
    config_json = json.dumps(
        {
            "n_classes": cfg.n_classes,
            "n_speakers": cfg.n_speakers,
            "proj_dim": cfg.proj_dim,
            "encoder_channels": cfg.encoder_channels,
            "n_blocks": cfg.n_blocks,
            "dilations": list(cfg.dilations),
            "kernel_width": cfg.kernel_width,
            "embed_dim": cfg.embed_dim,
            "attention_hidden": cfg.attention_hidden,
        },
        sort_keys=True,
    ).encode("utf-8")

    with open(path, "wb") as sink:
        sink.write(MAGIC)
        sink.write(struct.pack("<H", FORMAT_VERSION))
        sink.write(struct.pack("<I", len(config_json)))
        sink.write(config_json)
        sink.write(struct.pack("<I", len(params.tensors)))
        for name, tensor in params.tensors.items():
            encoded = name.encode("utf-8")
            sink.write(struct.pack("<H", len(encoded)))
            sink.write(encoded)
            sink.write(struct.pack("<B", tensor.ndim))
            for dim in tensor.shape:
                sink.write(struct.pack("<Q", dim))
            sink.write(np.ascontiguousarray(tensor, dtype="<f8").tobytes())


def load_model(path: str | Path) -> ModelParams:
    data = Path(path).read_bytes()
    view = memoryview(data)
    pos = 0

    def take(n: int) -> memoryview:
        nonlocal pos
        if pos + n > len(view):
            raise CorruptPayloadError(f"model file truncated at byte {pos}")
        out = view[pos : pos + n]
        pos += n
        return out

    if bytes(take(len(MAGIC))) != MAGIC:
        raise CorruptPayloadError("bad magic bytes, not a model file")
    (version,) = struct.unpack("<H", take(2))
    if version != FORMAT_VERSION:
        raise FormatVersionError(version, FORMAT_VERSION)
    (config_len,) = struct.unpack("<I", take(4))
    try:
        config_data = json.loads(bytes(take(config_len)).decode("utf-8"))
        config = ModelConfig(
            n_classes=config_data["n_classes"],
            n_speakers=config_data["n_speakers"],
            proj_dim=config_data["proj_dim"],
            encoder_channels=config_data["encoder_channels"],
            n_blocks=config_data["n_blocks"],
            dilations=tuple(config_data["dilations"]),
            kernel_width=config_data["kernel_width"],
            embed_dim=config_data["embed_dim"],
            attention_hidden=config_data["attention_hidden"],
        )
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise CorruptPayloadError(f"unreadable model config: {exc}") from exc

    (n_tensors,) = struct.unpack("<I", take(4))
    tensors: dict[str, np.ndarray] = {}
    for _ in range(n_tensors):
        (name_len,) = struct.unpack("<H", take(2))
        name = bytes(take(name_len)).decode("utf-8")
        (ndim,) = struct.unpack("<B", take(1))
        shape = tuple(struct.unpack("<Q", take(8))[0] for _ in range(ndim))
        count = int(np.prod(shape)) if shape else 1
        raw = take(count * 8)
        tensors[name] = np.frombuffer(raw, dtype="<f8").astype(
            np.float64, copy=True
        ).reshape(shape)
    if pos != len(view):
        raise CorruptPayloadError(f"{len(view) - pos} trailing bytes after payload")
    return ModelParams(config, tensors)
