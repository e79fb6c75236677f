"""Checkpoint directory: ``model.json`` + little-endian f32 ``weights.bin``."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .config import ModalityConfig
from .model import Normalizer, PerceptionModel

FORMAT = 1


class CheckpointError(Exception):
    pass


def save_checkpoint(model: PerceptionModel, path, rng_state: dict | None = None, extra: dict | None = None) -> Path:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    arrays = model.arrays()
    meta = {
        "format": FORMAT,
        "config": model.cfg.to_dict(),
        "step": int(model.step),
        "rng_state": rng_state,
        "tensors": [{"name": k, "shape": list(v.shape)} for k, v in arrays.items()],
    }
    if extra:
        meta["extra"] = extra
    (path / "model.json").write_text(json.dumps(meta, indent=1, sort_keys=True), encoding="utf-8")
    with open(path / "weights.bin", "wb") as fh:
        for v in arrays.values():
            fh.write(np.ascontiguousarray(v, dtype="<f4").tobytes())
    return path


def load_checkpoint(path) -> PerceptionModel:
    path = Path(path)
    try:
        meta = json.loads((path / "model.json").read_text(encoding="utf-8"))
        blob = (path / "weights.bin").read_bytes()
    except FileNotFoundError as exc:
        raise CheckpointError(f"{path}: {exc.strerror}: {exc.filename}") from None
    if meta.get("format") != FORMAT:
        raise CheckpointError(f"{path}: unsupported checkpoint format {meta.get('format')}")
    cfg = ModalityConfig.from_dict(meta["config"])
    flat = np.frombuffer(blob, dtype="<f4")
    total = sum(int(np.prod(t["shape"])) for t in meta["tensors"])
    if flat.size != total:
        raise CheckpointError(f"{path}: weights.bin holds {flat.size} floats, model.json lists {total}")
    arrays, pos = {}, 0
    for t in meta["tensors"]:
        size = int(np.prod(t["shape"]))
        arrays[t["name"]] = flat[pos : pos + size].reshape(t["shape"]).astype(np.float32)
        pos += size
    model = PerceptionModel(cfg, Normalizer.from_arrays(arrays))
    missing = [k for k in model.params if k not in arrays]
    if missing:
        raise CheckpointError(f"{path}: missing tensors {missing}")
    for k, p in model.params.items():
        if arrays[k].shape != p.data.shape:
            raise CheckpointError(f"{path}: tensor {k} has shape {arrays[k].shape}, expected {p.data.shape}")
        p.data = arrays[k].copy()
    model.step = int(meta.get("step", 0))
    model.meta = meta
    return model
