"""On-disk dataset: ``manifest.json`` plus little-endian f32 ``frames.bin``.

``frames.bin`` starts with a 16-byte header (magic ``SPFRAMES``, schema
version and floats per record as little-endian u32) followed by
``frame_count`` fixed-size records.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .config import SceneConfig
from .episode import RATE_HZ, Episode
from .frames import DIMS, RECORD_BYTES, RECORD_FLOATS, Frames

SCHEMA_VERSION = 1
MAGIC = b"SPFRAMES"
HEADER = struct.Struct("<8sII")
HEADER_BYTES = HEADER.size


class DatasetFormatError(Exception):
    pass


class SchemaVersionError(DatasetFormatError):
    pass


class TruncatedDatasetError(DatasetFormatError):
    pass


class ShapeMismatchError(DatasetFormatError):
    pass


def expected_size(frame_count: int) -> int:
    return HEADER_BYTES + frame_count * RECORD_BYTES


@dataclass
class Dataset:
    manifest: dict
    frames: Frames

    def __len__(self) -> int:
        return len(self.frames)

    @property
    def episodes(self) -> list[dict]:
        return self.manifest["episodes"]

    def episode_of(self) -> np.ndarray:
        out = np.empty(len(self), dtype=np.int64)
        for k, ep in enumerate(self.episodes):
            out[ep["offset"] : ep["offset"] + len(ep["times"])] = k
        return out

    def pairs(self, episodes=None) -> tuple[np.ndarray, np.ndarray]:
        """Indices (t, t+1) of consecutive kept frames inside one episode."""
        chosen = range(len(self.episodes)) if episodes is None else episodes
        src, dst = [], []
        for k in chosen:
            ep = self.episodes[k]
            times = np.asarray(ep["times"])
            ok = np.flatnonzero(np.diff(times) == 1)
            src.append(ep["offset"] + ok)
            dst.append(ep["offset"] + ok + 1)
        if not src:
            return np.zeros(0, np.int64), np.zeros(0, np.int64)
        return np.concatenate(src).astype(np.int64), np.concatenate(dst).astype(np.int64)

    def split(self, val_fraction: float = 0.1) -> tuple[list[int], list[int]]:
        """Episode indices for training and validation (last episodes validate)."""
        n = len(self.episodes)
        n_val = int(round(n * val_fraction))
        if n >= 2:
            n_val = min(max(n_val, 1), n - 1)
        else:
            n_val = 0
        return list(range(n - n_val)), list(range(n - n_val, n))


def build_dataset(episodes: list[Episode], seed: int, base: SceneConfig | None = None) -> Dataset:
    offset = 0
    eps = []
    for ep in episodes:
        eps.append(
            {
                "seed": int(ep.seed),
                "offset": offset,
                "times": [int(t) for t in ep.times],
                "dropped": [int(t) for t in ep.dropped],
                "scene": ep.scene.to_dict(),
            }
        )
        offset += len(ep)
    frames = Frames.concat([ep.frames for ep in episodes]) if episodes else Frames.empty()
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "frame_count": len(frames),
        "dropped_frames": sum(len(ep.dropped) for ep in episodes),
        "dims": DIMS,
        "rate_hz": RATE_HZ,
        "seed": int(seed),
        "scene": (base or SceneConfig()).to_dict(),
        "episodes": eps,
    }
    return Dataset(manifest, frames)


def write_dataset(path, data: Dataset) -> Path:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    manifest = dict(data.manifest, frame_count=len(data.frames))
    (path / "manifest.json").write_text(json.dumps(manifest, indent=1, sort_keys=True), encoding="utf-8")
    rec = data.frames.to_records().astype("<f4", copy=False)
    with open(path / "frames.bin", "wb") as fh:
        fh.write(HEADER.pack(MAGIC, SCHEMA_VERSION, RECORD_FLOATS))
        fh.write(rec.tobytes(order="C"))
    return path


def read_dataset(path) -> Dataset:
    path = Path(path)
    try:
        manifest = json.loads((path / "manifest.json").read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise DatasetFormatError(f"{path}: no manifest.json") from None
    except json.JSONDecodeError as exc:
        raise DatasetFormatError(f"{path}: manifest is not valid JSON ({exc})") from None
    version = manifest.get("schema_version")
    if version != SCHEMA_VERSION:
        raise SchemaVersionError(f"{path}: schema version {version}, expected {SCHEMA_VERSION}")
    if manifest.get("dims") != DIMS:
        raise ShapeMismatchError(f"{path}: manifest dims {manifest.get('dims')} differ from {DIMS}")

    binfile = path / "frames.bin"
    if not binfile.exists():
        raise DatasetFormatError(f"{path}: no frames.bin")
    size = binfile.stat().st_size
    count = int(manifest["frame_count"])
    if size < HEADER_BYTES:
        raise TruncatedDatasetError(f"{binfile}: {size} bytes, shorter than the header")
    with open(binfile, "rb") as fh:
        magic, file_version, floats = HEADER.unpack(fh.read(HEADER_BYTES))
        if magic != MAGIC:
            raise DatasetFormatError(f"{binfile}: bad magic {magic!r}")
        if file_version != SCHEMA_VERSION:
            raise SchemaVersionError(f"{binfile}: schema version {file_version}, expected {SCHEMA_VERSION}")
        if floats != RECORD_FLOATS:
            raise ShapeMismatchError(f"{binfile}: {floats} floats per record, expected {RECORD_FLOATS}")
        if size < expected_size(count):
            raise TruncatedDatasetError(f"{binfile}: {size} bytes, manifest promises {expected_size(count)}")
        if size > expected_size(count):
            raise DatasetFormatError(f"{binfile}: {size - expected_size(count)} trailing bytes")
        rec = np.fromfile(fh, dtype="<f4", count=count * RECORD_FLOATS)
    frames = Frames.from_records(rec.reshape(count, RECORD_FLOATS).astype(np.float32, copy=False))
    kept = sum(len(ep["times"]) for ep in manifest.get("episodes", []))
    if manifest.get("episodes") is not None and kept != count:
        raise ShapeMismatchError(f"{path}: episodes list {kept} frames, manifest says {count}")
    return Dataset(manifest, frames)
