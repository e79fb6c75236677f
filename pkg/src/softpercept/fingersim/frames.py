"""Batched multi-modal frames and the fixed binary record layout."""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

from .config import N_ARM, N_LINKS

IMAGE = (64, 64, 3)
FLOW = (64, 64, 2)

# field order of one binary record
LAYOUT: tuple[tuple[str, tuple[int, ...]], ...] = (
    ("q_f", (N_LINKS,)),
    ("q_r", (N_ARM,)),
    ("f", (N_LINKS,)),
    ("v", IMAGE),
    ("flow", FLOW),
    ("a", (N_ARM,)),
)
DIMS = {"q_f": 20, "q_r": 3, "f": 20, "v": list(IMAGE), "flow": list(FLOW), "a": 3}
RECORD_FLOATS = sum(int(np.prod(shape)) for _, shape in LAYOUT)
RECORD_BYTES = 4 * RECORD_FLOATS


@dataclass
class Frames:
    """N frames; every field has leading axis N.

    ``flow[t]`` is the image motion from frame t to t+1 and ``a[t]`` the
    arm increment commanded at t.
    """

    q_f: np.ndarray
    q_r: np.ndarray
    f: np.ndarray
    v: np.ndarray
    flow: np.ndarray
    a: np.ndarray

    def __post_init__(self):
        n = None
        for name, shape in LAYOUT:
            arr = np.asarray(getattr(self, name), dtype=np.float32)
            if arr.shape[1:] != shape:
                raise ValueError(f"field {name}: expected (N, {shape}), got {arr.shape}")
            if n is None:
                n = arr.shape[0]
            elif arr.shape[0] != n:
                raise ValueError(f"field {name}: {arr.shape[0]} frames, expected {n}")
            setattr(self, name, arr)

    def __len__(self) -> int:
        return self.q_f.shape[0]

    def __getitem__(self, idx) -> "Frames":
        if isinstance(idx, (int, np.integer)):
            idx = slice(int(idx), int(idx) + 1) if idx != -1 else slice(-1, None)
        return Frames(**{f.name: getattr(self, f.name)[idx] for f in fields(self)})

    @property
    def proprio(self) -> np.ndarray:
        """Finger joints followed by arm joints, (N, 23)."""
        return np.concatenate([self.q_f, self.q_r], axis=1)

    def replace(self, **changes) -> "Frames":
        kw = {f.name: getattr(self, f.name) for f in fields(self)}
        kw.update(changes)
        return Frames(**kw)

    @classmethod
    def concat(cls, parts) -> "Frames":
        parts = list(parts)
        return cls(**{f.name: np.concatenate([getattr(p, f.name) for p in parts]) for f in fields(cls)})

    @classmethod
    def empty(cls, n: int = 0) -> "Frames":
        return cls(**{name: np.zeros((n,) + shape, np.float32) for name, shape in LAYOUT})

    def to_records(self) -> np.ndarray:
        n = len(self)
        return np.concatenate([getattr(self, name).reshape(n, -1) for name, _ in LAYOUT], axis=1)

    @classmethod
    def from_records(cls, rec: np.ndarray) -> "Frames":
        if rec.ndim != 2 or rec.shape[1] != RECORD_FLOATS:
            raise ValueError(f"records must be (N, {RECORD_FLOATS}), got {rec.shape}")
        out, col = {}, 0
        for name, shape in LAYOUT:
            size = int(np.prod(shape))
            out[name] = np.ascontiguousarray(rec[:, col : col + size]).reshape((-1,) + shape)
            col += size
        return cls(**out)
