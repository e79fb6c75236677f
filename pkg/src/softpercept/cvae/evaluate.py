"""Prediction, held-out RMSE and a latency harness."""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass

import numpy as np

from ..fingersim.dataset import Dataset
from ..fingersim.frames import Frames
from .model import LatentSample, PerceptionModel, PredictedState


@dataclass
class Prediction:
    state: PredictedState
    latent: LatentSample
    conditioned: np.ndarray
    elapsed_ms: float


def predict(
    model: PerceptionModel,
    frames: Frames,
    actions: np.ndarray | None = None,
    mean_mode: bool = False,
    rng: np.random.Generator | None = None,
) -> Prediction:
    """encode -> condition -> decode.  ``actions`` defaults to the recorded ones."""
    t0 = time.perf_counter()
    latent = model.encode(frames, rng=rng, mean_mode=mean_mode)
    a = frames.a if actions is None else np.broadcast_to(np.asarray(actions, np.float32), (len(frames), 3))
    zc = model.condition(latent.z, a)
    state = model.decode(zc)
    return Prediction(state, latent, zc, 1e3 * (time.perf_counter() - t0))


def targets(frames_t: Frames, frames_next: Frames) -> dict[str, np.ndarray]:
    """Physical next-state targets; the flow t->t+1 lives with frame t."""
    return {"proprio": frames_next.proprio, "force": frames_next.f, "flow": frames_t.flow}


def rmse_table(pred: PredictedState, target: dict[str, np.ndarray], outputs) -> dict[str, dict]:
    """Pooled RMSE plus per-frame RMSE mean/std for each output modality."""
    table = {}
    for m in outputs:
        p = np.asarray(pred.get(m), np.float64)
        t = np.asarray(target[m], np.float64)
        err = (p - t).reshape(len(p), -1) ** 2
        per_frame = np.sqrt(err.mean(axis=1))
        table[m] = {
            "rmse": float(np.sqrt(err.mean())),
            "frame_mean": float(per_frame.mean()),
            "frame_std": float(per_frame.std()),
            "n": int(len(p)),
        }
    return table


def eval_rmse(
    model: PerceptionModel,
    data: Dataset,
    episodes=None,
    mean_mode: bool = True,
    seed: int = 0,
    batch: int = 256,
) -> dict[str, dict]:
    """RMSE of next-state predictions over all within-episode pairs of ``episodes``.

    ``episodes=None`` uses the validation split of the model's config.
    """
    if episodes is None:
        _, episodes = data.split(model.cfg.val_fraction)
    src, dst = data.pairs(episodes)
    if len(src) == 0:
        raise ValueError("evaluation split has no (t, t+1) pairs")
    rng = np.random.default_rng(seed)
    parts = {m: [] for m in model.cfg.outputs}
    for lo in range(0, len(src), batch):
        x = data.frames[src[lo : lo + batch]]
        out = predict(model, x, mean_mode=mean_mode, rng=rng).state
        for m in parts:
            parts[m].append(out.get(m))
    pred = PredictedState(**{m: np.concatenate(v) for m, v in parts.items()})
    return rmse_table(pred, targets(data.frames[src], data.frames[dst]), model.cfg.outputs)


def write_rmse_csv(table: dict[str, dict], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["modality", "rmse", "frame_mean", "frame_std", "n"])
        for m, r in table.items():
            w.writerow([m, repr(r["rmse"]), repr(r["frame_mean"]), repr(r["frame_std"]), r["n"]])


def time_predictions(model: PerceptionModel, frame: Frames, calls: int = 100) -> dict:
    """Wall-clock per single-frame prediction; informational only."""
    ms = np.empty(calls)
    for i in range(calls):
        ms[i] = predict(model, frame[:1], mean_mode=True).elapsed_ms
    return {"calls": calls, "mean_ms": float(ms.mean()), "std_ms": float(ms.std())}
