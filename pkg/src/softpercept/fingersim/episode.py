"""Random-actuation episodes sampled at 10 Hz."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from ..rng import stream
from .config import SceneConfig, random_scene
from .frames import Frames
from .render import COLORS, compute_flow, rasterize, scene_geometry
from .settle import settle

log = logging.getLogger(__name__)

RATE_HZ = 10


@dataclass
class Episode:
    scene: SceneConfig
    seed: int
    frames: Frames
    times: np.ndarray  # frame index within the episode for each kept frame
    dropped: list[int] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.frames)


def frames_for(duration: float) -> int:
    n = int(round(duration * RATE_HZ))
    if n <= 0:
        raise ValueError(f"duration must give at least one frame, got {duration} s")
    return n


def generate_episode(scene: SceneConfig, duration: float, seed: int, n_frames: int | None = None) -> Episode:
    """Simulate ``duration`` seconds of uniformly random arm increments.

    Starts at ``scene.home`` with a straight finger.  Frame t stores the
    settled state at t, the action commanded at t and the flow towards
    t+1.  States whose equilibrium solve does not converge are dropped.
    """
    if duration <= 0:
        raise ValueError(f"duration must be positive, got {duration}")
    n = frames_for(duration) if n_frames is None else int(n_frames)
    if n <= 0:
        raise ValueError("episode needs at least one frame")
    rng = stream(seed, "sim", 1)
    bounds = np.asarray(scene.action_bounds)
    lo, hi = np.asarray(scene.q_min), np.asarray(scene.q_max)

    q_r = np.asarray(scene.home, dtype=np.float64)
    state = settle(q_r, scene)
    geom = scene_geometry(q_r, state.q_f, scene)
    labels, _ = rasterize(geom)

    rows = {k: [] for k in ("q_f", "q_r", "f", "v", "flow", "a")}
    times, dropped = [], []
    ok = state.converged
    for t in range(n):
        a = rng.uniform(-bounds, bounds)
        q_next = np.clip(q_r + a, lo, hi)
        nxt = settle(q_next, scene, q_init=state.q_f)
        geom_next = scene_geometry(q_next, nxt.q_f, scene)
        flow = compute_flow(geom, geom_next)
        if ok:
            rows["q_f"].append(state.q_f)
            rows["q_r"].append(q_r)
            rows["f"].append(state.forces)
            rows["v"].append(COLORS[labels])
            rows["flow"].append(flow)
            rows["a"].append(a)
            times.append(t)
        else:
            dropped.append(t)
            log.info("episode seed %d: dropped frame %d (settle did not converge)", seed, t)
        q_r, state, geom = q_next, nxt, geom_next
        labels, _ = rasterize(geom)
        ok = state.converged

    if rows["q_f"]:
        frames = Frames(**{k: np.stack(v) for k, v in rows.items()})
    else:
        frames = Frames.empty()
    return Episode(scene, seed, frames, np.asarray(times, dtype=np.int64), dropped)


def generate_dataset(n_frames: int, seed: int, duration: float = 10.0, base: SceneConfig | None = None) -> list[Episode]:
    """Episodes with independently randomised box layouts until ``n_frames``
    simulated frames exist (the last episode is shortened)."""
    if n_frames <= 0:
        raise ValueError(f"n_frames must be positive, got {n_frames}")
    per = frames_for(duration)
    episodes = []
    done, e = 0, 0
    while done < n_frames:
        scene = random_scene(stream(seed, "sim", e, 0), base)
        count = min(per, n_frames - done)
        episodes.append(generate_episode(scene, count / RATE_HZ, _episode_seed(seed, e), n_frames=count))
        done += count
        e += 1
    return episodes


def _episode_seed(seed: int, index: int) -> int:
    return int(stream(seed, "sim", index, 2).integers(0, 2**63 - 1))


__all__ = ["Episode", "RATE_HZ", "frames_for", "generate_dataset", "generate_episode"]
