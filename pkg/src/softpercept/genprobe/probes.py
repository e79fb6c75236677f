"""Probes of the generative behaviour of a trained model."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from ..cvae.evaluate import predict, targets
from ..cvae.model import PerceptionModel, PredictedState
from ..fingersim.dataset import Dataset
from ..fingersim.frames import Frames
from ..rng import stream
from .warp import advect

KINDS = ("resample", "action-null", "action-random", "synthetic-latent", "action-sweep", "rollout")


class ProbeConfigError(ValueError):
    pass


@dataclass
class ProbeReport:
    kind: str
    config: dict
    trials: dict  # modality -> per-trial RMSE list
    summary: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown probe kind {self.kind!r}")
        for m, vals in self.trials.items():
            v = np.asarray(vals, np.float64)
            self.summary[m] = {
                "mean": float(v.mean()) if v.size else None,
                # a spread needs at least two trials
                "std": (0.0 if np.ptp(v) == 0 else float(v.std())) if v.size >= 2 else None,
            }

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True)


def _rmse(pred: PredictedState, ref: dict, outputs) -> dict:
    """Per-sample RMSE for each output modality, shape (N,)."""
    out = {}
    for m in outputs:
        if ref.get(m) is None:
            continue
        d = np.asarray(pred.get(m), np.float64) - np.asarray(ref[m], np.float64)
        out[m] = np.sqrt(np.mean(d.reshape(len(d), -1) ** 2, axis=1))
    return out


def _decode_latents(model: PerceptionModel, z: np.ndarray, actions: np.ndarray) -> PredictedState:
    # row by row: BLAS results depend on batch size, and probes compare
    # draws bit for bit against single-frame predictions
    z = np.asarray(z, np.float32)
    actions = np.asarray(actions, np.float32)
    rows = [model.decode(model.condition(z[i : i + 1], actions[i : i + 1])) for i in range(len(z))]
    return PredictedState(**{m: np.concatenate([r.get(m) for r in rows]) for m in model.cfg.outputs})


def resample_stability(
    model: PerceptionModel,
    frame: Frames,
    next_frame: Frames,
    action=None,
    k: int = 100,
    seed: int = 0,
    logvar_override: float | None = None,
) -> ProbeReport:
    """Encode once, decode K draws from the posterior, score each draw."""
    if k < 1:
        raise ValueError(f"need at least one trial, got k={k}")
    frame, next_frame = frame[:1], next_frame[:1]
    lat = model.encode(frame, mean_mode=True)
    logvar = lat.logvar if logvar_override is None else np.full_like(lat.logvar, logvar_override)
    eps = stream(seed, "probe", 0).standard_normal((k, lat.mu.shape[1]))
    std = np.exp(0.5 * logvar.astype(np.float64))
    z = lat.mu + std * eps
    a = frame.a if action is None else np.asarray(action, np.float32).reshape(1, 3)
    pred = _decode_latents(model, z, np.repeat(a, k, axis=0))
    ref = {m: np.repeat(v, k, axis=0) for m, v in targets(frame, next_frame).items()}
    trials = {m: v.tolist() for m, v in _rmse(pred, ref, model.cfg.outputs).items()}
    return ProbeReport("resample", {"k": k, "seed": seed, "logvar_override": logvar_override}, trials)


def action_perturbation(
    model: PerceptionModel,
    data: Dataset,
    episodes=None,
    bounds=None,
    seed: int = 0,
    max_frames: int | None = None,
) -> dict[str, ProbeReport]:
    """Predict every frame with a null action and with a uniform random one.

    Scores compare against the input frame's own sensors (``vs_input``, no
    motion expected) and against the recorded next frame (``vs_truth``).
    """
    if episodes is None:
        _, episodes = data.split(model.cfg.val_fraction)
    src, dst = data.pairs(episodes)
    if max_frames is not None:
        src, dst = src[:max_frames], dst[:max_frames]
    if len(src) == 0:
        raise ValueError("no frames to probe")
    x, y = data.frames[src], data.frames[dst]
    b = np.asarray(data.manifest["scene"]["action_bounds"] if bounds is None else bounds, np.float64)
    rand = stream(seed, "probe", 1).uniform(-1.0, 1.0, (len(src), 3)) * b
    own = {"proprio": x.proprio, "force": x.f, "flow": np.zeros_like(x.flow)}
    truth = targets(x, y)
    cfg = {"frames": int(len(src)), "bounds": b.tolist(), "seed": seed, "mean_mode": True}
    out = {}
    for kind, actions in (("action-null", np.zeros((len(src), 3))), ("action-random", rand)):
        pred = predict(model, x, actions=actions.astype(np.float32), mean_mode=True).state
        vs_input = _rmse(pred, own, model.cfg.outputs)
        vs_truth = _rmse(pred, truth, model.cfg.outputs)
        extra = {"vs_truth": {m: float(v.mean()) for m, v in vs_truth.items()}}
        if pred.flow is not None:
            extra["mean_flow_magnitude"] = float(np.mean(np.linalg.norm(pred.flow.astype(np.float64), axis=-1)))
        out[kind] = ProbeReport(kind, dict(cfg), {m: v.tolist() for m, v in vs_input.items()}, extra=extra)
    return out


def synthetic_latent(
    model: PerceptionModel,
    frame: Frames,
    action=None,
    sigma: float = 1.0,
    draws: int = 100,
    seed: int = 0,
    mode: str = "noise",
) -> ProbeReport:
    """Decode z' = mu + sigma * eps (``noise``) or z' ~ N(0, I) (``prior``).

    Trials hold the deviation from the mean-mode baseline prediction.
    The same eps is used for every sigma at a given seed.
    """
    if sigma < 0:
        raise ValueError(f"sigma must be >= 0, got {sigma}")
    if mode not in ("noise", "prior"):
        raise ValueError(f"mode must be 'noise' or 'prior', got {mode!r}")
    frame = frame[:1]
    a = frame.a if action is None else np.asarray(action, np.float32).reshape(1, 3)
    mu = model.encode(frame, mean_mode=True).mu.astype(np.float64)
    base = _decode_latents(model, mu, a)
    eps = stream(seed, "probe", 2).standard_normal((draws, mu.shape[1]))
    z = eps if mode == "prior" else mu + sigma * eps
    pred = _decode_latents(model, z, np.repeat(a, draws, axis=0))
    ref = {m: np.repeat(base.get(m), draws, axis=0) for m in model.cfg.outputs}
    trials = {m: v.tolist() for m, v in _rmse(pred, ref, model.cfg.outputs).items()}
    extra = {}
    if pred.force is not None:
        extra["min_force"] = float(pred.force.min())
    extra["finite"] = bool(all(np.all(np.isfinite(pred.get(m))) for m in model.cfg.outputs))
    cfg = {"sigma": sigma, "draws": draws, "seed": seed, "mode": mode}
    return ProbeReport("synthetic-latent", cfg, trials, extra=extra), pred


def default_grid(bounds, shape=(11, 5, 5)) -> tuple[np.ndarray, ...]:
    return tuple(np.linspace(-b, b, n) for b, n in zip(bounds, shape))


def action_sweep(model: PerceptionModel, frame: Frames, grid) -> dict:
    """Mean-mode latent of one frame decoded under every action of a 3-D grid."""
    frame = frame[:1]
    axes = [np.asarray(g, np.float32).ravel() for g in grid]
    if len(axes) != 3:
        raise ValueError("grid needs one axis per action component")
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    actions = mesh.reshape(-1, 3)
    mu = model.encode(frame, mean_mode=True).mu
    pred = _decode_latents(model, np.repeat(mu, len(actions), axis=0), actions)
    shape = tuple(len(a) for a in axes)
    out = {"grid": [a.tolist() for a in axes], "actions": mesh, "count": int(len(actions))}
    for m in model.cfg.outputs:
        v = pred.get(m)
        out[m] = v.reshape(shape + v.shape[1:])
    return out


def check_rollout_config(model: PerceptionModel) -> None:
    need = {"proprio": "proprio", "vision": "flow", "force": "force"}
    missing = [f"{i} (needs {need[i]} output)" for i in model.cfg.inputs if need[i] not in model.cfg.outputs]
    if missing:
        raise ProbeConfigError(f"model outputs cannot rebuild its inputs: {', '.join(missing)}")


def next_input(frame: Frames, pred: PredictedState) -> Frames:
    """Feed predictions back: proprio and force replace, the image is advected by the flow."""
    changes = {}
    if pred.proprio is not None:
        changes["q_f"] = pred.proprio[:, :20]
        changes["q_r"] = pred.proprio[:, 20:]
    if pred.force is not None:
        changes["f"] = pred.force
    if pred.flow is not None:
        changes["v"] = np.stack([advect(v, fl) for v, fl in zip(frame.v, pred.flow)])
    return frame.replace(**changes)


def feedback_rollout(
    model: PerceptionModel,
    frame: Frames,
    actions,
    horizon: int = 3,
    mean_mode: bool = True,
    seed: int = 0,
) -> list[PredictedState]:
    """Iterate predict -> rebuild inputs from predictions for ``horizon`` steps."""
    check_rollout_config(model)
    if horizon < 1:
        raise ValueError(f"horizon must be >= 1, got {horizon}")
    actions = np.asarray(actions, np.float32).reshape(-1, 3)
    if len(actions) < horizon:
        raise ValueError(f"{len(actions)} actions for horizon {horizon}")
    rng = stream(seed, "sample", 1)
    cur = frame[:1]
    states = []
    for h in range(horizon):
        pred = predict(model, cur, actions=actions[h : h + 1], mean_mode=mean_mode, rng=rng).state
        states.append(pred)
        cur = next_input(cur, pred)
    return states


def rollout_drift(
    model: PerceptionModel,
    data: Dataset,
    start: int,
    horizon: int = 3,
    actions=None,
    mean_mode: bool = True,
    seed: int = 0,
) -> ProbeReport:
    """Per-step RMSE of a rollout against the recorded frames that follow ``start``.

    With ``actions=None`` the recorded actions are used and the truth is
    the recorded trajectory; zero actions compare against the start frame.
    """
    frames = data.frames
    ep = data.episode_of()
    end = start + horizon
    if end >= len(frames) or np.any(ep[start : end + 1] != ep[start]):
        raise ValueError(f"frames {start}..{end} do not lie in one episode")
    times = np.concatenate([np.asarray(e["times"]) for e in data.episodes])
    if np.any(np.diff(times[start : end + 1]) != 1):
        raise ValueError(f"frames {start}..{end} are not consecutive (dropped frame)")
    null = actions is not None and not np.any(actions)
    acts = frames.a[start:end] if actions is None else np.asarray(actions, np.float32).reshape(-1, 3)
    states = feedback_rollout(model, frames[start], acts, horizon, mean_mode, seed)
    trials = {m: [] for m in model.cfg.outputs}
    for h, s in enumerate(states):
        if null:
            ref = {"proprio": frames.proprio[start : start + 1], "force": frames.f[start : start + 1],
                   "flow": np.zeros_like(frames.flow[start : start + 1])}
        else:
            ref = targets(frames[start + h], frames[start + h + 1])
        for m, v in _rmse(s, ref, model.cfg.outputs).items():
            trials[m].append(float(v[0]))
    cfg = {"start": start, "horizon": horizon, "mean_mode": mean_mode, "seed": seed,
           "actions": "recorded" if actions is None else acts.tolist()}
    return ProbeReport("rollout", cfg, trials)
