"""Conditional VAE with modality-specific encoders/decoders and late fusion.

Data flow::

    proprio --MLP--\\
    force   --MLP---+--> fusion MLP --> (mu, logvar) --sample--> z
    vision  --CNN--/
    [z ; action] --MLP--> z_c --> proprio / force / flow decoders
"""

from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass

import numpy as np

from .. import numerics as nx
from ..fingersim.frames import Frames
from ..rng import stream
from .config import ModalityConfig

N_PROPRIO = 23
N_FORCE = 20
N_ACTION = 3
ENC_WIDTH = 32
VISION_WIDTH = 64
HIDDEN = 64
KERNEL = 4


class MissingModalityError(ValueError):
    pass


@dataclass
class LatentSample:
    mu: np.ndarray
    logvar: np.ndarray
    z: np.ndarray


@dataclass
class PredictedState:
    proprio: np.ndarray | None = None
    force: np.ndarray | None = None
    flow: np.ndarray | None = None

    def get(self, name: str) -> np.ndarray | None:
        return getattr(self, name)


@dataclass
class Normalizer:
    """Fixed affine maps between physical and network units."""

    proprio_mean: np.ndarray
    proprio_std: np.ndarray
    force_scale: np.ndarray  # scalar; forces are only scaled so zero stays zero
    flow_scale: np.ndarray  # scalar
    action_scale: np.ndarray

    @classmethod
    def fit(cls, frames: Frames, action_bounds) -> "Normalizer":
        p = frames.proprio.astype(np.float64)
        return cls(
            proprio_mean=p.mean(0).astype(np.float32),
            proprio_std=np.maximum(p.std(0), 1e-3).astype(np.float32),
            force_scale=np.float32(max(float(np.sqrt(np.mean(frames.f.astype(np.float64) ** 2))), 1e-6)).reshape(()),
            flow_scale=np.float32(max(float(np.sqrt(np.mean(frames.flow.astype(np.float64) ** 2))), 1e-6)).reshape(()),
            action_scale=np.maximum(np.asarray(action_bounds, dtype=np.float32), 1e-6),
        )

    @classmethod
    def identity(cls) -> "Normalizer":
        return cls(
            np.zeros(N_PROPRIO, np.float32),
            np.ones(N_PROPRIO, np.float32),
            np.ones((), np.float32),
            np.ones((), np.float32),
            np.ones(N_ACTION, np.float32),
        )

    def arrays(self) -> dict[str, np.ndarray]:
        return {f"stats.{k}": np.asarray(v, np.float32) for k, v in self.__dict__.items()}

    @classmethod
    def from_arrays(cls, arrays: dict[str, np.ndarray]) -> "Normalizer":
        return cls(**{k[len("stats.") :]: v for k, v in arrays.items() if k.startswith("stats.")})


# ----------------------------------------------------------------------------
# parameter construction


def _glorot(rng, fan_in, fan_out, shape):
    lim = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-lim, lim, size=shape)


def _he(rng, fan_in, shape):
    return rng.standard_normal(shape) * np.sqrt(2.0 / fan_in)


class PerceptionModel:
    def __init__(self, cfg: ModalityConfig, stats: Normalizer | None = None, seed: int = 0):
        self.cfg = cfg
        self.stats = stats or Normalizer.identity()
        self.params: OrderedDict[str, nx.Tensor] = OrderedDict()
        self.step = 0
        self._init_params(stream(seed, "init"))

    # -- construction ---------------------------------------------------------

    def _add(self, name, value):
        self.params[name] = nx.Tensor(np.asarray(value, dtype=np.float32), requires_grad=True, name=name)

    def _dense(self, rng, name, n_in, n_out, relu=False):
        w = _he(rng, n_in, (n_in, n_out)) if relu else _glorot(rng, n_in, n_out, (n_in, n_out))
        self._add(f"{name}.w", w)
        self._add(f"{name}.b", np.zeros(n_out))

    def _conv(self, rng, name, c_in, c_out):
        self._add(f"{name}.w", _he(rng, KERNEL * KERNEL * c_in, (KERNEL, KERNEL, c_in, c_out)))
        self._add(f"{name}.b", np.zeros(c_out))

    def _tconv(self, rng, name, c_in, c_out, relu=True):
        # each output pixel collects (KERNEL / stride)^2 input taps
        fan_in = (KERNEL // 2) ** 2 * c_in
        shape = (KERNEL, KERNEL, c_out, c_in)
        w = _he(rng, fan_in, shape) if relu else _glorot(rng, fan_in, (KERNEL // 2) ** 2 * c_out, shape)
        self._add(f"{name}.w", w)
        self._add(f"{name}.b", np.zeros(c_out))

    def _init_params(self, rng):
        cfg, d = self.cfg, self.cfg.latent_dim
        fused = 0
        if "proprio" in cfg.inputs:
            self._dense(rng, "enc.proprio.0", N_PROPRIO, HIDDEN)
            self._dense(rng, "enc.proprio.1", HIDDEN, ENC_WIDTH)
            fused += ENC_WIDTH
        if "force" in cfg.inputs:
            self._dense(rng, "enc.force.0", N_FORCE, HIDDEN)
            self._dense(rng, "enc.force.1", HIDDEN, ENC_WIDTH)
            fused += ENC_WIDTH
        if "vision" in cfg.inputs:
            self._conv(rng, "enc.vision.c0", 3, 8)
            self._conv(rng, "enc.vision.c1", 8, 16)
            self._conv(rng, "enc.vision.c2", 16, 32)
            self._dense(rng, "enc.vision.fc", 8 * 8 * 32, VISION_WIDTH, relu=True)
            fused += VISION_WIDTH
        self._dense(rng, "fusion.0", fused, HIDDEN)
        self._dense(rng, "fusion.mu", HIDDEN, d)
        self._dense(rng, "fusion.logvar", HIDDEN, d)
        self._dense(rng, "cond.0", d + N_ACTION, d)
        self._dense(rng, "cond.1", d, d)
        if "proprio" in cfg.outputs:
            self._dense(rng, "dec.proprio.0", d, HIDDEN)
            self._dense(rng, "dec.proprio.1", HIDDEN, N_PROPRIO)
        if "force" in cfg.outputs:
            self._dense(rng, "dec.force.0", d, HIDDEN)
            self._dense(rng, "dec.force.1", HIDDEN, N_FORCE)
        if "flow" in cfg.outputs:
            self._dense(rng, "dec.flow.fc", d, 8 * 8 * 32, relu=True)
            self._tconv(rng, "dec.flow.t0", 32, 16)
            self._tconv(rng, "dec.flow.t1", 16, 8)
            self._tconv(rng, "dec.flow.t2", 8, 2, relu=False)

    # -- graph pieces ---------------------------------------------------------

    def _lin(self, x, name):
        return x @ self.params[f"{name}.w"] + self.params[f"{name}.b"]

    def _cv(self, x, name):
        return nx.relu(nx.conv2d(x, self.params[f"{name}.w"], stride=2, padding=1) + self.params[f"{name}.b"])

    def _tcv(self, x, name):
        return nx.conv_transpose2d(x, self.params[f"{name}.w"], stride=2, padding=1) + self.params[f"{name}.b"]

    def encode_graph(self, inputs: dict[str, np.ndarray]):
        """(mu, logvar) tensors from normalised inputs."""
        parts = []
        if "proprio" in self.cfg.inputs:
            h = nx.tanh(self._lin(nx.Tensor(inputs["proprio"]), "enc.proprio.0"))
            parts.append(nx.tanh(self._lin(h, "enc.proprio.1")))
        if "force" in self.cfg.inputs:
            h = nx.tanh(self._lin(nx.Tensor(inputs["force"]), "enc.force.0"))
            parts.append(nx.tanh(self._lin(h, "enc.force.1")))
        if "vision" in self.cfg.inputs:
            v = nx.Tensor(inputs["vision"])
            h = self._cv(self._cv(self._cv(v, "enc.vision.c0"), "enc.vision.c1"), "enc.vision.c2")
            h = h.reshape(h.shape[0], -1)
            parts.append(nx.relu(self._lin(h, "enc.vision.fc")))
        fused = parts[0] if len(parts) == 1 else nx.concat(parts, axis=1)
        h = nx.tanh(self._lin(fused, "fusion.0"))
        return self._lin(h, "fusion.mu"), self._lin(h, "fusion.logvar")

    def condition_graph(self, z, action_norm):
        h = nx.tanh(self._lin(nx.concat([z, nx.as_tensor(action_norm)], axis=1), "cond.0"))
        return self._lin(h, "cond.1")

    def decode_graph(self, zc) -> dict[str, nx.Tensor]:
        out = {}
        if "proprio" in self.cfg.outputs:
            out["proprio"] = self._lin(nx.tanh(self._lin(zc, "dec.proprio.0")), "dec.proprio.1")
        if "force" in self.cfg.outputs:
            out["force"] = nx.softplus(self._lin(nx.tanh(self._lin(zc, "dec.force.0")), "dec.force.1"))
        if "flow" in self.cfg.outputs:
            h = nx.relu(self._lin(zc, "dec.flow.fc")).reshape(zc.shape[0], 8, 8, 32)
            h = nx.relu(self._tcv(h, "dec.flow.t0"))
            h = nx.relu(self._tcv(h, "dec.flow.t1"))
            out["flow"] = self._tcv(h, "dec.flow.t2")
        return out

    @staticmethod
    def sample_graph(mu, logvar, eps: np.ndarray):
        return mu + nx.exp(logvar * 0.5) * nx.Tensor(eps)

    # -- normalisation --------------------------------------------------------

    def normalize_inputs(self, frames: Frames) -> dict[str, np.ndarray]:
        s = self.stats
        out = {}
        for m in self.cfg.inputs:
            if m == "proprio":
                out[m] = (frames.proprio - s.proprio_mean) / s.proprio_std
            elif m == "force":
                out[m] = frames.f / s.force_scale
            elif m == "vision":
                out[m] = frames.v
        return out

    def check_inputs(self, frames: Frames):
        for m, arr in (("proprio", frames.q_f), ("force", frames.f), ("vision", frames.v)):
            if m in self.cfg.inputs and (arr is None or not np.all(np.isfinite(arr))):
                raise MissingModalityError(f"frame is missing configured input modality {m!r}")

    def normalize_targets(self, frames: Frames) -> dict[str, np.ndarray]:
        s = self.stats
        out = {}
        for m in self.cfg.outputs:
            if m == "proprio":
                out[m] = (frames.proprio - s.proprio_mean) / s.proprio_std
            elif m == "force":
                out[m] = frames.f / s.force_scale
            elif m == "flow":
                out[m] = frames.flow / s.flow_scale
        return out

    def normalize_action(self, a: np.ndarray) -> np.ndarray:
        return np.asarray(a, np.float32) / self.stats.action_scale

    def denormalize(self, outputs: dict[str, np.ndarray]) -> PredictedState:
        s = self.stats
        state = PredictedState()
        if "proprio" in outputs:
            state.proprio = outputs["proprio"] * s.proprio_std + s.proprio_mean
        if "force" in outputs:
            state.force = outputs["force"] * s.force_scale
        if "flow" in outputs:
            state.flow = outputs["flow"] * s.flow_scale
        return state

    # -- array-level API ------------------------------------------------------

    def encode(self, frames: Frames, rng: np.random.Generator | None = None, mean_mode: bool = False) -> LatentSample:
        self.check_inputs(frames)
        with nx.no_grad():
            mu, logvar = self.encode_graph(self.normalize_inputs(frames))
        mu, logvar = mu.data, logvar.data
        if mean_mode:
            z = mu.copy()
        else:
            rng = rng if rng is not None else np.random.default_rng()
            eps = rng.standard_normal(mu.shape).astype(np.float32)
            z = mu + np.exp(0.5 * logvar) * eps
        return LatentSample(mu, logvar, z)

    def condition(self, z: np.ndarray, actions: np.ndarray) -> np.ndarray:
        with nx.no_grad():
            zc = self.condition_graph(nx.Tensor(z), self.normalize_action(np.atleast_2d(actions)))
        return zc.data

    def decode(self, zc: np.ndarray) -> PredictedState:
        with nx.no_grad():
            out = self.decode_graph(nx.Tensor(zc))
        return self.denormalize({k: v.data for k, v in out.items()})

    # -- parameters -----------------------------------------------------------

    def arrays(self) -> OrderedDict[str, np.ndarray]:
        """Parameters then normalisation statistics, in checkpoint order."""
        out = OrderedDict((k, p.data) for k, p in self.params.items())
        out.update(self.stats.arrays())
        return out

    def n_parameters(self) -> int:
        return sum(p.data.size for p in self.params.values())
