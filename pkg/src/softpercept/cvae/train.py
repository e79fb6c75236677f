"""Self-supervised training on (t, t+1) pairs within episodes."""

from __future__ import annotations

import copy
import csv
import logging
import math
from dataclasses import dataclass

import numpy as np

from .. import numerics as nx
from ..fingersim.dataset import Dataset
from ..rng import stream
from .config import ModalityConfig
from .loss import elbo_loss
from .model import Normalizer, PerceptionModel

log = logging.getLogger(__name__)

LOG_FIELDS = ("epoch", "train_elbo", "val_elbo", "recon_proprio", "recon_force", "recon_flow", "kl")


class TrainingDiverged(FloatingPointError):
    def __init__(self, message: str, last_good: PerceptionModel, history: list[dict]):
        super().__init__(message)
        self.last_good = last_good
        self.history = history


@dataclass
class TrainResult:
    model: PerceptionModel
    history: list[dict]
    train_episodes: list[int]
    val_episodes: list[int]
    rng_state: dict


def action_bounds(data: Dataset) -> np.ndarray:
    return np.asarray(data.manifest["scene"]["action_bounds"], np.float32)


def init_model(data: Dataset, cfg: ModalityConfig, seed: int, train_episodes=None) -> PerceptionModel:
    """Fresh model whose normalisation is fitted on the training episodes."""
    if train_episodes is None:
        train_episodes, _ = data.split(cfg.val_fraction)
    src, dst = data.pairs(train_episodes)
    idx = np.union1d(src, dst)
    if idx.size == 0:
        raise ValueError("no training pairs: every episode needs at least two consecutive frames")
    stats = Normalizer.fit(data.frames[idx], action_bounds(data))
    return PerceptionModel(cfg, stats, seed)


def batch_loss(model: PerceptionModel, data: Dataset, src: np.ndarray, dst: np.ndarray, eps: np.ndarray | None):
    """ELBO graph for one batch; ``eps=None`` decodes the posterior mean."""
    frames = data.frames
    x = frames[src]
    y = frames[dst]
    inputs = model.normalize_inputs(x)
    targets = model.normalize_targets(y)
    if "flow" in targets:
        # the visual target for the pair (t, t+1) is the flow stored with frame t
        targets["flow"] = x.flow / model.stats.flow_scale
    mu, logvar = model.encode_graph(inputs)
    z = mu if eps is None else model.sample_graph(mu, logvar, eps)
    zc = model.condition_graph(z, model.normalize_action(x.a))
    pred = model.decode_graph(zc)
    return elbo_loss(pred, targets, mu, logvar, model.cfg)


def evaluate_elbo(model: PerceptionModel, data: Dataset, src, dst, batch: int = 256) -> dict:
    """Mean-mode ELBO and components over the given pairs."""
    sums = {k: 0.0 for k in ("elbo", "proprio", "force", "flow", "kl")}
    n = len(src)
    if n == 0:
        return {k: float("nan") for k in sums}
    with nx.no_grad():
        for lo in range(0, n, batch):
            s, d = src[lo : lo + batch], dst[lo : lo + batch]
            total, parts = batch_loss(model, data, s, d, None)
            sums["elbo"] += float(total.data) * len(s)
            for k, v in parts.items():
                sums[k] += float(v.data) * len(s)
    return {k: v / n for k, v in sums.items()}


def train(
    data: Dataset,
    cfg: ModalityConfig,
    epochs: int,
    seed: int = 0,
    model: PerceptionModel | None = None,
    progress=None,
) -> TrainResult:
    """Adam on shuffled mini-batches of training pairs.

    Episodes are split into training and validation sets so no pair
    straddles the split, and pairs never span an episode boundary.  The
    history has one row per epoch; row 0 evaluates the untrained model.
    """
    train_eps, val_eps = data.split(cfg.val_fraction)
    src, dst = data.pairs(train_eps)
    vsrc, vdst = data.pairs(val_eps)
    if len(src) == 0:
        raise ValueError("dataset has no training pairs")
    model = model or init_model(data, cfg, seed, train_eps)
    state = nx.OptimizerState(lr=cfg.lr)
    shuffle_rng = stream(seed, "shuffle")
    sample_rng = stream(seed, "sample")
    names = list(model.params)

    def row(epoch, train_stats):
        val = evaluate_elbo(model, data, vsrc, vdst) if len(vsrc) else {"elbo": float("nan")}
        return {
            "epoch": epoch,
            "train_elbo": train_stats["elbo"],
            "val_elbo": val["elbo"],
            "recon_proprio": train_stats.get("proprio", 0.0),
            "recon_force": train_stats.get("force", 0.0),
            "recon_flow": train_stats.get("flow", 0.0),
            "kl": train_stats["kl"],
        }

    history = [row(0, evaluate_elbo(model, data, src, dst))]
    last_good = copy.deepcopy(model)
    for epoch in range(1, epochs + 1):
        order = shuffle_rng.permutation(len(src))
        sums = {k: 0.0 for k in ("elbo", "proprio", "force", "flow", "kl")}
        for lo in range(0, len(order), cfg.batch_size):
            sel = order[lo : lo + cfg.batch_size]
            eps = sample_rng.standard_normal((len(sel), cfg.latent_dim)).astype(np.float32)
            for p in model.params.values():
                p.zero_grad()
            total, parts = batch_loss(model, data, src[sel], dst[sel], eps)
            value = float(total.data)
            if not math.isfinite(value):
                raise TrainingDiverged(f"non-finite loss at epoch {epoch}", last_good, history)
            nx.backward(total)
            grads = {k: model.params[k].grad for k in names if model.params[k].grad is not None}
            params = {k: model.params[k].data for k in names}
            try:
                nx.adam_step(params, grads, state)
            except nx.NonFiniteGradient as exc:
                raise TrainingDiverged(str(exc), last_good, history) from exc
            model.step += 1
            sums["elbo"] += value * len(sel)
            for k, v in parts.items():
                sums[k] += float(v.data) * len(sel)
        stats = {k: v / len(src) for k, v in sums.items()}
        history.append(row(epoch, stats))
        last_good = copy.deepcopy(model)
        if progress is not None:
            progress(history[-1])
        log.info("epoch %d train %.4f val %.4f", epoch, history[-1]["train_elbo"], history[-1]["val_elbo"])
    rng_state = {"shuffle": shuffle_rng.bit_generator.state, "sample": sample_rng.bit_generator.state}
    return TrainResult(model, history, train_eps, val_eps, rng_state)


def write_loss_log(history: list[dict], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=LOG_FIELDS, lineterminator="\n")
        w.writeheader()
        for r in history:
            w.writerow({k: (r[k] if k == "epoch" else repr(float(r[k]))) for k in LOG_FIELDS})
