"""Information-gain table across trained models."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..cvae.model import PerceptionModel
from ..fingersim.dataset import Dataset
from ..rng import stream
from .analysis import centroid_distance_analysis, information_gain, mutual_information
from .pca import pca_project
from .tsne import TsneConfig, tsne_embed

# published values, kept for orientation only; absolute MI depends on the model
REFERENCE = {
    "proprio-only": {"16": {"encoded_mi": 0.32, "gain_percent": 9.0}},
    "vision-input": {"16": {"encoded_mi": 0.17, "gain_percent": 88.0}},
    "vision-in-out": {"64": {"gain_percent": 350.0}},
}


@dataclass
class LatentSet:
    index: np.ndarray  # dataset frame indices
    encoded: np.ndarray  # posterior means
    conditioned: np.ndarray
    force: np.ndarray  # total contact force of each frame


def select_frames(data: Dataset, n_points: int | None, seed: int, episodes=None) -> np.ndarray:
    """Frames that have a successor, optionally subsampled without replacement."""
    src, _ = data.pairs(episodes)
    if n_points is not None and n_points < len(src):
        src = np.sort(stream(seed, "tsne", 1).choice(src, n_points, replace=False))
    return src


def collect_latents(model: PerceptionModel, data: Dataset, index: np.ndarray, batch: int = 256) -> LatentSet:
    enc, cond = [], []
    for lo in range(0, len(index), batch):
        fr = data.frames[index[lo : lo + batch]]
        mu = model.encode(fr, mean_mode=True).mu
        enc.append(mu)
        cond.append(model.condition(mu, fr.a))
    force = data.frames.f[index].astype(np.float64).sum(axis=1)
    return LatentSet(index, np.concatenate(enc), np.concatenate(cond), force)


def embed(latents: np.ndarray, method: str, tsne_cfg: TsneConfig):
    if method == "pca":
        return pca_project(latents).projection, None
    if method == "tsne":
        res = tsne_embed(latents, tsne_cfg)
        return res.embedding, res
    raise ValueError(f"unknown embedding method {method!r}")


def space_report(latents: np.ndarray, force: np.ndarray, tsne_cfg: TsneConfig, bins: int, method: str = "tsne") -> dict:
    y, res = embed(latents, method, tsne_cfg)
    cd = centroid_distance_analysis(y, force)
    mi = mutual_information(cd.distance, force, bins)
    out = {"mi_bits": mi.bits, "degenerate": mi.degenerate, "spearman": cd.spearman}
    if res is not None:
        out.update(kl=res.kl, initial_kl=res.initial_kl, perplexity=res.perplexity, perplexity_clipped=res.clipped)
    return out


def latent_information(
    model: PerceptionModel,
    data: Dataset,
    tsne_cfg: TsneConfig = TsneConfig(),
    n_points: int | None = 1000,
    bins: int = 16,
    method: str = "tsne",
    seed: int = 0,
) -> dict:
    """MI between centroid distance and total force, in both latent spaces."""
    ls = collect_latents(model, data, select_frames(data, n_points, seed))
    enc = space_report(ls.encoded, ls.force, tsne_cfg, bins, method)
    cond = space_report(ls.conditioned, ls.force, tsne_cfg, bins, method)
    return {
        "n": int(len(ls.index)),
        "bins": bins,
        "method": method,
        "encoded": enc,
        "conditioned": cond,
        "gain_percent": information_gain(enc["mi_bits"], cond["mi_bits"]),
    }


def row_label(inputs, outputs) -> str:
    if "vision" not in inputs:
        return "proprio-only"
    return "vision-in-out" if "flow" in outputs else "vision-input"


def information_gain_report(entries: list[dict], tsne_cfg: TsneConfig, bins: int = 16) -> dict:
    """Table shaped rows x latent dims x {encoded, conditioned}.

    Each entry carries ``label``, ``latent_dim``, ``seed`` and either a
    ``result`` from :func:`latent_information` or a ``missing`` notice.
    Seeds of the same cell are averaged.
    """
    table: dict = {}
    notices = []
    for e in entries:
        if e.get("result") is None:
            notices.append(f"skipped {e['label']} d={e['latent_dim']} seed={e['seed']}: {e.get('missing', 'no checkpoint')}")
            continue
        cell = table.setdefault(e["label"], {}).setdefault(str(e["latent_dim"]), {"seeds": []})
        r = e["result"]
        cell["seeds"].append(
            {
                "seed": e["seed"],
                "encoded_mi": r["encoded"]["mi_bits"],
                "conditioned_mi": r["conditioned"]["mi_bits"],
                "gain_percent": r["gain_percent"],
            }
        )
    for dims in table.values():
        for cell in dims.values():
            s = cell["seeds"]
            cell["encoded_mi"] = float(np.mean([x["encoded_mi"] for x in s]))
            cell["conditioned_mi"] = float(np.mean([x["conditioned_mi"] for x in s]))
            gains = [x["gain_percent"] for x in s if x["gain_percent"] is not None]
            cell["gain_percent"] = float(np.mean(gains)) if gains else None
    return {
        "rows": table,
        "reference": REFERENCE,
        "tsne": tsne_cfg.to_dict(),
        "bins": bins,
        "notices": notices,
    }
