"""Centroid distances, binned mutual information and information gain."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import spearmanr


@dataclass
class CentroidAnalysis:
    distance: np.ndarray
    force: np.ndarray
    centroid: np.ndarray
    spearman: float  # nan when either variable is constant


def centroid_distance_analysis(embedding: np.ndarray, force: np.ndarray) -> CentroidAnalysis:
    y = np.asarray(embedding, np.float64)
    f = np.asarray(force, np.float64)
    if len(y) < 10:
        raise ValueError(f"centroid analysis needs at least 10 points, got {len(y)}")
    if len(f) != len(y):
        raise ValueError(f"{len(y)} points but {len(f)} force labels")
    c = y.mean(axis=0)
    dist = np.sqrt(np.sum((y - c) ** 2, axis=1))
    if np.ptp(dist) == 0 or np.ptp(f) == 0:
        rho = float("nan")
    else:
        rho = float(spearmanr(dist, f).statistic)
    return CentroidAnalysis(dist, f, c, rho)


def write_embedding_csv(path, embedding: np.ndarray, analysis: CentroidAnalysis) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["point_id", "y1", "y2", "force", "distance"])
        for i, (y, f, d) in enumerate(zip(embedding, analysis.force, analysis.distance)):
            w.writerow([i, repr(float(y[0])), repr(float(y[1])), repr(float(f)), repr(float(d))])


@dataclass
class MiResult:
    bits: float
    bins: int
    n: int
    degenerate: bool


def mutual_information(x, y, bins: int = 16) -> MiResult:
    """Plug-in MI in bits from an equal-width ``bins`` x ``bins`` histogram."""
    x = np.asarray(x, np.float64).ravel()
    y = np.asarray(y, np.float64).ravel()
    if bins < 2:
        raise ValueError(f"need at least 2 bins, got {bins}")
    if len(x) != len(y):
        raise ValueError(f"length mismatch: {len(x)} vs {len(y)}")
    if len(x) < 10 * bins:
        raise ValueError(f"need N >= 10*bins = {10 * bins} samples, got {len(x)}")
    if np.ptp(x) == 0 or np.ptp(y) == 0:
        return MiResult(0.0, bins, len(x), True)
    h, _, _ = np.histogram2d(x, y, bins=bins, range=[[x.min(), x.max()], [y.min(), y.max()]])
    # marginals from integer counts, so transposing the inputs changes nothing
    n = h.sum()
    pxy = h / n
    px = h.sum(axis=1) / n
    py = h.sum(axis=0) / n
    i, j = np.nonzero(pxy)
    terms = pxy[i, j] * np.log2(pxy[i, j] / (px[i] * py[j]))
    # fsum is exactly rounded, so MI(x, y) == MI(y, x) bit for bit
    return MiResult(max(math.fsum(terms.tolist()), 0.0), bins, len(x), False)


def information_gain(mi_encoded: float, mi_conditioned: float) -> float | None:
    """Percent change from the encoded to the conditioned space; None if undefined."""
    if mi_encoded <= 0:
        return None
    return 100.0 * (mi_conditioned - mi_encoded) / mi_encoded
