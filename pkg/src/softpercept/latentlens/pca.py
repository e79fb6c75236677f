from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class PcaResult:
    projection: np.ndarray  # (N, k)
    ratios: np.ndarray  # explained-variance ratio of each kept component
    components: np.ndarray  # (d, k), columns are unit eigenvectors
    mean: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return self.projection @ self.components.T + self.mean


def pca_project(x: np.ndarray, k: int = 2) -> PcaResult:
    """Project onto the top-``k`` eigenvectors of the sample covariance.

    Each component is oriented so its largest-magnitude loading is
    positive, which makes the output independent of eigensolver sign.
    """
    x = np.asarray(x, np.float64)
    if x.ndim != 2 or x.shape[0] < 3 or x.shape[1] < 2:
        raise ValueError(f"pca needs an (N>=3, d>=2) array, got shape {x.shape}")
    if not 1 <= k <= x.shape[1]:
        raise ValueError(f"k must be in [1, {x.shape[1]}], got {k}")
    mean = x.mean(axis=0)
    xc = x - mean
    cov = xc.T @ xc / (len(x) - 1)
    evals, evecs = np.linalg.eigh(cov)
    evals, evecs = evals[::-1], evecs[:, ::-1]
    total = float(np.clip(evals, 0, None).sum())
    if total <= 0 or not np.isfinite(total):
        raise ValueError("pca input has zero variance (rank 0)")
    comps = evecs[:, :k].copy()
    pivot = np.argmax(np.abs(comps), axis=0)
    comps *= np.sign(comps[pivot, np.arange(k)])
    return PcaResult(xc @ comps, np.clip(evals[:k], 0, None) / total, comps, mean)
