from __future__ import annotations

import numpy as np

from .. import numerics as nx
from .config import ModalityConfig


def kl_standard_normal(mu, logvar):
    """Per-sample KL(N(mu, exp(logvar)) || N(0, I)), summed over latent dims."""
    inner = 1.0 + logvar - mu * mu - nx.exp(logvar)
    return nx.sum_(inner, axis=1) * -0.5


def elbo_loss(pred: dict, target: dict, mu, logvar, cfg: ModalityConfig):
    """Batch-mean of sum_m w_m * SSE_m + beta * KL.

    ``SSE_m`` sums squared errors over all elements of modality m for one
    sample.  Returns the scalar loss and a dict of batch-mean components.
    """
    n = mu.shape[0]
    parts = {}
    total = None
    for m in cfg.outputs:
        err = nx.squared_error(pred[m], nx.as_tensor(target[m]))
        sse = nx.sum_(err) * (1.0 / n)
        parts[m] = sse
        term = sse * cfg.weights[m]
        total = term if total is None else total + term
    kl = nx.sum_(kl_standard_normal(mu, logvar)) * (1.0 / n)
    parts["kl"] = kl
    total = total + kl * cfg.beta
    return total, parts


def kl_closed_form(mu: np.ndarray, logvar: np.ndarray) -> np.ndarray:
    mu = np.asarray(mu, np.float64)
    logvar = np.asarray(logvar, np.float64)
    return -0.5 * np.sum(1 + logvar - mu**2 - np.exp(logvar), axis=-1)
