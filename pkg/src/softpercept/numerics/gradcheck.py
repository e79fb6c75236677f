"""Central finite-difference checks for the tape."""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .tensor import Tensor, backward, no_grad, precision


def relative_error(a, b, floor: float = 1e-12) -> float:
    """Max-norm relative error ``|a - b|_inf / max(|a|_inf, |b|_inf)``."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if not a.size:
        return 0.0
    scale = max(np.max(np.abs(a)), np.max(np.abs(b)), floor)
    return float(np.max(np.abs(a - b)) / scale)


def numeric_grad(f: Callable[[], float], x: np.ndarray, h: float = 1e-3, indices=None) -> np.ndarray:
    """Central differences of scalar ``f`` w.r.t. the array ``x`` (mutated in place, then restored)."""
    out = np.zeros(x.shape, dtype=np.float64)
    flat = x.reshape(-1)
    idx = range(flat.size) if indices is None else indices
    for i in idx:
        orig = flat[i]
        flat[i] = orig + h
        fp = f()
        flat[i] = orig - h
        fm = f()
        flat[i] = orig
        out.reshape(-1)[i] = (fp - fm) / (2 * h)
    return out


def check_gradients(
    fn: Callable[..., Tensor],
    arrays: Sequence[np.ndarray],
    h: float = 1e-3,
    weights_seed: int = 0,
) -> float:
    """Max relative error between tape and finite-difference gradients.

    ``fn`` maps tensors to a tensor of any shape; it is contracted with a
    fixed random weighting so every output element contributes.  Runs in
    float64.
    """
    with precision(np.float64):
        leaves = [Tensor(np.array(a, dtype=np.float64), requires_grad=True) for a in arrays]
        out = fn(*leaves)
        w = np.random.default_rng(weights_seed).standard_normal(out.shape)
        loss = (out * Tensor(w)).sum()
        backward(loss)
        worst = 0.0
        for leaf in leaves:
            def f():
                with no_grad():
                    return float((fn(*leaves).data * w).sum())

            num = numeric_grad(f, leaf.data, h)
            worst = max(worst, relative_error(leaf.grad, num))
        return worst
