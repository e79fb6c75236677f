"""Exact O(N^2) t-SNE with per-point perplexity calibration."""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields

import numpy as np

from ..rng import stream

EPS = 1e-12


@dataclass(frozen=True)
class TsneConfig:
    perplexity: float = 1000.0
    iterations: int = 1000
    learning_rate: float = 200.0
    momentum: float = 0.5
    final_momentum: float = 0.8
    momentum_switch: int = 250
    exaggeration: float = 12.0
    exaggeration_iters: int = 250
    seed: int = 0
    tol: float = 1e-5
    max_bisection: int = 50

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "TsneConfig":
        unknown = set(d) - {f.name for f in fields(cls)}
        if unknown:
            raise ValueError(f"unknown t-SNE config keys: {sorted(unknown)}")
        return cls(**d)


@dataclass
class TsneResult:
    embedding: np.ndarray
    kl: float  # KL(P||Q) at the final iterate
    initial_kl: float  # KL(P||Q) once exaggeration is removed (iteration 0 if there is none)
    start_kl: float  # KL(P||Q) at the random initialisation
    perplexity: float  # value actually used
    requested_perplexity: float
    clipped: bool
    achieved: np.ndarray  # per-point perplexity of the calibrated conditionals
    kl_trace: list


def squared_distances(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, np.float64)
    sq = np.einsum("ij,ij->i", x, x)
    d = sq[:, None] + sq[None, :] - 2.0 * (x @ x.T)
    np.maximum(d, 0.0, out=d)
    np.fill_diagonal(d, 0.0)
    return d


def _row_stats(d: np.ndarray, beta: np.ndarray):
    """Conditional rows P_{.|i} for precisions ``beta`` and their perplexities."""
    w = np.exp(-d * beta[:, None])
    np.fill_diagonal(w, 0.0)
    s = np.maximum(w.sum(axis=1), EPS)
    p = w / s[:, None]
    h = np.log(s) + beta * np.sum(d * p, axis=1)  # entropy in nats
    return p, np.exp(h)


def conditional_p(d2: np.ndarray, perplexity: float, tol: float = 1e-5, max_steps: int = 50):
    """Bisection on log-precision per row until |perplexity_i - target| < tol.

    Distances are shifted by each row's smallest off-diagonal value, which
    leaves the normalised row unchanged but keeps ``exp`` in range.
    """
    n = d2.shape[0]
    off = d2.copy()
    np.fill_diagonal(off, np.nan)
    dmin = np.nanmin(off, axis=1)
    d = d2 - dmin[:, None]
    np.fill_diagonal(d, 0.0)
    scale = np.maximum(np.nanmedian(off, axis=1) - dmin, EPS)
    lo = np.log(1.0 / scale) - 40.0
    hi = np.log(1.0 / scale) + 40.0
    mid = 0.5 * (lo + hi)
    p, perp = _row_stats(d, np.exp(mid))
    for _ in range(max_steps):
        done = np.abs(perp - perplexity) < tol
        if done.all():
            break
        # perplexity falls as precision rises
        too_flat = perp > perplexity
        lo = np.where(~done & too_flat, mid, lo)
        hi = np.where(~done & ~too_flat, mid, hi)
        mid = np.where(done, mid, 0.5 * (lo + hi))
        p, perp = _row_stats(d, np.exp(mid))
    return p, perp


def joint_p(p_cond: np.ndarray) -> np.ndarray:
    n = p_cond.shape[0]
    p = (p_cond + p_cond.T) / (2.0 * n)
    return np.maximum(p, EPS)


def _q(y: np.ndarray):
    num = 1.0 / (1.0 + squared_distances(y))
    np.fill_diagonal(num, 0.0)
    q = np.maximum(num / num.sum(), EPS)
    return q, num


def kl_divergence(p: np.ndarray, y: np.ndarray) -> float:
    q, _ = _q(y)
    mask = ~np.eye(len(p), dtype=bool)
    return float(np.sum(p[mask] * np.log(p[mask] / q[mask])))


def effective_perplexity(requested: float, n: int) -> tuple[float, bool]:
    """Clip to (N-1)/3 so every point keeps enough neighbours to match it."""
    if not requested > 1.0:
        raise ValueError(f"perplexity must exceed 1, got {requested}")
    cap = (n - 1) / 3.0
    return (cap, True) if requested > cap else (float(requested), False)


def tsne_embed(x: np.ndarray, cfg: TsneConfig = TsneConfig()) -> TsneResult:
    x = np.asarray(x, np.float64)
    n = len(x)
    if n < 10:
        raise ValueError(f"t-SNE needs at least 10 points, got {n}")
    perp, clipped = effective_perplexity(cfg.perplexity, n)
    p_cond, achieved = conditional_p(squared_distances(x), perp, cfg.tol, cfg.max_bisection)
    p = joint_p(p_cond)

    rng = stream(cfg.seed, "tsne")
    y = rng.standard_normal((n, 2)) * 1e-2
    start_kl = kl_divergence(p, y)
    initial_kl = start_kl
    update = np.zeros_like(y)
    gains = np.ones_like(y)
    trace = []
    for it in range(cfg.iterations):
        if it == cfg.exaggeration_iters and cfg.exaggeration_iters > 0:
            initial_kl = kl_divergence(p, y)
        exag = cfg.exaggeration if it < cfg.exaggeration_iters else 1.0
        mom = cfg.momentum if it < cfg.momentum_switch else cfg.final_momentum
        q, num = _q(y)
        pq = (exag * p - q) * num
        np.fill_diagonal(pq, 0.0)
        grad = 4.0 * (pq.sum(axis=1)[:, None] * y - pq @ y)
        same = np.sign(grad) == np.sign(update)
        gains = np.where(same, gains * 0.8, gains + 0.2)
        np.maximum(gains, 0.01, out=gains)
        update = mom * update - cfg.learning_rate * gains * grad
        y = y + update
        y = y - y.mean(axis=0)
        if (it + 1) % 50 == 0:
            trace.append((it + 1, kl_divergence(p, y)))
    return TsneResult(
        embedding=y,
        kl=kl_divergence(p, y),
        initial_kl=initial_kl,
        start_kl=start_kl,
        perplexity=perp,
        requested_perplexity=float(cfg.perplexity),
        clipped=clipped,
        achieved=achieved,
        kl_trace=trace,
    )


def perplexity_sweep(x: np.ndarray, grid, cfg: TsneConfig = TsneConfig()) -> dict:
    """One embedding per perplexity (shared seed); the lowest final KL wins."""
    n = len(x)
    bad = [g for g in grid if not 1.0 < g < n]
    if bad:
        raise ValueError(f"perplexity grid values must lie in (1, N={n}): {bad}")
    rows = []
    for g in grid:
        res = tsne_embed(x, TsneConfig(**{**cfg.to_dict(), "perplexity": float(g)}))
        rows.append({"perplexity": float(g), "used": res.perplexity, "clipped": res.clipped, "kl": res.kl})
    best = min(range(len(rows)), key=lambda i: rows[i]["kl"])
    return {"rows": rows, "best": rows[best]["perplexity"], "best_used": rows[best]["used"]}
