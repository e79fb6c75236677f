from __future__ import annotations

import numpy as np


def scatter_png(path, embedding: np.ndarray, force: np.ndarray, title: str = "") -> None:
    """Embedding coloured by total contact force."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(4, 4), dpi=100)
    sc = ax.scatter(embedding[:, 0], embedding[:, 1], c=force, cmap="viridis", s=4)
    fig.colorbar(sc, ax=ax, label="total force [N]")
    ax.set_title(title)
    ax.set_xticks([])
    ax.set_yticks([])
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
