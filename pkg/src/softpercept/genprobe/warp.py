from __future__ import annotations

import numpy as np


def advect(image: np.ndarray, flow: np.ndarray) -> np.ndarray:
    """Backward bilinear warp: out(p) = image(p - flow(p)), clamped at the border.

    ``flow[..., 0]`` is the column displacement and ``flow[..., 1]`` the row
    displacement, in pixels.
    """
    image = np.asarray(image, np.float32)
    h, w = image.shape[:2]
    rows, cols = np.meshgrid(np.arange(h, dtype=np.float64), np.arange(w, dtype=np.float64), indexing="ij")
    sc = np.clip(cols - flow[..., 0], 0, w - 1)
    sr = np.clip(rows - flow[..., 1], 0, h - 1)
    c0 = np.floor(sc).astype(int)
    r0 = np.floor(sr).astype(int)
    c1 = np.minimum(c0 + 1, w - 1)
    r1 = np.minimum(r0 + 1, h - 1)
    fc = (sc - c0)[..., None]
    fr = (sr - r0)[..., None]
    top = image[r0, c0] * (1 - fc) + image[r0, c1] * fc
    bot = image[r1, c0] * (1 - fc) + image[r1, c1] * fc
    return (top * (1 - fr) + bot * fr).astype(np.float32)
