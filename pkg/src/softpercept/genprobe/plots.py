from __future__ import annotations

import numpy as np


def flow_to_rgb(flow: np.ndarray, max_magnitude: float | None = None) -> np.ndarray:
    """Colour wheel: hue encodes direction, saturation encodes magnitude."""
    from matplotlib.colors import hsv_to_rgb

    dx, dy = flow[..., 0].astype(np.float64), flow[..., 1].astype(np.float64)
    mag = np.hypot(dx, dy)
    top = max_magnitude if max_magnitude is not None else max(float(mag.max()), 1e-9)
    hsv = np.stack([(np.arctan2(dy, dx) / (2 * np.pi)) % 1.0, np.clip(mag / top, 0, 1), np.ones_like(mag)], axis=-1)
    return hsv_to_rgb(hsv)


def flow_strip_png(path, flows) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    flows = list(flows)
    top = max(max(float(np.hypot(f[..., 0], f[..., 1]).max()) for f in flows), 1e-9)
    strip = np.concatenate([flow_to_rgb(f, top) for f in flows], axis=1)
    plt.imsave(path, strip)
