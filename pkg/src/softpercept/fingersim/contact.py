"""Sphere-per-link penetration against the ground and boxes."""

from __future__ import annotations

import numpy as np

from .config import SceneConfig


def penetrations(points: np.ndarray, radius: float, cfg: SceneConfig) -> tuple[np.ndarray, np.ndarray]:
    """Penetration depth and outward normal per (point, obstacle).

    ``points`` is (..., 3).  Returns ``depth`` (..., K) clipped at 0 and
    ``normal`` (..., K, 3), where obstacle 0 is the ground and 1..K-1 are
    the boxes.  The normal points from the obstacle towards the sphere.
    """
    lead = points.shape[:-1]
    K = 1 + len(cfg.boxes)
    depth = np.zeros(lead + (K,))
    normal = np.zeros(lead + (K, 3))

    depth[..., 0] = radius - (points[..., 2] - cfg.ground_height)
    normal[..., 0, 2] = 1.0

    for k, box in enumerate(cfg.boxes, start=1):
        R = box.rotation()
        h = np.asarray(box.half_extents)
        local = (points - np.asarray(box.center)) @ R  # R^T (p - c)
        closest = np.clip(local, -h, h)
        diff = local - closest
        dist = np.sqrt(np.sum(diff * diff, axis=-1))
        outside = dist > 0
        n_local = np.zeros_like(local)
        safe = np.where(outside, dist, 1.0)
        n_local[outside] = (diff / safe[..., None])[outside]
        d = radius - dist
        if np.any(~outside):
            # centre inside the box: push out through the nearest face
            slack = h - np.abs(local)
            face = np.argmin(slack, axis=-1)
            inside_depth = np.take_along_axis(slack, face[..., None], axis=-1)[..., 0]
            sign = np.sign(np.take_along_axis(local, face[..., None], axis=-1)[..., 0])
            sign = np.where(sign == 0, 1.0, sign)
            n_in = np.zeros_like(local)
            np.put_along_axis(n_in, face[..., None], sign[..., None], axis=-1)
            n_local = np.where(outside[..., None], n_local, n_in)
            d = np.where(outside, d, radius + inside_depth)
        depth[..., k] = d
        normal[..., k, :] = n_local @ R.T

    np.maximum(depth, 0.0, out=depth)
    return depth, normal


def link_forces(points: np.ndarray, cfg: SceneConfig) -> tuple[np.ndarray, np.ndarray]:
    """Resultant contact force vectors (..., 3) and magnitudes (...) per link.

    The magnitude equals ``contact_k`` times the norm of the summed
    penetration vectors, so it is zero exactly when nothing penetrates.
    """
    depth, normal = penetrations(points, cfg.link_radius, cfg)
    vec = cfg.contact_k * np.sum(depth[..., None] * normal, axis=-2)
    mag = np.sqrt(np.sum(vec * vec, axis=-1))
    return vec, mag
