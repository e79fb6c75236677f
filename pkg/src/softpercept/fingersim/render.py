"""Flat-colour orthographic rasterizer and ground-truth optical flow.

The camera looks along +y; image column grows with world x and image row
grows with decreasing z.  Pixel ``(row, col)`` samples the world point at
its centre.  Objects are painted ground, boxes, arm, finger, so the last
primitive covering a pixel is the visible one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import Camera, SceneConfig
from .kinematics import arm_tip, forward_kinematics

BACKGROUND, GROUND, BOX, ARM, FINGER = range(5)

COLORS = np.array(
    [
        [0.88, 0.92, 1.00],  # background
        [0.45, 0.36, 0.26],  # ground
        [0.80, 0.22, 0.18],  # box
        [0.32, 0.32, 0.38],  # arm
        [0.20, 0.70, 0.32],  # finger
    ],
    dtype=np.float32,
)


@dataclass(frozen=True)
class Primitive:
    kind: str  # "box" or "sphere"
    label: int
    center: np.ndarray
    rotation: np.ndarray
    extent: np.ndarray  # half extents (box) or radius (sphere)


@dataclass(frozen=True)
class Geometry:
    """Everything the rasterizer and flow need for one time step."""

    camera: Camera
    ground_height: float
    primitives: tuple[Primitive, ...]


def scene_geometry(q_r, q_f, cfg: SceneConfig) -> Geometry:
    cam = cfg.camera
    prims: list[Primitive] = []
    for box in cfg.boxes:
        prims.append(Primitive("box", BOX, np.asarray(box.center, float), box.rotation(), np.asarray(box.half_extents, float)))

    t = cam.arm_half_thickness
    tip, R = arm_tip(q_r, cfg)
    mast_top = cfg.arm_height + cfg.q_max[2] + t
    prims.append(Primitive("box", ARM, np.array([0.0, 0.0, mast_top / 2]), np.eye(3), np.array([t, t, mast_top / 2])))
    # carriage beam rides the mast (q1, q3); outer beam carries the finger (q1, q2, q3)
    half = cfg.arm_radius / 2
    carriage = np.array([0.0, 0.0, tip[2]]) + R @ np.array([half, 0.0, 0.0])
    outer = tip - R @ np.array([half, 0.0, 0.0])
    prims.append(Primitive("box", ARM, carriage, R, np.array([half, t, t])))
    prims.append(Primitive("box", ARM, outer, R, np.array([half, t, t])))

    positions, rotations = forward_kinematics(q_r, q_f, cfg)
    for p, Rl in zip(positions, rotations):
        prims.append(Primitive("sphere", FINGER, p, Rl, np.array(cam.link_radius)))
    return Geometry(cam, cfg.ground_height, tuple(prims))


def pixel_grid(cam: Camera) -> tuple[np.ndarray, np.ndarray]:
    """World (x, z) of every pixel centre, each (res, res)."""
    n = cam.resolution
    s = cam.pixel_size
    centers = (np.arange(n) + 0.5) * s
    x = cam.center_x - cam.width / 2 + centers
    z = cam.center_z + cam.width / 2 - centers
    return np.meshgrid(x, z)  # rows follow z, columns follow x


def _silhouette(prim: Primitive, X: np.ndarray, Z: np.ndarray) -> np.ndarray:
    if prim.kind == "sphere":
        dx = X - prim.center[0]
        dz = Z - prim.center[2]
        return dx * dx + dz * dz < prim.extent**2
    # boxes only ever rotate about z, so the side silhouette is a rectangle
    hx, hy, hz = prim.extent
    ex = abs(prim.rotation[0, 0]) * hx + abs(prim.rotation[0, 1]) * hy
    cx, cz = prim.center[0], prim.center[2]
    return (X >= cx - ex) & (X < cx + ex) & (Z >= cz - hz) & (Z < cz + hz)


def rasterize(geom: Geometry) -> tuple[np.ndarray, np.ndarray]:
    """Class label map and visible-primitive index map (-1 = none)."""
    X, Z = pixel_grid(geom.camera)
    return labels_at(geom, X, Z)


def labels_at(geom: Geometry, X: np.ndarray, Z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Visible class and primitive index at arbitrary world (x, z) points."""
    labels = np.full(X.shape, BACKGROUND, dtype=np.int8)
    index = np.full(X.shape, -1, dtype=np.int32)
    labels[Z < geom.ground_height] = GROUND
    for k, prim in enumerate(geom.primitives):
        mask = _silhouette(prim, X, Z)
        labels[mask] = prim.label
        index[mask] = k
    return labels, index


def render(q_r, q_f, cfg: SceneConfig) -> np.ndarray:
    """64x64x3 float32 image in [0, 1]."""
    labels, _ = rasterize(scene_geometry(q_r, q_f, cfg))
    return COLORS[labels]


def render_geometry(geom: Geometry) -> np.ndarray:
    labels, _ = rasterize(geom)
    return COLORS[labels]


def _surface_points(prim: Primitive, X: np.ndarray, Z: np.ndarray) -> np.ndarray:
    """3-D point first hit by the viewing ray through each (X, Z)."""
    if prim.kind == "sphere":
        dx = X - prim.center[0]
        dz = Z - prim.center[2]
        y = prim.center[1] - np.sqrt(np.maximum(prim.extent**2 - dx * dx - dz * dz, 0.0))
        return np.stack([X, y, Z], axis=-1)
    R, c, h = prim.rotation, prim.center, prim.extent
    origin = np.stack([X - c[0], np.full_like(X, -c[1]), Z - c[2]], axis=-1) @ R  # box frame, ray at y=0
    direction = R[1]  # R^T e_y
    entry = np.full(X.shape, -np.inf)
    for k in range(3):
        if abs(direction[k]) < 1e-15:
            continue
        t1 = (-h[k] - origin[..., k]) / direction[k]
        t2 = (h[k] - origin[..., k]) / direction[k]
        entry = np.maximum(entry, np.minimum(t1, t2))
    entry = np.where(np.isfinite(entry), entry, 0.0)
    return np.stack([X, entry, Z], axis=-1)


def compute_flow(geom_t: Geometry, geom_next: Geometry) -> np.ndarray:
    """Per-pixel image displacement (d_col, d_row) in pixels from t to t+1.

    Each pixel follows the surface point visible at time t on its
    primitive, carried rigidly by that primitive's pose change.
    Background, ground and unmoved primitives get exactly zero.
    """
    if len(geom_t.primitives) != len(geom_next.primitives):
        raise ValueError("geometries must list the same primitives")
    cam = geom_t.camera
    X, Z = pixel_grid(cam)
    _, index = rasterize(geom_t)
    flow = np.zeros(X.shape + (2,), dtype=np.float64)
    s = cam.pixel_size
    for k, (a, b) in enumerate(zip(geom_t.primitives, geom_next.primitives)):
        mask = index == k
        if not mask.any():
            continue
        if np.array_equal(a.center, b.center) and np.array_equal(a.rotation, b.rotation):
            continue
        P = _surface_points(a, X[mask], Z[mask])
        local = (P - a.center) @ a.rotation
        moved = local @ b.rotation.T + b.center
        flow[mask, 0] = (moved[:, 0] - P[:, 0]) / s
        flow[mask, 1] = -(moved[:, 2] - P[:, 2]) / s
    return flow.astype(np.float32)


def translate_geometry(geom: Geometry, k: int, offset) -> Geometry:
    """Copy of ``geom`` with primitive ``k`` shifted by a world offset."""
    prims = list(geom.primitives)
    p = prims[k]
    prims[k] = Primitive(p.kind, p.label, p.center + np.asarray(offset, float), p.rotation, p.extent)
    return Geometry(geom.camera, geom.ground_height, tuple(prims))


def rotate_geometry(geom: Geometry, pivot, angle: float, labels=(FINGER,)) -> Geometry:
    """Copy of ``geom`` with primitives of the given classes rotated about the
    viewing axis through ``pivot`` (world x, z)."""
    c, s_ = np.cos(angle), np.sin(angle)
    # rotation about +y in the x-z plane
    Ry = np.array([[c, 0.0, s_], [0.0, 1.0, 0.0], [-s_, 0.0, c]])
    pivot3 = np.array([pivot[0], 0.0, pivot[1]])
    prims = []
    for p in geom.primitives:
        if p.label in labels:
            center = pivot3 + Ry @ (p.center - pivot3)
            p = Primitive(p.kind, p.label, center, Ry @ p.rotation, p.extent)
        prims.append(p)
    return Geometry(geom.camera, geom.ground_height, tuple(prims))


__all__ = [
    "ARM",
    "BACKGROUND",
    "BOX",
    "COLORS",
    "FINGER",
    "GROUND",
    "Geometry",
    "labels_at",
    "Primitive",
    "compute_flow",
    "rasterize",
    "render",
    "render_geometry",
    "rotate_geometry",
    "scene_geometry",
    "translate_geometry",
]
