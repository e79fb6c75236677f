"""Scene description for the soft-finger surrogate.

Geometry convention: z is up, the ground is the plane ``z = ground_height``.
The rigid arm is cylindrical: ``q1`` rotates about the vertical axis through
the origin, ``q2`` slides the arm tip radially outwards from
``arm_radius`` and ``q3`` moves it vertically from ``arm_height``.  The
passive finger hangs from the arm tip pointing down (-z) at rest.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, fields

import numpy as np

N_LINKS = 20
N_ARM = 3


@dataclass(frozen=True)
class Box:
    center: tuple[float, float, float]
    half_extents: tuple[float, float, float]
    yaw: float = 0.0

    def rotation(self) -> np.ndarray:
        c, s = math.cos(self.yaw), math.sin(self.yaw)
        return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


@dataclass(frozen=True)
class Camera:
    """Static orthographic side view looking along +y, 64x64 pixels."""

    center_x: float = 0.16
    center_z: float = 0.14
    width: float = 0.4
    resolution: int = 64
    link_radius: float = 0.008
    arm_half_thickness: float = 0.006

    @property
    def pixel_size(self) -> float:
        return self.width / self.resolution


@dataclass(frozen=True)
class SceneConfig:
    boxes: tuple[Box, ...] = ()
    link_length: float = 0.01
    link_radius: float = 0.004
    spring_k: float = 0.05
    # kept for completeness; the quasi-static energy has no gravity term
    link_mass: float = 0.002
    contact_k: float = 500.0
    ground_height: float = 0.0
    joint_limit: float = math.pi / 3
    arm_height: float = 0.22
    arm_radius: float = 0.12
    q_min: tuple[float, float, float] = (-math.pi, 0.0, -0.07)
    q_max: tuple[float, float, float] = (math.pi, 0.16, 0.05)
    home: tuple[float, float, float] = (0.0, 0.06, 0.0)
    action_bounds: tuple[float, float, float] = (0.05, 0.01, 0.01)
    camera: Camera = field(default_factory=Camera)
    seed: int = 0

    def __post_init__(self):
        if self.spring_k <= 0 or self.contact_k <= 0:
            raise ValueError("spring_k and contact_k must be positive")
        if any(lo > hi for lo, hi in zip(self.q_min, self.q_max)):
            raise ValueError("q_min must not exceed q_max")
        if any(b < 0 for b in self.action_bounds):
            raise ValueError("action bounds must be non-negative")
        for box in self.boxes:
            # the vertical mast sits on the z axis
            cx, cy, _ = box.center
            reach = math.hypot(*box.half_extents[:2])
            if math.hypot(cx, cy) < reach + self.camera.arm_half_thickness:
                raise ValueError(f"box at {box.center} intersects the robot base")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["boxes"] = [asdict(b) for b in self.boxes]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SceneConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown scene keys: {sorted(unknown)}")
        kw = dict(d)
        if "boxes" in kw:
            kw["boxes"] = tuple(
                Box(tuple(b["center"]), tuple(b["half_extents"]), float(b.get("yaw", 0.0))) for b in kw["boxes"]
            )
        if "camera" in kw and isinstance(kw["camera"], dict):
            kw["camera"] = Camera(**kw["camera"])
        for key in ("q_min", "q_max", "home", "action_bounds"):
            if key in kw:
                kw[key] = tuple(float(v) for v in kw[key])
        return cls(**kw)


def random_scene(rng: np.random.Generator, base: SceneConfig | None = None, n_boxes=(1, 3)) -> SceneConfig:
    """Place low boxes on the ground in front of the robot, inside the finger's reach."""
    base = base or SceneConfig()
    count = int(rng.integers(n_boxes[0], n_boxes[1] + 1))
    r_lo = base.arm_radius + base.q_min[1]
    r_hi = base.arm_radius + base.q_max[1]
    boxes = []
    for _ in range(count):
        hx, hy = rng.uniform(0.012, 0.035, size=2)
        hz = rng.uniform(0.008, 0.016)
        radius = rng.uniform(r_lo, r_hi)
        angle = rng.uniform(-0.5, 0.5)
        center = (
            float(radius * math.cos(angle)),
            float(radius * math.sin(angle)),
            float(base.ground_height + hz),
        )
        boxes.append(Box(center, (float(hx), float(hy), float(hz)), float(rng.uniform(-math.pi / 4, math.pi / 4))))
    seed = int(rng.integers(0, 2**31 - 1))
    kw = {f.name: getattr(base, f.name) for f in fields(base)}
    kw.update(boxes=tuple(boxes), seed=seed)
    return SceneConfig(**kw)
