"""Forward kinematics of the cylindrical arm and the 20-link finger."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import N_LINKS, SceneConfig

# joint 0 is flexion/extension; axes then alternate FE (local y) / AA (local x)
JOINT_AXES = np.array([[0.0, 1.0, 0.0] if j % 2 == 0 else [1.0, 0.0, 0.0] for j in range(N_LINKS)])
FE_JOINTS = np.arange(0, N_LINKS, 2)
AA_JOINTS = np.arange(1, N_LINKS, 2)


class JointLimitError(ValueError):
    pass


def check_arm(q_r, cfg: SceneConfig, tol: float = 1e-12) -> np.ndarray:
    q_r = np.asarray(q_r, dtype=np.float64)
    if q_r.shape != (3,):
        raise ValueError(f"arm state must have 3 joints, got shape {q_r.shape}")
    lo, hi = np.asarray(cfg.q_min), np.asarray(cfg.q_max)
    if np.any(q_r < lo - tol) or np.any(q_r > hi + tol):
        raise JointLimitError(f"arm joints {q_r.tolist()} outside [{cfg.q_min}, {cfg.q_max}]")
    return q_r


def check_finger(q_f, cfg: SceneConfig, tol: float = 1e-9) -> np.ndarray:
    q_f = np.asarray(q_f, dtype=np.float64)
    if q_f.shape[-1] != N_LINKS:
        raise ValueError(f"finger state must have {N_LINKS} joints, got shape {q_f.shape}")
    if np.any(np.abs(q_f) > cfg.joint_limit + tol):
        raise JointLimitError(f"finger joint beyond +/-{cfg.joint_limit:.4f} rad")
    return q_f


def rot_z(angle: float) -> np.ndarray:
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def arm_tip(q_r, cfg: SceneConfig) -> tuple[np.ndarray, np.ndarray]:
    """Position of the finger mount and the mount frame (rotation about z by q1)."""
    q1, q2, q3 = q_r
    radius = cfg.arm_radius + q2
    pos = np.array([radius * np.cos(q1), radius * np.sin(q1), cfg.arm_height + q3])
    return pos, rot_z(q1)


def _axis_rotations(q: np.ndarray) -> np.ndarray:
    """Per-joint local rotation matrices, shape (..., N_LINKS, 3, 3)."""
    c, s = np.cos(q), np.sin(q)
    R = np.zeros(q.shape + (3, 3))
    fe = (np.arange(N_LINKS) % 2) == 0
    # about y
    R[..., fe, 0, 0] = c[..., fe]
    R[..., fe, 0, 2] = s[..., fe]
    R[..., fe, 1, 1] = 1.0
    R[..., fe, 2, 0] = -s[..., fe]
    R[..., fe, 2, 2] = c[..., fe]
    # about x
    aa = ~fe
    R[..., aa, 0, 0] = 1.0
    R[..., aa, 1, 1] = c[..., aa]
    R[..., aa, 1, 2] = -s[..., aa]
    R[..., aa, 2, 1] = s[..., aa]
    R[..., aa, 2, 2] = c[..., aa]
    return R


@dataclass
class Chain:
    """Kinematic chain for a batch of finger states (leading axis B)."""

    origins: np.ndarray  # (B, N, 3) joint j pivot
    axes: np.ndarray  # (B, N, 3) world rotation axis of joint j
    rotations: np.ndarray  # (B, N, 3, 3) frame of link j
    positions: np.ndarray  # (B, N, 3) distal end of link j (sphere centre)

    def jacobian(self) -> np.ndarray:
        """d positions[i] / d q[j], shape (B, N_links i, N_joints j, 3); zero for j > i."""
        lever = self.positions[:, :, None, :] - self.origins[:, None, :, :]
        axes = np.broadcast_to(self.axes[:, None, :, :], lever.shape)
        J = np.cross(axes, lever)
        J *= np.tril(np.ones((N_LINKS, N_LINKS)))[None, :, :, None]
        return J


def chain(q_f: np.ndarray, base_pos: np.ndarray, base_rot: np.ndarray, link_length: float) -> Chain:
    q_f = np.atleast_2d(q_f)
    B = q_f.shape[0]
    local = _axis_rotations(q_f)
    rotations = np.empty((B, N_LINKS, 3, 3))
    origins = np.empty((B, N_LINKS, 3))
    axes = np.empty((B, N_LINKS, 3))
    positions = np.empty((B, N_LINKS, 3))
    R = np.broadcast_to(base_rot, (B, 3, 3))
    o = np.broadcast_to(base_pos, (B, 3))
    for j in range(N_LINKS):
        axes[:, j] = R @ JOINT_AXES[j]
        R = R @ local[:, j]
        rotations[:, j] = R
        origins[:, j] = o
        o = o - link_length * R[:, :, 2]
        positions[:, j] = o
    return Chain(origins, axes, rotations, positions)


def forward_kinematics(q_r, q_f, cfg: SceneConfig) -> tuple[np.ndarray, np.ndarray]:
    """Link sphere centres (20, 3) and link frames (20, 3, 3).

    Link ``i`` (0-based) sits at the distal end of its segment, i.e. at
    ``(i + 1) * link_length`` along the rest axis when all joints are zero.
    """
    q_r = check_arm(q_r, cfg)
    q_f = check_finger(q_f, cfg)
    pos, rot = arm_tip(q_r, cfg)
    ch = chain(q_f, pos, rot, cfg.link_length)
    return ch.positions[0], ch.rotations[0]
