"""Sampling, action and feedback probes for a trained model."""

from .plots import flow_strip_png, flow_to_rgb
from .probes import (
    KINDS,
    ProbeConfigError,
    ProbeReport,
    action_perturbation,
    action_sweep,
    check_rollout_config,
    default_grid,
    feedback_rollout,
    next_input,
    resample_stability,
    rollout_drift,
    synthetic_latent,
)
from .warp import advect

__all__ = [
    "KINDS",
    "ProbeConfigError",
    "ProbeReport",
    "action_perturbation",
    "action_sweep",
    "advect",
    "check_rollout_config",
    "default_grid",
    "feedback_rollout",
    "flow_strip_png",
    "flow_to_rgb",
    "next_input",
    "resample_stability",
    "rollout_drift",
    "synthetic_latent",
]
