"""Quasi-static soft-finger surrogate: kinematics, contact, rendering, datasets."""

from .config import N_ARM, N_LINKS, Box, Camera, SceneConfig, random_scene
from .dataset import (
    Dataset,
    DatasetFormatError,
    SchemaVersionError,
    ShapeMismatchError,
    TruncatedDatasetError,
    build_dataset,
    expected_size,
    read_dataset,
    write_dataset,
)
from .episode import RATE_HZ, Episode, generate_dataset, generate_episode
from .frames import Frames
from .kinematics import JointLimitError, forward_kinematics
from .render import compute_flow, render, scene_geometry
from .settle import SettleResult, settle

__all__ = [
    "N_ARM",
    "N_LINKS",
    "RATE_HZ",
    "Box",
    "Camera",
    "Dataset",
    "DatasetFormatError",
    "Episode",
    "Frames",
    "JointLimitError",
    "SceneConfig",
    "SchemaVersionError",
    "SettleResult",
    "ShapeMismatchError",
    "TruncatedDatasetError",
    "build_dataset",
    "compute_flow",
    "expected_size",
    "forward_kinematics",
    "generate_dataset",
    "generate_episode",
    "random_scene",
    "read_dataset",
    "render",
    "scene_geometry",
    "settle",
    "write_dataset",
]
