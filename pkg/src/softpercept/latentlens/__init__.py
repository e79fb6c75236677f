"""Projections and information measures for learned latent spaces."""

from .analysis import (
    CentroidAnalysis,
    MiResult,
    centroid_distance_analysis,
    information_gain,
    mutual_information,
    write_embedding_csv,
)
from .pca import PcaResult, pca_project
from .report import (
    REFERENCE,
    LatentSet,
    collect_latents,
    information_gain_report,
    latent_information,
    row_label,
    select_frames,
    space_report,
)
from .tsne import TsneConfig, TsneResult, conditional_p, joint_p, kl_divergence, perplexity_sweep, squared_distances, tsne_embed

__all__ = [
    "REFERENCE",
    "CentroidAnalysis",
    "LatentSet",
    "MiResult",
    "PcaResult",
    "TsneConfig",
    "TsneResult",
    "centroid_distance_analysis",
    "collect_latents",
    "conditional_p",
    "information_gain",
    "information_gain_report",
    "joint_p",
    "kl_divergence",
    "latent_information",
    "mutual_information",
    "pca_project",
    "perplexity_sweep",
    "row_label",
    "select_frames",
    "space_report",
    "squared_distances",
    "tsne_embed",
    "write_embedding_csv",
]
