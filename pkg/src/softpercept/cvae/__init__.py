"""Action-conditioned multi-modal VAE predicting the next sensory state."""

from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from .config import DEFAULT_WEIGHTS, INPUTS, OUTPUTS, ModalityConfig
from .evaluate import Prediction, eval_rmse, predict, rmse_table, targets, time_predictions, write_rmse_csv
from .loss import elbo_loss, kl_closed_form, kl_standard_normal
from .model import LatentSample, MissingModalityError, Normalizer, PerceptionModel, PredictedState
from .train import TrainingDiverged, TrainResult, batch_loss, evaluate_elbo, init_model, train, write_loss_log

__all__ = [
    "DEFAULT_WEIGHTS",
    "INPUTS",
    "OUTPUTS",
    "CheckpointError",
    "LatentSample",
    "MissingModalityError",
    "ModalityConfig",
    "Normalizer",
    "PerceptionModel",
    "PredictedState",
    "Prediction",
    "TrainResult",
    "TrainingDiverged",
    "batch_loss",
    "elbo_loss",
    "eval_rmse",
    "evaluate_elbo",
    "init_model",
    "kl_closed_form",
    "kl_standard_normal",
    "load_checkpoint",
    "predict",
    "rmse_table",
    "save_checkpoint",
    "targets",
    "time_predictions",
    "train",
    "write_loss_log",
    "write_rmse_csv",
]
