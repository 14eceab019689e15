"""Recurrent sinusoid-regression network: model, training and checkpoints."""
from .checkpoint import load_checkpoint, save_checkpoint
from .model import RecurrentModel, backward, forward, init_model, loss_and_grad, mse_loss, predict
from .train import SequenceBatch, TrainConfig, TrainResult, train

__all__ = [
    "RecurrentModel", "SequenceBatch", "TrainConfig", "TrainResult", "backward", "forward",
    "init_model", "load_checkpoint", "loss_and_grad", "mse_loss", "predict", "save_checkpoint",
    "train",
]
