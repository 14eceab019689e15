"""Mini-batch gradient descent over sequence batches."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable

import numpy as np

from ..errors import ConfigError, DimensionError, TrainingDivergedError
from .model import RecurrentModel, backward, forward

log = logging.getLogger(__name__)


@dataclass
class SequenceBatch:
    inputs: np.ndarray               # (batch, 2p+1, M)
    targets: np.ndarray              # (batch, 2p+1, M)
    voiced: np.ndarray | None = None  # (batch, 2p+1) bool

    def __post_init__(self):
        if self.inputs.shape != self.targets.shape or self.inputs.ndim != 3:
            raise DimensionError(
                f"inputs {self.inputs.shape} and targets {self.targets.shape} must match")

    def __len__(self) -> int:
        return self.inputs.shape[0]


@dataclass
class TrainConfig:
    """Training hyperparameters.

    Defaults give the full-size architecture (3 x 1024 LSTM, 300-frame
    batches, 25 % dropout, 15-frame context); the learning rate, epoch count
    and clipping threshold are engineering defaults.
    """

    learning_rate: float = 1e-3
    batch_size: int = 300
    dropout: float = 0.25
    epochs: int = 1
    seed: int = 0
    clip_norm: float | None = 5.0
    cell_type: str = "lstm"
    hidden: tuple[int, ...] = (1024, 1024, 1024)
    context_radius: int = 7
    batchnorm: bool = True
    momentum: float = 0.0
    steps_per_epoch: int = 1000
    normalize_frames: bool = False

    def validate(self) -> None:
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError(f"dropout must be in [0, 1), got {self.dropout}")
        if self.batch_size < 1:
            raise ConfigError("batch size must be >= 1")
        if self.learning_rate < 0:
            raise ConfigError("learning rate must be non-negative")
        if not 0.0 <= self.momentum < 1.0:
            raise ConfigError("momentum must be in [0, 1)")
        if self.epochs < 1 or self.steps_per_epoch < 1:
            raise ConfigError("epochs and steps_per_epoch must be >= 1")
        if self.cell_type not in ("rnn", "lstm"):
            raise ConfigError(f"unknown cell type {self.cell_type!r}")


@dataclass
class TrainResult:
    model: RecurrentModel
    history: list[tuple[int, float]] = field(default_factory=list)

    @property
    def losses(self) -> np.ndarray:
        return np.array([loss for _, loss in self.history])


def clip_gradients(grads: dict[str, np.ndarray], max_norm: float | None) -> float:
    """Scale ``grads`` in place so their global L2 norm is at most ``max_norm``."""
    norm = math.sqrt(sum(float(np.vdot(g, g)) for g in grads.values()))
    if max_norm is not None and norm > max_norm:
        scale = max_norm / norm
        for g in grads.values():
            g *= scale
    return norm


def train_step(model: RecurrentModel, batch: SequenceBatch, cfg: TrainConfig,
               rng: np.random.Generator, velocity: dict[str, np.ndarray] | None = None) -> float:
    _, cache = forward(model, batch.inputs, train=True, dropout=cfg.dropout, rng=rng,
                       update_stats=True)
    loss, grads = backward(model, cache, batch.targets)
    if not math.isfinite(loss):
        raise TrainingDivergedError(f"loss became {loss}")
    clip_gradients(grads, cfg.clip_norm)
    lr = cfg.learning_rate
    for k, g in grads.items():
        if velocity is not None:
            v = velocity[k]
            v *= cfg.momentum
            v -= lr * g
            model.params[k] += v
        else:
            model.params[k] -= lr * g
    return loss


def train(model: RecurrentModel, dataset: Iterable[SequenceBatch] | Callable[[int], Iterable[SequenceBatch]],
          cfg: TrainConfig, callback: Callable[[int, float], None] | None = None) -> TrainResult:
    """Train a copy of ``model``.

    ``dataset`` is either a re-iterable collection of batches or a callable
    mapping an epoch index to that epoch's batches. Raises
    :class:`TrainingDivergedError` on a non-finite loss.
    """
    cfg.validate()
    model = model.copy()
    rng = np.random.default_rng(cfg.seed)
    velocity = ({k: np.zeros_like(v) for k, v in model.params.items()}
                if cfg.momentum > 0 else None)
    history: list[tuple[int, float]] = []
    step = 0
    for epoch in range(cfg.epochs):
        batches = dataset(epoch) if callable(dataset) else dataset
        seen = False
        for batch in batches:
            seen = True
            try:
                loss = train_step(model, batch, cfg, rng, velocity)
            except TrainingDivergedError as exc:
                raise TrainingDivergedError(
                    f"training aborted at epoch {epoch}, step {step}: {exc}") from exc
            history.append((step, loss))
            if callback is not None:
                callback(step, loss)
            if step % 100 == 0:
                log.info("epoch %d step %d loss %.6f", epoch, step, loss)
            step += 1
        if not seen:
            raise ConfigError("dataset yielded no batches")
    return TrainResult(model, history)
