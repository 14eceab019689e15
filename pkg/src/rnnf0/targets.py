"""
Per-frame regression targets.

Voiced frames map to a unit cosine at the ground-truth F0 whose phase
best matches the frame; unvoiced and silent frames map to themselves.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .errors import AlignmentError, DomainError
from .signal import FRAME_LEN, HOP, SAMPLE_RATE, SinusoidFit, fit_sinusoid_phase, synth_cosine


@dataclass(frozen=True)
class GroundTruthF0:
    """Reference F0 per frame; 0 marks an unvoiced or silent frame."""

    f0: np.ndarray
    frame_len: int = FRAME_LEN
    hop: int = HOP
    sample_rate: int = SAMPLE_RATE

    def __post_init__(self):
        f0 = np.asarray(self.f0, dtype=np.float64)
        if f0.ndim != 1:
            raise DomainError("ground truth must be 1-D")
        if np.any(f0 < 0) or np.any(f0 >= self.sample_rate / 2) or not np.all(np.isfinite(f0)):
            raise DomainError("ground-truth F0 values must lie in [0, Nyquist)")
        object.__setattr__(self, "f0", f0)

    def __len__(self) -> int:
        return self.f0.shape[0]

    @property
    def voiced(self) -> np.ndarray:
        return self.f0 > 0

    def truncate(self, n: int) -> "GroundTruthF0":
        return GroundTruthF0(self.f0[:n], self.frame_len, self.hop, self.sample_rate)

    def check_length(self, n_frames: int) -> None:
        if len(self) != n_frames:
            raise AlignmentError(f"{len(self)} truth frames vs {n_frames} estimates")


@dataclass(frozen=True)
class SinusoidTarget:
    kind: Literal["voiced", "identity"]
    samples: np.ndarray
    f0: float = 0.0
    phase: float = 0.0


def align_phase(frame: np.ndarray, f0: float, sample_rate: int = SAMPLE_RATE) -> SinusoidFit:
    """Phase in (-pi, pi] of the cosine at ``f0`` best correlated with ``frame``.

    A zero-energy frame yields phase 0 with ``degenerate=True``.
    """
    frame = np.asarray(frame, dtype=np.float64)
    if frame.size == 0:
        raise DomainError("empty frame")
    if not 0.0 < f0 < sample_rate / 2:
        raise DomainError(f"f0 = {f0} Hz outside (0, {sample_rate / 2})")
    return fit_sinusoid_phase(frame, f0, sample_rate)


def build_target(frame: np.ndarray, f0: float, sample_rate: int = SAMPLE_RATE,
                 reference: np.ndarray | None = None) -> SinusoidTarget:
    """Regression target for one frame.

    ``reference`` is the frame used for phase alignment; it defaults to
    ``frame`` and is typically the clean version of a noisy input.
    """
    frame = np.asarray(frame, dtype=np.float64)
    if f0 is None or f0 <= 0:
        return SinusoidTarget("identity", frame.copy())
    if f0 >= sample_rate / 2:
        raise DomainError(f"f0 = {f0} Hz at or above Nyquist")
    ref = frame if reference is None else reference
    phase = align_phase(ref, f0, sample_rate).phase
    return SinusoidTarget("voiced", synth_cosine(f0, phase, len(frame), sample_rate),
                          float(f0), phase)


def build_targets(frames: np.ndarray, f0: np.ndarray, sample_rate: int = SAMPLE_RATE,
                  references: np.ndarray | None = None) -> np.ndarray:
    """Stack :func:`build_target` over every row of ``frames``."""
    frames = np.asarray(frames, dtype=np.float64)
    f0 = np.asarray(f0, dtype=np.float64)
    if len(frames) != len(f0):
        raise AlignmentError(f"{len(frames)} frames vs {len(f0)} F0 values")
    out = frames.copy()
    n = frames.shape[1]
    m = np.arange(n)
    voiced = np.flatnonzero(f0 > 0)
    refs = frames if references is None else np.asarray(references, dtype=np.float64)
    for i in voiced:
        phase = align_phase(refs[i], f0[i], sample_rate).phase
        out[i] = np.cos(2.0 * np.pi * f0[i] * m / sample_rate + phase)
    return out
