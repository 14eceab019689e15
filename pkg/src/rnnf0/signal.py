"""
DSP primitives: framing, cosine synthesis, normalized correlations and
SNR-controlled noise mixing.

Correlations are normalized by the product of the two segment norms
(no mean removal), so every value lives on a fixed [-1, 1] scale and
is invariant to positive scaling of the input.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import DegenerateInputError, DomainError, EmptyInputError

SAMPLE_RATE = 16000
FRAME_LEN = 400   # 25 ms at 16 kHz
HOP = 80          # 5 ms at 16 kHz

_TINY = 1e-300


@dataclass(frozen=True)
class Waveform:
    samples: np.ndarray
    sample_rate: int = SAMPLE_RATE

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1:
            raise DomainError(f"waveform must be 1-D, got shape {samples.shape}")
        if int(self.sample_rate) <= 0:
            raise DomainError(f"sample rate must be positive, got {self.sample_rate}")
        if not np.all(np.isfinite(samples)):
            raise DomainError("waveform contains NaN or Inf")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate", int(self.sample_rate))

    def __len__(self) -> int:
        return self.samples.shape[0]

    @property
    def duration(self) -> float:
        return len(self) / self.sample_rate


@dataclass(frozen=True)
class FrameSequence:
    """Overlapping rectangular frames, one row per frame."""

    frames: np.ndarray          # (n_frames, frame_len)
    frame_len: int
    hop: int
    sample_rate: int
    start_offsets: np.ndarray = field(repr=False)

    def __len__(self) -> int:
        return self.frames.shape[0]

    @property
    def times(self) -> np.ndarray:
        """Centre time of every frame in seconds."""
        return (self.start_offsets + 0.5 * self.frame_len) / self.sample_rate


def frame_count(n_samples: int, frame_len: int, hop: int) -> int:
    if n_samples < frame_len:
        return 0
    return (n_samples - frame_len) // hop + 1


def frame_signal(w: Waveform, frame_len: int = FRAME_LEN, hop: int = HOP) -> FrameSequence:
    """Slice ``w`` into frames starting at multiples of ``hop``.

    Trailing samples that do not fill a whole frame are dropped.
    """
    frame_len, hop = int(frame_len), int(hop)
    if frame_len < 1:
        raise DomainError(f"frame_len must be >= 1, got {frame_len}")
    if not 1 <= hop <= frame_len:
        raise DomainError(f"hop must be in [1, frame_len], got {hop}")
    n = frame_count(len(w), frame_len, hop)
    if n == 0:
        raise EmptyInputError(
            f"signal of {len(w)} samples is shorter than one frame ({frame_len})")
    offsets = np.arange(n) * hop
    view = np.lib.stride_tricks.sliding_window_view(w.samples, frame_len)[::hop][:n]
    return FrameSequence(frames=np.array(view), frame_len=frame_len, hop=hop,
                         sample_rate=w.sample_rate, start_offsets=offsets)


def synth_cosine(f0: float, phase: float, n: int, sample_rate: int = SAMPLE_RATE) -> np.ndarray:
    """Unit-amplitude ``cos(2*pi*f0*m/fs + phase)`` for ``m = 0 .. n-1``."""
    if not 0.0 < f0 < sample_rate / 2:
        raise DomainError(f"f0 = {f0} Hz outside (0, {sample_rate / 2})")
    if n < 1:
        raise DomainError(f"n must be >= 1, got {n}")
    m = np.arange(n)
    return np.cos(2.0 * np.pi * f0 * m / sample_rate + phase)


def _normalized_dot(a: np.ndarray, b: np.ndarray) -> float:
    den = np.sqrt(np.dot(a, a) * np.dot(b, b))
    if den <= _TINY:
        return 0.0
    return float(np.clip(np.dot(a, b) / den, -1.0, 1.0))


def normalized_autocorrelation(x: np.ndarray, lag: int) -> float:
    x = np.asarray(x, dtype=np.float64)
    if not 1 <= lag < len(x):
        raise DomainError(f"lag {lag} outside [1, {len(x) - 1}]")
    return _normalized_dot(x[:len(x) - lag], x[lag:])


def autocorrelation_curve(x: np.ndarray, lags: np.ndarray) -> np.ndarray:
    """Vectorized :func:`normalized_autocorrelation` over many lags."""
    x = np.asarray(x, dtype=np.float64)
    lags = np.asarray(lags, dtype=np.int64)
    n = len(x)
    if lags.size and (lags.min() < 1 or lags.max() >= n):
        raise DomainError(f"lags must lie in [1, {n - 1}]")
    full = np.correlate(x, x, mode="full")[n - 1:]      # full[k] = sum x[m] x[m+k]
    csum = np.concatenate(([0.0], np.cumsum(x * x)))
    head = csum[n - lags]                  # energy of x[0 : n-lag]
    tail = csum[n] - csum[lags]            # energy of x[lag : n]
    den = np.sqrt(head * tail)
    out = np.zeros(lags.shape, dtype=np.float64)
    ok = den > _TINY
    out[ok] = full[lags[ok]] / den[ok]
    return np.clip(out, -1.0, 1.0)


def normalized_crosscorrelation(x: np.ndarray, y: np.ndarray) -> float:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise DomainError(f"length mismatch: {x.shape} vs {y.shape}")
    if len(x) < 2:
        raise DomainError("cross-correlation needs at least 2 samples")
    return _normalized_dot(x, y)


class SinusoidFit(NamedTuple):
    phase: float
    correlation: float
    degenerate: bool


def fit_sinusoid_phase(x: np.ndarray, f0: float, sample_rate: int = SAMPLE_RATE) -> SinusoidFit:
    """Phase maximizing the normalized cross-correlation of ``x`` with a cosine at ``f0``.

    The best-fitting unit cosine lies in the span of ``cos(wm)`` and
    ``sin(wm)``; projecting ``x`` onto that plane (with the exact Gram
    matrix, since the two are not orthogonal over a fractional number of
    periods) gives both the optimal phase and the peak correlation.
    """
    x = np.asarray(x, dtype=np.float64)
    c = synth_cosine(f0, 0.0, len(x), sample_rate)
    s = np.sin(2.0 * np.pi * f0 * np.arange(len(x)) / sample_rate)
    energy = float(np.dot(x, x))
    if energy <= _TINY:
        return SinusoidFit(0.0, 0.0, True)
    proj = np.array([np.dot(x, c), np.dot(x, s)])
    gram = np.array([[np.dot(c, c), np.dot(c, s)], [np.dot(c, s), np.dot(s, s)]])
    try:
        a, b = np.linalg.solve(gram, proj)
    except np.linalg.LinAlgError:
        a, b = proj / max(gram[0, 0], _TINY), 0.0
    # cos(wm + phi) = cos(phi) cos(wm) - sin(phi) sin(wm)
    phase = float(np.arctan2(-b, a))
    if phase == -np.pi:
        phase = np.pi
    fit_energy = float(a * proj[0] + b * proj[1])
    corr = float(np.sqrt(max(fit_energy, 0.0) / energy))
    return SinusoidFit(phase, min(corr, 1.0), False)


def signal_power(x: np.ndarray) -> float:
    x = np.asarray(x, dtype=np.float64)
    return float(np.mean(x * x))


def mix_at_snr(clean: Waveform, noise: Waveform, snr_db: float,
               rng: np.random.Generator | None = None,
               offset: int | None = None) -> Waveform:
    """Add ``noise`` to ``clean`` scaled so the clean-to-noise power ratio is ``snr_db``.

    The noise is read cyclically from a start ``offset``; when no offset
    is given one is drawn from ``rng`` (seeded with 0 if omitted).
    """
    if clean.sample_rate != noise.sample_rate:
        raise DomainError(
            f"sample rate mismatch: {clean.sample_rate} vs {noise.sample_rate}")
    n = len(clean)
    if offset is None:
        rng = rng if rng is not None else np.random.default_rng(0)
        offset = int(rng.integers(0, len(noise)))
    idx = (offset + np.arange(n)) % len(noise)
    segment = noise.samples[idx]
    p_clean = signal_power(clean.samples)
    p_noise = signal_power(segment)
    if p_clean <= 0.0 or p_noise <= 0.0:
        raise DegenerateInputError("clean and noise must both have nonzero power")
    gain = np.sqrt(p_clean / (p_noise * 10.0 ** (snr_db / 10.0)))
    return Waveform(clean.samples + gain * segment, clean.sample_rate)


def snr_gain(clean_power: float, noise_power: float, snr_db: float) -> float:
    """Amplitude gain applied to the noise by :func:`mix_at_snr`."""
    return float(np.sqrt(clean_power / (noise_power * 10.0 ** (snr_db / 10.0))))
