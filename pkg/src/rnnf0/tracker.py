"""
F0 tracking with a trained waveform-to-sinusoid model.

Each frame is analysed inside a window of ``2p+1`` neighbouring frames;
the network output at the centre step is decoded by autocorrelation and
the frame is declared voiced when that output correlates well enough
with a single cosine at the decoded frequency.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Literal, NamedTuple

import numpy as np

from .errors import ConfigError, DimensionError, IngestError
from .neural.model import RecurrentModel, predict
from .signal import SAMPLE_RATE, Waveform, autocorrelation_curve, fit_sinusoid_phase, frame_signal

VOICING_THRESHOLD = 0.15


@dataclass(frozen=True)
class DecoderConfig:
    f0_min: float = 50.0
    f0_max: float = 400.0
    voicing_threshold: float = VOICING_THRESHOLD
    interpolation: Literal["none", "parabolic"] = "none"
    # a later correlation peak must beat the earliest one by this factor to win
    peak_ratio: float = 0.9

    def validate(self, sample_rate: int = SAMPLE_RATE, frame_len: int | None = None) -> None:
        if not 0 < self.f0_min < self.f0_max < sample_rate / 2:
            raise ConfigError(
                f"need 0 < f0_min < f0_max < {sample_rate / 2}, "
                f"got {self.f0_min}, {self.f0_max}")
        if not 0 < self.voicing_threshold < 1:
            raise ConfigError("voicing threshold must lie in (0, 1)")
        if self.interpolation not in ("none", "parabolic"):
            raise ConfigError(f"unknown interpolation {self.interpolation!r}")
        if not 0 < self.peak_ratio <= 1:
            raise ConfigError("peak_ratio must lie in (0, 1]")
        if frame_len is not None:
            lo, hi = self.lag_range(sample_rate)
            if lo > hi or hi >= frame_len:
                raise ConfigError(
                    f"lag range [{lo}, {hi}] empty or not below frame length {frame_len}")

    def lag_range(self, sample_rate: int = SAMPLE_RATE) -> tuple[int, int]:
        return math.ceil(sample_rate / self.f0_max - 1e-9), math.floor(sample_rate / self.f0_min + 1e-9)


class F0Estimate(NamedTuple):
    frame_index: int
    f0: float
    voiced: bool
    confidence: float


@dataclass
class F0Track:
    """Per-frame estimates stored column-wise."""

    times: np.ndarray
    f0: np.ndarray
    voiced: np.ndarray
    confidence: np.ndarray

    def __len__(self) -> int:
        return len(self.f0)

    def __iter__(self) -> Iterator[F0Estimate]:
        for i in range(len(self)):
            yield F0Estimate(i, float(self.f0[i]), bool(self.voiced[i]),
                             float(self.confidence[i]))

    def __getitem__(self, i: int) -> F0Estimate:
        return F0Estimate(i, float(self.f0[i]), bool(self.voiced[i]), float(self.confidence[i]))

    def equals(self, other: "F0Track") -> bool:
        return all(np.array_equal(getattr(self, k), getattr(other, k))
                   for k in ("times", "f0", "voiced", "confidence"))


def _parabolic_offset(left: float, centre: float, right: float) -> float:
    den = left - 2.0 * centre + right
    if den >= 0:
        return 0.0
    return float(np.clip(0.5 * (left - right) / den, -1.0, 1.0))


def decode_f0(y: np.ndarray, cfg: DecoderConfig = DecoderConfig(),
              sample_rate: int = SAMPLE_RATE) -> tuple[float, float]:
    """Frequency and lag of the dominant autocorrelation peak of ``y``.

    Local maxima of the normalized autocorrelation inside the lag range are
    scanned from the shortest lag; the first one reaching ``peak_ratio``
    times the best value is taken. Exact ties therefore resolve to the
    smaller lag, and a subharmonic lag can only win by a clear margin.
    """
    y = np.asarray(y, dtype=np.float64)
    n = len(y)
    cfg.validate(sample_rate, n)
    lo, hi = cfg.lag_range(sample_rate)
    lags = np.arange(max(lo - 1, 1), min(hi + 1, n - 1) + 1)
    r = autocorrelation_curve(y, lags)
    inside = (lags >= lo) & (lags <= hi)
    r_in = r[inside]
    lags_in = lags[inside]
    best = float(r_in.max())
    left = np.concatenate(([-np.inf], r[:-1]))[inside]
    right = np.concatenate((r[1:], [-np.inf]))[inside]
    # plateaus count as peaks on their first sample
    peaks = (r_in > left) & (r_in >= right)
    if best > 0:
        chosen = np.flatnonzero(peaks & (r_in >= cfg.peak_ratio * best))
    else:
        chosen = np.array([], dtype=int)
    k = int(chosen[0]) if chosen.size else int(np.argmax(r_in))
    lag = float(lags_in[k])
    if cfg.interpolation == "parabolic":
        j = int(np.flatnonzero(lags == lags_in[k])[0])
        if 0 < j < len(r) - 1:
            lag += _parabolic_offset(r[j - 1], r[j], r[j + 1])
    return sample_rate / lag, lag


def detect_voicing(y: np.ndarray, f0_hat: float, cfg: DecoderConfig = DecoderConfig(),
                   sample_rate: int = SAMPLE_RATE) -> tuple[bool, float]:
    """Voicing flag and peak sinusoid correlation of ``y`` at ``f0_hat``."""
    y = np.asarray(y, dtype=np.float64)
    if y.ndim != 1 or len(y) < 2:
        raise DimensionError("posterior must be a 1-D vector of at least 2 samples")
    confidence = fit_sinusoid_phase(y, f0_hat, sample_rate).correlation
    return confidence >= cfg.voicing_threshold, confidence


def decode_frames(outputs: np.ndarray, times: np.ndarray, cfg: DecoderConfig,
                  sample_rate: int = SAMPLE_RATE) -> F0Track:
    """Decode and voice-gate every row of ``outputs``."""
    n = len(outputs)
    f0 = np.zeros(n)
    voiced = np.zeros(n, dtype=bool)
    conf = np.zeros(n)
    for i, y in enumerate(outputs):
        cand, _ = decode_f0(y, cfg, sample_rate)
        v, c = detect_voicing(y, cand, cfg, sample_rate)
        voiced[i] = v
        conf[i] = c
        f0[i] = cand if v else 0.0
    return F0Track(np.asarray(times, dtype=float), f0, voiced, conf)


def normalize_rows(frames: np.ndarray) -> np.ndarray:
    """Scale every frame to unit RMS; silent frames stay zero."""
    rms = np.sqrt(np.mean(frames * frames, axis=-1, keepdims=True))
    return np.divide(frames, rms, out=np.zeros_like(frames), where=rms > 1e-12)


def context_windows(frames: np.ndarray, radius: int, centres: np.ndarray | None = None) -> np.ndarray:
    """Stack ``2*radius+1`` neighbouring frames around each centre.

    Neighbours past either end repeat the edge frame.
    """
    n = len(frames)
    if centres is None:
        centres = np.arange(n)
    idx = np.clip(np.asarray(centres)[:, None] + np.arange(-radius, radius + 1)[None, :], 0, n - 1)
    return frames[idx]


def model_outputs(model: RecurrentModel, frames: np.ndarray, batch: int = 256) -> np.ndarray:
    """Centre-step network output for every frame."""
    if frames.shape[1] != model.input_dim:
        raise DimensionError(
            f"frames have {frames.shape[1]} samples, model expects {model.input_dim}")
    x = normalize_rows(frames) if model.normalize_frames else frames
    p = model.context_radius
    out = np.empty_like(x)
    for s in range(0, len(x), batch):
        win = context_windows(x, p, np.arange(s, min(s + batch, len(x))))
        out[s:s + len(win)] = predict(model, win)[:, p]
    return out


def track(w: Waveform, model: RecurrentModel, cfg: DecoderConfig = DecoderConfig()) -> F0Track:
    """Estimate F0 for every frame of ``w``."""
    fs = frame_signal(w, model.input_dim, model.hop)
    cfg.validate(w.sample_rate, model.input_dim)
    outputs = model_outputs(model, fs.frames)
    return decode_frames(outputs, fs.times, cfg, w.sample_rate)


def write_track(result: F0Track, path: str | Path) -> None:
    lines = [f"{t:.6f}\t{f:.6f}\t{int(v)}\t{c:.6f}"
             for t, f, v, c in zip(result.times, result.f0, result.voiced, result.confidence)]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""))


def read_track(path: str | Path) -> F0Track:
    rows = []
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 4:
            raise IngestError(f"{path}:{lineno}: expected 4 tab-separated fields")
        try:
            rows.append((float(parts[0]), float(parts[1]), int(parts[2]), float(parts[3])))
        except ValueError as exc:
            raise IngestError(f"{path}:{lineno}: {exc}") from None
    arr = np.array(rows, dtype=float).reshape(-1, 4)
    return F0Track(arr[:, 0], arr[:, 1], arr[:, 2].astype(bool), arr[:, 3])
