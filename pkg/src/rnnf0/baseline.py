"""
Reference trackers without a model: YIN and plain autocorrelation.

Both emit :class:`~rnnf0.tracker.F0Track` on the same frame grid as
:func:`rnnf0.tracker.track`, so their output can be scored and written
exactly like the model's.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .signal import FRAME_LEN, HOP, Waveform, frame_signal
from .tracker import DecoderConfig, F0Track, decode_frames


@dataclass(frozen=True)
class YinConfig:
    f0_min: float = 50.0
    f0_max: float = 400.0
    yin_threshold: float = 0.1
    frame_len: int = FRAME_LEN     # integration window
    hop: int = HOP

    def validate(self, sample_rate: int) -> None:
        if not 0 < self.f0_min < self.f0_max < sample_rate / 2:
            raise ConfigError(f"need 0 < f0_min < f0_max < {sample_rate / 2}")
        if not 0 < self.yin_threshold < 1:
            raise ConfigError("yin_threshold must lie in (0, 1)")
        if self.frame_len < 2 or not 1 <= self.hop <= self.frame_len:
            raise ConfigError("invalid frame/hop")


def difference_function(buffers: np.ndarray, window: int, max_lag: int) -> np.ndarray:
    """``d[k, tau] = sum_{j<window} (b[k, j] - b[k, j+tau])**2`` for ``tau = 0..max_lag``."""
    n_frames, length = buffers.shape
    assert length >= window + max_lag
    nfft = 1 << int(math.ceil(math.log2(length + window)))
    head = np.zeros((n_frames, length))
    head[:, :window] = buffers[:, :window]
    spec = np.fft.rfft(buffers, nfft) * np.conj(np.fft.rfft(head, nfft))
    r = np.fft.irfft(spec, nfft)[:, :max_lag + 1]
    sq = np.concatenate((np.zeros((n_frames, 1)), np.cumsum(buffers ** 2, axis=1)), axis=1)
    e0 = sq[:, window][:, None]
    taus = np.arange(max_lag + 1)
    e_tau = sq[:, taus + window] - sq[:, taus]
    return np.maximum(e0 + e_tau - 2.0 * r, 0.0)


def cumulative_mean_normalized(d: np.ndarray) -> np.ndarray:
    out = np.ones_like(d)
    csum = np.cumsum(d[:, 1:], axis=1)
    taus = np.arange(1, d.shape[1])
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = d[:, 1:] * taus / csum
    out[:, 1:] = np.where(csum > 0, ratio, 1.0)
    return out


def yin_track(w: Waveform, cfg: YinConfig = YinConfig()) -> F0Track:
    """YIN estimates centred on the frames of ``frame_signal(w, frame_len, hop)``.

    Each frame's analysis buffer extends half the maximum lag on both
    sides (zero-padded at the signal edges) so the integration window
    stays ``frame_len`` samples for every candidate lag.
    """
    fs = w.sample_rate
    cfg.validate(fs)
    frames = frame_signal(w, cfg.frame_len, cfg.hop)
    tau_min = max(2, int(math.floor(fs / cfg.f0_max)))
    tau_max = int(math.ceil(fs / cfg.f0_min))
    pad = tau_max // 2
    x = np.concatenate((np.zeros(pad), w.samples, np.zeros(tau_max - pad + 1)))
    length = cfg.frame_len + tau_max + 1
    idx = frames.start_offsets[:, None] + np.arange(length)[None, :]
    d = difference_function(x[idx], cfg.frame_len, tau_max + 1)
    dn = cumulative_mean_normalized(d)
    n = len(frames)
    f0 = np.zeros(n)
    voiced = np.zeros(n, dtype=bool)
    conf = np.zeros(n)
    for k in range(n):
        row = dn[k]
        below = np.flatnonzero(row[tau_min:tau_max] < cfg.yin_threshold)
        if below.size == 0:
            conf[k] = max(0.0, 1.0 - float(row[tau_min:tau_max].min()))
            continue
        tau = tau_min + int(below[0])
        while tau + 1 < tau_max and row[tau + 1] < row[tau]:
            tau += 1
        left, centre, right = row[tau - 1], row[tau], row[tau + 1]
        den = left - 2.0 * centre + right
        shift = 0.5 * (left - right) / den if den > 0 else 0.0
        period = tau + float(np.clip(shift, -1.0, 1.0))
        f0[k] = fs / period
        voiced[k] = True
        conf[k] = 1.0 - float(centre)
    return F0Track(frames.times, f0, voiced, conf)


def acf_track(w: Waveform, cfg: DecoderConfig = DecoderConfig(),
              frame_len: int = FRAME_LEN, hop: int = HOP) -> F0Track:
    """The model tracker's decoder and voicing gate applied to raw frames."""
    frames = frame_signal(w, frame_len, hop)
    cfg.validate(w.sample_rate, frame_len)
    return decode_frames(frames.frames, frames.times, cfg, w.sample_rate)
