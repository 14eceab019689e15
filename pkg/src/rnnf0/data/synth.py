"""
Synthetic voiced speech with exact ground-truth F0.

Voiced segments are harmonic series driven by a piecewise-linear F0
contour with per-sample phase integration, so glides stay phase
continuous. Unvoiced segments are high-passed noise bursts. Ground truth
is the contour value at each frame centre, or 0 when the centre falls
outside a voiced segment.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import signal as sps

from ..errors import DomainError
from ..signal import FRAME_LEN, HOP, SAMPLE_RATE, Waveform, frame_count, mix_at_snr
from ..targets import GroundTruthF0

NOISE_TYPES = ("white", "pink")


@dataclass(frozen=True)
class SynthSpec:
    contour_times: tuple[float, ...]    # seconds
    contour_f0: tuple[float, ...]       # Hz
    duration: float
    voiced_segments: tuple[tuple[float, float], ...] = ()
    unvoiced_segments: tuple[tuple[float, float], ...] = ()
    n_harmonics: int = 10
    rolloff: float = 0.7                # amplitude ratio between successive harmonics
    noise_type: str | None = None
    snr_db: float | None = None
    seed: int = 0
    sample_rate: int = SAMPLE_RATE

    def validate(self) -> None:
        if self.duration <= 0:
            raise DomainError("duration must be positive")
        if len(self.contour_times) != len(self.contour_f0) or not self.contour_times:
            raise DomainError("contour needs matching, nonempty time and F0 lists")
        if np.any(np.diff(self.contour_times) < 0):
            raise DomainError("contour times must be nondecreasing")
        nyq = self.sample_rate / 2
        f0 = np.asarray(self.contour_f0, dtype=float)
        if np.any(f0 <= 0) or np.any(f0 >= nyq):
            raise DomainError(f"contour must lie in (0, {nyq}) Hz")
        if self.n_harmonics < 1:
            raise DomainError("need at least one harmonic")
        if f0.max() * self.n_harmonics >= nyq:
            raise DomainError(
                f"{self.n_harmonics} harmonics of {f0.max()} Hz exceed Nyquist")
        if self.noise_type is not None and self.noise_type not in NOISE_TYPES:
            raise DomainError(f"unknown noise type {self.noise_type!r}")


def contour_at(spec: SynthSpec, t: np.ndarray) -> np.ndarray:
    return np.interp(t, spec.contour_times, spec.contour_f0)


def make_noise(kind: str, n: int, rng: np.random.Generator) -> np.ndarray:
    """Unit-variance white or pink-like (1/f power) noise."""
    white = rng.standard_normal(n)
    if kind == "white":
        out = white
    elif kind == "pink":
        spec = np.fft.rfft(white)
        freqs = np.arange(len(spec), dtype=float)
        freqs[0] = 1.0
        out = np.fft.irfft(spec / np.sqrt(freqs), n)
    else:
        raise DomainError(f"unknown noise type {kind!r}")
    return out / np.std(out)


def _segment_mask(segments, n: int, fs: int) -> np.ndarray:
    mask = np.zeros(n, dtype=bool)
    for start, end in segments:
        mask[max(0, int(round(start * fs))):min(n, int(round(end * fs)))] = True
    return mask


def _ramped(mask: np.ndarray, ramp: int) -> np.ndarray:
    """Envelope that follows ``mask`` with raised-cosine edges."""
    env = mask.astype(float)
    if ramp > 1:
        win = np.hanning(2 * ramp + 1)
        env = np.convolve(env, win / win.sum(), mode="same")
    return env


def synth_clean(spec: SynthSpec) -> np.ndarray:
    spec.validate()
    fs = spec.sample_rate
    n = int(round(spec.duration * fs))
    rng = np.random.default_rng(spec.seed)
    t = np.arange(n) / fs
    f0 = contour_at(spec, t)
    phase = 2.0 * np.pi * np.cumsum(f0) / fs
    voiced = _ramped(_segment_mask(spec.voiced_segments, n, fs), int(0.005 * fs))
    x = np.zeros(n)
    offsets = rng.uniform(0, 2 * np.pi, spec.n_harmonics)
    for k in range(1, spec.n_harmonics + 1):
        x += spec.rolloff ** (k - 1) * np.sin(k * phase + offsets[k - 1])
    x *= voiced
    if spec.unvoiced_segments:
        uv = _ramped(_segment_mask(spec.unvoiced_segments, n, fs), int(0.003 * fs))
        b, a = sps.butter(4, 2000.0 / (fs / 2), btype="high")
        burst = sps.lfilter(b, a, rng.standard_normal(n))
        x += 0.3 * uv * burst
    peak = np.max(np.abs(x))
    if peak > 0:
        x *= 0.5 / peak
    return x


def frame_truth(spec: SynthSpec, n_samples: int, frame_len: int = FRAME_LEN,
                hop: int = HOP) -> GroundTruthF0:
    fs = spec.sample_rate
    n_frames = frame_count(n_samples, frame_len, hop)
    centres = (np.arange(n_frames) * hop + 0.5 * frame_len) / fs
    f0 = contour_at(spec, centres)
    voiced = np.zeros(n_frames, dtype=bool)
    for start, end in spec.voiced_segments:
        voiced |= (centres >= start) & (centres < end)
    return GroundTruthF0(np.where(voiced, f0, 0.0), frame_len, hop, fs)


def synth_utterance(spec: SynthSpec, frame_len: int = FRAME_LEN,
                    hop: int = HOP) -> tuple[Waveform, GroundTruthF0]:
    """Render ``spec`` and its per-frame ground truth; noise is added last."""
    clean = Waveform(synth_clean(spec), spec.sample_rate)
    truth = frame_truth(spec, len(clean), frame_len, hop)
    if spec.noise_type is None or spec.snr_db is None:
        return clean, truth
    rng = np.random.default_rng([spec.seed, 1])
    noise = Waveform(make_noise(spec.noise_type, len(clean), rng), spec.sample_rate)
    return mix_at_snr(clean, noise, spec.snr_db, offset=0), truth


def random_spec(rng: np.random.Generator, f0_range: tuple[float, float] = (80.0, 300.0),
                duration: float = 1.5, seed: int | None = None,
                sample_rate: int = SAMPLE_RATE) -> SynthSpec:
    """A random voice: drifting F0 contour, voiced runs separated by
    unvoiced bursts and pauses, random spectral tilt."""
    lo, hi = f0_range
    base = np.exp(rng.uniform(np.log(lo), np.log(hi)))
    n_knots = int(rng.integers(3, 7))
    times = np.sort(np.concatenate(([0.0, duration], rng.uniform(0, duration, n_knots - 2))))
    f0 = np.clip(base * np.exp(rng.normal(0.0, 0.12, n_knots)), lo, hi)
    voiced, unvoiced = [], []
    t = float(rng.uniform(0.02, 0.1))
    while t < duration - 0.1:
        seg = float(rng.uniform(0.15, 0.5))
        voiced.append((t, min(t + seg, duration)))
        t += seg
        gap = float(rng.uniform(0.04, 0.15))
        if rng.random() < 0.6:
            unvoiced.append((t, min(t + gap, duration)))
        t += gap
    n_harm = int(min(rng.integers(4, 16), (sample_rate / 2 - 1) // hi))
    return SynthSpec(tuple(times), tuple(f0), duration, tuple(voiced), tuple(unvoiced),
                     n_harmonics=n_harm, rolloff=float(rng.uniform(0.55, 0.9)),
                     seed=int(rng.integers(2**31)) if seed is None else seed,
                     sample_rate=sample_rate)
