"""16-bit PCM WAV ingestion and ground-truth F0 files."""
from __future__ import annotations

import logging
import wave
from pathlib import Path

import numpy as np

from ..errors import AlignmentError, IngestError
from ..signal import FRAME_LEN, HOP, SAMPLE_RATE, Waveform
from ..targets import GroundTruthF0

log = logging.getLogger(__name__)

PCM_SCALE = 32768.0


def load_audio(path: str | Path, sample_rate: int = SAMPLE_RATE) -> Waveform:
    """Read a mono 16-bit PCM WAV file, scaled to [-1, 1).

    No resampling: files at any rate other than ``sample_rate`` are rejected.
    """
    try:
        with wave.open(str(path), "rb") as fh:
            channels = fh.getnchannels()
            width = fh.getsampwidth()
            rate = fh.getframerate()
            comp = fh.getcomptype()
            raw = fh.readframes(fh.getnframes())
    except (OSError, EOFError, wave.Error) as exc:
        raise IngestError(f"{path}: {exc}") from exc
    if comp != "NONE" or width != 2:
        raise IngestError(f"{path}: only 16-bit PCM is supported")
    if channels != 1:
        raise IngestError(f"{path}: expected mono audio, got {channels} channels")
    if rate != sample_rate:
        raise IngestError(f"{path}: sample rate {rate} Hz, expected {sample_rate} Hz")
    pcm = np.frombuffer(raw, dtype="<i2")
    return Waveform(pcm.astype(np.float64) / PCM_SCALE, rate)


def to_pcm16(samples: np.ndarray) -> np.ndarray:
    return np.clip(np.round(np.asarray(samples) * PCM_SCALE), -32768, 32767).astype("<i2")


def write_audio(path: str | Path, w: Waveform) -> None:
    with wave.open(str(path), "wb") as fh:
        fh.setnchannels(1)
        fh.setsampwidth(2)
        fh.setframerate(w.sample_rate)
        fh.writeframes(to_pcm16(w.samples).tobytes())


def load_ground_truth(path: str | Path, column: int = 0, frame_len: int = FRAME_LEN,
                      hop: int = HOP, sample_rate: int = SAMPLE_RATE) -> GroundTruthF0:
    """Parse a whitespace-delimited F0 file, one frame per line (0 = unvoiced)."""
    values = []
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise IngestError(f"{path}: {exc}") from exc
    for lineno, line in enumerate(text.splitlines(), 1):
        fields = line.split()
        if not fields or fields[0].startswith("#"):
            continue
        try:
            v = float(fields[column])
        except (IndexError, ValueError):
            raise IngestError(f"{path}:{lineno}: cannot read F0 from column {column}") from None
        if not np.isfinite(v) or v < 0:
            raise IngestError(f"{path}:{lineno}: invalid F0 value {fields[column]!r}")
        values.append(v)
    return GroundTruthF0(np.array(values, dtype=np.float64), frame_len, hop, sample_rate)


def write_ground_truth(path: str | Path, truth: GroundTruthF0) -> None:
    lines = [f"{f:.6f} {int(f > 0)}" for f in truth.f0]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""))


def align_to_frames(truth: GroundTruthF0, n_frames: int, max_offset: int = 2) -> GroundTruthF0:
    """Match ``truth`` to an estimator producing ``n_frames`` frames.

    A surplus of up to ``max_offset`` truth frames is dropped from the end
    with a warning; a shortfall of up to ``max_offset`` frames is left to
    the caller, who must truncate the estimates to ``len(result)``.
    """
    k = len(truth) - n_frames
    if k == 0:
        return truth
    if abs(k) > max_offset:
        raise AlignmentError(f"{len(truth)} truth frames vs {n_frames} estimator frames")
    log.warning("truth has %d frames, estimator %d; truncating to the shorter",
                len(truth), n_frames)
    return truth.truncate(min(len(truth), n_frames))


def trim_edges(frames, n_head: int = 400, n_tail: int = 200):
    """Drop ``n_head`` leading and ``n_tail`` trailing frames.

    Returns ``None`` (and logs a warning) when nothing would remain.
    """
    n = len(frames)
    if n <= n_head + n_tail:
        log.warning("skipping utterance with %d frames (trim %d + %d)", n, n_head, n_tail)
        return None
    return frames[n_head:n - n_tail]
