"""
In-memory training corpus and random window sampling.

Mixed waveforms are held once per (utterance, noise, SNR) condition;
frames, context windows and regression targets are cut from them on
demand so that a few thousand utterance variants fit comfortably in RAM.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

from ..neural.train import SequenceBatch
from ..signal import FRAME_LEN, HOP, SAMPLE_RATE, frame_count
from ..targets import GroundTruthF0, align_phase
from ..tracker import normalize_rows


@dataclass
class CorpusItem:
    noisy: np.ndarray        # mixed waveform
    f0: np.ndarray           # per-frame truth, 0 = unvoiced
    phase: np.ndarray        # per-frame target phase (voiced frames only)
    label: str = ""

    @property
    def n_frames(self) -> int:
        return len(self.f0)


def target_phases(clean: np.ndarray, truth: GroundTruthF0) -> np.ndarray:
    """Phase of the target cosine for every voiced frame, aligned on ``clean``."""
    fl, hop = truth.frame_len, truth.hop
    phases = np.zeros(len(truth))
    for i in np.flatnonzero(truth.voiced):
        phases[i] = align_phase(clean[i * hop:i * hop + fl], truth.f0[i], truth.sample_rate).phase
    return phases


class TrainingCorpus:
    """Collection of :class:`CorpusItem` plus a seeded window sampler."""

    def __init__(self, items: list[CorpusItem], radius: int, frame_len: int = FRAME_LEN,
                 hop: int = HOP, sample_rate: int = SAMPLE_RATE, normalize: bool = True):
        self.items = [it for it in items if it.n_frames > 0]
        if not self.items:
            raise ValueError("corpus is empty")
        self.radius = radius
        self.frame_len = frame_len
        self.hop = hop
        self.sample_rate = sample_rate
        self.normalize = normalize
        for it in self.items:
            n = frame_count(len(it.noisy), frame_len, hop)
            if n < it.n_frames:
                raise ValueError(f"{it.label}: {it.n_frames} truth frames, {n} signal frames")
        counts = np.array([it.n_frames for it in self.items])
        self._cum = np.concatenate(([0], np.cumsum(counts)))
        self.n_frames = int(self._cum[-1])

    def _window(self, item: CorpusItem, centre: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        T = 2 * self.radius + 1
        idx = np.clip(centre + np.arange(-self.radius, self.radius + 1), 0, item.n_frames - 1)
        starts = idx * self.hop
        x = item.noisy[starts[:, None] + np.arange(self.frame_len)[None, :]]
        if self.normalize:
            x = normalize_rows(x)
        f0 = item.f0[idx]
        voiced = f0 > 0
        t = x.copy()
        if voiced.any():
            m = np.arange(self.frame_len)
            w = 2.0 * np.pi * f0[voiced, None] * m[None, :] / self.sample_rate
            t[voiced] = np.cos(w + item.phase[idx][voiced, None])
        assert x.shape == (T, self.frame_len)
        return x, t, voiced

    def batch(self, flat_indices: np.ndarray) -> SequenceBatch:
        """Windows centred on the given corpus-wide frame indices."""
        xs, ts, vs = [], [], []
        for g in flat_indices:
            k = int(np.searchsorted(self._cum, g, side="right") - 1)
            x, t, v = self._window(self.items[k], int(g - self._cum[k]))
            xs.append(x)
            ts.append(t)
            vs.append(v)
        return SequenceBatch(np.stack(xs), np.stack(ts), np.stack(vs))

    def sampler(self, batch_size: int, steps: int, seed: int):
        """Callable ``epoch -> batches`` drawing frames uniformly at random."""
        def epoch_batches(epoch: int) -> Iterator[SequenceBatch]:
            rng = np.random.default_rng([seed, epoch])
            for _ in range(steps):
                yield self.batch(rng.integers(0, self.n_frames, batch_size))
        return epoch_batches


def trim_item(item: CorpusItem, n_head: int, n_tail: int, hop: int) -> CorpusItem | None:
    """Drop leading/trailing frames from an item, keeping its waveform aligned."""
    if n_head == 0 and n_tail == 0:
        return item
    n = item.n_frames
    if n <= n_head + n_tail:
        return None
    keep = slice(n_head, n - n_tail)
    return CorpusItem(item.noisy[n_head * hop:], item.f0[keep], item.phase[keep], item.label)
