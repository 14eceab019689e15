"""
Dataset manifests.

A manifest is tab-separated text. The first line carries the seed the
noise offsets were drawn from, the second names the columns::

    #rnnf0-manifest v1 seed=7
    audio  truth  speaker  split  noise  snr  noise_path  offset

``audio`` always points at the clean recording. Noisy conditions are
mixed on load from ``noise_path`` starting at sample ``offset``, so the
expanded corpus never has to be materialized on disk. ``noise`` is
``clean`` and ``snr`` is ``-`` for the clean condition.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from ..errors import IngestError
from ..signal import Waveform, mix_at_snr
from .audio import load_audio

HEADER_TAG = "#rnnf0-manifest v1"
COLUMNS = ("audio", "truth", "speaker", "split", "noise", "snr", "noise_path", "offset")
SPLITS = ("train", "cv", "test")
CLEAN = "clean"


@dataclass(frozen=True)
class UtteranceRecord:
    audio: str
    truth: str
    speaker: str = "-"
    split: str = "train"
    noise: str = CLEAN
    snr_db: float | None = None
    noise_path: str = "-"
    offset: int = 0

    @property
    def is_clean(self) -> bool:
        return self.noise == CLEAN

    @property
    def condition(self) -> str:
        return CLEAN if self.is_clean else f"{self.noise}/{self.snr_db:g}"

    @property
    def key(self) -> str:
        """Unique, filesystem-safe name for this (utterance, condition) pair."""
        stem = Path(self.audio).stem
        if self.is_clean:
            return f"{stem}__clean"
        return f"{stem}__{self.noise}_{self.snr_db:g}dB"

    def to_line(self) -> str:
        snr = "-" if self.snr_db is None else f"{self.snr_db:g}"
        return "\t".join([self.audio, self.truth, self.speaker, self.split, self.noise, snr,
                          self.noise_path, str(self.offset)])


def build_noisy_set(records: Sequence[UtteranceRecord], noise_bank: Mapping[str, str],
                    snr_grid: Sequence[float], seed: int = 0,
                    noise_lengths: Mapping[str, int] | None = None) -> list[UtteranceRecord]:
    """Expand each clean record into one clean plus ``len(noise_bank) * len(snr_grid)`` noisy records.

    Noise offsets come from a generator seeded with ``seed``; when the
    length of each noise file is known they are drawn inside it.
    """
    if not noise_bank and snr_grid:
        raise IngestError("noise bank is empty")
    lengths = dict(noise_lengths or {})
    for name, path in noise_bank.items():
        if name not in lengths:
            if not Path(path).exists():
                raise IngestError(f"missing noise file {path}")
            lengths[name] = len(load_audio(path))
    rng = np.random.default_rng(seed)
    out: list[UtteranceRecord] = []
    for rec in records:
        base = replace(rec, noise=CLEAN, snr_db=None, noise_path="-", offset=0)
        out.append(base)
        for name, path in noise_bank.items():
            for snr in snr_grid:
                out.append(replace(base, noise=name, snr_db=float(snr), noise_path=str(path),
                                   offset=int(rng.integers(0, max(lengths[name], 1)))))
    return out


def expansion_count(n_utterances: int, n_noises: int, n_snrs: int) -> int:
    return n_utterances * (n_noises * n_snrs + 1)


def write_manifest(path: str | Path, records: Iterable[UtteranceRecord], seed: int = 0) -> None:
    lines = [f"{HEADER_TAG} seed={seed}", "\t".join(COLUMNS)]
    lines += [r.to_line() for r in records]
    Path(path).write_text("\n".join(lines) + "\n")


def read_manifest(path: str | Path) -> tuple[list[UtteranceRecord], int]:
    """Records and seed of a manifest; relative paths resolve against its directory."""
    path = Path(path)
    try:
        lines = path.read_text().splitlines()
    except OSError as exc:
        raise IngestError(f"{path}: {exc}") from exc
    if len(lines) < 2 or not lines[0].startswith(HEADER_TAG):
        raise IngestError(f"{path}: missing manifest header")
    try:
        seed = int(lines[0].split("seed=")[1])
    except (IndexError, ValueError):
        raise IngestError(f"{path}: bad seed in header") from None
    if tuple(lines[1].split("\t")) != COLUMNS:
        raise IngestError(f"{path}: unexpected columns {lines[1]!r}")
    base = path.parent
    records = []
    for lineno, line in enumerate(lines[2:], 3):
        if not line.strip():
            continue
        f = line.split("\t")
        if len(f) != len(COLUMNS):
            raise IngestError(f"{path}:{lineno}: expected {len(COLUMNS)} fields")
        if f[3] not in SPLITS:
            raise IngestError(f"{path}:{lineno}: unknown split {f[3]!r}")
        try:
            snr = None if f[5] == "-" else float(f[5])
            offset = int(f[7])
        except ValueError:
            raise IngestError(f"{path}:{lineno}: bad snr/offset") from None

        def resolve(p: str) -> str:
            return p if p == "-" or Path(p).is_absolute() else str(base / p)
        records.append(UtteranceRecord(resolve(f[0]), resolve(f[1]), f[2], f[3], f[4], snr,
                                       resolve(f[6]), offset))
    return records, seed


def load_record(rec: UtteranceRecord) -> tuple[Waveform, Waveform]:
    """``(input, clean)`` waveforms for a record; identical for the clean condition."""
    clean = load_audio(rec.audio)
    if rec.is_clean:
        return clean, clean
    noise = load_audio(rec.noise_path)
    return mix_at_snr(clean, noise, rec.snr_db, offset=rec.offset), clean
