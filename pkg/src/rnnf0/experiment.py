"""
Desk-scale synthetic experiment: train a small LSTM tracker on synthetic
voices mixed with white and pink noise, then compare it with the ACF and
YIN baselines on held-out utterances and noise segments.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .baseline import YinConfig, acf_track, yin_track
from .data.corpus import CorpusItem, TrainingCorpus, target_phases
from .data.synth import frame_truth, make_noise, random_spec, synth_clean
from .evaluate import EvalReport, aggregate, score
from .neural.model import RecurrentModel, init_model
from .neural.train import TrainConfig, train
from .signal import SAMPLE_RATE, Waveform, mix_at_snr
from .targets import GroundTruthF0
from .tracker import DecoderConfig, track

SYSTEMS = ("model", "acf", "yin")


@dataclass(frozen=True)
class ExperimentConfig:
    n_train: int = 200
    n_test: int = 40
    f0_range: tuple[float, float] = (80.0, 300.0)
    duration: float = 1.5
    noises: tuple[str, ...] = ("white", "pink")
    train_snrs: tuple[float, ...] = (-5.0, 0.0, 5.0, 10.0)
    test_snrs: tuple[float, ...] = (-5.0, 0.0, 5.0, 10.0)
    noise_seconds: float = 60.0
    hidden: tuple[int, ...] = (64, 64)
    context_radius: int = 3
    train_steps: int = 4000
    batch_size: int = 300
    learning_rate: float = 0.05
    momentum: float = 0.9
    dropout: float = 0.0
    seed: int = 0

    def train_config(self) -> TrainConfig:
        return TrainConfig(learning_rate=self.learning_rate, batch_size=self.batch_size,
                           dropout=self.dropout, seed=self.seed, hidden=self.hidden,
                           context_radius=self.context_radius, momentum=self.momentum,
                           steps_per_epoch=self.train_steps, normalize_frames=True)


@dataclass
class ExperimentResult:
    model: RecurrentModel
    losses: np.ndarray
    reports: list[EvalReport]
    train_seconds: float
    table: list[EvalReport] = field(default_factory=list)

    def gpe(self, system: str, snr: str) -> float:
        """Pooled GPE rate of one system at one SNR label over all noise types."""
        for rep in self.table:
            if rep.labels["system"] == system and rep.labels["snr"] == snr:
                return rep.gpe_rate
        raise KeyError((system, snr))


def _noise_bank(cfg: ExperimentConfig, stream: int) -> dict[str, Waveform]:
    n = int(cfg.noise_seconds * SAMPLE_RATE)
    return {kind: Waveform(make_noise(kind, n, np.random.default_rng([cfg.seed, stream, i])))
            for i, kind in enumerate(cfg.noises)}


def build_items(cfg: ExperimentConfig, n_utts: int, snrs, stream: int) -> list[CorpusItem]:
    """Clean plus every (noise, SNR) mixture of ``n_utts`` random voices.

    ``stream`` separates the random draws of the training and test sets
    (voices, noise recordings and mixing offsets).
    """
    rng = np.random.default_rng([cfg.seed, stream])
    bank = _noise_bank(cfg, stream)
    items = []
    for u in range(n_utts):
        spec = random_spec(rng, cfg.f0_range, cfg.duration)
        clean = synth_clean(spec)
        truth = frame_truth(spec, len(clean))
        phase = target_phases(clean, truth)
        items.append(CorpusItem(clean, truth.f0, phase, f"u{u:03d}/clean/clean"))
        for kind, noise in bank.items():
            for snr in snrs:
                noisy = mix_at_snr(Waveform(clean), noise, snr, rng=rng).samples
                items.append(CorpusItem(noisy, truth.f0, phase, f"u{u:03d}/{kind}/{snr:g}"))
    return items


def evaluate_items(items: list[CorpusItem], model: RecurrentModel,
                   systems=SYSTEMS) -> list[EvalReport]:
    dec = DecoderConfig()
    yin_cfg = YinConfig()
    runners = {"model": lambda w: track(w, model, dec),
               "acf": lambda w: acf_track(w, dec),
               "yin": lambda w: yin_track(w, yin_cfg)}
    reports = []
    for it in items:
        _, noise, snr = it.label.split("/")
        w = Waveform(it.noisy)
        truth = GroundTruthF0(it.f0)
        for name in systems:
            reports.append(score(runners[name](w), truth,
                                 labels={"system": name, "noise": noise, "snr": snr}))
    return reports


def run_experiment(cfg: ExperimentConfig = ExperimentConfig(),
                   progress: Callable[[str], None] | None = None) -> ExperimentResult:
    say = progress or (lambda msg: None)
    tcfg = cfg.train_config()
    items = build_items(cfg, cfg.n_train, cfg.train_snrs, stream=1)
    corpus = TrainingCorpus(items, cfg.context_radius, normalize=True)
    say(f"training corpus: {len(items)} mixtures, {corpus.n_frames} frames")
    model = init_model(400, cfg.hidden, cfg.context_radius, "lstm", seed=cfg.seed,
                       normalize_frames=True)
    t0 = time.perf_counter()

    def report(step, loss):
        if step % 500 == 0:
            say(f"step {step}: loss {loss:.4f} ({time.perf_counter() - t0:.0f} s)")
    result = train(model, corpus.sampler(tcfg.batch_size, tcfg.steps_per_epoch, cfg.seed), tcfg,
                   callback=report)
    elapsed = time.perf_counter() - t0
    say(f"trained {len(result.losses)} steps in {elapsed:.0f} s")
    test_items = build_items(cfg, cfg.n_test, cfg.test_snrs, stream=2)
    reports = evaluate_items(test_items, result.model)
    table = aggregate(reports, ["system", "snr"])
    return ExperimentResult(result.model, result.losses, reports, elapsed, table)
