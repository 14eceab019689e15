"""
Command-line front end.

Subcommands: ``synth``, ``mix``, ``train``, ``track``, ``eval`` and
``experiment``. Exit status is 0 on success, 2 for invalid arguments or
input files, 1 for failures while running.
"""
from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .baseline import YinConfig, acf_track, yin_track
from .data.audio import align_to_frames, load_audio, load_ground_truth, write_audio, write_ground_truth
from .data.corpus import CorpusItem, TrainingCorpus, target_phases, trim_item
from .data.manifest import (UtteranceRecord, build_noisy_set, load_record, read_manifest,
                            write_manifest)
from .data.synth import make_noise, random_spec, synth_utterance
from .errors import (CheckpointError, ConfigError, DomainError, IngestError, PitchToolkitError,
                     TrainingDivergedError)
from .evaluate import aggregate, format_table, scatter_rows, score
from .neural.checkpoint import load_checkpoint, save_checkpoint
from .neural.model import init_model
from .neural.train import TrainConfig, train
from .signal import FRAME_LEN, HOP, SAMPLE_RATE, Waveform, frame_count
from .tracker import DecoderConfig, read_track, track, write_track

log = logging.getLogger("rnnf0")

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _int_list(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _float_list(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


# ---------------------------------------------------------------- synth

def cmd_synth(args) -> int:
    lo, hi = args.f0_min, args.f0_max
    if not 0 < lo < hi < SAMPLE_RATE / 2:
        raise UsageError(f"invalid F0 range {lo}..{hi}")
    if args.n_utterances < 1 or args.duration <= 0.1:
        raise UsageError("need at least one utterance longer than 0.1 s")
    out = Path(args.out)
    for sub in ("audio", "truth", "noise"):
        (out / sub).mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(args.seed)
    n_test = int(round(args.test_fraction * args.n_utterances))
    records = []
    for i in range(args.n_utterances):
        spec = random_spec(rng, (lo, hi), args.duration)
        w, truth = synth_utterance(spec)
        name = f"utt{i:04d}"
        write_audio(out / "audio" / f"{name}.wav", w)
        write_ground_truth(out / "truth" / f"{name}.f0", truth)
        split = "test" if i >= args.n_utterances - n_test else "train"
        records.append(UtteranceRecord(f"audio/{name}.wav", f"truth/{name}.f0",
                                       f"spk{i % 8}", split))
    noise_rng = np.random.default_rng([args.seed, 1])
    for kind in ("white", "pink"):
        noise = make_noise(kind, int(args.noise_seconds * SAMPLE_RATE), noise_rng)
        write_audio(out / "noise" / f"{kind}.wav", Waveform(0.25 * noise / np.max(np.abs(noise))))
    write_manifest(out / "manifest.tsv", records, seed=args.seed)
    print(f"wrote {len(records)} utterances to {out}")
    return EXIT_OK


# ---------------------------------------------------------------- mix

def _parse_noise_bank(items: list[str]) -> dict[str, str]:
    bank = {}
    for item in items or []:
        name, sep, path = item.partition("=")
        if not sep or not name or not path:
            raise UsageError(f"--noise expects NAME=PATH, got {item!r}")
        bank[name] = path
    return bank


def cmd_mix(args) -> int:
    records, _ = read_manifest(args.manifest)
    bank = _parse_noise_bank(args.noise)
    if not bank:
        raise UsageError("at least one --noise NAME=PATH is required")
    base = Path(args.out).resolve().parent
    for name, path in bank.items():
        if not Path(path).exists():
            raise UsageError(f"missing noise file {path}")
    expanded = build_noisy_set([r for r in records if r.is_clean], bank, args.snr, seed=args.seed)

    def rel(p: str) -> str:
        try:
            return str(Path(p).resolve().relative_to(base))
        except ValueError:
            return str(Path(p).resolve())
    expanded = [dataclasses.replace(r, audio=rel(r.audio), truth=rel(r.truth),
                                    noise_path=r.noise_path if r.noise_path == "-" else rel(r.noise_path))
                for r in expanded]
    write_manifest(args.out, expanded, seed=args.seed)
    print(f"wrote {len(expanded)} records to {args.out}")
    return EXIT_OK


# ---------------------------------------------------------------- train

TRAIN_FIELDS = {f.name for f in dataclasses.fields(TrainConfig)}


def resolve_train_config(args) -> TrainConfig:
    """Built-in defaults, overridden by the config file, overridden by flags."""
    values = dataclasses.asdict(TrainConfig())
    if args.config:
        try:
            file_values = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}")
        unknown = set(file_values) - TRAIN_FIELDS
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        values.update(file_values)
    for name in TRAIN_FIELDS:
        v = getattr(args, name, None)
        if v is not None:
            values[name] = v
    values["hidden"] = tuple(values["hidden"])
    cfg = TrainConfig(**values)
    try:
        cfg.validate()
    except ConfigError as exc:
        raise UsageError(str(exc))
    return cfg


def load_corpus_items(records, frame_len: int, hop: int, n_head: int, n_tail: int) -> list[CorpusItem]:
    items = []
    for rec in records:
        noisy, clean = load_record(rec)
        truth = load_ground_truth(rec.truth, frame_len=frame_len, hop=hop)
        n = frame_count(len(noisy), frame_len, hop)
        truth = align_to_frames(truth, n)
        item = CorpusItem(noisy.samples, truth.f0, target_phases(clean.samples, truth), rec.key)
        item = trim_item(item, n_head, n_tail, hop)
        if item is not None:
            items.append(item)
    return items


def cmd_train(args) -> int:
    cfg = resolve_train_config(args)
    if args.dry_run:
        print(json.dumps(dataclasses.asdict(cfg), indent=2))
        return EXIT_OK
    records, _ = read_manifest(args.manifest)
    records = [r for r in records if r.split == args.split]
    if not records:
        raise UsageError(f"no {args.split} records in {args.manifest}")
    items = load_corpus_items(records, FRAME_LEN, HOP, args.trim_head, args.trim_tail)
    if not items:
        raise UsageError("every utterance was trimmed away")
    corpus = TrainingCorpus(items, cfg.context_radius, normalize=cfg.normalize_frames)
    model = init_model(FRAME_LEN, cfg.hidden, cfg.context_radius, cfg.cell_type, seed=cfg.seed,
                       batchnorm=cfg.batchnorm, normalize_frames=cfg.normalize_frames)
    log.info("training %s %s on %d frames", cfg.cell_type, cfg.hidden, corpus.n_frames)
    result = train(model, corpus.sampler(cfg.batch_size, cfg.steps_per_epoch, cfg.seed), cfg)
    save_checkpoint(result.model, args.out)
    log_path = Path(args.loss_log) if args.loss_log else Path(args.out).with_suffix(".loss.tsv")
    log_path.write_text("step\tloss\n" + "".join(f"{s}\t{l:.8f}\n" for s, l in result.history))
    losses = result.losses
    print(f"trained {len(losses)} steps: loss {losses[0]:.6f} -> {losses[-1]:.6f}; "
          f"checkpoint {args.out}")
    return EXIT_OK


# ---------------------------------------------------------------- track

def _track_one(job):
    key, source, engine, ckpt, dec, out_dir = job
    if isinstance(source, UtteranceRecord):
        w, _ = load_record(source)
    else:
        w = load_audio(source)
    if engine == "yin":
        result = yin_track(w, YinConfig(f0_min=dec.f0_min, f0_max=dec.f0_max))
    elif engine == "acf":
        result = acf_track(w, dec)
    else:
        result = track(w, load_checkpoint(ckpt), dec)
    path = Path(out_dir) / f"{key}.f0"
    write_track(result, path)
    return key, str(path)


def decoder_from_args(args) -> DecoderConfig:
    cfg = DecoderConfig(f0_min=args.f0_min, f0_max=args.f0_max,
                        voicing_threshold=args.threshold, interpolation=args.interpolation)
    try:
        cfg.validate()
    except ConfigError as exc:
        raise UsageError(str(exc))
    return cfg


def cmd_track(args) -> int:
    engine = args.baseline or "model"
    if engine == "model":
        if not args.checkpoint:
            raise UsageError("--checkpoint is required unless --baseline is given")
        if not Path(args.checkpoint).exists():
            raise UsageError(f"missing checkpoint {args.checkpoint}")
        load_checkpoint(args.checkpoint)
    dec = decoder_from_args(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    jobs = []
    if args.manifest:
        records, _ = read_manifest(args.manifest)
        if args.split:
            records = [r for r in records if r.split == args.split]
        jobs = [(r.key, r, engine, args.checkpoint, dec, str(out)) for r in records]
    for audio in args.audio or []:
        if not Path(audio).exists():
            raise UsageError(f"missing audio file {audio}")
        jobs.append((Path(audio).stem, audio, engine, args.checkpoint, dec, str(out)))
    if not jobs:
        raise UsageError("nothing to track: give --manifest or audio files")
    if args.jobs > 1:
        with ProcessPoolExecutor(args.jobs) as pool:
            done = dict(pool.map(_track_one, jobs))
    else:
        done = dict(map(_track_one, jobs))
    print(f"wrote {len(done)} tracks to {out}")
    return EXIT_OK


# ---------------------------------------------------------------- eval

def record_labels(rec: UtteranceRecord) -> dict[str, str]:
    return {"noise": rec.noise, "snr": "clean" if rec.snr_db is None else f"{rec.snr_db:g}",
            "split": rec.split, "speaker": rec.speaker}


def cmd_eval(args) -> int:
    records, _ = read_manifest(args.manifest)
    if args.split:
        records = [r for r in records if r.split == args.split]
    est_dir = Path(args.estimates)
    reports, failures = [], []
    for rec in records:
        path = est_dir / f"{rec.key}.f0"
        try:
            est = read_track(path)
            truth = align_to_frames(load_ground_truth(rec.truth), len(est))
            if len(truth) < len(est.f0):
                est = type(est)(est.times[:len(truth)], est.f0[:len(truth)],
                                est.voiced[:len(truth)], est.confidence[:len(truth)])
            reports.append(score(est, truth, labels=record_labels(rec)))
        except (PitchToolkitError, OSError) as exc:
            failures.append(f"{rec.key}: {exc}")
    if not reports:
        for f in failures:
            print(f, file=sys.stderr)
        raise UsageError("no utterance could be scored")
    groups = aggregate(reports, args.group_by)
    table = format_table(groups)
    if args.out:
        Path(args.out).write_text(table)
    sys.stdout.write(table)
    if args.scatter:
        Path(args.scatter).write_text(
            "".join(json.dumps(r, sort_keys=True) + "\n" for r in scatter_rows(groups)))
    if failures:
        for f in failures:
            print(f"alignment failure: {f}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


# ---------------------------------------------------------------- experiment

def cmd_experiment(args) -> int:
    from .experiment import ExperimentConfig, run_experiment
    cfg = ExperimentConfig(seed=args.seed)
    if args.steps is not None:
        cfg = dataclasses.replace(cfg, train_steps=args.steps)
    result = run_experiment(cfg, progress=lambda msg: print(msg, flush=True))
    sys.stdout.write(format_table(result.table))
    return EXIT_OK


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rnnf0", description="Noise-robust F0 tracking by "
                                "waveform-to-sinusoid regression.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("synth", help="write a synthetic corpus (audio, truth, noise, manifest)")
    s.add_argument("--out", required=True)
    s.add_argument("--n-utterances", type=int, default=100)
    s.add_argument("--duration", type=float, default=1.5)
    s.add_argument("--f0-min", type=float, default=80.0)
    s.add_argument("--f0-max", type=float, default=300.0)
    s.add_argument("--test-fraction", type=float, default=0.2)
    s.add_argument("--noise-seconds", type=float, default=30.0)
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("mix", help="expand a clean manifest over noise types and SNRs")
    s.add_argument("--manifest", required=True)
    s.add_argument("--noise", action="append", metavar="NAME=PATH")
    s.add_argument("--snr", type=_float_list, default=(-10.0, -5.0, 0.0, 5.0, 10.0))
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_mix)

    s = sub.add_parser("train", help="train a model on a manifest")
    s.add_argument("--manifest")
    s.add_argument("--out", default="model.ckpt")
    s.add_argument("--loss-log")
    s.add_argument("--config", help="JSON file with TrainConfig fields")
    s.add_argument("--split", default="train")
    s.add_argument("--trim-head", type=int, default=0)
    s.add_argument("--trim-tail", type=int, default=0)
    s.add_argument("--dry-run", action="store_true")
    s.add_argument("--learning-rate", dest="learning_rate", type=float)
    s.add_argument("--momentum", type=float)
    s.add_argument("--batch-size", dest="batch_size", type=int)
    s.add_argument("--dropout", type=float)
    s.add_argument("--epochs", type=int)
    s.add_argument("--steps", dest="steps_per_epoch", type=int)
    s.add_argument("--seed", type=int)
    s.add_argument("--clip-norm", dest="clip_norm", type=float)
    s.add_argument("--cell", dest="cell_type", choices=["rnn", "lstm"])
    s.add_argument("--hidden", type=_int_list)
    s.add_argument("--context", dest="context_radius", type=int)
    s.add_argument("--no-batchnorm", dest="batchnorm", action="store_const", const=False)
    s.add_argument("--normalize-frames", dest="normalize_frames", action="store_const", const=True)
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("track", help="estimate F0 for audio files or a manifest")
    s.add_argument("audio", nargs="*")
    s.add_argument("--manifest")
    s.add_argument("--split")
    s.add_argument("--checkpoint")
    s.add_argument("--baseline", choices=["yin", "acf"])
    s.add_argument("--out", required=True)
    s.add_argument("--jobs", type=int, default=1)
    s.add_argument("--f0-min", type=float, default=50.0)
    s.add_argument("--f0-max", type=float, default=400.0)
    s.add_argument("--threshold", type=float, default=0.15)
    s.add_argument("--interpolation", choices=["none", "parabolic"], default="none")
    s.set_defaults(func=cmd_track)

    s = sub.add_parser("eval", help="score tracks against manifest ground truth")
    s.add_argument("--estimates", required=True)
    s.add_argument("--manifest", required=True)
    s.add_argument("--split")
    s.add_argument("--group-by", type=lambda t: [k for k in t.split(",") if k],
                   default=["noise", "snr"])
    s.add_argument("--out")
    s.add_argument("--scatter")
    s.set_defaults(func=cmd_eval)

    s = sub.add_parser("experiment", help="desk-scale synthetic train/test comparison")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--steps", type=int, default=None)
    s.set_defaults(func=cmd_experiment)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "train" and not args.dry_run and not args.manifest:
        print("error: --manifest is required", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except (UsageError, IngestError, CheckpointError, DomainError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except TrainingDivergedError as exc:
        print(f"training failed: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except PitchToolkitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
