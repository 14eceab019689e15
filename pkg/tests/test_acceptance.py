"""Acceptance checks. Each test prints one ``criterion N: PASS/FAIL`` line,
also repeated in the terminal summary."""
import time

import numpy as np
import pytest

from rnnf0.cli import main
from rnnf0.data import build_noisy_set, expansion_count, write_audio
from rnnf0.data.manifest import UtteranceRecord
from rnnf0.evaluate import aggregate, score
from rnnf0.experiment import ExperimentConfig, run_experiment
from rnnf0.neural.checkpoint import load_checkpoint, save_checkpoint
from rnnf0.neural.model import forward, init_model, loss_and_grad, mse_loss
from rnnf0.signal import Waveform, synth_cosine
from rnnf0.targets import GroundTruthF0
from rnnf0.tracker import DecoderConfig, F0Track, decode_f0, detect_voicing, track

from oracles import brute_force_score, finite_difference_grads, naive_forward

FS = 16000


def random_model(cell, seed, hidden=(8, 8), M=16, p=1):
    m = init_model(M, hidden, p, cell, seed=seed)
    rng = np.random.default_rng(seed + 500)
    for k in m.params:
        m.params[k] = m.params[k] + 0.3 * rng.standard_normal(m.params[k].shape)
    for k in m.buffers:
        m.buffers[k] = m.buffers[k] + 0.5 * rng.random(m.buffers[k].shape)
    return m


def test_criterion_1_gradients(acceptance):
    t0 = time.perf_counter()
    worst, failures, n_models = 0.0, [], 24
    for i in range(n_models):
        cell = ("rnn", "lstm")[i % 2]
        train_mode = i % 4 >= 2          # batch statistics vs running statistics
        m = random_model(cell, i)
        rng = np.random.default_rng(100 + i)
        x = rng.standard_normal((4, 3, 16))
        t = rng.standard_normal((4, 3, 16))
        _, g = loss_and_grad(m, x, t, train=train_mode)
        num = finite_difference_grads(
            lambda: mse_loss(forward(m, x, train=train_mode)[0], t), m.params)
        for k in g:
            diff = np.abs(g[k] - num[k])
            tol = np.maximum(1e-4 * np.maximum(np.abs(g[k]), np.abs(num[k])), 1e-6)
            worst = max(worst, float(np.max(diff / tol)))
            if np.any(diff > tol):
                failures.append(f"model {i} ({cell}) {k}")
    elapsed = time.perf_counter() - t0
    ok = not failures and elapsed < 120
    acceptance(1, ok, f"{n_models} models, worst error/tolerance {worst:.3f}, {elapsed:.1f} s")
    assert not failures, failures[:5]
    assert elapsed < 120


def test_criterion_2_forward_oracle(acceptance):
    worst = 0.0
    for i, (cell, hidden, bn, stats) in enumerate([
            ("rnn", (8, 8), True, False), ("lstm", (8, 8), True, False),
            ("rnn", (5, 7, 3), True, True), ("lstm", (6, 4), True, True),
            ("lstm", (8,), False, False), ("rnn", (4, 4), False, False)]):
        m = init_model(12, hidden, 2, cell, seed=i, batchnorm=bn)
        rng = np.random.default_rng(i)
        for k in m.params:
            m.params[k] = m.params[k] + 0.3 * rng.standard_normal(m.params[k].shape)
        for k in m.buffers:
            m.buffers[k] = m.buffers[k] + 0.5 * rng.random(m.buffers[k].shape)
        x = rng.standard_normal((3, 5, 12))
        y, _ = forward(m, x, train=stats)
        ref = np.array(naive_forward({k: v.tolist() for k, v in m.params.items()}, cell, hidden,
                                     x.tolist(), batchnorm=bn,
                                     running={k: v.tolist() for k, v in m.buffers.items()},
                                     batch_stats=stats))
        worst = max(worst, float(np.max(np.abs(y - ref) / np.maximum(np.abs(ref), 1e-300))))
    acceptance(2, worst <= 1e-12, f"worst relative deviation {worst:.2e}")
    assert worst <= 1e-12


def test_criterion_3_decoder(acceptance):
    exact = []
    for f0 in (100, 125, 160, 200, 250, 320):
        for phase in np.linspace(-np.pi, np.pi, 9):
            exact.append(decode_f0(synth_cosine(f0, phase, 400))[0] == f0)
    rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(2000):
        f0 = rng.uniform(50.0, 400.0)
        est, _ = decode_f0(synth_cosine(f0, rng.uniform(-np.pi, np.pi), 400))
        lag = int(np.floor(FS / f0))
        quantum = FS / lag - FS / (lag + 1)
        worst = max(worst, abs(est - f0) / quantum)
    ok = all(exact) and worst <= 1.0
    acceptance(3, ok, f"{sum(exact)}/{len(exact)} integer-period tones exact, "
                      f"worst non-integer error {worst:.3f} lag quanta")
    assert all(exact)
    assert worst <= 1.0


def test_criterion_4_voicing_gate(acceptance):
    cfg = DecoderConfig()
    rng = np.random.default_rng(0)
    noise_conf = []
    for _ in range(1000):
        y = rng.standard_normal(400)
        noise_conf.append(detect_voicing(y, decode_f0(y, cfg)[0], cfg)[1])
    unvoiced = float(np.mean(np.array(noise_conf) < cfg.voicing_threshold))
    tone_rng = np.random.default_rng(1)
    tone_conf = []
    for _ in range(1000):
        y = synth_cosine(tone_rng.uniform(50, 400), tone_rng.uniform(-np.pi, np.pi), 400)
        tone_conf.append(detect_voicing(y, decode_f0(y, cfg)[0], cfg)[1])
    tone_ok = float(np.mean(np.array(tone_conf) > 0.9))
    ok = unvoiced >= 0.99 and tone_ok == 1.0
    acceptance(4, ok, f"white noise unvoiced {unvoiced:.3f} (need >= 0.99), "
                      f"tones with confidence > 0.9: {tone_ok:.3f}")
    assert tone_ok == 1.0
    assert unvoiced >= 0.99


def test_criterion_5_metric_oracle(acceptance):
    rng = np.random.default_rng(42)
    n = 10_000
    ref = np.where(rng.random(n) < 0.7, rng.uniform(60, 400, n), 0.0)
    periods = FS / np.where(ref > 0, ref, 100.0)
    est = FS / (periods + rng.uniform(-25, 25, n))
    voiced = rng.random(n) < 0.9
    times = np.arange(n) * 0.005
    rep = score(F0Track(times, np.where(voiced, est, 0.0), voiced, voiced.astype(float)),
                GroundTruthF0(ref))
    nv, ng, nf, fpe = brute_force_score(np.where(voiced, est, 0.0), voiced, ref)
    match = (rep.n_voiced, rep.n_gpe, rep.n_fpe) == (nv, ng, nf)
    match &= rep.mu_fpe == pytest.approx(float(np.mean(fpe)), rel=1e-12)
    # exact 10-sample error is fine, anything beyond is gross
    edge = GroundTruthF0(np.array([100.0, 100.0]))
    edge_est = np.array([FS / 170, FS / (170 + 1e-9)])
    b = score(F0Track(times[:2], edge_est, np.ones(2, bool), np.ones(2)), edge)
    edge_ok = (b.n_fpe, b.n_gpe) == (1, 1)
    acceptance(5, bool(match and edge_ok),
               f"{n} pairs: implementation ({rep.n_gpe} GPE, {rep.n_fpe} FPE) vs oracle "
               f"({ng}, {nf}); boundary case {'ok' if edge_ok else 'wrong'}")
    assert match and edge_ok


@pytest.fixture(scope="module")
def desk_result():
    return run_experiment(ExperimentConfig(), progress=print)


def test_criterion_6_desk_experiment(acceptance, desk_result):
    r = desk_result
    gpe = {(s, snr): r.gpe(s, snr) for s in ("model", "acf", "yin")
           for snr in ("clean", "-5", "0", "5", "10")}
    for row in aggregate(r.reports, ["system", "noise", "snr"]):
        print("\t".join(row.labels.values()), f"{row.gpe_rate:.4f}")
    a = gpe["model", "10"] <= 0.05
    b = all(gpe["model", snr] < gpe[base, snr] for snr in ("0", "-5") for base in ("acf", "yin"))
    budget = r.train_seconds <= 1800
    detail = (f"train {r.train_seconds:.0f} s; GPE +10 dB model {gpe['model', '10']:.4f}; "
              + "; ".join(f"{snr} dB model/acf/yin {gpe['model', snr]:.4f}/"
                          f"{gpe['acf', snr]:.4f}/{gpe['yin', snr]:.4f}" for snr in ("0", "-5")))
    acceptance(6, a and b and budget, detail)
    assert budget
    assert a
    assert b


TINY = ["--hidden", "16,16", "--context", "1", "--steps", "60", "--batch-size", "32",
        "--learning-rate", "0.05", "--momentum", "0.9", "--dropout", "0.25",
        "--normalize-frames", "--seed", "5"]


def test_criterion_7_determinism(acceptance, tmp_path, capsys):
    tables = []
    for run in ("a", "b"):
        d = tmp_path / run
        assert main(["synth", "--out", str(d), "--n-utterances", "5", "--duration", "0.6",
                     "--noise-seconds", "3", "--seed", "11"]) == 0
        assert main(["mix", "--manifest", str(d / "manifest.tsv"),
                     "--noise", f"white={d / 'noise/white.wav'}", "--snr", "0,5",
                     "--seed", "11", "--out", str(d / "mixed.tsv")]) == 0
        assert main(["train", "--manifest", str(d / "mixed.tsv"), "--out", str(d / "m.ckpt"),
                     *TINY]) == 0
        assert main(["track", "--manifest", str(d / "mixed.tsv"), "--checkpoint",
                     str(d / "m.ckpt"), "--out", str(d / "est"), "--jobs", "2"]) == 0
        assert main(["eval", "--estimates", str(d / "est"), "--manifest", str(d / "mixed.tsv"),
                     "--out", str(d / "report.tsv")]) == 0
        tables.append((d / "report.tsv").read_text())
    capsys.readouterr()
    same = tables[0] == tables[1] and len(tables[0].splitlines()) == 4
    acceptance(7, same, f"report tables {'identical' if same else 'differ'} "
                        f"({len(tables[0].splitlines()) - 1} rows)")
    assert same


def test_criterion_8_checkpoint(acceptance, tmp_path):
    m = random_model("lstm", 3, hidden=(16, 8), M=400, p=2)
    save_checkpoint(m, tmp_path / "m.ckpt")
    back = load_checkpoint(tmp_path / "m.ckpt")
    bits = all(np.array_equal(m.params[k].view(np.uint64), back.params[k].view(np.uint64))
               for k in m.params)
    bits &= all(np.array_equal(m.buffers[k], back.buffers[k]) for k in m.buffers)
    bits &= list(back.params) == list(m.params)
    x = synth_cosine(180, 0.0, 6000) + 0.3 * np.random.default_rng(0).standard_normal(6000)
    same_track = track(Waveform(x), m).equals(track(Waveform(x), back))
    acceptance(8, bool(bits and same_track),
               f"parameters bit-exact: {bits}; tracks identical: {same_track}")
    assert bits and same_track


def test_criterion_9_manifest_expansion(acceptance, tmp_path):
    bank = {}
    for i in range(8):
        p = tmp_path / f"n{i}.wav"
        write_audio(p, Waveform(np.zeros(1000)))
        bank[f"n{i}"] = str(p)
    recs = [UtteranceRecord(f"u{i}.wav", f"u{i}.f0") for i in range(10)]
    toy = len(build_noisy_set(recs, bank, [-10, -5, 0, 5, 10]))
    small = len(build_noisy_set(recs[:3], dict(list(bank.items())[:2]), [0, 10, 20]))
    full = expansion_count(3200, 8, 5)
    ok = toy == 410 == expansion_count(10, 8, 5) and small == 3 * (2 * 3 + 1) and full == 131_200
    acceptance(9, ok, f"toy {toy} (expect 410), 3x(2x3+1) -> {small}, 3200 -> {full}")
    assert ok
