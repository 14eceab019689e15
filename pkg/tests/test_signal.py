import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rnnf0.errors import DegenerateInputError, DomainError, EmptyInputError
from rnnf0.signal import (
    Waveform,
    autocorrelation_curve,
    fit_sinusoid_phase,
    frame_signal,
    mix_at_snr,
    normalized_autocorrelation,
    normalized_crosscorrelation,
    signal_power,
    synth_cosine,
)

from oracles import brute_autocorr


def wav(x, fs=16000):
    return Waveform(np.asarray(x, dtype=float), fs)


class TestFraming:
    def test_framing_one_second(self):
        fs = frame_signal(wav(np.zeros(16000)), 400, 80)
        assert fs.frame_len == 400 and fs.hop == 80
        assert len(fs) == (16000 - 400) // 80 + 1 == 196

    def test_single_frame_boundary(self):
        fs = frame_signal(wav(np.arange(400.0)), 400, 80)
        assert len(fs) == 1

    def test_offsets(self):
        fs = frame_signal(wav(np.arange(560.0)), 400, 80)
        assert list(fs.start_offsets) == [0, 80, 160]
        np.testing.assert_array_equal(fs.frames[2], np.arange(160.0, 560.0))

    def test_too_short(self):
        with pytest.raises(EmptyInputError):
            frame_signal(wav(np.zeros(399)), 400, 80)

    @pytest.mark.parametrize("frame_len,hop", [(0, 1), (10, 0), (10, 11)])
    def test_bad_parameters(self, frame_len, hop):
        with pytest.raises(DomainError):
            frame_signal(wav(np.zeros(100)), frame_len, hop)

    @settings(max_examples=50, deadline=None)
    @given(n=st.integers(1, 600), frame_len=st.integers(1, 120), hop_frac=st.floats(0.01, 1.0))
    def test_lossless_slicing(self, n, frame_len, hop_frac):
        hop = max(1, int(frame_len * hop_frac))
        x = np.random.default_rng(n).standard_normal(n)
        if n < frame_len:
            with pytest.raises(EmptyInputError):
                frame_signal(wav(x), frame_len, hop)
            return
        fs = frame_signal(wav(x), frame_len, hop)
        assert len(fs) == (n - frame_len) // hop + 1
        assert np.all(np.diff(fs.start_offsets) == hop)
        for frame, start in zip(fs.frames, fs.start_offsets):
            np.testing.assert_array_equal(frame, x[start:start + frame_len])


class TestCosine:
    def test_five_periods(self):
        y = synth_cosine(200, 0.0, 400, 16000)
        assert y[0] == 1.0
        np.testing.assert_allclose(y[:80], y[80:160], atol=1e-12)

    def test_phase_pi_negates(self):
        np.testing.assert_allclose(synth_cosine(200, np.pi, 400), -synth_cosine(200, 0.0, 400),
                                   atol=1e-12)

    def test_half_period(self):
        y = synth_cosine(100, 0.0, 160, 16000)
        assert y[80] == pytest.approx(-1.0, abs=1e-15)

    @pytest.mark.parametrize("f0", [0.0, -5.0, 8000.0, 9000.0])
    def test_out_of_range(self, f0):
        with pytest.raises(DomainError):
            synth_cosine(f0, 0.0, 10)

    @settings(max_examples=50, deadline=None)
    @given(f0=st.floats(1.0, 7999.0), phase=st.floats(-10, 10), n=st.integers(1, 500))
    def test_bounded(self, f0, phase, n):
        y = synth_cosine(f0, phase, n)
        assert np.all(np.abs(y) <= 1.0)


class TestCorrelation:
    def test_periodic_autocorrelation(self):
        x = synth_cosine(200, 0.3, 400)
        assert normalized_autocorrelation(x, 80) >= 0.999

    def test_lag_range(self):
        with pytest.raises(DomainError):
            normalized_autocorrelation(np.ones(10), 10)
        with pytest.raises(DomainError):
            normalized_autocorrelation(np.ones(10), 0)

    def test_zero_energy(self):
        assert normalized_autocorrelation(np.zeros(10), 3) == 0.0
        assert normalized_crosscorrelation(np.zeros(5), np.ones(5)) == 0.0

    def test_white_noise_small(self):
        # Monte-Carlo oracle: std of the statistic is about 1/sqrt(320)
        rng = np.random.default_rng(0)
        vals = np.array([normalized_autocorrelation(rng.standard_normal(400), 80)
                         for _ in range(1000)])
        assert np.mean(np.abs(vals) < 0.3) > 0.999

    def test_curve_matches_brute_force(self):
        x = np.random.default_rng(1).standard_normal(120)
        lags = np.arange(1, 119)
        expect = [brute_autocorr(list(x), int(k)) for k in lags]
        np.testing.assert_allclose(autocorrelation_curve(x, lags), expect, rtol=1e-10, atol=1e-12)

    def test_cross_identities(self):
        x = np.random.default_rng(2).standard_normal(50)
        assert normalized_crosscorrelation(x, x) == pytest.approx(1.0)
        assert normalized_crosscorrelation(x, -x) == pytest.approx(-1.0)

    def test_quadrature_orthogonal(self):
        a = synth_cosine(200, 0.0, 400)
        b = synth_cosine(200, np.pi / 2, 400)
        assert abs(normalized_crosscorrelation(a, b)) < 0.01

    def test_length_mismatch(self):
        with pytest.raises(DomainError):
            normalized_crosscorrelation(np.ones(3), np.ones(4))

    @settings(max_examples=50, deadline=None)
    @given(seed=st.integers(0, 10**6), scale=st.floats(1e-3, 1e3), lag=st.integers(1, 63))
    def test_bounds_and_scale_invariance(self, seed, scale, lag):
        rng = np.random.default_rng(seed)
        x, y = rng.standard_normal(64), rng.standard_normal(64)
        r = normalized_autocorrelation(x, lag)
        assert -1.0 <= r <= 1.0
        assert normalized_autocorrelation(scale * x, lag) == pytest.approx(r, abs=1e-12)
        c = normalized_crosscorrelation(x, y)
        assert -1.0 <= c <= 1.0
        assert normalized_crosscorrelation(scale * x, y) == pytest.approx(c, abs=1e-12)


class TestSinusoidFit:
    def test_exact_tone(self):
        fit = fit_sinusoid_phase(synth_cosine(220, 0.4, 400), 220)
        assert fit.phase == pytest.approx(0.4, abs=1e-9)
        assert fit.correlation == pytest.approx(1.0, abs=1e-9)

    def test_phase_range(self):
        fit = fit_sinusoid_phase(-synth_cosine(200, 0.0, 400), 200)
        assert fit.phase == pytest.approx(np.pi, abs=1e-9)
        assert -np.pi < fit.phase <= np.pi

    def test_degenerate(self):
        fit = fit_sinusoid_phase(np.zeros(400), 200)
        assert fit.degenerate and fit.phase == 0.0 and fit.correlation == 0.0


class TestMixing:
    def test_zero_db(self):
        rng = np.random.default_rng(0)
        clean = wav(rng.standard_normal(1000))
        noise = wav(3 * rng.standard_normal(1500))
        out = mix_at_snr(clean, noise, 0.0, offset=17)
        scaled = out.samples - clean.samples
        assert signal_power(scaled) == pytest.approx(signal_power(clean.samples), rel=1e-9)

    def test_plus_ten(self):
        rng = np.random.default_rng(1)
        clean = wav(rng.standard_normal(1000))
        out = mix_at_snr(clean, wav(rng.standard_normal(800)), 10.0, rng=rng)
        ratio = signal_power(clean.samples) / signal_power(out.samples - clean.samples)
        assert ratio == pytest.approx(10.0, rel=1e-9)

    def test_gain_value(self):
        # unit-power clean, power-4 noise, -10 dB: 1 / (g^2 * 4) = 0.1  =>  g^2 = 2.5
        clean = wav(np.tile([1.0, -1.0], 200))
        noise = wav(np.tile([2.0, -2.0], 200))
        out = mix_at_snr(clean, noise, -10.0, offset=0)
        g = (out.samples - clean.samples)[0] / 2.0
        assert g ** 2 == pytest.approx(2.5, rel=1e-12)

    def test_cyclic_tiling(self):
        clean = wav(np.ones(10))
        noise = wav(np.array([1.0, -1.0, 2.0]))
        out = mix_at_snr(clean, noise, 0.0, offset=2)
        d = out.samples - 1.0
        np.testing.assert_allclose(d / d[0], [1, 0.5, -0.5, 1, 0.5, -0.5, 1, 0.5, -0.5, 1])

    def test_degenerate(self):
        with pytest.raises(DegenerateInputError):
            mix_at_snr(wav(np.zeros(10)), wav(np.ones(10)), 0.0)
        with pytest.raises(DegenerateInputError):
            mix_at_snr(wav(np.ones(10)), wav(np.zeros(10)), 0.0)

    def test_rate_mismatch(self):
        with pytest.raises(DomainError):
            mix_at_snr(wav(np.ones(10)), wav(np.ones(10), 8000), 0.0)

    def test_seeded_offset_reproducible(self):
        rng_a, rng_b = np.random.default_rng(5), np.random.default_rng(5)
        clean = wav(np.sin(np.arange(500)))
        noise = wav(np.random.default_rng(9).standard_normal(2000))
        a = mix_at_snr(clean, noise, 3.0, rng=rng_a)
        b = mix_at_snr(clean, noise, 3.0, rng=rng_b)
        np.testing.assert_array_equal(a.samples, b.samples)

    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 10**6), snr=st.floats(-20, 30))
    def test_measured_snr(self, seed, snr):
        rng = np.random.default_rng(seed)
        clean = wav(rng.standard_normal(300))
        out = mix_at_snr(clean, wav(rng.uniform(-1, 1, 250)), snr, rng=rng)
        measured = 10 * np.log10(signal_power(clean.samples)
                                 / signal_power(out.samples - clean.samples))
        assert abs(measured - snr) < 1e-6


def test_waveform_rejects_nan():
    with pytest.raises(DomainError):
        Waveform(np.array([0.0, np.nan]))
    with pytest.raises(DomainError):
        Waveform(np.zeros(3), 0)
