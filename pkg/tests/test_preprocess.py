"""Notch and band-variance contracts, checked against FFT power
measurements and Parseval identities."""

import numpy as np
import pytest

from eegsync.errors import DataValidationError
from eegsync.preprocess import (
    BandDef,
    DEFAULT_BANDS,
    band_spectrum_variance,
    notch_filter,
)

FS = 200.0


def sine(freq, seconds=10.0, fs=FS, amp=1.0, phase=0.0):
    t = np.arange(int(seconds * fs)) / fs
    return amp * np.sin(2 * np.pi * freq * t + phase)


def rms(x):
    return float(np.sqrt(np.mean(np.asarray(x) ** 2)))


class TestNotchFilter:
    def test_50hz_killed(self):
        x = sine(50.0)
        y = notch_filter(x, FS)
        assert rms(y) <= 0.1 * rms(x)

    def test_passband_preserved(self):
        for freq in (5.0, 10.0, 30.0, 46.0, 54.0, 75.0):
            x = sine(freq)
            y = notch_filter(x, FS)
            assert rms(y) == pytest.approx(rms(x), rel=0.12), f"{freq} Hz"

    def test_stopband_edges(self):
        # >= 20 dB power attenuation across the whole stop interval
        for freq in (48.0, 49.0, 50.0, 51.0, 52.0):
            x = sine(freq, seconds=30.0)
            core = slice(int(5 * FS), int(25 * FS))  # skip edge transients
            y = notch_filter(x, FS)
            assert rms(y[core]) <= 0.1 * rms(x[core]), f"{freq} Hz"

    def test_zero_signal(self):
        assert np.allclose(notch_filter(np.zeros(2000), FS), 0.0)

    def test_length_preserved_and_matrix_axis(self):
        x = np.random.default_rng(0).normal(size=(3, 1500))
        y = notch_filter(x, FS)
        assert y.shape == x.shape

    def test_linearity(self):
        rng = np.random.default_rng(1)
        x = rng.normal(size=4000)
        y = rng.normal(size=4000)
        a, b = 1.7, -0.4
        lhs = notch_filter(a * x + b * y, FS)
        rhs = a * notch_filter(x, FS) + b * notch_filter(y, FS)
        assert np.abs(lhs - rhs).max() < 1e-9

    def test_zero_phase_no_lag(self):
        # cross-correlation peak of a passband tone must stay at lag 0
        x = sine(10.0, seconds=20.0)
        y = notch_filter(x, FS)
        core = slice(int(5 * FS), int(15 * FS))
        xc, yc = x[core], y[core]
        lags = range(-5, 6)
        scores = [
            float(np.dot(xc[max(0, -l) : len(xc) - max(0, l)],
                         yc[max(0, l) : len(yc) - max(0, -l)]))
            for l in lags
        ]
        assert lags[int(np.argmax(scores))] == 0

    def test_invalid_band(self):
        with pytest.raises(DataValidationError):
            notch_filter(np.ones(1000), FS, 52.0, 48.0)
        with pytest.raises(DataValidationError):
            notch_filter(np.ones(1000), FS, 48.0, 99.5)

    def test_too_short(self):
        with pytest.raises(DataValidationError):
            notch_filter(np.ones(10), FS)


class TestBandSpectrumVariance:
    def test_sine_in_band_recovers_power(self):
        # amplitude A at an integer in-band frequency: variance = A^2/2
        for amp, freq in [(1.0, 35.0), (2.0, 40.0), (0.5, 31.0)]:
            w = sine(freq, seconds=1.0, amp=amp)
            got = band_spectrum_variance(w, FS, DEFAULT_BANDS["gamma"])
            assert got == pytest.approx(amp * amp / 2.0, rel=0.01)

    def test_sine_out_of_band_rejected(self):
        w = sine(20.0, seconds=1.0, amp=2.0)
        got = band_spectrum_variance(w, FS, DEFAULT_BANDS["gamma"])
        assert got <= 0.01 * 2.0

    def test_zero_window(self):
        assert band_spectrum_variance(np.zeros(200), FS, DEFAULT_BANDS["alpha"]) == 0.0

    def test_dc_excluded(self):
        w = np.full(200, 7.5)
        assert band_spectrum_variance(w, FS, BandDef("low", 0.5, 99.0)) == 0.0

    def test_parseval_partition_recovers_total_variance(self):
        # disjoint bands splitting (0, Nyquist] must add up to the
        # mean-removed variance; edges at half-integer frequencies so each
        # bin lands in exactly one band
        rng = np.random.default_rng(7)
        edges = [0.5, 10.5, 20.5, 40.5, 70.5, 100.0]
        bands = [
            BandDef(f"part{i}", lo, hi)
            for i, (lo, hi) in enumerate(zip(edges[:-1], edges[1:]))
        ]
        for _ in range(5):
            w = rng.normal(size=200)
            total = float(((w - w.mean()) ** 2).mean())
            split = sum(band_spectrum_variance(w, FS, b) for b in bands)
            assert split == pytest.approx(total, rel=1e-6)

    def test_wrong_window_length(self):
        with pytest.raises(DataValidationError):
            band_spectrum_variance(np.ones(150), FS, DEFAULT_BANDS["alpha"])

    def test_band_above_nyquist_rejected(self):
        with pytest.raises(DataValidationError):
            band_spectrum_variance(np.ones(200), FS, BandDef("bad", 90.0, 120.0))


class TestBandDef:
    def test_invariants(self):
        with pytest.raises(DataValidationError):
            BandDef("x", 10.0, 5.0)
        with pytest.raises(DataValidationError):
            BandDef("x", 0.0, 5.0)
        with pytest.raises(DataValidationError):
            BandDef("", 1.0, 5.0)

    def test_nyquist_check(self):
        BandDef("ok", 30.0, 47.0).validate_against(FS)
        with pytest.raises(DataValidationError):
            BandDef("hot", 30.0, 100.0).validate_against(FS)

    def test_canonical_bands(self):
        assert DEFAULT_BANDS["delta_theta"].low_hz == 1.0
        assert DEFAULT_BANDS["delta_theta"].high_hz == 7.0
        assert DEFAULT_BANDS["alpha"].low_hz == 8.0
        assert DEFAULT_BANDS["alpha"].high_hz == 13.0
        assert DEFAULT_BANDS["beta"].low_hz == 14.0
        assert DEFAULT_BANDS["beta"].high_hz == 29.0
        assert DEFAULT_BANDS["gamma"].low_hz == 30.0
        assert DEFAULT_BANDS["gamma"].high_hz == 47.0
