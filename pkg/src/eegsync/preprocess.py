"""Notch filtering and per-band spectral variance.

The notch is realized as a Butterworth band-stop (cascaded second-order
sections) applied forward-backward, so the net phase response is zero and
no lag is introduced between subjects. Band variance is the one-sided
periodogram power summed over the FFT bins inside the band, with the
per-window mean removed first.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.signal import buttord, butter, sosfiltfilt

from .errors import DataValidationError

# Forward-backward filtering doubles gains in dB, so these single-pass
# targets yield <= 1 dB net passband ripple and >= 20 dB net stop
# attenuation (both in power).
_SINGLE_PASS_RIPPLE_DB = 0.5
_SINGLE_PASS_STOP_DB = 10.0
_TRANSITION_HZ = 2.0


@dataclass(frozen=True)
class BandDef:
    """A closed frequency interval [low_hz, high_hz] with a display name."""

    name: str
    low_hz: float
    high_hz: float

    def __post_init__(self):
        if not self.name:
            raise DataValidationError("band name must be non-empty")
        if not (0.0 < self.low_hz < self.high_hz):
            raise DataValidationError(
                f"band {self.name!r} needs 0 < low < high, "
                f"got [{self.low_hz}, {self.high_hz}]"
            )

    def validate_against(self, sample_rate_hz: float) -> None:
        """Enforce high < Nyquist for use as a feature band."""
        nyq = sample_rate_hz / 2.0
        if self.high_hz >= nyq:
            raise DataValidationError(
                f"band {self.name!r} upper edge {self.high_hz} Hz must lie "
                f"below Nyquist ({nyq} Hz)"
            )


# Canonical bands for the differential-entropy feature.
DELTA_THETA = BandDef("delta_theta", 1.0, 7.0)
ALPHA = BandDef("alpha", 8.0, 13.0)
BETA = BandDef("beta", 14.0, 29.0)
GAMMA = BandDef("gamma", 30.0, 47.0)
DEFAULT_BANDS = {b.name: b for b in (DELTA_THETA, ALPHA, BETA, GAMMA)}


@lru_cache(maxsize=32)
def _design_notch(sample_rate_hz: float, stop_low_hz: float, stop_high_hz: float):
    wp = [stop_low_hz - _TRANSITION_HZ, stop_high_hz + _TRANSITION_HZ]
    ws = [stop_low_hz, stop_high_hz]
    order, wn = buttord(
        wp, ws, _SINGLE_PASS_RIPPLE_DB, _SINGLE_PASS_STOP_DB, fs=sample_rate_hz
    )
    sos = butter(order, wn, btype="bandstop", output="sos", fs=sample_rate_hz)
    sos.flags.writeable = False  # cached; callers copy before filtering
    return sos


def _default_padlen(sos: np.ndarray) -> int:
    # mirrors scipy.signal.sosfiltfilt's default
    n_sections = sos.shape[0]
    ntaps = 2 * n_sections + 1
    ntaps -= min((sos[:, 2] == 0).sum(), (sos[:, 5] == 0).sum())
    return 3 * ntaps


def notch_filter(
    signal,
    sample_rate_hz: float,
    stop_low_hz: float = 48.0,
    stop_high_hz: float = 52.0,
) -> np.ndarray:
    """Zero-phase band-stop over [stop_low_hz, stop_high_hz].

    Accepts a 1-D signal or a channels x time matrix (filtered along the
    last axis). Output has the same length; stop-band power is attenuated
    by at least 20 dB and passband ripple stays within 1 dB outside a
    2 Hz transition margin.
    """
    nyq = sample_rate_hz / 2.0
    if not (0.0 < stop_low_hz < stop_high_hz < nyq):
        raise DataValidationError(
            f"notch band [{stop_low_hz}, {stop_high_hz}] must satisfy "
            f"0 < low < high < Nyquist ({nyq} Hz)"
        )
    if stop_low_hz - _TRANSITION_HZ <= 0.0 or stop_high_hz + _TRANSITION_HZ >= nyq:
        raise DataValidationError(
            "notch band leaves no room for the transition margin"
        )
    # scipy's sos filters need a writable buffer, so copy unconditionally
    x = np.array(signal, dtype=np.float64)
    sos = _design_notch(float(sample_rate_hz), float(stop_low_hz), float(stop_high_hz))
    padlen = _default_padlen(sos)
    if x.shape[-1] <= padlen:
        raise DataValidationError(
            f"signal too short for the notch warm-up: {x.shape[-1]} samples, "
            f"need more than {padlen}"
        )
    return sosfiltfilt(sos.copy(), x, axis=-1)


def _band_bin_power(windows: np.ndarray, sample_rate_hz: float, band: BandDef) -> np.ndarray:
    """One-sided periodogram power of each row, summed over the band's bins.

    windows: (n_windows, n) matrix, one 1 s window per row, mean already
    removed. Bin k belongs to the band iff low <= f_k <= high with k >= 1
    (the DC bin is never counted). high may equal Nyquist so that band
    partitions can account for all non-DC power.
    """
    n = windows.shape[-1]
    spec = np.fft.rfft(windows, axis=-1)
    power = (spec.real**2 + spec.imag**2) / (n * n)
    # fold the two-sided spectrum: double every interior bin
    two_sided = np.full(power.shape[-1], 2.0)
    two_sided[0] = 1.0
    if n % 2 == 0:
        two_sided[-1] = 1.0
    freqs = np.arange(power.shape[-1]) * (sample_rate_hz / n)
    mask = (freqs >= band.low_hz) & (freqs <= band.high_hz)
    mask[0] = False
    return (power * two_sided)[..., mask].sum(axis=-1)


def band_spectrum_variance(window, sample_rate_hz: float, band: BandDef) -> float:
    """Band-restricted variance (signal units squared) of one 1 s window.

    The window must contain exactly sample_rate_hz samples. Returns the
    mean-removed periodogram power over bins with low <= f <= high.
    """
    nyq = sample_rate_hz / 2.0
    if not (0.0 < band.low_hz < band.high_hz <= nyq):
        raise DataValidationError(
            f"band {band.name!r} must satisfy 0 < low < high <= Nyquist ({nyq} Hz)"
        )
    w = np.asarray(window, dtype=np.float64)
    if w.ndim != 1:
        raise DataValidationError("window must be one-dimensional")
    n = int(round(sample_rate_hz))
    if n != sample_rate_hz:
        raise DataValidationError(
            f"1 s windows need an integer sample rate, got {sample_rate_hz}"
        )
    if w.shape[0] != n:
        raise DataValidationError(
            f"window length {w.shape[0]} != sample rate {n} (must be 1 s)"
        )
    centered = w - w.mean()
    return float(_band_bin_power(centered[None, :], sample_rate_hz, band)[0])
