"""Feature extraction: rectified amplitude, first-order difference, and
band-limited differential entropy.

All three aggregate `scale` raw samples into one feature point. The
differential entropy of a band is 0.5*ln(2*pi*e*sigma^2) in nats, taking
the band variance from the 1 s periodogram under a Gaussian model; a
variance floor keeps silent windows finite.
"""

from __future__ import annotations

import numpy as np

from .errors import DataValidationError
from .model import FeatureConfig, FeatureKind, FeatureSeries, Recording
from .preprocess import BandDef, _band_bin_power

VARIANCE_FLOOR = 1e-12

DEFAULT_FD_SCALE = 20
# Scale sweep used when exploring temporal resolutions; user-configurable.
DEFAULT_SCALE_SWEEP = (1, 5, 10, 20, 50, 100, 200)


def extract_original(x, scale: int) -> np.ndarray:
    """Mean absolute value over consecutive blocks of `scale` samples.

    Output length is floor(N / scale); trailing samples that do not fill
    a block are dropped.
    """
    x = np.asarray(x, dtype=np.float64)
    if scale < 1:
        raise DataValidationError(f"scale must be >= 1, got {scale}")
    n = x.shape[0] // scale
    if n < 1:
        raise DataValidationError(
            f"signal too short: {x.shape[0]} samples < scale {scale}"
        )
    return np.abs(x[: n * scale]).reshape(n, scale).mean(axis=1)


def extract_first_difference(x, scale: int) -> np.ndarray:
    """Mean absolute consecutive-sample difference over blocks of `scale`.

    There are only N-1 differences, so the output length is
    floor((N-1) / scale) rather than floor(N / scale); no sample is ever
    fabricated past the end of the record.
    """
    x = np.asarray(x, dtype=np.float64)
    if scale < 1:
        raise DataValidationError(f"scale must be >= 1, got {scale}")
    diffs = np.abs(np.diff(x))
    n = diffs.shape[0] // scale
    if n < 1:
        raise DataValidationError(
            f"signal too short: {x.shape[0]} samples give {diffs.shape[0]} "
            f"differences < scale {scale}"
        )
    return diffs[: n * scale].reshape(n, scale).mean(axis=1)


def extract_differential_entropy(x, sample_rate_hz: float, band: BandDef) -> np.ndarray:
    """Differential entropy per non-overlapping 1 s window, in nats.

    Each point is 0.5*ln(2*pi*e*max(sigma^2, VARIANCE_FLOOR)) where
    sigma^2 is the band-restricted periodogram variance of that window.
    """
    band.validate_against(sample_rate_hz)
    x = np.asarray(x, dtype=np.float64)
    n = int(round(sample_rate_hz))
    if n != sample_rate_hz:
        raise DataValidationError(
            f"differential entropy needs an integer sample rate, got {sample_rate_hz}"
        )
    n_windows = x.shape[0] // n
    if n_windows < 1:
        raise DataValidationError(
            f"signal too short: {x.shape[0]} samples < one 1 s window ({n})"
        )
    windows = x[: n_windows * n].reshape(n_windows, n)
    centered = windows - windows.mean(axis=1, keepdims=True)
    variances = _band_bin_power(centered, sample_rate_hz, band)
    return 0.5 * np.log(2.0 * np.pi * np.e * np.maximum(variances, VARIANCE_FLOOR))


def extract_points(x, config: FeatureConfig, sample_rate_hz: float) -> np.ndarray:
    if config.kind is FeatureKind.ORIGINAL:
        return extract_original(x, config.scale)
    if config.kind is FeatureKind.FIRST_DIFFERENCE:
        return extract_first_difference(x, config.scale)
    config.validate_for(sample_rate_hz)
    return extract_differential_entropy(x, sample_rate_hz, config.band)


def extract_series(
    rec: Recording,
    channel: str,
    config: FeatureConfig,
    samples: np.ndarray | None = None,
) -> FeatureSeries:
    """Feature series for one channel of a recording.

    `samples` overrides the raw matrix when the caller has already
    preprocessed it (the pipeline passes the notch-filtered matrix so all
    features see the same signal).
    """
    config.validate_for(rec.sample_rate_hz)
    matrix = rec.samples if samples is None else samples
    x = matrix[rec.montage.index(channel)]
    return FeatureSeries(
        config=config,
        subject_id=rec.subject_id,
        session_id=rec.session_id,
        stimulus_id=rec.stimulus_id,
        channel=channel,
        points=extract_points(x, config, rec.sample_rate_hz),
        sample_rate_hz=rec.sample_rate_hz,
    )
