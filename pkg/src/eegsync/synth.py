"""Deterministic synthetic cohorts with ground-truth shared arousal.

Each stimulus gets one band-limited (14-47 Hz) noise carrier, identical
across subjects. Injected channels receive that carrier amplitude-modulated
by a shared burst envelope, scaled by a per-record gain and delayed by a
per-record lag, plus independent Gaussian noise; every other channel is
noise only. Outside bursts the envelope is zero, so an amplitude-0 cohort
is indistinguishable from pure noise.

Reproducibility: every random stream is a PCG64 generator keyed by
SeedSequence(rng_seed, spawn_key) with fixed stream ids, so identical
configs produce bit-identical cohorts.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.signal import butter, sosfiltfilt

from .errors import ConfigError
from .model import (
    CHANNELS_10_20_62,
    Montage,
    Recording,
    StimulusCatalog,
    StimulusInfo,
    VALENCES,
)

CARRIER_BAND_HZ = (14.0, 47.0)
_EDGE_RAMP_S = 0.5

# spawn-key stream ids
_STREAM_CARRIER = 1
_STREAM_RECORD_PARAMS = 2
_STREAM_NOISE = 3


@dataclass(frozen=True)
class Burst:
    start_s: float
    end_s: float
    amplitude: float


@dataclass(frozen=True)
class SynthConfig:
    n_subjects: int
    n_sessions: int
    n_stimuli: int
    duration_s: float
    sample_rate_hz: float
    n_channels: int
    injected_channels: tuple[int, ...]
    envelope: tuple[Burst, ...]
    subject_gain_range: tuple[float, float] = (0.8, 1.2)
    subject_lag_range_ms: tuple[float, float] = (0.0, 50.0)
    noise_sigma: float = 1.0
    rng_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "injected_channels", tuple(self.injected_channels))
        object.__setattr__(
            self, "envelope", tuple(Burst(*b) if not isinstance(b, Burst) else b
                                    for b in self.envelope)
        )
        object.__setattr__(self, "subject_gain_range", tuple(self.subject_gain_range))
        object.__setattr__(
            self, "subject_lag_range_ms", tuple(self.subject_lag_range_ms)
        )
        for name in ("n_subjects", "n_sessions", "n_stimuli", "n_channels"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be a positive integer")
        if self.duration_s <= 0 or self.sample_rate_hz <= 0:
            raise ConfigError("duration_s and sample_rate_hz must be positive")
        if self.noise_sigma <= 0:
            raise ConfigError("noise_sigma must be > 0")
        for ch in self.injected_channels:
            if not (0 <= ch < self.n_channels):
                raise ConfigError(
                    f"injected channel index {ch} outside [0, {self.n_channels})"
                )
        if len(set(self.injected_channels)) != len(self.injected_channels):
            raise ConfigError("injected channel indices must be unique")
        for b in self.envelope:
            if not (0.0 <= b.start_s < b.end_s <= self.duration_s):
                raise ConfigError(
                    f"burst [{b.start_s}, {b.end_s}] outside [0, {self.duration_s}]"
                )
            if b.amplitude < 0:
                raise ConfigError("burst amplitude must be >= 0")
        lo, hi = self.subject_gain_range
        if not (0 < lo <= hi):
            raise ConfigError("subject_gain_range must satisfy 0 < lo <= hi")
        lo, hi = self.subject_lag_range_ms
        if not (0 <= lo <= hi):
            raise ConfigError("subject_lag_range_ms must satisfy 0 <= lo <= hi")
        nyq = self.sample_rate_hz / 2.0
        if CARRIER_BAND_HZ[1] >= nyq:
            raise ConfigError(
                f"sample rate {self.sample_rate_hz} too low for the "
                f"{CARRIER_BAND_HZ} Hz carrier band"
            )

    @property
    def n_samples(self) -> int:
        return int(round(self.duration_s * self.sample_rate_hz))


@dataclass(frozen=True)
class GroundTruth:
    """What the generator actually injected, for recovery checks."""

    injected_channels: tuple[int, ...]
    injected_labels: tuple[str, ...]
    feature_rate_hz: float
    envelopes: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        for env in self.envelopes.values():
            if not np.isfinite(env).all() or (env < 0).any():
                raise ConfigError("ground-truth envelopes must be finite and >= 0")


def synth_montage(cfg: SynthConfig) -> Montage:
    """Montage for a synthetic cohort; the injected channels double as the
    key electrodes so ground truth flows into key-electrode analyses."""
    if cfg.n_channels == len(CHANNELS_10_20_62):
        names = CHANNELS_10_20_62
    else:
        names = tuple(f"CH{i + 1:02d}" for i in range(cfg.n_channels))
    key = tuple(names[i] for i in sorted(cfg.injected_channels))
    return Montage(names, key)


def synth_catalog(cfg: SynthConfig) -> StimulusCatalog:
    """Round-robin valence labels over the stimulus list."""
    stimuli = {}
    for i in range(cfg.n_stimuli):
        stimuli[_stimulus_id(i)] = StimulusInfo(
            duration_s=cfg.duration_s, valence=VALENCES[i % len(VALENCES)]
        )
    return StimulusCatalog(stimuli)


def _stimulus_id(i: int) -> str:
    return f"f{i + 1:02d}"


def _subject_id(i: int) -> str:
    return f"s{i + 1:02d}"


def _rng(seed: int, *spawn_key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=spawn_key))


def envelope_samples(cfg: SynthConfig) -> np.ndarray:
    """Shared arousal envelope at the raw sample rate: summed bursts with
    half-cosine edge ramps (<= 0.5 s) to avoid spectral splatter."""
    n = cfg.n_samples
    fs = cfg.sample_rate_hz
    env = np.zeros(n)
    t = np.arange(n) / fs
    for b in cfg.envelope:
        ramp = min(_EDGE_RAMP_S, (b.end_s - b.start_s) / 2.0)
        shape = np.zeros(n)
        inside = (t >= b.start_s) & (t < b.end_s)
        shape[inside] = 1.0
        if ramp > 0:
            rising = inside & (t < b.start_s + ramp)
            falling = inside & (t >= b.end_s - ramp)
            shape[rising] = 0.5 - 0.5 * np.cos(np.pi * (t[rising] - b.start_s) / ramp)
            shape[falling] = 0.5 - 0.5 * np.cos(np.pi * (b.end_s - t[falling]) / ramp)
        env += b.amplitude * shape
    return env


def _carrier(cfg: SynthConfig, stimulus_index: int, pad: int) -> np.ndarray:
    """Unit-RMS band-limited noise carrier, pre-padded by `pad` samples so
    lagged reads never run off the front."""
    rng = _rng(cfg.rng_seed, _STREAM_CARRIER, stimulus_index)
    white = rng.standard_normal(cfg.n_samples + pad)
    sos = butter(4, CARRIER_BAND_HZ, btype="bandpass", output="sos",
                 fs=cfg.sample_rate_hz)
    band = sosfiltfilt(sos, white)
    return band / band.std()


def generate_cohort(cfg: SynthConfig) -> tuple[list[Recording], GroundTruth]:
    """Synthesize one cohort; a pure function of the config (seed included).

    Records come back in canonical (subject, session, stimulus) order with
    samples quantized to float32 so that the on-disk round trip is exact.
    """
    montage = synth_montage(cfg)
    fs = cfg.sample_rate_hz
    n = cfg.n_samples
    env = envelope_samples(cfg)
    max_lag = int(round(cfg.subject_lag_range_ms[1] / 1000.0 * fs))

    records: list[Recording] = []
    envelopes: dict[str, np.ndarray] = {}
    for gi in range(cfg.n_stimuli):
        stimulus = _stimulus_id(gi)
        carrier = _carrier(cfg, gi, max_lag)
        n_sec = int(n // round(fs))
        envelopes[stimulus] = env[: n_sec * int(round(fs))].reshape(n_sec, -1).mean(1)
        for si in range(cfg.n_subjects):
            for ki in range(cfg.n_sessions):
                params = _rng(cfg.rng_seed, _STREAM_RECORD_PARAMS, si, ki)
                gain = params.uniform(*cfg.subject_gain_range)
                lag_ms = params.uniform(*cfg.subject_lag_range_ms)
                lag = int(round(lag_ms / 1000.0 * fs))
                noise_rng = _rng(cfg.rng_seed, _STREAM_NOISE, si, ki, gi)
                samples = noise_rng.normal(
                    0.0, cfg.noise_sigma, size=(cfg.n_channels, n)
                )
                shared = gain * env * carrier[max_lag - lag : max_lag - lag + n]
                for ch in cfg.injected_channels:
                    samples[ch] += shared
                records.append(
                    Recording(
                        subject_id=_subject_id(si),
                        session_id=str(ki + 1),
                        stimulus_id=stimulus,
                        samples=samples.astype(np.float32).astype(np.float64),
                        sample_rate_hz=fs,
                        montage=montage,
                    )
                )

    records.sort(key=lambda r: r.key)
    truth = GroundTruth(
        injected_channels=tuple(sorted(cfg.injected_channels)),
        injected_labels=montage.key_electrodes,
        feature_rate_hz=1.0,
        envelopes=envelopes,
    )
    return records, truth
