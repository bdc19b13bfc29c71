"""Core domain types shared by every stage of the analysis.

All types are immutable after construction and safe to share across
worker processes.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import DataValidationError
from .preprocess import DEFAULT_BANDS, BandDef


class FeatureKind(str, enum.Enum):
    ORIGINAL = "original"
    FIRST_DIFFERENCE = "first_difference"
    DIFFERENTIAL_ENTROPY = "differential_entropy"


VALENCES = ("positive", "neutral", "negative")


@dataclass(frozen=True)
class Montage:
    """Ordered channel labels plus the subset considered key electrodes.

    Labels are opaque strings matched case-insensitively; any montage is
    accepted, the canonical 62-label 10-20 layout below is just a
    convenient default.
    """

    channel_names: tuple[str, ...]
    key_electrodes: tuple[str, ...] = ()

    def __post_init__(self):
        names = tuple(self.channel_names)
        object.__setattr__(self, "channel_names", names)
        object.__setattr__(self, "key_electrodes", tuple(self.key_electrodes))
        if not names:
            raise DataValidationError("montage needs at least one channel")
        lowered = [c.lower() for c in names]
        if any(not c for c in names):
            raise DataValidationError("channel names must be non-empty")
        if len(set(lowered)) != len(lowered):
            raise DataValidationError("channel names must be unique (case-insensitive)")
        known = set(lowered)
        for k in self.key_electrodes:
            if k.lower() not in known:
                raise DataValidationError(f"key electrode {k!r} not in montage")

    @property
    def n_channels(self) -> int:
        return len(self.channel_names)

    def index(self, label: str) -> int:
        target = label.lower()
        for i, name in enumerate(self.channel_names):
            if name.lower() == target:
                return i
        raise KeyError(f"channel {label!r} not in montage")

    def __contains__(self, label: str) -> bool:
        try:
            self.index(label)
            return True
        except KeyError:
            return False


# 62-channel International 10-20 layout (frontal to occipital order).
CHANNELS_10_20_62 = (
    "FP1", "FPZ", "FP2", "AF3", "AF4",
    "F7", "F5", "F3", "F1", "FZ", "F2", "F4", "F6", "F8",
    "FT7", "FC5", "FC3", "FC1", "FCZ", "FC2", "FC4", "FC6", "FT8",
    "T7", "C5", "C3", "C1", "CZ", "C2", "C4", "C6", "T8",
    "TP7", "CP5", "CP3", "CP1", "CPZ", "CP2", "CP4", "CP6", "TP8",
    "P7", "P5", "P3", "P1", "PZ", "P2", "P4", "P6", "P8",
    "PO7", "PO5", "PO3", "POZ", "PO4", "PO6", "PO8",
    "CB1", "O1", "OZ", "O2", "CB2",
)

# Bilateral temporal electrodes that carry the strongest synchrony.
KEY_TEMPORAL_ELECTRODES = ("FT7", "FT8", "TP7", "TP8", "T7", "T8")

MONTAGE_10_20_62 = Montage(CHANNELS_10_20_62, KEY_TEMPORAL_ELECTRODES)


@dataclass(frozen=True)
class Recording:
    """One subject-session-stimulus multichannel signal matrix (channels x time).

    Voltage units are metadata only; nothing downstream rescales, since
    Pearson correlation is gain-invariant. Construction normalizes dtype
    but does not enforce invariants -- run validate_recording for that.
    """

    subject_id: str
    session_id: str
    stimulus_id: str
    samples: np.ndarray
    sample_rate_hz: float
    montage: Montage

    def __post_init__(self):
        try:
            arr = np.asarray(self.samples, dtype=np.float64)
        except (TypeError, ValueError) as exc:
            raise DataValidationError(f"samples must form a rectangular matrix: {exc}")
        arr = np.ascontiguousarray(arr)
        arr.flags.writeable = False
        object.__setattr__(self, "samples", arr)

    @property
    def key(self) -> tuple[str, str, str]:
        return (self.subject_id, self.session_id, self.stimulus_id)

    @property
    def record_label(self) -> str:
        return f"{self.subject_id}/{self.session_id}"

    @property
    def n_samples(self) -> int:
        return self.samples.shape[-1] if self.samples.ndim == 2 else 0

    @property
    def duration_s(self) -> float:
        return self.n_samples / self.sample_rate_hz

    def channel(self, label: str) -> np.ndarray:
        return self.samples[self.montage.index(label)]


def validate_recording(rec: Recording) -> list[str]:
    """Check Recording invariants; returns a list of violations (empty = ok)."""
    violations = []
    if rec.samples.ndim != 2:
        violations.append(f"samples must be 2-D (channels x time), got {rec.samples.ndim}-D")
        return violations
    n_rows, n_cols = rec.samples.shape
    if n_rows != rec.montage.n_channels:
        violations.append(
            f"dimension mismatch: {n_rows} signal rows vs "
            f"{rec.montage.n_channels} montage channels"
        )
    if n_cols < 1:
        violations.append("zero-length signal")
    if not (rec.sample_rate_hz > 0):
        violations.append(f"sample_rate_hz must be positive, got {rec.sample_rate_hz}")
    if n_cols >= 1 and not np.isfinite(rec.samples).all():
        violations.append("non-finite sample values")
    return violations


@dataclass(frozen=True)
class FeatureConfig:
    """How to turn a raw channel into a feature series.

    scale is the number of raw samples aggregated into one feature point.
    Differential entropy always works on 1 s windows, so its scale must
    equal the sample rate; that is checked against the concrete recording
    in validate_for().
    """

    kind: FeatureKind
    scale: int
    band: BandDef | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", FeatureKind(self.kind))
        if self.scale < 1:
            raise DataValidationError(f"scale must be >= 1, got {self.scale}")
        if self.kind is FeatureKind.DIFFERENTIAL_ENTROPY:
            if self.band is None:
                raise DataValidationError("differential entropy requires a band")
        elif self.band is not None:
            raise DataValidationError(f"{self.kind.value} must not carry a band")

    def validate_for(self, sample_rate_hz: float) -> None:
        if self.kind is FeatureKind.DIFFERENTIAL_ENTROPY:
            if self.scale != sample_rate_hz:
                raise DataValidationError(
                    f"differential entropy needs scale == sample rate "
                    f"({sample_rate_hz}), got {self.scale}"
                )
            self.band.validate_against(sample_rate_hz)

    @property
    def label(self) -> str:
        if self.kind is FeatureKind.ORIGINAL:
            return f"orig_s{self.scale}"
        if self.kind is FeatureKind.FIRST_DIFFERENCE:
            return f"fd_s{self.scale}"
        return f"de_{self.band.name}"


def de_config(band: BandDef | str, sample_rate_hz: float) -> FeatureConfig:
    """Differential-entropy config for a named or explicit band."""
    if isinstance(band, str):
        try:
            band = DEFAULT_BANDS[band]
        except KeyError:
            raise DataValidationError(
                f"unknown band {band!r}; known: {sorted(DEFAULT_BANDS)}"
            )
    n = int(round(sample_rate_hz))
    if n != sample_rate_hz:
        raise DataValidationError(
            f"differential entropy needs an integer sample rate, got {sample_rate_hz}"
        )
    return FeatureConfig(FeatureKind.DIFFERENTIAL_ENTROPY, n, band)


@dataclass(frozen=True)
class FeatureSeries:
    """Per-channel feature points at reduced temporal resolution.

    Stores the source sample rate so feature_rate_hz * scale recovers it
    exactly at the rational level.
    """

    config: FeatureConfig
    subject_id: str
    session_id: str
    stimulus_id: str
    channel: str
    points: np.ndarray
    sample_rate_hz: float

    def __post_init__(self):
        pts = np.ascontiguousarray(np.asarray(self.points, dtype=np.float64))
        if pts.ndim != 1:
            raise DataValidationError("feature points must be one-dimensional")
        if not np.isfinite(pts).all():
            raise DataValidationError("feature points must be finite")
        pts.flags.writeable = False
        object.__setattr__(self, "points", pts)

    @property
    def feature_rate_hz(self) -> float:
        return self.sample_rate_hz / self.config.scale

    @property
    def record_label(self) -> str:
        return f"{self.subject_id}/{self.session_id}"

    def __len__(self) -> int:
        return self.points.shape[0]


@dataclass(frozen=True)
class StimulusInfo:
    duration_s: float | None
    valence: str

    def __post_init__(self):
        if self.valence not in VALENCES:
            raise DataValidationError(
                f"valence must be one of {VALENCES}, got {self.valence!r}"
            )


@dataclass(frozen=True)
class StimulusCatalog:
    """Valence label (and optional duration) per stimulus id."""

    stimuli: dict[str, StimulusInfo] = field(default_factory=dict)

    def valence_of(self, stimulus_id: str) -> str:
        return self.stimuli[stimulus_id].valence

    def by_valence(self) -> dict[str, list[str]]:
        groups: dict[str, list[str]] = {v: [] for v in VALENCES}
        for sid in sorted(self.stimuli):
            groups[self.stimuli[sid].valence].append(sid)
        return groups

    def __contains__(self, stimulus_id: str) -> bool:
        return stimulus_id in self.stimuli
