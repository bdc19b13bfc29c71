"""Run and cohort configuration files: strict JSON schemas with defaults.

Unknown keys are rejected so a typo cannot silently fall back to a
default. Feature entries are descriptors; differential entropy resolves
its scale against the dataset's sample rate at run time.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .corr import WindowSpec
from .errors import ConfigError
from .model import FeatureConfig, FeatureKind, de_config
from .preprocess import BandDef
from .synth import SynthConfig

CONFIG_VERSION = 1

DEFAULT_RUN_CONFIG = {
    "version": CONFIG_VERSION,
    "dataset": {"manifest": "cohort/manifest.json"},
    "features": [
        {"kind": "first_difference", "scale": 20},
        {"kind": "differential_entropy", "band": "beta"},
        {"kind": "differential_entropy", "band": "gamma"},
    ],
    "windows": [
        {"width_s": 10.0, "hop_s": 1.0},
        {"width_s": 70.0, "hop_s": 1.0},
    ],
    "alpha": 0.05,
    "channels": None,
    "notch": {"low_hz": 48.0, "high_hz": 52.0},
    "session_grouping": "independent",
    "category_threshold": 0.2,
    "parallel": 1,
    "seed": None,
    "out": "results",
    "format": "csv",
}

DEFAULT_SYNTH_CONFIG = {
    "version": CONFIG_VERSION,
    "n_subjects": 15,
    "n_sessions": 3,
    "n_stimuli": 1,
    "duration_s": 240.0,
    "sample_rate_hz": 200.0,
    "n_channels": 62,
    "injected_channels": [14, 22, 23, 31, 32, 40],
    "envelope": [[60.0, 70.0, 3.0], [120.0, 130.0, 3.0], [180.0, 190.0, 3.0]],
    "subject_gain_range": [0.8, 1.2],
    "subject_lag_range_ms": [0.0, 50.0],
    "noise_sigma": 1.0,
    "rng_seed": 20240531,
}


def _require_keys(doc: dict, allowed: set[str], required: set[str], what: str):
    unknown = set(doc) - allowed
    if unknown:
        raise ConfigError(f"{what}: unknown keys {sorted(unknown)}")
    missing = required - set(doc)
    if missing:
        raise ConfigError(f"{what}: missing keys {sorted(missing)}")


def load_json_config(path) -> dict:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}")
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    return doc


@dataclass(frozen=True)
class FeatureSpecEntry:
    """Unresolved feature descriptor from the config file."""

    kind: FeatureKind
    scale: int | None = None
    band: BandDef | str | None = None

    def resolve(self, sample_rate_hz: float) -> FeatureConfig:
        if self.kind is FeatureKind.DIFFERENTIAL_ENTROPY:
            return de_config(self.band, sample_rate_hz)
        return FeatureConfig(self.kind, self.scale)


@dataclass(frozen=True)
class RunConfig:
    version: int
    dataset_manifest: str | None
    dataset_synth: str | None
    features: tuple[FeatureSpecEntry, ...]
    windows: tuple[WindowSpec, ...]
    alpha: float
    channels: tuple[str, ...] | None
    notch: tuple[float, float] | None
    session_grouping: str
    category_threshold: float
    parallel: int
    seed: int | None
    out: str
    format: str
    snapshot: dict

    def resolve_features(self, sample_rate_hz: float) -> list[FeatureConfig]:
        configs = [f.resolve(sample_rate_hz) for f in self.features]
        labels = [c.label for c in configs]
        if len(set(labels)) != len(labels):
            raise ConfigError(f"duplicate feature configs: {labels}")
        return configs


def _parse_feature_entry(doc, idx: int) -> FeatureSpecEntry:
    what = f"features[{idx}]"
    if not isinstance(doc, dict):
        raise ConfigError(f"{what} must be an object")
    try:
        kind = FeatureKind(doc.get("kind"))
    except ValueError:
        raise ConfigError(
            f"{what}: kind must be one of "
            f"{[k.value for k in FeatureKind]}, got {doc.get('kind')!r}"
        )
    if kind is FeatureKind.DIFFERENTIAL_ENTROPY:
        _require_keys(doc, {"kind", "band"}, {"kind", "band"}, what)
        band = doc["band"]
        if isinstance(band, dict):
            _require_keys(
                band, {"name", "low_hz", "high_hz"}, {"name", "low_hz", "high_hz"},
                f"{what}.band",
            )
            band = BandDef(band["name"], float(band["low_hz"]), float(band["high_hz"]))
        elif not isinstance(band, str):
            raise ConfigError(f"{what}: band must be a name or an object")
        return FeatureSpecEntry(kind, band=band)
    _require_keys(doc, {"kind", "scale"}, {"kind", "scale"}, what)
    scale = doc["scale"]
    if not isinstance(scale, int) or scale < 1:
        raise ConfigError(f"{what}: scale must be a positive integer")
    return FeatureSpecEntry(kind, scale=scale)


def parse_run_config(doc: dict) -> RunConfig:
    _require_keys(
        doc,
        set(DEFAULT_RUN_CONFIG),
        {"version", "dataset"},
        "run config",
    )
    merged = {**DEFAULT_RUN_CONFIG, **doc}
    if merged["version"] != CONFIG_VERSION:
        raise ConfigError(f"unsupported config version {merged['version']!r}")

    dataset = merged["dataset"]
    if not isinstance(dataset, dict):
        raise ConfigError("dataset must be an object")
    _require_keys(dataset, {"manifest", "synth"}, set(), "dataset")
    if len(dataset) != 1:
        raise ConfigError("dataset must give exactly one of manifest/synth")

    features_doc = merged["features"]
    if not isinstance(features_doc, list) or not features_doc:
        raise ConfigError("features must be a non-empty list")
    features = tuple(
        _parse_feature_entry(f, i) for i, f in enumerate(features_doc)
    )

    windows_doc = merged["windows"]
    if not isinstance(windows_doc, list) or not windows_doc:
        raise ConfigError("windows must be a non-empty list")
    windows = []
    for i, w in enumerate(windows_doc):
        if not isinstance(w, dict):
            raise ConfigError(f"windows[{i}] must be an object")
        _require_keys(w, {"width_s", "hop_s"}, {"width_s"}, f"windows[{i}]")
        windows.append(WindowSpec(float(w["width_s"]), float(w.get("hop_s", 1.0))))

    alpha = merged["alpha"]
    if not (0.0 <= float(alpha) <= 1.0):
        raise ConfigError(f"alpha must lie in [0, 1], got {alpha}")

    channels = merged["channels"]
    if channels is not None:
        if not isinstance(channels, list) or not all(
            isinstance(c, str) for c in channels
        ):
            raise ConfigError("channels must be null or a list of labels")
        channels = tuple(channels)

    notch = merged["notch"]
    if notch is not None:
        _require_keys(notch, {"low_hz", "high_hz"}, {"low_hz", "high_hz"}, "notch")
        notch = (float(notch["low_hz"]), float(notch["high_hz"]))

    grouping = merged["session_grouping"]
    if grouping not in ("independent", "average"):
        raise ConfigError(
            f"session_grouping must be independent or average, got {grouping!r}"
        )

    parallel = merged["parallel"]
    if not isinstance(parallel, int) or parallel < 1:
        raise ConfigError("parallel must be a positive integer")

    seed = merged["seed"]
    if seed is not None and (not isinstance(seed, int) or seed < 0):
        raise ConfigError("seed must be null or a non-negative integer")

    fmt = merged["format"]
    if fmt not in ("csv", "json"):
        raise ConfigError(f"format must be csv or json, got {fmt!r}")

    return RunConfig(
        version=CONFIG_VERSION,
        dataset_manifest=dataset.get("manifest"),
        dataset_synth=dataset.get("synth"),
        features=features,
        windows=tuple(windows),
        alpha=float(alpha),
        channels=channels,
        notch=notch,
        session_grouping=grouping,
        category_threshold=float(merged["category_threshold"]),
        parallel=parallel,
        seed=seed,
        out=str(merged["out"]),
        format=fmt,
        snapshot=merged,
    )


def parse_synth_config(doc: dict, seed_override: int | None = None) -> SynthConfig:
    _require_keys(
        doc,
        set(DEFAULT_SYNTH_CONFIG),
        {"version", "n_subjects", "n_sessions", "n_stimuli", "duration_s",
         "sample_rate_hz", "n_channels", "injected_channels", "envelope"},
        "synth config",
    )
    merged = {**DEFAULT_SYNTH_CONFIG, **doc}
    if merged["version"] != CONFIG_VERSION:
        raise ConfigError(f"unsupported config version {merged['version']!r}")
    envelope = merged["envelope"]
    if not isinstance(envelope, list):
        raise ConfigError("envelope must be a list of [start_s, end_s, amplitude]")
    bursts = []
    for i, b in enumerate(envelope):
        if not (isinstance(b, (list, tuple)) and len(b) == 3):
            raise ConfigError(f"envelope[{i}] must be [start_s, end_s, amplitude]")
        bursts.append((float(b[0]), float(b[1]), float(b[2])))
    try:
        return SynthConfig(
            n_subjects=int(merged["n_subjects"]),
            n_sessions=int(merged["n_sessions"]),
            n_stimuli=int(merged["n_stimuli"]),
            duration_s=float(merged["duration_s"]),
            sample_rate_hz=float(merged["sample_rate_hz"]),
            n_channels=int(merged["n_channels"]),
            injected_channels=tuple(int(c) for c in merged["injected_channels"]),
            envelope=tuple(bursts),
            subject_gain_range=tuple(float(g) for g in merged["subject_gain_range"]),
            subject_lag_range_ms=tuple(
                float(g) for g in merged["subject_lag_range_ms"]
            ),
            noise_sigma=float(merged["noise_sigma"]),
            rng_seed=int(merged["rng_seed"]) if seed_override is None
            else seed_override,
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"synth config malformed: {exc}")
