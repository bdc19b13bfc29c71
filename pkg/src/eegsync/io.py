"""Dataset and report I/O.

On-disk recording format: one raw little-endian float32 file per
(subject, session, stimulus), channel-major, next to a JSON sidecar
carrying channel names, sample rate and sample count. A dataset is tied
together by a manifest JSON. Reports serialize to JSON (lossless round
trip) or a directory of RFC-4180 CSV tables.

All JSON written here is key-sorted with no timestamps, so identical
inputs produce identical bytes.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, DataValidationError
from .model import (
    Montage,
    Recording,
    StimulusCatalog,
    StimulusInfo,
    validate_recording,
)
from .synth import GroundTruth

MANIFEST_VERSION = 1


@dataclass(frozen=True)
class ManifestEntry:
    subject: str
    session: str
    stimulus: str
    path: str

    @property
    def key(self) -> tuple[str, str, str]:
        return (self.subject, self.session, self.stimulus)


@dataclass(frozen=True)
class DatasetManifest:
    root: Path
    sample_rate_hz: float
    montage: Montage
    entries: tuple[ManifestEntry, ...]
    catalog: StimulusCatalog

    def __post_init__(self):
        keys = [e.key for e in self.entries]
        if len(set(keys)) != len(keys):
            raise DataValidationError(
                "(subject, session, stimulus) triples must be unique"
            )


def _dump_json(payload, path: Path) -> None:
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")


def load_manifest(path) -> DatasetManifest:
    path = Path(path)
    if not path.is_file():
        raise DataValidationError(f"manifest not found: {path}")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise DataValidationError(f"manifest is not valid JSON: {exc}")
    try:
        if doc["version"] != MANIFEST_VERSION:
            raise DataValidationError(
                f"unsupported manifest version {doc['version']!r}"
            )
        montage = Montage(
            tuple(doc["montage"]["channels"]),
            tuple(doc["montage"].get("key_electrodes", ())),
        )
        catalog = StimulusCatalog(
            {
                sid: StimulusInfo(
                    duration_s=info.get("duration_s"), valence=info["valence"]
                )
                for sid, info in doc.get("stimuli", {}).items()
            }
        )
        entries = tuple(
            ManifestEntry(e["subject"], e["session"], e["stimulus"], e["path"])
            for e in doc["entries"]
        )
        return DatasetManifest(
            root=path.parent,
            sample_rate_hz=float(doc["sample_rate_hz"]),
            montage=montage,
            entries=entries,
            catalog=catalog,
        )
    except (KeyError, TypeError) as exc:
        raise DataValidationError(f"manifest malformed: missing {exc}")


def _read_recording(manifest: DatasetManifest, entry: ManifestEntry) -> Recording:
    raw_path = manifest.root / entry.path
    sidecar_path = raw_path.with_name(raw_path.name + ".json")
    for p in (raw_path, sidecar_path):
        if not p.is_file():
            raise DataValidationError(
                f"entry {entry.key}: missing file {p}"
            )
    try:
        sidecar = json.loads(sidecar_path.read_text())
        channels = tuple(sidecar["channels"])
        rate = float(sidecar["sample_rate_hz"])
        n_samples = int(sidecar["n_samples"])
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise DataValidationError(f"entry {entry.key}: unreadable sidecar ({exc})")
    if channels != manifest.montage.channel_names:
        raise DataValidationError(
            f"entry {entry.key}: sidecar channels disagree with the montage"
        )
    if rate != manifest.sample_rate_hz:
        raise DataValidationError(
            f"entry {entry.key}: sample rate {rate} != manifest "
            f"{manifest.sample_rate_hz}"
        )
    flat = np.fromfile(raw_path, dtype="<f4")
    expected = len(channels) * n_samples
    if flat.size != expected:
        raise DataValidationError(
            f"entry {entry.key}: {flat.size} float32 values on disk, "
            f"expected {len(channels)} x {n_samples}"
        )
    rec = Recording(
        subject_id=entry.subject,
        session_id=entry.session,
        stimulus_id=entry.stimulus,
        samples=flat.astype(np.float64).reshape(len(channels), n_samples),
        sample_rate_hz=rate,
        montage=manifest.montage,
    )
    violations = validate_recording(rec)
    if violations:
        raise DataValidationError(
            f"entry {entry.key}: invalid recording: " + "; ".join(violations)
        )
    return rec


def load_dataset(manifest: DatasetManifest) -> list[Recording]:
    """One validated Recording per manifest entry, in canonical
    (subject, session, stimulus) order."""
    ordered = sorted(manifest.entries, key=lambda e: e.key)
    return [_read_recording(manifest, e) for e in ordered]


def write_cohort(
    records: list[Recording],
    catalog: StimulusCatalog,
    out_dir,
    ground_truth: GroundTruth | None = None,
) -> Path:
    """Write recordings + manifest (+ ground truth) under out_dir; returns
    the manifest path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if not records:
        raise DataValidationError("nothing to write: empty cohort")
    montage = records[0].montage
    rate = records[0].sample_rate_hz
    entries = []
    for rec in sorted(records, key=lambda r: r.key):
        name = f"{rec.subject_id}_{rec.session_id}_{rec.stimulus_id}.f32"
        rec.samples.astype("<f4").tofile(out / name)
        _dump_json(
            {
                "channels": list(montage.channel_names),
                "sample_rate_hz": rate,
                "n_samples": rec.n_samples,
                "subject": rec.subject_id,
                "session": rec.session_id,
                "stimulus": rec.stimulus_id,
            },
            out / (name + ".json"),
        )
        entries.append(
            {
                "subject": rec.subject_id,
                "session": rec.session_id,
                "stimulus": rec.stimulus_id,
                "path": name,
            }
        )
    manifest_path = out / "manifest.json"
    _dump_json(
        {
            "version": MANIFEST_VERSION,
            "sample_rate_hz": rate,
            "montage": {
                "channels": list(montage.channel_names),
                "key_electrodes": list(montage.key_electrodes),
            },
            "stimuli": {
                sid: {"duration_s": info.duration_s, "valence": info.valence}
                for sid, info in catalog.stimuli.items()
            },
            "entries": entries,
        },
        manifest_path,
    )
    if ground_truth is not None:
        _dump_json(
            {
                "injected_channels": list(ground_truth.injected_channels),
                "injected_labels": list(ground_truth.injected_labels),
                "feature_rate_hz": ground_truth.feature_rate_hz,
                "envelopes": {
                    sid: [float(v) for v in env]
                    for sid, env in ground_truth.envelopes.items()
                },
            },
            out / "ground_truth.json",
        )
    return manifest_path


def _fmt_cell(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return "" if math.isnan(x) else repr(x)
    return str(x)


def write_csv(path, header: list[str], rows) -> None:
    """RFC-4180 CSV (CRLF, minimal quoting); floats keep full precision,
    NaN/None cells are left empty."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt_cell(c) for c in row])


def write_report(report, fmt: str, path) -> Path:
    """Serialize an AnalysisReport. JSON goes to a single file; CSV writes
    a directory of tables (one per report section)."""
    path = Path(path)
    if fmt == "json":
        payload = report.to_dict()
        if path.is_dir():
            path = path / "report.json"
        _dump_json(payload, path)
        return path
    if fmt == "csv":
        from .pipeline import write_report_tables

        path.mkdir(parents=True, exist_ok=True)
        write_report_tables(report, path)
        return path
    raise ConfigError(f"unknown report format {fmt!r} (use csv or json)")


def read_report(path):
    """Read back a JSON report written by write_report."""
    from .pipeline import AnalysisReport

    doc = json.loads(Path(path).read_text())
    return AnalysisReport.from_dict(doc)
