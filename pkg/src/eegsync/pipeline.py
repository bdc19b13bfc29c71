"""Orchestration of the two experiments: overall synchrony percentages and
dynamic (sliding-window) consistency, composed into a serializable report.

Heavy lifting is delegated to the data-parallel correlation engine; this
module sequences preprocessing, feature extraction, statistics and report
assembly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import partial
from typing import Iterable, Sequence

import numpy as np

from .corr import (
    BatchCell,
    BatchError,
    DynamicIsc,
    OverallIscTensor,
    WindowSpec,
    dynamic_isc_batch,
    overall_isc,
    pcc,
)
from .errors import DataValidationError, DegenerateDataError
from .features import extract_series
from .model import (
    FeatureConfig,
    FeatureSeries,
    Montage,
    Recording,
    StimulusCatalog,
    validate_recording,
)
from .preprocess import notch_filter
from .stats import (
    PTensor,
    bonferroni,
    one_sample_t,
    synchronized_percentage,
    window_significance,
)

AXES = ("across_features", "across_channels")
MIN_SHARED_WINDOWS = 3


def resolve_channels(montage: Montage, channels: Sequence[str] | None) -> tuple[str, ...]:
    """Channel filter for the dynamic/consistency stages: explicit list if
    given, else the montage's key electrodes, else every channel."""
    if channels:
        for c in channels:
            if c not in montage:
                raise DataValidationError(f"channel {c!r} not in montage")
        return tuple(channels)
    if montage.key_electrodes:
        return montage.key_electrodes
    return montage.channel_names


def _validated(records: Sequence[Recording]) -> list[Recording]:
    if not records:
        raise DataValidationError("empty dataset")
    for rec in records:
        violations = validate_recording(rec)
        if violations:
            raise DataValidationError(
                f"record {rec.key}: " + "; ".join(violations)
            )
    montage = records[0].montage
    rate = records[0].sample_rate_hz
    for rec in records[1:]:
        if rec.montage != montage:
            raise DataValidationError("records carry different montages")
        if rec.sample_rate_hz != rate:
            raise DataValidationError("records carry different sample rates")
    return sorted(records, key=lambda r: r.key)


def _average_sessions(group: list[FeatureSeries]) -> FeatureSeries:
    head = group[0]
    lengths = {len(s) for s in group}
    if len(lengths) != 1:
        raise DataValidationError(
            f"cannot average sessions of unequal length for {head.subject_id}"
        )
    stacked = np.stack([s.points for s in group])
    return FeatureSeries(
        config=head.config,
        subject_id=head.subject_id,
        session_id="mean",
        stimulus_id=head.stimulus_id,
        channel=head.channel,
        points=stacked.mean(axis=0),
        sample_rate_hz=head.sample_rate_hz,
    )


def extract_feature_table(
    records: Sequence[Recording],
    configs: Sequence[FeatureConfig],
    channels: Sequence[str],
    notch: tuple[float, float] | None = (48.0, 52.0),
    session_grouping: str = "independent",
) -> dict[tuple[str, str, str], list[FeatureSeries]]:
    """Feature series per (stimulus, channel, config-label) cell.

    The notch (when enabled) is applied once per recording and every
    feature is extracted from the same filtered signal. session_grouping
    'average' collapses each subject's sessions into one mean series;
    'independent' keeps every session as its own record.
    """
    if session_grouping not in ("independent", "average"):
        raise DataValidationError(
            f"session_grouping must be independent or average, "
            f"got {session_grouping!r}"
        )
    table: dict[tuple[str, str, str], list[FeatureSeries]] = {}
    for rec in _validated(records):
        filtered = (
            notch_filter(rec.samples, rec.sample_rate_hz, *notch)
            if notch is not None
            else rec.samples
        )
        for channel in channels:
            for config in configs:
                series = extract_series(rec, channel, config, samples=filtered)
                key = (rec.stimulus_id, channel, config.label)
                table.setdefault(key, []).append(series)
    if session_grouping == "average":
        for key, group in table.items():
            by_subject: dict[str, list[FeatureSeries]] = {}
            for s in group:
                by_subject.setdefault(s.subject_id, []).append(s)
            table[key] = [
                _average_sessions(g) for _, g in sorted(by_subject.items())
            ]
    return table


@dataclass(frozen=True)
class OverallResult:
    """One feature config's overall-ISC tensor plus its derived summaries."""

    config_label: str
    tensor: OverallIscTensor
    alpha: float
    bonferroni_m: int
    n_significant: int
    sync_percentage: dict[str, dict[str, float]]


def run_overall(
    records: Sequence[Recording],
    configs: Sequence[FeatureConfig],
    alpha: float = 0.05,
    notch: tuple[float, float] | None = (48.0, 52.0),
    channels: Sequence[str] | None = None,
    session_grouping: str = "independent",
) -> list[OverallResult]:
    """Whole-record synchrony: correlation tensor, family-wise correction,
    synchronized percentage along each margin, per feature config."""
    recs = _validated(records)
    montage = recs[0].montage
    chans = tuple(channels) if channels else montage.channel_names
    for c in chans:
        if c not in montage:
            raise DataValidationError(f"channel {c!r} not in montage")

    per_stim_counts: dict[str, int] = {}
    for rec in recs:
        per_stim_counts[rec.stimulus_id] = per_stim_counts.get(rec.stimulus_id, 0) + 1
    thin = [s for s, n in per_stim_counts.items() if n < 2]
    if thin:
        raise DataValidationError(
            f"need >= 2 records per stimulus, too few for: {sorted(thin)}"
        )

    # one extraction pass covers every config (the notch runs once per record)
    table = extract_feature_table(
        recs, configs, chans, notch=notch, session_grouping=session_grouping
    )
    results = []
    for config in configs:
        series: list[FeatureSeries] = [
            s
            for (_, _, label), group in table.items()
            if label == config.label
            for s in group
        ]
        tensor = overall_isc(series)
        adjusted = bonferroni(PTensor(tensor.p_raw, tensor.valid))
        tensor = tensor.with_adjusted(adjusted.values)
        pct = {
            margin: _margin_map(tensor, adjusted, margin, alpha)
            for margin in ("channel", "pair", "film")
        }
        n_sig = int(((adjusted.values < alpha) & adjusted.valid).sum())
        results.append(
            OverallResult(
                config_label=config.label,
                tensor=tensor,
                alpha=alpha,
                bonferroni_m=adjusted.n_valid,
                n_significant=n_sig,
                sync_percentage=pct,
            )
        )
    return results


def _margin_map(
    tensor: OverallIscTensor, adjusted: PTensor, margin: str, alpha: float
) -> dict[str, float]:
    values = synchronized_percentage(adjusted, margin, alpha)
    if margin == "film":
        labels = tensor.stimuli
    elif margin == "pair":
        labels = tensor.pair_index.labels(tensor.record_labels)
    else:
        labels = tensor.channels
    return dict(zip(labels, (float(v) for v in values)))


def run_dynamic(
    records: Sequence[Recording],
    configs: Sequence[FeatureConfig],
    specs: Sequence[WindowSpec],
    channels: Sequence[str] | None = None,
    alpha: float = 0.05,
    notch: tuple[float, float] | None = (48.0, 52.0),
    session_grouping: str = "independent",
    parallel: int = 1,
    keep_pairs: bool = False,
) -> tuple[dict[tuple[str, str, str, str], DynamicIsc], list[BatchError]]:
    """Sliding-window ISC with per-window significance for every
    (stimulus, channel, config, window spec) cell."""
    recs = _validated(records)
    chans = resolve_channels(recs[0].montage, channels)
    table = extract_feature_table(
        recs, configs, chans, notch=notch, session_grouping=session_grouping
    )
    cells = [
        BatchCell(stim, channel, label, tuple(group))
        for (stim, channel, label), group in sorted(table.items())
    ]
    finalize = partial(window_significance, alpha=alpha, drop_pairs=not keep_pairs)
    results, errors = dynamic_isc_batch(
        cells, specs, parallel=parallel, finalize=finalize
    )
    return {dyn.key: dyn for dyn in results}, errors


@dataclass(frozen=True)
class ConsistencyScore:
    """Mean pairwise correlation between dynamic-ISC curves of one stimulus,
    across features (anchor = channel) or across channels (anchor = config)."""

    stimulus_id: str
    axis: str
    anchor: str
    spec_label: str
    mean_r: float
    n_curves: int
    n_pairs_used: int


def _nan_zscore(values: np.ndarray) -> np.ndarray:
    valid = np.isfinite(values)
    if valid.sum() < 2:
        return values
    sd = float(np.nanstd(values))
    if sd == 0.0:
        return values
    return (values - float(np.nanmean(values))) / sd


def consistency(
    curves: Sequence[DynamicIsc], axis: str, anchor: str = ""
) -> ConsistencyScore:
    """Average pairwise correlation of z-scored dynamic ISC curves.

    Curves are aligned by window start time (grids must share width and
    hop; a trailing extra window from a coarser feature rate is dropped).
    Windows invalid in either curve of a pair are excluded pairwise; pairs
    sharing fewer than MIN_SHARED_WINDOWS windows are skipped.
    """
    if axis not in AXES:
        raise DataValidationError(f"axis must be one of {AXES}, got {axis!r}")
    if len(curves) < 2:
        raise DegenerateDataError("consistency needs at least 2 curves")
    head = curves[0]
    for c in curves[1:]:
        if c.stimulus_id != head.stimulus_id:
            raise DataValidationError("consistency curves must share a stimulus")
        if (c.width_s, c.hop_s) != (head.width_s, head.hop_s):
            raise DataValidationError("consistency curves must share a window spec")
    n_windows = min(c.n_windows for c in curves)
    if n_windows < MIN_SHARED_WINDOWS:
        raise DegenerateDataError("curves too short to compare")
    for c in curves[1:]:
        if not np.allclose(
            c.window_starts_s[:n_windows],
            head.window_starts_s[:n_windows],
            atol=1e-9,
        ):
            raise DataValidationError("curve window grids do not align")

    zs = [_nan_zscore(c.mean_r[:n_windows]) for c in curves]
    masks = [np.isfinite(z) for z in zs]
    pair_values = []
    for i in range(len(curves)):
        for j in range(i + 1, len(curves)):
            shared = masks[i] & masks[j]
            if int(shared.sum()) < MIN_SHARED_WINDOWS:
                continue
            r = pcc(zs[i][shared], zs[j][shared])
            if math.isnan(r):
                continue
            pair_values.append(r)
    if not pair_values:
        raise DegenerateDataError(
            "no curve pair shares enough valid windows for a score"
        )
    return ConsistencyScore(
        stimulus_id=head.stimulus_id,
        axis=axis,
        anchor=anchor,
        spec_label=head.key[3],
        mean_r=math.fsum(pair_values) / len(pair_values),
        n_curves=len(curves),
        n_pairs_used=len(pair_values),
    )


def run_consistency(
    dynamic: dict[tuple[str, str, str, str], DynamicIsc],
    configs: Sequence[str],
    channels: Sequence[str],
    specs: Sequence[WindowSpec],
) -> tuple[list[ConsistencyScore], list[dict]]:
    """Consistency scores for every stimulus: across features anchored at
    each channel, and across channels anchored at each config."""
    stimuli = sorted({key[0] for key in dynamic})
    scores: list[ConsistencyScore] = []
    errors: list[dict] = []

    def attempt(stim, axis, anchor, spec, curve_keys):
        curves = [dynamic[k] for k in curve_keys if k in dynamic]
        if len(curves) < 2:
            return
        try:
            scores.append(consistency(curves, axis, anchor))
        except (DataValidationError, DegenerateDataError) as exc:
            errors.append(
                {
                    "stimulus": stim,
                    "axis": axis,
                    "anchor": anchor,
                    "window": spec.label,
                    "message": str(exc),
                }
            )

    for spec in specs:
        for stim in stimuli:
            for channel in channels:
                attempt(
                    stim,
                    "across_features",
                    channel,
                    spec,
                    [(stim, channel, cfg, spec.label) for cfg in configs],
                )
            for cfg in configs:
                attempt(
                    stim,
                    "across_channels",
                    cfg,
                    spec,
                    [(stim, ch, cfg, spec.label) for ch in channels],
                )
    return scores, errors


def category_test(
    scores: Iterable[ConsistencyScore],
    catalog: StimulusCatalog,
    threshold: float = 0.2,
) -> list[dict]:
    """Per-valence one-sided t-tests of consistency scores against the
    threshold, one block per (axis, anchor, window spec) combination."""
    blocks: dict[tuple[str, str, str], dict[str, float]] = {}
    for s in scores:
        if s.stimulus_id not in catalog:
            continue
        blocks.setdefault((s.axis, s.anchor, s.spec_label), {})[s.stimulus_id] = (
            s.mean_r
        )

    out = []
    for (axis, anchor, spec_label), by_stim in sorted(blocks.items()):
        rows = []
        for valence, stim_ids in sorted(catalog.by_valence().items()):
            values = [by_stim[sid] for sid in stim_ids if sid in by_stim]
            row = {
                "valence": valence,
                "n": len(values),
                "mean": None,
                "sd": None,
                "t": None,
                "p": None,
                "significant": None,
                "error": None,
            }
            if len(values) < 2:
                row["error"] = f"category too small: {len(values)} scores"
            else:
                arr = np.asarray(values)
                row["mean"] = float(arr.mean())
                row["sd"] = float(arr.std(ddof=1))
                try:
                    res = one_sample_t(arr, threshold, alternative="greater")
                    row["t"] = res.statistic
                    row["p"] = res.p_value
                    row["significant"] = bool(res.p_value < 0.05)
                except DegenerateDataError as exc:
                    row["error"] = str(exc)
            rows.append(row)
        out.append(
            {
                "axis": axis,
                "anchor": anchor,
                "window": spec_label,
                "threshold": threshold,
                "results": rows,
            }
        )
    return out


# ---------------------------------------------------------------------------
# report assembly


@dataclass(frozen=True)
class AnalysisReport:
    """Plain serializable snapshot of a run; sections hold JSON-ready data
    (invalid numbers are None, never NaN)."""

    version: int
    run_config: dict
    overall: list
    dynamic: dict
    consistency: dict
    category: list

    def to_dict(self) -> dict:
        return {
            "version": self.version,
            "run_config": self.run_config,
            "overall": self.overall,
            "dynamic": self.dynamic,
            "consistency": self.consistency,
            "category": self.category,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "AnalysisReport":
        return cls(
            version=doc["version"],
            run_config=doc["run_config"],
            overall=doc["overall"],
            dynamic=doc["dynamic"],
            consistency=doc["consistency"],
            category=doc["category"],
        )


def _num(x) -> float | None:
    x = float(x)
    return x if math.isfinite(x) else None


def _num_list(values) -> list:
    return [_num(v) for v in values]


def overall_section(results: Sequence[OverallResult]) -> list:
    out = []
    for res in results:
        f, p, c = res.tensor.dims
        out.append(
            {
                "config": res.config_label,
                "dims": {"films": f, "pairs": p, "channels": c},
                "alpha": res.alpha,
                "bonferroni_m": res.bonferroni_m,
                "n_significant": res.n_significant,
                "series_length": dict(sorted(res.tensor.series_length.items())),
                "synchronized_percentage": {
                    margin: [
                        {"label": label, "value": _num(value)}
                        for label, value in res.sync_percentage[margin].items()
                    ]
                    for margin in ("channel", "pair", "film")
                },
            }
        )
    return out


def dynamic_section(
    dynamic: dict[tuple[str, str, str, str], DynamicIsc],
    errors: Sequence[BatchError],
) -> dict:
    cells = []
    for key in sorted(dynamic):
        dyn = dynamic[key]
        cells.append(
            {
                "stimulus": dyn.stimulus_id,
                "channel": dyn.channel,
                "config": dyn.config_label,
                "window": key[3],
                "width_s": dyn.width_s,
                "hop_s": dyn.hop_s,
                "feature_rate_hz": dyn.feature_rate_hz,
                "alpha": dyn.alpha,
                "window_starts_s": _num_list(dyn.window_starts_s),
                "mean_r": _num_list(dyn.mean_r),
                "n_valid_pairs": [int(v) for v in dyn.n_valid_pairs],
                "p_raw": _num_list(dyn.p_raw) if dyn.p_raw is not None else None,
                "p_adjusted": _num_list(dyn.p_adj) if dyn.p_adj is not None else None,
                "significant": (
                    [bool(v) for v in dyn.significant]
                    if dyn.significant is not None
                    else None
                ),
            }
        )
    return {
        "cells": cells,
        "errors": [
            {
                "stimulus": e.stimulus_id,
                "channel": e.channel,
                "config": e.config_label,
                "window": e.spec_label,
                "message": e.message,
            }
            for e in errors
        ],
    }


def consistency_section(
    scores: Sequence[ConsistencyScore], errors: Sequence[dict]
) -> dict:
    return {
        "scores": [
            {
                "stimulus": s.stimulus_id,
                "axis": s.axis,
                "anchor": s.anchor,
                "window": s.spec_label,
                "mean_r": _num(s.mean_r),
                "n_curves": s.n_curves,
                "n_pairs_used": s.n_pairs_used,
            }
            for s in sorted(
                scores, key=lambda s: (s.spec_label, s.stimulus_id, s.axis, s.anchor)
            )
        ],
        "errors": list(errors),
    }


def compose_report(
    run_config: dict,
    overall: Sequence[OverallResult] = (),
    dynamic: dict[tuple[str, str, str, str], DynamicIsc] | None = None,
    dynamic_errors: Sequence[BatchError] = (),
    consistency_scores: Sequence[ConsistencyScore] = (),
    consistency_errors: Sequence[dict] = (),
    category: Sequence[dict] = (),
) -> AnalysisReport:
    return AnalysisReport(
        version=1,
        run_config=run_config,
        overall=overall_section(overall),
        dynamic=dynamic_section(dynamic or {}, dynamic_errors),
        consistency=consistency_section(consistency_scores, consistency_errors),
        category=list(category),
    )


def write_report_tables(report: AnalysisReport, out_dir) -> None:
    """CSV views of the report (column orders are part of the CLI contract,
    see README)."""
    from .io import write_csv

    if report.overall:
        configs = [block["config"] for block in report.overall]
        for margin in ("channel", "pair", "film"):
            labels = [
                row["label"]
                for row in report.overall[0]["synchronized_percentage"][margin]
            ]
            columns = {
                block["config"]: {
                    row["label"]: row["value"]
                    for row in block["synchronized_percentage"][margin]
                }
                for block in report.overall
            }
            rows = [
                [label] + [columns[cfg].get(label) for cfg in configs]
                for label in labels
            ]
            write_csv(
                out_dir / f"overall_sync_{margin}.csv",
                [margin] + configs,
                rows,
            )
    for cell in report.dynamic["cells"]:
        name = "dynamic_{stimulus}_{channel}_{config}_{window}.csv".format(**cell)
        p_adj = cell["p_adjusted"] or [None] * len(cell["mean_r"])
        sig = cell["significant"] or [False] * len(cell["mean_r"])
        rows = zip(
            cell["window_starts_s"],
            cell["mean_r"],
            p_adj,
            sig,
            cell["n_valid_pairs"],
        )
        write_csv(
            out_dir / name,
            ["time_s", "mean_r", "adjusted_p", "significant", "n_valid_pairs"],
            rows,
        )
    if report.consistency["scores"]:
        write_csv(
            out_dir / "consistency_scores.csv",
            ["stimulus", "axis", "anchor", "window", "mean_r", "n_curves",
             "n_pairs_used"],
            [
                [s["stimulus"], s["axis"], s["anchor"], s["window"], s["mean_r"],
                 s["n_curves"], s["n_pairs_used"]]
                for s in report.consistency["scores"]
            ],
        )
    if report.category:
        write_csv(
            out_dir / "category_tests.csv",
            ["axis", "anchor", "window", "threshold", "valence", "n", "mean",
             "sd", "t", "p", "significant", "error"],
            [
                [block["axis"], block["anchor"], block["window"],
                 block["threshold"], row["valence"], row["n"], row["mean"],
                 row["sd"], row["t"], row["p"], row["significant"], row["error"]]
                for block in report.category
                for row in block["results"]
            ],
        )
