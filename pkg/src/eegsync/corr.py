"""Pairwise Pearson correlation, overall ISC tensors, and the parallel
sliding-window dynamic ISC engine.

Degenerate inputs (zero variance) produce NaN invalid markers, never a
silent 0. All reductions run in a fixed canonical order, so outputs are
bit-identical regardless of worker count or scheduling.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import numpy as np

from ._backend import active_kernel
from .errors import DataValidationError, DegenerateDataError
from .model import FeatureSeries
from .special import pearson_r_two_sided_p


def pcc(x, y) -> float:
    """Pearson correlation coefficient, clamped to [-1, 1].

    Returns NaN (the invalid marker) when either input has zero sample
    variance; that is decided by exact constancy, so rounding noise in a
    flat signal cannot fabricate a coefficient.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim != 1 or y.ndim != 1:
        raise DataValidationError("pcc expects one-dimensional sequences")
    if x.shape[0] != y.shape[0]:
        raise DataValidationError(
            f"length mismatch: {x.shape[0]} vs {y.shape[0]}"
        )
    n = x.shape[0]
    if n < 2:
        raise DegenerateDataError(f"pcc needs n >= 2, got {n}")
    if np.all(x == x[0]) or np.all(y == y[0]):
        return float("nan")
    xc = x - x.mean()
    yc = y - y.mean()
    ssx = float(xc @ xc)
    ssy = float(yc @ yc)
    if ssx <= 0.0 or ssy <= 0.0:
        return float("nan")
    r = float(xc @ yc) / math.sqrt(ssx * ssy)
    return min(1.0, max(-1.0, r))


def pcc_p_value(r: float, n: int) -> float:
    """Two-tailed p-value for Pearson's r from its exact null distribution.

    NaN (invalid) coefficients yield NaN p-values.
    """
    if n < 3:
        raise DegenerateDataError(f"p-value needs n >= 3, got {n}")
    if math.isnan(r):
        return float("nan")
    if abs(r) > 1.0 + 1e-12:
        raise DataValidationError(f"|r| must be <= 1, got {r}")
    return float(pearson_r_two_sided_p(min(1.0, max(-1.0, r)), n))


@dataclass(frozen=True)
class PairIndex:
    """Canonical lexicographic (i, j) pairs with i < j over m records."""

    m: int
    first: np.ndarray
    second: np.ndarray

    @property
    def count(self) -> int:
        return self.first.shape[0]

    def labels(self, record_labels: Sequence[str]) -> list[str]:
        return [
            f"{record_labels[i]}~{record_labels[j]}"
            for i, j in zip(self.first, self.second)
        ]


def enumerate_pairs(m: int) -> PairIndex:
    if m < 2:
        raise DataValidationError(f"need at least 2 records to pair, got {m}")
    first, second = np.triu_indices(m, 1)
    first = first.astype(np.int64)
    second = second.astype(np.int64)
    first.flags.writeable = False
    second.flags.writeable = False
    return PairIndex(m=m, first=first, second=second)


@dataclass(frozen=True)
class WindowSpec:
    """Sliding-window geometry in seconds; point counts are derived per
    feature rate so different features share one time grid."""

    width_s: float
    hop_s: float = 1.0

    def __post_init__(self):
        if self.width_s <= 0 or self.hop_s <= 0:
            raise DataValidationError("window width and hop must be positive")

    @property
    def label(self) -> str:
        def fmt(x: float) -> str:
            return f"{x:g}".replace(".", "p")

        return f"w{fmt(self.width_s)}_h{fmt(self.hop_s)}"

    def _points(self, seconds: float, feature_rate_hz: Fraction, what: str) -> int:
        exact = Fraction(seconds).limit_denominator(10**9) * feature_rate_hz
        if exact.denominator != 1:
            raise DataValidationError(
                f"window {what} of {seconds} s is not a whole number of "
                f"feature points at {float(feature_rate_hz)} Hz"
            )
        return int(exact)

    def width_points(self, feature_rate_hz: Fraction) -> int:
        width = self._points(self.width_s, feature_rate_hz, "width")
        if width < 3:
            raise DataValidationError(
                f"window width must span >= 3 feature points, got {width}"
            )
        return width

    def hop_points(self, feature_rate_hz: Fraction) -> int:
        hop = self._points(self.hop_s, feature_rate_hz, "hop")
        if hop < 1:
            raise DataValidationError(f"hop must be >= 1 feature point, got {hop}")
        return hop


def window_count(length: int, width: int, hop: int) -> int:
    if width > length:
        raise DataValidationError(
            f"series of {length} points shorter than window of {width}"
        )
    return (length - width) // hop + 1


@dataclass(frozen=True)
class OverallIscTensor:
    """Per (stimulus, pair, channel) correlation and p-values.

    r, p_raw, p_adj are (F, P, C) float arrays; invalid cells are NaN with
    valid=False. p_adj is None until a correction is applied.
    """

    stimuli: tuple[str, ...]
    record_labels: tuple[str, ...]
    channels: tuple[str, ...]
    pair_index: PairIndex
    series_length: dict[str, int]
    r: np.ndarray
    p_raw: np.ndarray
    valid: np.ndarray
    p_adj: np.ndarray | None = None

    @property
    def dims(self) -> tuple[int, int, int]:
        return self.r.shape

    def with_adjusted(self, p_adj: np.ndarray) -> "OverallIscTensor":
        if p_adj.shape != self.r.shape:
            raise DataValidationError("adjusted tensor shape mismatch")
        return replace(self, p_adj=p_adj)


@dataclass(frozen=True)
class DynamicIsc:
    """Pair-averaged windowed correlation for one (stimulus, channel,
    feature config, window spec) cell."""

    stimulus_id: str
    channel: str
    config_label: str
    width_s: float
    hop_s: float
    feature_rate_hz: float
    record_labels: tuple[str, ...]
    window_starts_s: np.ndarray
    mean_r: np.ndarray
    n_valid_pairs: np.ndarray
    pair_r: np.ndarray | None = None
    p_raw: np.ndarray | None = None
    p_adj: np.ndarray | None = None
    significant: np.ndarray | None = None
    alpha: float | None = None

    @property
    def key(self) -> tuple[str, str, str, str]:
        spec = WindowSpec(self.width_s, self.hop_s)
        return (self.stimulus_id, self.channel, self.config_label, spec.label)

    @property
    def n_windows(self) -> int:
        return self.mean_r.shape[0]

    def without_pair_matrix(self) -> "DynamicIsc":
        return replace(self, pair_r=None)


def _stack_series(series: Sequence[FeatureSeries]):
    """Validate a cell's series set and stack it into an (M, L) matrix."""
    if len(series) < 2:
        raise DataValidationError("need at least 2 records per cell")
    head = series[0]
    for s in series[1:]:
        if s.config != head.config:
            raise DataValidationError("mixed feature configs in one cell")
        if (s.stimulus_id, s.channel) != (head.stimulus_id, head.channel):
            raise DataValidationError("mixed (stimulus, channel) in one cell")
        if len(s) != len(head):
            raise DataValidationError(
                f"inconsistent series lengths within stimulus "
                f"{head.stimulus_id!r}: {len(s)} vs {len(head)}"
            )
    ordered = sorted(series, key=lambda s: (s.subject_id, s.session_id))
    labels = tuple(s.record_label for s in ordered)
    matrix = np.ascontiguousarray(np.stack([s.points for s in ordered]))
    rate = Fraction(head.sample_rate_hz).limit_denominator(10**9) / head.config.scale
    return matrix, labels, rate, head


def overall_isc(series: Iterable[FeatureSeries]) -> OverallIscTensor:
    """Whole-record pairwise correlation tensor over (stimulus, pair, channel).

    All stimuli must cover the same record set so the pair axis is shared;
    within a (stimulus, channel) cell every series must have equal length.
    """
    cells: dict[tuple[str, str], list[FeatureSeries]] = {}
    for s in series:
        cells.setdefault((s.stimulus_id, s.channel), []).append(s)
    if not cells:
        raise DataValidationError("no feature series supplied")

    stimuli = tuple(sorted({k[0] for k in cells}))
    channels_per_stim = {
        f: tuple(sorted({c for (g, c) in cells if g == f})) for f in stimuli
    }
    channels = channels_per_stim[stimuli[0]]
    for f, chans in channels_per_stim.items():
        if chans != channels:
            raise DataValidationError(f"stimulus {f!r} covers a different channel set")

    record_labels: tuple[str, ...] | None = None
    series_length: dict[str, int] = {}
    pair_index: PairIndex | None = None
    kernel = active_kernel()

    shape = (len(stimuli), 0, len(channels))
    r = p = valid = None
    for fi, f in enumerate(stimuli):
        for ci, c in enumerate(channels):
            matrix, labels, _, head = _stack_series(cells[(f, c)])
            if record_labels is None:
                record_labels = labels
                pair_index = enumerate_pairs(len(labels))
                shape = (len(stimuli), pair_index.count, len(channels))
                r = np.empty(shape)
                p = np.empty(shape)
                valid = np.empty(shape, dtype=bool)
            elif labels != record_labels:
                raise DataValidationError(
                    f"stimulus {f!r} channel {c!r} covers a different record set"
                )
            length = matrix.shape[1]
            expect = series_length.setdefault(f, length)
            if length != expect:
                raise DataValidationError(
                    f"inconsistent series lengths within stimulus {f!r}"
                )
            if length < 3:
                raise DataValidationError(
                    f"series too short for a p-value: {length} points"
                )
            _, _, pair_block = kernel.windowed_pair_corr(matrix, length, 1)
            row = pair_block[0]
            r[fi, :, ci] = row
            valid[fi, :, ci] = np.isfinite(row)
            p[fi, :, ci] = pearson_r_two_sided_p(row, length)

    return OverallIscTensor(
        stimuli=stimuli,
        record_labels=record_labels,
        channels=channels,
        pair_index=pair_index,
        series_length=series_length,
        r=r,
        p_raw=p,
        valid=valid,
    )


def sliding_window_isc(
    series: Sequence[FeatureSeries],
    spec: WindowSpec,
    retain_pairs: bool = True,
) -> DynamicIsc:
    """Dynamic ISC for one (stimulus, channel, config) cell.

    Per window: Pearson r over every valid record pair, averaged in
    canonical order; the valid-pair count per window is reported alongside.
    """
    matrix, labels, rate, head = _stack_series(series)
    width = spec.width_points(rate)
    hop = spec.hop_points(rate)
    if matrix.shape[1] < width:
        raise DataValidationError(
            f"series of {matrix.shape[1]} points shorter than "
            f"{spec.width_s} s window ({width} points)"
        )
    kernel = active_kernel()
    mean_r, n_valid, pair_r = kernel.windowed_pair_corr(matrix, width, hop)
    starts = np.arange(mean_r.shape[0]) * (hop / float(rate))
    return DynamicIsc(
        stimulus_id=head.stimulus_id,
        channel=head.channel,
        config_label=head.config.label,
        width_s=spec.width_s,
        hop_s=spec.hop_s,
        feature_rate_hz=float(rate),
        record_labels=labels,
        window_starts_s=starts,
        mean_r=mean_r,
        n_valid_pairs=n_valid,
        pair_r=pair_r if retain_pairs else None,
    )


@dataclass(frozen=True)
class BatchCell:
    """One unit of parallel work: all records' series for a cell."""

    stimulus_id: str
    channel: str
    config_label: str
    series: tuple[FeatureSeries, ...]


@dataclass(frozen=True)
class BatchError:
    stimulus_id: str
    channel: str
    config_label: str
    spec_label: str
    message: str


def _limit_worker_blas(n_threads: int = 1) -> None:
    """Best-effort cap on BLAS threads inside worker processes.

    Worker-level process parallelism plus per-worker BLAS threading
    oversubscribes the machine; the windows here are far too small for
    threaded GEMM to pay off anyway. Linux-only, silently skipped
    elsewhere."""
    try:
        import ctypes

        paths = set()
        with open("/proc/self/maps") as fh:
            for line in fh:
                path = line.rsplit(" ", 1)[-1].strip()
                if path.startswith("/") and "openblas" in path.lower():
                    paths.add(path)
        for path in paths:
            lib = ctypes.CDLL(path)
            for sym in (
                "scipy_openblas_set_num_threads64_",
                "scipy_openblas_set_num_threads",
                "openblas_set_num_threads64_",
                "openblas_set_num_threads",
            ):
                fn = getattr(lib, sym, None)
                if fn is not None:
                    fn(n_threads)
                    break
    except Exception:
        pass


def _run_cell(task):
    cell, spec, finalize = task
    try:
        dyn = sliding_window_isc(cell.series, spec, retain_pairs=True)
        if finalize is not None:
            dyn = finalize(dyn)
        return dyn
    except DataValidationError as exc:
        return BatchError(
            cell.stimulus_id, cell.channel, cell.config_label, spec.label, str(exc)
        )


def dynamic_isc_batch(
    cells: Sequence[BatchCell],
    specs: Sequence[WindowSpec],
    parallel: int = 1,
    finalize: Callable[[DynamicIsc], DynamicIsc] | None = None,
) -> tuple[list[DynamicIsc], list[BatchError]]:
    """Run sliding_window_isc over every (cell, spec), optionally in parallel.

    `finalize` (a picklable callable) runs inside the worker, e.g. to attach
    window significance and drop the bulky pair matrix before results ship
    back. Output order and values are identical for any worker count.
    """
    tasks = [(cell, spec, finalize) for cell in cells for spec in specs]
    if parallel < 1:
        raise DataValidationError(f"parallel degree must be >= 1, got {parallel}")
    if parallel == 1 or len(tasks) <= 1:
        outcomes = [_run_cell(t) for t in tasks]
    else:
        workers = min(parallel, len(tasks))
        chunk = max(1, math.ceil(len(tasks) / (workers * 4)))
        with ProcessPoolExecutor(
            max_workers=workers, initializer=_limit_worker_blas
        ) as pool:
            outcomes = list(pool.map(_run_cell, tasks, chunksize=chunk))
    results = [o for o in outcomes if isinstance(o, DynamicIsc)]
    errors = [o for o in outcomes if isinstance(o, BatchError)]
    return results, errors
