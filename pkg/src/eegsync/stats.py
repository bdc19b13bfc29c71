"""Self-contained statistics kernel: multiple-comparison corrections, the
signed-rank and t tests, normalization, and the synchronized-percentage
metric.

Conventions, fixed here and documented at each API: the signed-rank test
is two-sided, the threshold t-test is one-sided (greater); zscore uses the
population (1/n) standard deviation while t-tests use the sample (1/(n-1))
one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .corr import DynamicIsc
from .errors import DataValidationError, DegenerateDataError
from .special import normal_sf, t_sf, t_two_sided_p

# Largest nonzero-sample count for which the signed-rank null distribution
# is enumerated exactly; beyond it the tie- and continuity-corrected normal
# approximation takes over.
WILCOXON_EXACT_MAX_N = 15


@dataclass(frozen=True)
class TestResult:
    statistic: float
    p_value: float
    n_effective: int
    method: str

    def __post_init__(self):
        if not (0.0 <= self.p_value <= 1.0):
            raise DataValidationError(f"p-value out of range: {self.p_value}")
        if self.n_effective < 1:
            raise DataValidationError("n_effective must be >= 1")


@dataclass(frozen=True)
class PTensor:
    """p-values of any shape plus an invalid mask; invalid cells are NaN."""

    values: np.ndarray
    valid: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        valid = np.asarray(self.valid, dtype=bool)
        if values.shape != valid.shape:
            raise DataValidationError("values/valid shape mismatch")
        ok = values[valid]
        if ok.size and (np.isnan(ok).any() or (ok < 0).any() or (ok > 1).any()):
            raise DataValidationError("valid p-values must lie in [0, 1]")
        values = values.copy()
        values[~valid] = np.nan
        values.flags.writeable = False
        valid = valid.copy()
        valid.flags.writeable = False
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "valid", valid)

    @property
    def n_valid(self) -> int:
        return int(self.valid.sum())


def bonferroni(p: PTensor) -> PTensor:
    """Family-wise error control: multiply by the number of valid cells
    (tests actually performed), clamp at 1. Invalid cells stay invalid."""
    m = p.n_valid
    if m == 0:
        return p
    adjusted = np.minimum(p.values * m, 1.0)
    return PTensor(adjusted, p.valid)


def bh_fdr(p) -> np.ndarray:
    """Benjamini-Hochberg step-up adjusted p-values, in the input order.

    Sort ascending, q_i = p_(i) * m / i, enforce monotonicity by a
    cumulative minimum from the largest rank down, clamp to 1.
    """
    arr = np.asarray(p, dtype=np.float64)
    if arr.ndim != 1:
        raise DataValidationError("bh_fdr expects a flat list of p-values")
    if arr.size == 0:
        return arr.copy()
    if np.isnan(arr).any() or (arr < 0).any() or (arr > 1).any():
        raise DataValidationError("p-values must lie in [0, 1]")
    m = arr.size
    order = np.argsort(arr, kind="stable")
    scaled = arr[order] * m / np.arange(1, m + 1)
    adjusted = np.minimum.accumulate(scaled[::-1])[::-1]
    np.clip(adjusted, None, 1.0, out=adjusted)
    out = np.empty_like(adjusted)
    out[order] = adjusted
    return out


def _rank_with_ties(a: np.ndarray):
    """Average ranks (1-based) and tie-group sizes."""
    order = np.argsort(a, kind="stable")
    sa = a[order]
    boundary = np.empty(a.shape[0], dtype=bool)
    boundary[0] = True
    boundary[1:] = sa[1:] != sa[:-1]
    firsts = np.flatnonzero(boundary)
    counts = np.diff(np.append(firsts, a.shape[0]))
    avg = firsts + (counts - 1) / 2.0 + 1.0
    ranks = np.empty(a.shape[0])
    ranks[order] = np.repeat(avg, counts)
    return ranks, counts


def _wilcoxon_exact_p(doubled_ranks: np.ndarray, w2_obs: int, n: int) -> float:
    """Exact two-sided p by dynamic programming over the 2^n sign
    assignments; ranks arrive doubled so tied (half-integer) ranks stay
    integral."""
    total2 = int(doubled_ranks.sum())
    dist = np.zeros(total2 + 1, dtype=np.int64)
    dist[0] = 1
    for r2 in doubled_ranks:
        shifted = np.zeros_like(dist)
        shifted[r2:] = dist[: dist.shape[0] - r2]
        dist = dist + shifted
    support = np.arange(total2 + 1, dtype=np.int64)
    dev_obs = abs(2 * w2_obs - total2)
    mask = np.abs(2 * support - total2) >= dev_obs
    return float(dist[mask].sum() / float(2**n))


def wilcoxon_signed_rank(values, mu0: float = 0.0) -> TestResult:
    """Two-sided Wilcoxon signed-rank test of symmetry around mu0.

    Zero differences are dropped (Wilcoxon convention) and tied absolute
    differences get average ranks. The null distribution is enumerated
    exactly up to 15 nonzero differences; beyond that a normal
    approximation with tie and continuity corrections is used.
    """
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise DataValidationError("wilcoxon expects a flat list of values")
    if np.isnan(arr).any():
        raise DataValidationError("wilcoxon input must not contain NaN")
    d = arr - mu0
    d = d[d != 0.0]
    n = d.shape[0]
    if n == 0:
        raise DegenerateDataError("all differences are zero")
    ranks, tie_counts = _rank_with_ties(np.abs(d))
    w_plus = float(ranks[d > 0].sum())

    if n <= WILCOXON_EXACT_MAX_N:
        doubled = np.rint(2.0 * ranks).astype(np.int64)
        w2 = int(round(2.0 * w_plus))
        p = _wilcoxon_exact_p(doubled, w2, n)
        return TestResult(w_plus, p, n, "wilcoxon-exact")

    mean = n * (n + 1) / 4.0
    tie_term = float((tie_counts.astype(np.float64) ** 3 - tie_counts).sum())
    var = n * (n + 1) * (2 * n + 1) / 24.0 - tie_term / 48.0
    if var <= 0.0:
        raise DegenerateDataError("signed-rank variance vanished under ties")
    diff = w_plus - mean
    z = (diff - 0.5 * np.sign(diff)) / math.sqrt(var) if diff != 0.0 else 0.0
    p = min(1.0, 2.0 * normal_sf(abs(z)))
    return TestResult(w_plus, p, n, "wilcoxon-normal")


def window_significance(
    dyn: DynamicIsc, alpha: float = 0.05, drop_pairs: bool = True
) -> DynamicIsc:
    """Per-window significance of a dynamic ISC: signed-rank test of the
    window's pair coefficients against 0, then BH-FDR across the windows.

    Windows with no valid pairs or all-zero coefficients are flagged
    non-significant with NaN p-values (never dropped silently).
    """
    if dyn.pair_r is None:
        raise DataValidationError(
            "window significance needs the retained pair-level matrix"
        )
    n_windows = dyn.n_windows
    p_raw = np.full(n_windows, np.nan)
    for k in range(n_windows):
        vals = dyn.pair_r[k]
        vals = vals[np.isfinite(vals)]
        if vals.size == 0 or not np.any(vals != 0.0):
            continue
        p_raw[k] = wilcoxon_signed_rank(vals, 0.0).p_value

    p_adj = np.full(n_windows, np.nan)
    testable = np.isfinite(p_raw)
    if testable.any():
        p_adj[testable] = bh_fdr(p_raw[testable])
    significant = np.zeros(n_windows, dtype=bool)
    significant[testable] = p_adj[testable] < alpha

    out = replace(
        dyn, p_raw=p_raw, p_adj=p_adj, significant=significant, alpha=alpha
    )
    return out.without_pair_matrix() if drop_pairs else out


def one_sample_t(values, mu0: float, alternative: str = "greater") -> TestResult:
    """One-sample t-test of the mean against mu0.

    Defaults to the one-sided 'greater' alternative (does the mean exceed
    the threshold); 'two-sided' is available. Sample (n-1) standard
    deviation.
    """
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise DataValidationError("one_sample_t expects a flat list of values")
    n = arr.shape[0]
    if n < 2:
        raise DegenerateDataError(f"t-test needs n >= 2, got {n}")
    sd = float(arr.std(ddof=1))
    if sd == 0.0 or np.all(arr == arr[0]):
        raise DegenerateDataError("zero variance sample")
    t = (float(arr.mean()) - mu0) / (sd / math.sqrt(n))
    if alternative == "greater":
        p = float(t_sf(t, n - 1))
    elif alternative == "two-sided":
        p = float(t_two_sided_p(t, n - 1))
    else:
        raise DataValidationError(f"unknown alternative {alternative!r}")
    return TestResult(t, min(1.0, max(0.0, p)), n, f"one-sample-t-{alternative}")


def zscore(series) -> np.ndarray:
    """Standardize to mean 0, population (1/n) standard deviation 1."""
    arr = np.asarray(series, dtype=np.float64)
    if arr.ndim != 1:
        raise DataValidationError("zscore expects a flat series")
    if arr.shape[0] < 2:
        raise DegenerateDataError("zscore needs length >= 2")
    if np.all(arr == arr[0]):
        raise DegenerateDataError("constant series cannot be z-scored")
    sd = float(arr.std(ddof=0))
    if sd == 0.0:
        raise DegenerateDataError("constant series cannot be z-scored")
    return (arr - arr.mean()) / sd


_MARGIN_AXES = {"film": 0, "pair": 1, "channel": 2}


def synchronized_percentage(
    adjusted: PTensor, margin: str, alpha: float = 0.05
) -> np.ndarray:
    """Percentage of significant cells (adjusted p < alpha) along a margin.

    For margin='channel' this collapses films and pairs per channel, etc.
    Margins with zero valid cells come back NaN (invalid-marked).
    """
    if margin not in _MARGIN_AXES:
        raise DataValidationError(
            f"margin must be one of {sorted(_MARGIN_AXES)}, got {margin!r}"
        )
    if adjusted.values.ndim != 3:
        raise DataValidationError("synchronized_percentage expects an (F, P, C) tensor")
    axis = _MARGIN_AXES[margin]
    other = tuple(a for a in range(3) if a != axis)
    hits = ((adjusted.values < alpha) & adjusted.valid).sum(axis=other)
    totals = adjusted.valid.sum(axis=other)
    out = np.full(hits.shape, np.nan)
    nonzero = totals > 0
    out[nonzero] = 100.0 * hits[nonzero] / totals[nonzero]
    return out
