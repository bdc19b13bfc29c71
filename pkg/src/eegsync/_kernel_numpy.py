"""Pure-numpy sliding-window pairwise correlation kernel.

Fallback used when the compiled extension is unavailable. Semantics are
identical to the Cython kernel:

- two-pass per-window centering,
- a pair is degenerate in a window iff its values there are all equal
  (sample variance exactly zero) -> NaN, never a fabricated 0,
- the pair average runs over valid pairs in canonical (i<j) order with
  exactly-rounded summation (math.fsum), so results do not depend on
  scheduling.
"""

from __future__ import annotations

import math

import numpy as np


def windowed_pair_corr(v: np.ndarray, width: int, hop: int):
    """Pairwise Pearson r over sliding windows for all record pairs.

    v: (M, L) float64 matrix, one row per record.
    Returns (mean_r (K,), n_valid (K,) int64, pair_r (K, P)) with
    K = (L - width)//hop + 1 windows and P = M(M-1)/2 pairs in canonical
    lexicographic order. Degenerate pairs are NaN.
    """
    v = np.ascontiguousarray(v, dtype=np.float64)
    if v.ndim != 2:
        raise ValueError("v must be 2-D (records x points)")
    m, length = v.shape
    if m < 2:
        raise ValueError(f"need at least 2 records, got {m}")
    if not (2 <= width <= length):
        raise ValueError(f"width {width} out of range for series length {length}")
    if hop < 1:
        raise ValueError(f"hop must be >= 1, got {hop}")
    n_windows = (length - width) // hop + 1
    n_pairs = m * (m - 1) // 2
    iu, ju = np.triu_indices(m, 1)

    mean_r = np.empty(n_windows)
    n_valid = np.empty(n_windows, dtype=np.int64)
    pair_r = np.empty((n_windows, n_pairs))

    for k in range(n_windows):
        t0 = k * hop
        w = v[:, t0 : t0 + width]
        centered = w - w.mean(axis=1, keepdims=True)
        ss = np.einsum("ij,ij->i", centered, centered)
        degenerate = np.all(w == w[:, :1], axis=1) | (ss <= 0.0)
        sd = np.sqrt(ss)
        cov = centered @ centered.T
        r = cov[iu, ju]
        denom = sd[iu] * sd[ju]
        bad = degenerate[iu] | degenerate[ju]
        with np.errstate(invalid="ignore", divide="ignore"):
            r = np.where(bad, np.nan, r / np.where(bad, 1.0, denom))
        np.clip(r, -1.0, 1.0, out=r)
        pair_r[k] = r
        valid = ~bad
        cnt = int(valid.sum())
        n_valid[k] = cnt
        mean_r[k] = math.fsum(r[valid].tolist()) / cnt if cnt else np.nan

    return mean_r, n_valid, pair_r
