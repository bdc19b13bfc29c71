"""Statistics kernel vs independent oracles: brute-force BH step-up, full
2^n signed-rank enumeration, sign-flip permutation, quadrature t-tails."""

import itertools
import math

import numpy as np
import pytest
from scipy.integrate import quad

from eegsync.corr import WindowSpec, sliding_window_isc
from eegsync.errors import DataValidationError, DegenerateDataError
from eegsync.model import FeatureConfig, FeatureKind, FeatureSeries
from eegsync.stats import (
    PTensor,
    bh_fdr,
    bonferroni,
    one_sample_t,
    synchronized_percentage,
    wilcoxon_signed_rank,
    window_significance,
    zscore,
)


# --- oracles -------------------------------------------------------------

def oracle_bh(p):
    """Literal step-up definition: q_(i) = min_{j >= i} m p_(j) / j, capped."""
    p = list(map(float, p))
    m = len(p)
    order = sorted(range(m), key=lambda i: p[i])
    adjusted = [None] * m
    for pos, idx in enumerate(order):
        best = min(
            m * p[order[j]] / (j + 1) for j in range(pos, m)
        )
        adjusted[idx] = min(1.0, best)
    return adjusted


def oracle_ranks(values):
    """Average ranks of |values|, naive O(n^2)."""
    a = [abs(v) for v in values]
    ranks = []
    for x in a:
        less = sum(1 for y in a if y < x)
        equal = sum(1 for y in a if y == x)
        ranks.append(less + (equal + 1) / 2.0)
    return ranks


def oracle_wilcoxon_exact(values, mu0=0.0):
    """Two-sided p by enumerating all 2^n sign assignments."""
    d = [v - mu0 for v in values if v != mu0]
    n = len(d)
    ranks = oracle_ranks(d)
    total = sum(ranks)
    w_obs = sum(r for r, x in zip(ranks, d) if x > 0)
    dev = abs(w_obs - total / 2.0)
    hits = 0
    for signs in itertools.product((0, 1), repeat=n):
        w = sum(r for r, s in zip(ranks, signs) if s)
        if abs(w - total / 2.0) >= dev - 1e-12:
            hits += 1
    return hits / 2.0**n


def t_pdf(x, df):
    lognorm = (
        math.lgamma((df + 1) / 2.0)
        - math.lgamma(df / 2.0)
        - 0.5 * math.log(df * math.pi)
    )
    return math.exp(lognorm - 0.5 * (df + 1) * math.log1p(x * x / df))


# --- corrections ----------------------------------------------------------

class TestBonferroni:
    def test_direct_product(self):
        p = PTensor(np.full((10, 10, 10), 1e-8), np.ones((10, 10, 10), bool))
        out = bonferroni(p)
        assert np.allclose(out.values, 1e-5)

    def test_clamp_at_full_tensor_scale(self):
        shape = (15, 990, 62)
        values = np.full(shape, 0.001)
        out = bonferroni(PTensor(values, np.ones(shape, bool)))
        assert out.n_valid == 920_700
        assert np.all(out.values == 1.0)

    def test_m_one_identity(self):
        p = PTensor(np.array([0.031]), np.array([True]))
        assert bonferroni(p).values[0] == 0.031

    def test_only_valid_cells_count(self):
        values = np.array([0.01, 0.5, np.nan, np.nan])
        valid = np.array([True, True, False, False])
        out = bonferroni(PTensor(values, valid))
        assert out.values[0] == 0.02
        assert np.isnan(out.values[2])

    def test_monotone(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            a = rng.uniform(size=20)
            b = np.minimum(a + rng.uniform(0, 0.2, size=20), 1.0)
            valid = np.ones(20, bool)
            qa = bonferroni(PTensor(a, valid)).values
            qb = bonferroni(PTensor(b, valid)).values
            assert (qb >= qa - 1e-15).all()


class TestBhFdr:
    def test_hand_cases(self):
        assert np.allclose(bh_fdr([0.01, 0.02, 0.03, 0.04]), 0.04)
        assert np.allclose(bh_fdr([0.005, 0.1]), [0.01, 0.1])
        assert bh_fdr([0.73]) == [0.73]

    def test_against_bruteforce_1000_lists(self):
        rng = np.random.default_rng(1)
        for _ in range(1000):
            n = int(rng.integers(1, 12))
            p = np.round(rng.uniform(size=n), 3)  # rounding makes ties likely
            got = bh_fdr(p)
            want = oracle_bh(p)
            assert np.array_equal(got, np.asarray(want)), (p, got, want)

    def test_monotone_and_dominated_by_bonferroni(self):
        rng = np.random.default_rng(2)
        for _ in range(1000):
            p = rng.uniform(size=30)
            adjusted = bh_fdr(p)
            assert (adjusted >= p - 1e-15).all()
            bonf = np.minimum(p * p.size, 1.0)
            assert (adjusted <= bonf + 1e-15).all()
            q = np.minimum(p + rng.uniform(0, 0.1, size=30), 1.0)
            assert (bh_fdr(q) >= adjusted - 1e-12).all()

    def test_rejects_bad_input(self):
        with pytest.raises(DataValidationError):
            bh_fdr([0.5, 1.5])
        with pytest.raises(DataValidationError):
            bh_fdr([0.5, np.nan])


# --- wilcoxon -------------------------------------------------------------

class TestWilcoxon:
    def test_all_positive_n5(self):
        res = wilcoxon_signed_rank([1.0, 2.0, 0.5, 3.0, 1.5], 0.0)
        assert res.p_value == 2.0 / 32.0
        assert res.method == "wilcoxon-exact"
        assert res.n_effective == 5

    def test_antisymmetric_p_one(self):
        res = wilcoxon_signed_rank([-2.0, 2.0, -0.7, 0.7], 0.0)
        assert res.p_value == 1.0

    def test_exact_equals_enumeration_all_n_up_to_10(self):
        rng = np.random.default_rng(3)
        for n in range(1, 11):
            for _ in range(4):
                values = np.round(rng.normal(size=n), 1)  # ties and zeros likely
                values = values[values != 0.0]
                if values.size == 0:
                    continue
                got = wilcoxon_signed_rank(values, 0.0).p_value
                want = oracle_wilcoxon_exact(values.tolist())
                assert got == pytest.approx(want, abs=1e-12), values

    def test_normal_path_matches_permutation_oracle(self):
        rng = np.random.default_rng(4)
        values = rng.normal(0.5, 0.1, size=25)
        res = wilcoxon_signed_rank(values, 0.0)
        assert res.method == "wilcoxon-normal"
        assert res.p_value < 1e-4
        # sign-flip permutation oracle
        d = values
        ranks = np.asarray(oracle_ranks(d))
        total = ranks.sum()
        dev = abs(ranks[d > 0].sum() - total / 2.0)
        flips = rng.integers(0, 2, size=(100_000, 25))
        w = (flips * ranks).sum(axis=1)
        p_mc = float((np.abs(w - total / 2.0) >= dev - 1e-12).mean())
        se = math.sqrt(max(p_mc * (1 - p_mc), 1e-10) / 100_000) + 1.0 / 100_000
        assert abs(res.p_value - p_mc) <= max(5 * se, 5e-5)

    def test_normal_path_null_roughly_uniform(self):
        rng = np.random.default_rng(5)
        ps = []
        for _ in range(300):
            ps.append(wilcoxon_signed_rank(rng.normal(size=40), 0.0).p_value)
        assert 0.01 <= float(np.mean(np.asarray(ps) < 0.05)) <= 0.12

    def test_zeros_dropped(self):
        res = wilcoxon_signed_rank([0.0, 0.0, 1.0, 2.0, -0.5], 0.0)
        assert res.n_effective == 3

    def test_all_zero_rejected(self):
        with pytest.raises(DegenerateDataError):
            wilcoxon_signed_rank([0.3, 0.3, 0.3], 0.3)

    def test_mu0_shift(self):
        a = wilcoxon_signed_rank([1.0, 2.0, 3.0, 4.5], 2.0).p_value
        b = wilcoxon_signed_rank([-1.0, 0.0, 1.0, 2.5], 0.0).p_value
        assert a == b


# --- window significance ---------------------------------------------------

def _dyn(matrix, width_s=2.0, hop_s=1.0):
    cfg = FeatureConfig(FeatureKind.ORIGINAL, 20)
    cell = tuple(
        FeatureSeries(cfg, f"s{i:02d}", "1", "f01", "C0",
                      np.asarray(row, float), 200.0)
        for i, row in enumerate(matrix)
    )
    return sliding_window_isc(cell, WindowSpec(width_s, hop_s))


class TestWindowSignificance:
    def test_identical_records_all_significant(self):
        rng = np.random.default_rng(6)
        row = rng.normal(size=200)
        dyn = _dyn([row + rng.normal(scale=1e-6, size=200) for _ in range(10)])
        out = window_significance(dyn, alpha=0.05)
        assert out.significant.all()
        assert out.pair_r is None
        assert (out.p_adj >= out.p_raw - 1e-15).all()

    def test_null_fraction_small(self):
        rng = np.random.default_rng(7)
        dyn = _dyn(rng.normal(size=(12, 600)))
        out = window_significance(dyn, alpha=0.05)
        assert float(out.significant.mean()) <= 0.05 + 0.05

    def test_single_window_is_identity_bh(self):
        rng = np.random.default_rng(8)
        dyn = _dyn(rng.normal(size=(6, 20)), width_s=2.0, hop_s=1.0)
        assert dyn.n_windows == 1
        out = window_significance(dyn)
        assert out.p_adj[0] == out.p_raw[0]

    def test_degenerate_window_flagged_not_significant(self):
        matrix = np.random.default_rng(9).normal(size=(3, 40))
        matrix[:, :20] = 7.0  # all records flat in the first window
        out = window_significance(_dyn(matrix, width_s=1.0, hop_s=1.0))
        assert np.isnan(out.p_raw[0])
        assert not out.significant[0]

    def test_requires_pair_matrix(self):
        dyn = _dyn(np.random.default_rng(10).normal(size=(3, 60)))
        with pytest.raises(DataValidationError):
            window_significance(dyn.without_pair_matrix())


# --- t-test / zscore -------------------------------------------------------

class TestOneSampleT:
    def test_hand_case(self):
        res = one_sample_t([0.3, 0.4, 0.5, 0.6, 0.7], 0.2)
        assert res.statistic == pytest.approx(4.242640687119285, abs=1e-12)
        assert res.n_effective == 5

    def test_mean_below_threshold(self):
        res = one_sample_t([0.1, 0.15, 0.05, 0.12], 0.2)
        assert res.statistic < 0
        assert res.p_value > 0.5

    def test_p_matches_quadrature(self):
        res = one_sample_t([0.3, 0.4, 0.5, 0.6, 0.7], 0.2)
        want, err = quad(t_pdf, res.statistic, np.inf, args=(4,), epsabs=1e-13)
        assert err < 1e-10
        assert res.p_value == pytest.approx(want, abs=1e-8)

    def test_two_sided_flag(self):
        one = one_sample_t([0.3, 0.4, 0.5, 0.6, 0.7], 0.2, alternative="greater")
        two = one_sample_t([0.3, 0.4, 0.5, 0.6, 0.7], 0.2, alternative="two-sided")
        assert two.p_value == pytest.approx(2 * one.p_value, abs=1e-12)

    def test_degenerate(self):
        with pytest.raises(DegenerateDataError):
            one_sample_t([0.2, 0.2, 0.2], 0.2)
        with pytest.raises(DegenerateDataError):
            one_sample_t([0.2], 0.2)


class TestZscore:
    def test_hand_case(self):
        got = zscore([1.0, 2.0, 3.0])
        want = np.array([-1.224744871391589, 0.0, 1.224744871391589])
        assert np.abs(got - want).max() < 1e-12

    def test_output_moments(self):
        rng = np.random.default_rng(11)
        z = zscore(rng.uniform(size=1000))
        assert abs(z.mean()) < 1e-12
        assert abs(z.std(ddof=0) - 1.0) < 1e-12

    def test_idempotent(self):
        rng = np.random.default_rng(12)
        z = zscore(rng.normal(size=100))
        assert np.abs(zscore(z) - z).max() < 1e-12

    def test_affine_equivariance(self):
        rng = np.random.default_rng(13)
        x = rng.normal(size=50)
        z = zscore(x)
        for a, b in [(2.0, 3.0), (-1.5, 7.0)]:
            got = zscore(a * x + b)
            assert np.abs(got - math.copysign(1.0, a) * z).max() < 1e-9

    def test_constant_rejected(self):
        with pytest.raises(DegenerateDataError):
            zscore([4.0, 4.0, 4.0])


# --- synchronized percentage ------------------------------------------------

class TestSynchronizedPercentage:
    def test_extremes(self):
        shape = (2, 3, 4)
        all_sig = PTensor(np.full(shape, 1e-9), np.ones(shape, bool))
        none_sig = PTensor(np.full(shape, 0.9), np.ones(shape, bool))
        for margin, size in (("film", 2), ("pair", 3), ("channel", 4)):
            assert np.allclose(synchronized_percentage(all_sig, margin), 100.0)
            assert np.allclose(synchronized_percentage(none_sig, margin), 0.0)
            assert synchronized_percentage(all_sig, margin).shape == (size,)

    def test_matches_bruteforce_counting(self):
        rng = np.random.default_rng(14)
        shape = (3, 4, 5)
        values = rng.uniform(size=shape)
        valid = rng.uniform(size=shape) > 0.2
        pt = PTensor(values, valid)
        for margin, axis in (("film", 0), ("pair", 1), ("channel", 2)):
            got = synchronized_percentage(pt, margin, alpha=0.3)
            for idx in range(shape[axis]):
                hits = total = 0
                for f in range(shape[0]):
                    for p in range(shape[1]):
                        for c in range(shape[2]):
                            if (f, p, c)[axis] != idx or not valid[f, p, c]:
                                continue
                            total += 1
                            hits += values[f, p, c] < 0.3
                want = 100.0 * hits / total if total else float("nan")
                if math.isnan(want):
                    assert math.isnan(got[idx])
                else:
                    assert got[idx] == want

    def test_empty_margin_invalid(self):
        values = np.full((2, 2, 2), 0.01)
        valid = np.ones((2, 2, 2), bool)
        valid[:, :, 0] = False
        out = synchronized_percentage(PTensor(values, valid), "channel")
        assert math.isnan(out[0]) and out[1] == 100.0

    def test_permutation_equivariance(self):
        rng = np.random.default_rng(15)
        shape = (3, 5, 4)
        values = rng.uniform(size=shape)
        pt = PTensor(values, np.ones(shape, bool))
        base = synchronized_percentage(pt, "channel")
        perm = rng.permutation(5)
        shuffled = PTensor(values[:, perm, :], np.ones(shape, bool))
        assert np.allclose(synchronized_percentage(shuffled, "channel"), base)

    def test_alpha_zero(self):
        pt = PTensor(np.full((2, 2, 2), 1e-12), np.ones((2, 2, 2), bool))
        assert np.allclose(synchronized_percentage(pt, "film", alpha=0.0), 0.0)
