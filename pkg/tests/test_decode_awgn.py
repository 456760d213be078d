import itertools
import math

import numpy as np
import pytest
from conftest import random_code
from hypothesis import given, settings
from hypothesis import strategies as st

from shortcodes import binlin
from shortcodes import codebook as cb
from shortcodes.channel import RngStream, SoftWord, awgn_transmit, bpsk_map, hard_decision
from shortcodes.decode_awgn import (
    OsdConfig,
    iter_teps,
    ml_lower_bound_check,
    osd_decode,
    prepare_mrb,
    sum_product_decode,
    tep_count,
    tep_iterate,
    whd,
)


def brute_min_whd(C, sw):
    words = cb.all_codewords(C.G)
    y = hard_decision(sw.r)
    costs = ((words != y) * sw.alpha).sum(axis=1)
    return float(costs.min())


def noisy(C, sigma, seed):
    rng = np.random.default_rng(seed)
    c = cb.encode(C, rng.integers(0, 2, C.k))
    return c, awgn_transmit(c, sigma, rng)


class TestMrb:
    def test_sorted_and_information_set(self):
        C = cb.extend_code(cb.build_bch(5, 2))
        _, sw = noisy(C, 0.8, 1)
        ctx = prepare_mrb(C, sw)
        assert np.all(np.diff(sw.alpha[ctx.pi1]) <= 0)
        np.testing.assert_array_equal(ctx.G_tilde[:, : C.k], np.eye(C.k))
        assert binlin.rank(C.G[:, ctx.positions[: C.k]]) == C.k
        # G_tilde spans the permuted code
        assert binlin.rank(np.vstack([ctx.G_tilde, C.G[:, ctx.positions]])) == C.k

    def test_dependent_reliable_columns_force_swap(self, hamming):
        n, k = hamming.n, hamming.k
        dep = next(s for s in itertools.combinations(range(n), k) if binlin.rank(hamming.G[:, list(s)]) < k)
        alpha = np.full(n, 0.1)
        alpha[list(dep)] = [4.0, 3.0, 2.0, 1.0]
        ctx = prepare_mrb(hamming, SoftWord(alpha, 1.0))
        assert np.any(ctx.pi2 != np.arange(n))
        assert binlin.rank(hamming.G[:, ctx.positions[:k]]) == k

    def test_zero_tep_reproduces_hard_decisions(self):
        C = random_code(16, 8, 3)
        _, sw = noisy(C, 1.0, 2)
        ctx = prepare_mrb(C, sw)
        c0 = binlin.matmul(ctx.y_tilde[: C.k], ctx.G_tilde)
        np.testing.assert_array_equal(c0[: C.k], ctx.y_tilde[: C.k])
        np.testing.assert_array_equal(ctx.y_tilde, hard_decision(sw.r)[ctx.positions])


class TestTeps:
    def test_counts(self):
        assert tep_count(115, 0) == 1
        assert tep_count(115, 2) == 6671
        assert tep_count(10, 10) == 1024
        assert tep_iterate(115, 2, lambda s: None) == 6671
        assert tep_iterate(8, 8, lambda s: None) == 256

    def test_order(self):
        pats = list(iter_teps(4, 2))
        assert pats[0] == ()
        assert pats[1:5] == [(0,), (1,), (2,), (3,)]
        assert pats[5:] == [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]

    def test_bad_order(self):
        with pytest.raises(ValueError):
            list(iter_teps(3, 4))
        with pytest.raises(ValueError):
            OsdConfig(order=-1)
        with pytest.raises(ValueError):
            OsdConfig(max_teps=0)


class TestWhd:
    def test_examples(self):
        y = np.array([1, 0, 1], dtype=np.uint8)
        a = np.array([0.5, 1.5, 2.0])
        assert whd(y, y, a) == 0
        assert whd([1, 1, 1], y, a) == 1.5
        with pytest.raises(ValueError):
            whd([1, 1], y, a)

    @settings(max_examples=50)
    @given(st.integers(0, 10_000))
    def test_argmin_matches_euclidean(self, seed):
        rng = np.random.default_rng(seed)
        r = rng.normal(size=12)
        cands = rng.integers(0, 2, size=(6, 12)).astype(np.uint8)
        y = hard_decision(r)
        w = [whd(c, y, np.abs(r)) for c in cands]
        e = [np.sum((r - bpsk_map(c)) ** 2) for c in cands]
        # WHD = (Euclidean - Euclidean(y)) / 4
        np.testing.assert_allclose(np.array(e) - np.sum((r - bpsk_map(y)) ** 2), 4 * np.array(w), atol=1e-9)


class TestOsd:
    def test_noiseless(self):
        C = cb.extend_code(cb.build_bch(6, 3))
        c = cb.encode(C, np.random.default_rng(0).integers(0, 2, C.k))
        out = osd_decode(C, SoftWord(bpsk_map(c), 1.0), OsdConfig(order=0))
        np.testing.assert_array_equal(out.c_hat, c)
        assert out.whd == 0 and out.teps_processed == 1

    @pytest.mark.parametrize("early_stop", [True, False])
    @pytest.mark.parametrize("sigma", [0.5, 1.0])
    def test_full_order_is_ml(self, ext_hamming, early_stop, sigma):
        for seed in range(300):
            _, sw = noisy(ext_hamming, sigma, seed)
            out = osd_decode(ext_hamming, sw, OsdConfig(order=4, early_stop=early_stop))
            assert out.whd == pytest.approx(brute_min_whd(ext_hamming, sw), abs=1e-12)
            assert cb.is_codeword(ext_hamming, out.c_hat)
            assert out.ml_certified

    @pytest.mark.parametrize("k", [6, 10])
    def test_full_order_random_codes(self, k):
        C = random_code(2 * k, k, k)
        for seed in range(100):
            _, sw = noisy(C, 0.9, seed)
            out = osd_decode(C, sw, OsdConfig(order=k))
            assert out.whd == pytest.approx(brute_min_whd(C, sw), abs=1e-12)

    def test_pruning_does_not_change_output(self):
        C = cb.extend_code(cb.build_bch(6, 3))
        for seed in range(100):
            _, sw = noisy(C, 0.75, seed)
            a = osd_decode(C, sw, OsdConfig(order=3, early_stop=True))
            b = osd_decode(C, sw, OsdConfig(order=3, early_stop=False))
            np.testing.assert_array_equal(a.c_hat, b.c_hat)
            assert a.whd == b.whd
            assert a.teps_processed <= b.teps_processed == tep_count(C.k, 3)

    def test_whd_nonincreasing_in_order(self):
        C = cb.extend_code(cb.build_bch(6, 3))
        for seed in range(50):
            _, sw = noisy(C, 0.8, seed)
            vals = [osd_decode(C, sw, OsdConfig(order=l, early_stop=False)).whd for l in range(4)]
            assert all(b <= a + 1e-12 for a, b in zip(vals, vals[1:]))

    def test_certificate_is_sound(self):
        certified = 0
        for k in (8, 12, 16):
            C = random_code(2 * k, k, 100 + k)
            for seed in range(60):
                _, sw = noisy(C, 0.6, seed)
                out = osd_decode(C, sw, OsdConfig(order=2))
                if out.ml_certified:
                    certified += 1
                    assert out.whd == pytest.approx(brute_min_whd(C, sw), abs=1e-12)
        assert certified > 0

    def test_max_teps_cap(self):
        C = cb.extend_code(cb.build_bch(6, 3))
        _, sw = noisy(C, 1.2, 0)
        out = osd_decode(C, sw, OsdConfig(order=3, max_teps=10, early_stop=False))
        assert out.teps_processed == 10
        assert not out.ml_certified
        assert cb.is_codeword(C, out.c_hat)

    def test_order_above_k_is_exhaustive(self, hamming):
        _, sw = noisy(hamming, 1.0, 5)
        out = osd_decode(hamming, sw, OsdConfig(order=9))
        assert out.whd == pytest.approx(brute_min_whd(hamming, sw))
        assert out.ml_certified

    def test_optimal_order_rule(self):
        assert math.ceil(44 / 4 - 1) == 10


class TestMlLowerBound:
    def test_examples(self, hamming):
        c_true = np.zeros(7, dtype=np.uint8)
        other = cb.encode(hamming, [1, 0, 0, 0])
        # received word sits on the other codeword: decoding to it is what ML does
        sw = SoftWord(bpsk_map(other) * 0.9, 1.0)
        out = osd_decode(hamming, sw, OsdConfig(order=0))
        assert ml_lower_bound_check(c_true, out, sw)
        # received word sits on the truth but the outcome claims the other word
        sw2 = SoftWord(bpsk_map(c_true) * 0.9, 1.0)
        fake = type(out)(other, whd(other, hard_decision(sw2.r), sw2.alpha), 1, False)
        assert not ml_lower_bound_check(c_true, fake, sw2)


class TestSumProduct:
    def test_high_snr(self):
        C = cb.build_ldpc_regular(256, 7)
        rng = np.random.default_rng(0)
        for i in range(1000):
            c = cb.encode(C, rng.integers(0, 2, C.k))
            bits, ok = sum_product_decode(C, awgn_transmit(c, 0.1, RngStream(2, i)))
            assert ok
            np.testing.assert_array_equal(bits, c)

    def test_converged_means_codeword(self):
        C = cb.build_ldpc_regular(64, 1)
        rng = np.random.default_rng(1)
        for i in range(200):
            c = cb.encode(C, rng.integers(0, 2, C.k))
            bits, ok = sum_product_decode(C, awgn_transmit(c, 0.85, RngStream(3, i)), max_iters=20)
            if ok:
                assert cb.is_codeword(C, bits)

    def test_single_check_exact_posterior(self):
        # a single parity check is a tree: one iteration gives exact marginals
        H = np.ones((1, 3), dtype=np.uint8)
        G = np.array([[1, 1, 0], [0, 1, 1]], dtype=np.uint8)
        C = cb.LinearCode(G, H, "spc3")
        r = np.array([0.3, -0.2, 0.9])
        sigma = 1.0
        bits, ok = sum_product_decode(C, SoftWord(r, sigma), max_iters=1)
        words = cb.all_codewords(G)
        like = np.exp(-((r - bpsk_map(words)) ** 2).sum(axis=1) / (2 * sigma**2))
        p1 = (like[:, None] * words).sum(axis=0) / like.sum()
        np.testing.assert_array_equal(bits, (p1 > 0.5).astype(np.uint8))

    def test_bp_no_better_than_osd(self):
        C = cb.build_ldpc_regular(64, 4)
        rng = np.random.default_rng(7)
        bp_err = osd_err = 0
        for i in range(400):
            c = cb.encode(C, rng.integers(0, 2, C.k))
            sw = awgn_transmit(c, 0.8, RngStream(4, i))
            bits, _ = sum_product_decode(C, sw)
            bp_err += bool(np.any(bits != c))
            osd_err += bool(np.any(osd_decode(C, sw, OsdConfig(order=3)).c_hat != c))
        assert bp_err >= osd_err
