import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pilotsched import phy
from pilotsched.engine import SimConfig, place_users
from pilotsched.errors import ConfigError


@pytest.fixture
def budget():
    return SimConfig().link_budget()


class TestPathGain:
    def test_reference_distance(self):
        g = phy.path_gain((1000.0, 0.0), (0.0, 0.0), 0.0)
        assert g.beta == pytest.approx(10 ** -14.81, rel=1e-12)
        assert g.distance_m == 1000.0

    def test_hundred_metres(self):
        assert phy.pathloss_db(100.0) == pytest.approx(-110.5, abs=1e-12)

    def test_shadowing_ten_db_is_factor_ten(self):
        a = phy.path_gain((30.0, 40.0), (0.0, 0.0), 0.0)
        b = phy.path_gain((30.0, 40.0), (0.0, 0.0), 10.0)
        assert b.beta / a.beta == pytest.approx(10.0, rel=1e-12)

    def test_min_distance_clamp(self):
        near = phy.path_gain((1.0, 0.0), (0.0, 0.0), 0.0)
        assert near.distance_m == 10.0
        assert near.beta == phy.path_gain((10.0, 0.0), (0.0, 0.0), 0.0).beta

    def test_non_finite_position_rejected(self):
        with pytest.raises(ConfigError):
            phy.path_gain((math.nan, 0.0), (0.0, 0.0), 0.0)

    @given(st.floats(10, 2000), st.floats(0, 500), st.floats(-30, 30))
    def test_beta_non_increasing_in_distance(self, d, extra, shadow):
        near = phy.path_gain((d, 0.0), (0.0, 0.0), shadow)
        far = phy.path_gain((d + extra, 0.0), (0.0, 0.0), shadow)
        assert far.beta <= near.beta
        assert near.beta == 10 ** ((phy.pathloss_db(d) + shadow) / 10)

    def test_vectorised_matches_scalar(self):
        rng = np.random.default_rng(3)
        pos = rng.uniform(0, 250, size=(20, 2))
        shadow = rng.normal(0, 10, size=20)
        vec = phy.path_gains(pos, (125.0, 125.0), shadow)
        for i in range(20):
            assert vec[i] == pytest.approx(phy.path_gain(pos[i], (125.0, 125.0), shadow[i]).beta,
                                           rel=1e-12)

    def test_noise_power(self):
        # -174 dBm/Hz + 73.01 dB + 7 dB
        assert 10 * math.log10(phy.noise_power_w(20e6)) + 30 == pytest.approx(-93.9897, abs=1e-3)


class TestHardeningRate:
    def test_zero_gain_zero_rate(self, budget):
        assert phy.hardening_rate(0.0, 3, budget) == 0.0

    def test_unit_sinr(self, budget):
        k = 4
        beta = budget.sigma2_w * k / (budget.p_tot_w * (budget.m_antennas - k))
        assert phy.hardening_rate(beta, k, budget) == pytest.approx(
            budget.slot_s * budget.bandwidth_hz * budget.gamma, rel=1e-12)
        assert budget.bits_per_slot_hz == pytest.approx(16000.0)

    @given(st.floats(1e-16, 1e-8), st.integers(1, 9))
    def test_decreasing_in_k(self, beta, k):
        budget = SimConfig().link_budget()
        uncapped = dataclasses.replace(budget, r_max_bits=math.inf)
        assert phy.hardening_rate(beta, k + 1, uncapped) < phy.hardening_rate(beta, k, uncapped)

    @given(st.floats(1e-16, 1e-9), st.floats(1.01, 100))
    def test_increasing_in_beta(self, beta, factor):
        budget = dataclasses.replace(SimConfig().link_budget(), r_max_bits=math.inf)
        assert phy.hardening_rate(beta * factor, 5, budget) > phy.hardening_rate(beta, 5, budget)

    def test_k_at_least_m_rejected(self, budget):
        with pytest.raises(ConfigError):
            phy.hardening_rate(1e-12, budget.m_antennas, budget)

    def test_deterministic_and_capped(self, budget):
        betas = np.logspace(-16, -4, 50)
        a = phy.hardening_rate(betas, 2, budget)
        b = phy.hardening_rate(betas, 2, budget)
        assert np.array_equal(a, b)
        assert np.all(a >= 0) and np.all(a <= budget.r_max_bits)
        assert a[-1] == budget.r_max_bits

    def test_rate_cap_is_min_distance_single_user(self, budget):
        beta = 10 ** (phy.pathloss_db(10.0) / 10)
        sinr = budget.p_tot_w * (budget.m_antennas - 1) * beta / budget.sigma2_w
        assert budget.r_max_bits == pytest.approx(16000.0 * math.log2(1 + sinr), rel=1e-12)

    def test_rate_table_rows(self, budget):
        betas = np.array([1e-12, 1e-10, 1e-11])
        table = phy.rate_table(betas, 4, budget)
        assert table.shape == (4, 3)
        for k in range(1, 5):
            assert np.array_equal(table[k - 1], phy.hardening_rate(betas, k, budget))


class TestSmallScale:
    def test_zero_gains_zero_matrix(self):
        h = phy.draw_small_scale(8, [0.0, 0.0], np.random.default_rng(0))
        assert h.shape == (8, 2) and not np.any(h)

    def test_mean_square_matches_beta(self):
        h = phy.draw_small_scale(10_000, [2.5e-11], np.random.default_rng(1))
        assert np.mean(np.abs(h) ** 2) == pytest.approx(2.5e-11, rel=0.05)

    def test_seed_determinism(self):
        a = phy.draw_small_scale(4, [1.0, 2.0], np.random.default_rng(7))
        b = phy.draw_small_scale(4, [1.0, 2.0], np.random.default_rng(7))
        c = phy.draw_small_scale(4, [1.0, 2.0], np.random.default_rng(8))
        assert np.array_equal(a, b)
        assert not np.array_equal(a, c)


class TestMmse:
    def test_single_user_is_matched_filter(self):
        h = phy.draw_small_scale(16, [1.0], np.random.default_rng(2))
        w = phy.mmse_precoders(h, 1.0, 0.1)
        np.testing.assert_allclose(w[:, 0], h[:, 0] / np.linalg.norm(h[:, 0]), atol=1e-14)

    def test_orthogonal_columns(self):
        h = np.zeros((4, 2), dtype=complex)
        h[0, 0] = 2.0
        h[2, 1] = 1j
        w = phy.mmse_precoders(h, 1.0, 1e-12)
        np.testing.assert_allclose(np.abs(w[0, 0]), 1.0)
        np.testing.assert_allclose(np.abs(w[2, 1]), 1.0)
        assert abs(h[:, 0].conj() @ w[:, 1]) == 0.0
        assert abs(h[:, 1].conj() @ w[:, 0]) == 0.0

    def test_unit_norm_random_instance(self):
        h = phy.draw_small_scale(8, [1.0, 0.3, 2.0], np.random.default_rng(4))
        w = phy.mmse_precoders(h, 1 / 3, 0.05)
        np.testing.assert_allclose(np.linalg.norm(w, axis=0), 1.0, atol=1e-12)

    def test_rank_deficient_stays_finite(self):
        col = phy.draw_small_scale(6, [1.0], np.random.default_rng(5))
        h = np.hstack([col, col])
        w = phy.mmse_precoders(h, 0.5, 0.01)
        assert np.all(np.isfinite(w))


class TestRealizedRates:
    def test_single_user_no_interference(self, budget):
        h = phy.draw_small_scale(64, [1e-11], np.random.default_rng(6))
        w = phy.mmse_precoders(h, budget.p_tot_w, budget.sigma2_w)
        sinr = phy.realized_sinr(h, w, budget)
        expected = budget.p_tot_w * abs(h[:, 0].conj() @ w[:, 0]) ** 2 / budget.sigma2_w
        assert sinr[0] == pytest.approx(expected, rel=1e-12)

    def test_zero_channel_user_gets_zero(self, budget):
        h = phy.draw_small_scale(64, [1e-11, 0.0, 3e-12], np.random.default_rng(7))
        w = phy.mmse_precoders(h, budget.p_tot_w / 3, budget.sigma2_w)
        rates = phy.realized_rates(h, w, budget)
        assert rates[1] == 0.0 and rates[0] > 0

    def test_interference_never_helps(self, budget):
        rng = np.random.default_rng(8)
        for _ in range(50):
            betas = 10 ** rng.uniform(-13, -9, size=5)
            h = phy.draw_small_scale(64, betas, rng)
            w = phy.mmse_precoders(h, budget.p_tot_w / 5, budget.sigma2_w)
            with_i = phy.realized_rates(h, w, budget)
            without = phy.realized_rates(h, w, budget, interference=False)
            assert np.all(without >= with_i)
            assert np.all(with_i >= 0) and np.all(with_i <= budget.r_max_bits)

    def test_hardening_consistency_m64_k10(self):
        # frozen from the Monte-Carlo calibration: median gap 0.018-0.024 over five drops
        cfg = SimConfig(rng_seed=11)
        rng = np.random.default_rng(11)
        drop = place_users(cfg, rng)
        betas = drop.betas[rng.choice(cfg.n_users, 10, replace=False)]
        budget = cfg.link_budget()
        hard = phy.hardening_rate(betas, 10, budget)
        gaps = []
        for _ in range(200):
            h = phy.draw_small_scale(64, betas, rng)
            w = phy.mmse_precoders(h, budget.p_tot_w / 10, budget.sigma2_w)
            gaps.append(np.abs(phy.realized_rates(h, w, budget) - hard) / hard)
        assert np.median(gaps) < 0.05

    def test_hardening_trend_in_antennas(self):
        rng = np.random.default_rng(12)
        betas = 10 ** rng.uniform(-12.5, -10, size=4)
        cvs = []
        for m in (16, 64, 256):
            budget = dataclasses.replace(SimConfig(m_antennas=m).link_budget(), r_max_bits=math.inf)
            draws = []
            for _ in range(200):
                h = phy.draw_small_scale(m, betas, rng)
                w = phy.mmse_precoders(h, budget.p_tot_w / 4, budget.sigma2_w)
                draws.append(phy.realized_rates(h, w, budget))
            draws = np.array(draws)
            cvs.append(float(np.mean(draws.std(axis=0) / draws.mean(axis=0))))
        assert cvs[0] > cvs[1] > cvs[2]
