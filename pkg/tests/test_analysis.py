"""Regret decomposition, bound constants, and the two inequality checks."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mpbandit.analysis import (DecompositionTerms, EpisodeCounters,
                               check_lemma2, check_lemma3, decomposition,
                               lower_bound_ours, lower_bound_report,
                               lower_bound_zhao, pseudo_regret,
                               suboptimal_draw_upper_bound)
from mpbandit.core import BanditInstance
from mpbandit.indices import kl_bernoulli

NINE = BanditInstance([0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9])


def counters(draws, colliding, T=None):
    draws = np.asarray(draws, dtype=np.int64)
    M = draws.shape[0]
    return EpisodeCounters(
        draws=draws,
        colliding_players=np.asarray(colliding, dtype=np.int64),
        switches=np.zeros(M, dtype=np.int64),
        transitions=np.zeros((M, 5), dtype=np.int64),
        cumulative_pseudo_regret=np.zeros(1),
        checkpoints=np.array([1]),
    )


class TestDecomposition:
    def test_single_player_two_rounds_by_hand(self):
        # one player, arms (0.9, 0.3), plays the bad arm twice:
        # oracle 1.8, collected 0.6, regret 1.2, all of it in term (a)
        inst = BanditInstance([0.9, 0.3])
        c = counters([[0, 2]], [0, 0])
        assert pseudo_regret(c, inst, 1) == pytest.approx(1.2)
        d = decomposition(c, inst, 1)
        assert (d.term_a, d.term_b, d.term_c) == (pytest.approx(1.2), 0.0, 0.0)

    def test_full_collision_round_by_hand(self):
        # two players, both on the 0.9 arm for the single round: oracle 1.2,
        # nothing collected; (a)=0 (no suboptimal arms when M=K), the arms'
        # draw deficit makes (b) = (0.9-0.3)(1-2) = -0.6, collisions give
        # (c) = 0.9*2 = 1.8; total 1.2
        inst = BanditInstance([0.9, 0.3])
        c = counters([[1, 0], [1, 0]], [2, 0])
        assert pseudo_regret(c, inst, 2) == pytest.approx(1.2)
        d = decomposition(c, inst, 2)
        assert d.term_a == 0.0
        assert d.term_b == pytest.approx(-0.6)
        assert d.term_c == pytest.approx(1.8)
        assert d.total == pytest.approx(1.2)

    def test_perfect_play_zero_regret(self):
        inst = BanditInstance([0.9, 0.3, 0.5])
        c = counters([[4, 0, 0], [0, 0, 4]], [0, 0, 0])
        assert pseudo_regret(c, inst, 2) == 0.0
        d = decomposition(c, inst, 2)
        assert d.total == 0.0

    @given(st.integers(min_value=0, max_value=2**32))
    @settings(max_examples=60)
    def test_identity_on_random_counters(self, seed):
        rng = np.random.default_rng(seed)
        K = int(rng.integers(2, 6))
        M = int(rng.integers(1, K + 1))
        T = int(rng.integers(1, 30))
        means = np.round(rng.permutation(np.linspace(0.05, 0.95, K)), 6)
        inst = BanditInstance(means)
        # random but feasible counters: per player, draws sum to T; per arm,
        # colliding players never 1 and never exceed the players present
        draws = rng.multinomial(T, np.full(K, 1.0 / K), size=M)
        per_arm = draws.sum(axis=0)
        colliding = np.where(per_arm >= 2,
                             rng.integers(0, 2, K) * np.minimum(per_arm, 2 + rng.integers(0, 3, K)),
                             0)
        colliding = np.where(colliding == 1, 0, np.minimum(colliding, per_arm))
        c = counters(draws, colliding)
        d = decomposition(c, inst, M)
        assert d.total == pytest.approx(pseudo_regret(c, inst, M), abs=1e-9)

    def test_horizon_property(self):
        c = counters([[2, 3], [4, 1]], [0, 0])
        assert c.horizon == 5
        assert c.players == 2


class TestLowerBounds:
    def test_frozen_nine_arm_constants(self):
        assert lower_bound_ours(NINE, 6) == 48.84353309661165
        assert lower_bound_zhao(NINE, 6) == 15.030372473468109

    def test_matches_plain_math(self):
        # independent recomputation with scalar loops
        mu = sorted(NINE.means, reverse=True)
        M = 6
        mu_m = mu[M - 1]
        worst = mu[M:]
        ours = M * sum((mu_m - m) / kl_bernoulli(m, mu_m) for m in worst)
        zhao = sum((mu_m - m) / kl_bernoulli(m, mu[j])
                   for m in worst for j in range(M))
        assert lower_bound_ours(NINE, 6) == pytest.approx(ours, rel=1e-12)
        assert lower_bound_zhao(NINE, 6) == pytest.approx(zhao, rel=1e-12)

    def test_equal_at_m_one(self):
        assert lower_bound_ours(NINE, 1) == pytest.approx(lower_bound_zhao(NINE, 1), rel=1e-12)

    def test_zero_at_m_equals_k(self):
        assert lower_bound_ours(NINE, 9) == 0.0
        assert lower_bound_zhao(NINE, 9) == 0.0

    @given(st.integers(min_value=0, max_value=2**32))
    @settings(max_examples=100)
    def test_dominance_on_random_instances(self, seed):
        rng = np.random.default_rng(seed)
        K = int(rng.integers(2, 8))
        means = rng.random(K)
        inst = BanditInstance(means)
        for M in range(1, K + 1):
            if not inst.in_p_m(M):
                continue
            ours = lower_bound_ours(inst, M)
            zhao = lower_bound_zhao(inst, M)
            assert ours >= zhao - 1e-12
            assert zhao >= 0.0

    def test_report_rates(self):
        rep = lower_bound_report(NINE, 6)
        assert rep.ours == lower_bound_ours(NINE, 6)
        assert rep.zhao == lower_bound_zhao(NINE, 6)
        assert len(rep.per_arm_draw_rate) == 6 * 3
        k01 = NINE.means.index(0.1)
        want = 1.0 / kl_bernoulli(0.1, 0.4)
        for j in range(6):
            assert rep.per_arm_draw_rate[(j, k01)] == pytest.approx(want)

    def test_boundary_means_large_but_finite(self):
        inst = BanditInstance([0.0, 0.5, 1.0])
        v = lower_bound_ours(inst, 2)
        assert math.isfinite(v) and v > 0


class TestUpperBound:
    def test_frozen(self):
        k = NINE.means.index(0.3)
        assert suboptimal_draw_upper_bound(NINE, 6, k, 5000) == 3035.861841469297

    def test_rejects_best_arm_and_tiny_horizon(self):
        k_best = NINE.means.index(0.9)
        with pytest.raises(ValueError):
            suboptimal_draw_upper_bound(NINE, 6, k_best, 5000)
        with pytest.raises(ValueError):
            suboptimal_draw_upper_bound(NINE, 6, 0, 2)

    def test_normalized_bound_descends_to_the_rate(self):
        # the bound divided by log T decreases toward 1/kl, staying above it;
        # the remainder after the dominant term is o(log T)
        k = NINE.means.index(0.3)
        rate = 1.0 / kl_bernoulli(0.3, 0.4)
        ratios = []
        remainders = []
        for T in (1e4, 1e6, 1e8, 1e10, 1e12):
            lt = math.log(T) + 3 * math.log(math.log(T))
            v = suboptimal_draw_upper_bound(NINE, 6, k, T)
            ratios.append(v / math.log(T))
            remainders.append((v - lt * rate) / math.log(T))
        assert all(r > rate for r in ratios)
        assert all(a > b for a, b in zip(ratios, ratios[1:]))
        assert all(a > b > 0 for a, b in zip(remainders, remainders[1:]))

    def test_grows_with_horizon(self):
        k = NINE.means.index(0.1)
        vals = [suboptimal_draw_upper_bound(NINE, 6, k, T) for T in (10, 100, 10_000)]
        assert vals[0] < vals[1] < vals[2]


class FakeSummary:
    def __init__(self, final_pseudo, term_a):
        self.final_pseudo = np.asarray(final_pseudo, dtype=np.float64)
        self.term_a = np.asarray(term_a, dtype=np.float64)


class TestInequalityChecks:
    def test_lemma2_holds_on_dominating_data(self):
        ok, margin = check_lemma2(FakeSummary([5.0, 6.0, 7.0], [4.0, 5.0, 6.5]))
        assert ok and margin > 0

    def test_lemma2_fails_on_clear_violation(self):
        ok, margin = check_lemma2(FakeSummary([1.0, 1.1, 0.9], [5.0, 5.2, 4.9]))
        assert not ok and margin < 0

    def test_lemma2_single_rep(self):
        ok, margin = check_lemma2(FakeSummary([2.0], [1.0]))
        assert ok and margin == 1.0

    def test_lemma3_by_hand(self):
        # two players, instance (0.9, 0.5, 0.2), M=2: the bad arm is drawn
        # 3 times and the best arms suffer 2 colliding players; the deficit
        # term is capped by (0.9-0.5) * (3 + 2) = 2.0
        inst = BanditInstance([0.9, 0.5, 0.2])
        c = counters([[3, 1, 2], [2, 3, 1]], [2, 0, 0])
        term_b = decomposition(c, inst, 2).term_b
        ok, slack = check_lemma3(c, inst, 2)
        assert ok
        assert slack == pytest.approx(0.4 * (3 + 2) - term_b)

    def test_lemma3_zero_gap_instance(self):
        # when the M best arms share a mean the cap is 0 and term (b) is 0
        inst = BanditInstance([0.7, 0.7, 0.2])
        c = counters([[3, 1, 2], [2, 3, 1]], [0, 0, 0])
        ok, slack = check_lemma3(c, inst, 2)
        assert ok
