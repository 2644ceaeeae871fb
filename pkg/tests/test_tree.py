"""Exact trajectory enumeration and trapped-state detection."""

from fractions import Fraction

import pytest

from mpbandit.tree import (Configuration, ResourceCapError, absorption_probability,
                           detect_absorbing, enumerate_tree, iter_nodes,
                           mc_absorption_frequency, tree_summary, _flavor_tag)

TWO_ARMS = [Fraction(1, 10), Fraction(9, 10)]


class TestConfiguration:
    def test_construction_and_shape(self):
        c = Configuration((((1, 2), (0, 1)), ((1, 2), (0, 1))))
        assert c.players == 2 and c.arms == 2
        assert c.round_count == 3

    def test_rejects_reward_above_pulls(self):
        with pytest.raises(ValueError):
            Configuration((((3, 2),),))
        with pytest.raises(ValueError):
            Configuration((((-1, 2),),))

    def test_initial(self):
        c = Configuration.initial(2, 3)
        assert c.stats == (((0, 0),) * 3,) * 2
        assert c.round_count == 0

    def test_value_semantics(self):
        a = Configuration((((1, 2), (0, 1)),))
        b = Configuration((((1, 2), (0, 1)),))
        assert a == b and hash(a) == hash(b)
        assert a != Configuration((((1, 2), (1, 1)),))


class TestFlavorTag:
    def test_accepts_prefixed_and_bare(self):
        assert _flavor_tag("selfish-ucb") == "ucb"
        assert _flavor_tag("klucb") == "klucb"

    def test_rejects_unknown(self):
        with pytest.raises(ValueError):
            _flavor_tag("selfish-thompson")


class TestDetectAbsorbing:
    def test_known_trapped_pair(self):
        # both players hold the same record: one success in two pulls on arm
        # 0, one failure on arm 1; their argmax streams stay identical
        c = Configuration((((1, 2), (0, 1)), ((1, 2), (0, 1))))
        assert detect_absorbing(c, "selfish-ucb")

    def test_fresh_start_not_trapped(self):
        assert not detect_absorbing(Configuration.initial(2, 2), "selfish-ucb")

    def test_distinct_histories_not_trapped(self):
        c = Configuration((((1, 2), (0, 1)), ((0, 1), (1, 2))))
        assert not detect_absorbing(c, "selfish-ucb")

    def test_single_player_never_trapped(self):
        c = Configuration((((1, 2), (0, 1)),))
        assert not detect_absorbing(c, "selfish-ucb")

    def test_tie_breaks_escape(self):
        # identical all-zero stats give all-tied indices: the argmax is not
        # unique, the players may split, so the state must not be flagged
        c = Configuration((((0, 1), (0, 1)), ((0, 1), (0, 1))))
        assert not detect_absorbing(c, "selfish-ucb")


class TestEnumerate:
    def test_depth_zero_single_root(self):
        root = enumerate_tree(2, 2, "selfish-ucb", 0, TWO_ARMS)
        assert root.probability == 1
        assert not root.children

    def test_probability_conservation(self):
        root = enumerate_tree(2, 2, "selfish-ucb", 3, TWO_ARMS)
        # exact at every expanded node
        for node in iter_nodes(root):
            if node.children:
                assert sum(ch.probability for ch in node.children) == node.probability
        # and globally: the leaves carry all the mass
        leaf_mass = sum(n.probability for n in iter_nodes(root) if not n.children)
        assert leaf_mass == Fraction(1)

    def test_frozen_exact_values(self):
        vals = {}
        for d in (1, 2, 3):
            root = enumerate_tree(2, 2, "selfish-ucb", d, TWO_ARMS)
            vals[d] = absorption_probability(root)
        assert vals[1] == 0
        assert vals[2] == Fraction(3281, 20000)
        assert vals[3] == Fraction(9843, 40000)

    def test_frozen_with_preferred_unpulled(self):
        # when never-pulled arms rank strictly first the two players explore
        # in lockstep and trap earlier: the depth-2 mass is already the
        # closed-form value 0.3281 and depth 3 adds nothing
        for d in (2, 3):
            root = enumerate_tree(2, 2, "selfish-ucb", d, TWO_ARMS,
                                  unpulled=float("inf"))
            assert absorption_probability(root) == Fraction(3281, 10000)

    def test_monotone_in_depth(self):
        last = Fraction(0)
        for d in range(4):
            root = enumerate_tree(2, 2, "selfish-ucb", d, TWO_ARMS)
            p = absorption_probability(root)
            assert p >= last
            last = p

    def test_klucb_flavor_same_trap_mass(self):
        root = enumerate_tree(2, 2, "selfish-klucb", 3, TWO_ARMS)
        assert absorption_probability(root) == Fraction(9843, 40000)

    def test_marginalized_equals_literal(self):
        a = enumerate_tree(2, 2, "selfish-ucb", 3, TWO_ARMS, marginalize=True)
        b = enumerate_tree(2, 2, "selfish-ucb", 3, TWO_ARMS, marginalize=False)
        assert absorption_probability(a) == absorption_probability(b)

    def test_rejects_bad_means(self):
        with pytest.raises(ValueError):
            enumerate_tree(2, 2, "selfish-ucb", 1, [Fraction(3, 2), Fraction(1, 2)])
        with pytest.raises(ValueError):
            enumerate_tree(2, 2, "selfish-ucb", 1, [Fraction(1, 2)])

    def test_node_cap(self):
        with pytest.raises(ResourceCapError):
            enumerate_tree(3, 2, "selfish-ucb", 4,
                           [Fraction(1, 10), Fraction(1, 2), Fraction(9, 10)],
                           node_cap=50)

    def test_summary_record(self):
        root = enumerate_tree(2, 2, "selfish-ucb", 3, TWO_ARMS)
        rec = tree_summary(root)
        assert rec["depth"] == 3
        assert rec["probability_fraction"] == "9843/40000"
        assert rec["probability_decimal"] == pytest.approx(0.246075)
        assert rec["absorbing_count"] > 0
        assert rec["node_count"] > rec["absorbing_count"]


def test_monte_carlo_agrees_with_exact():
    exact = float(Fraction(9843, 40000))
    n = 20_000
    freq = mc_absorption_frequency(2, 2, "selfish-ucb", 3, TWO_ARMS,
                                   reps=n, master_seed=987654321)
    sigma = (exact * (1 - exact) / n) ** 0.5
    assert abs(freq - exact) < 4 * sigma
