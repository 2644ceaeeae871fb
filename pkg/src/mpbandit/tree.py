"""Exact enumeration of joint self-play trajectories for identical
index-following players.

Some joint statistics states trap players that share the same history: both
compute the same argmax, collide, receive zero, and stay identical, so they
collide forever. This module enumerates every joint trajectory up to a small
depth with exact rational probabilities, flags those trapped states, and
lower-bounds the probability of reaching one.

Probabilities are fractions.Fraction throughout; index comparisons use the
same float arithmetic as the simulator, with ties meaning exact float
equality, so the enumeration branches exactly where the simulator
randomizes.
"""

from fractions import Fraction
import itertools

import numpy as np

from . import engine
from .indices import exploration_f, klucb_index, ucb_index


class ResourceCapError(RuntimeError):
    """Enumeration would exceed the configured node budget."""


def _flavor_tag(flavor):
    f = str(flavor).lower()
    if f.startswith("selfish-"):
        f = f[len("selfish-"):]
    if f not in ("ucb", "klucb"):
        raise ValueError("unknown index flavor %r" % (flavor,))
    return f


class Configuration:
    """Per-player per-arm (reward_sum, pulls) integer pairs."""

    __slots__ = ("stats",)

    def __init__(self, stats):
        clean = []
        for player in stats:
            row = []
            for s, t in player:
                s, t = int(s), int(t)
                if not (0 <= s <= t):
                    raise ValueError("reward sum %d outside [0, pulls=%d]" % (s, t))
                row.append((s, t))
            clean.append(tuple(row))
        self.stats = tuple(clean)

    @classmethod
    def initial(cls, M, K):
        return cls(tuple(tuple((0, 0) for _ in range(K)) for _ in range(M)))

    @property
    def players(self):
        return len(self.stats)

    @property
    def arms(self):
        return len(self.stats[0])

    @property
    def round_count(self):
        """Rounds played so far; every player pulls once per round."""
        return sum(t for _, t in self.stats[0])

    def __eq__(self, other):
        return isinstance(other, Configuration) and self.stats == other.stats

    def __hash__(self):
        return hash(self.stats)

    def __repr__(self):
        return "Configuration(%r)" % (self.stats,)


class TreeNode:
    __slots__ = ("config", "probability", "depth", "absorbing", "children")

    def __init__(self, config, probability, depth):
        self.config = config
        self.probability = probability
        self.depth = depth
        self.absorbing = False
        self.children = []

    def __repr__(self):
        return "TreeNode(depth=%d, p=%s, absorbing=%r)" % (
            self.depth, self.probability, self.absorbing)


def _player_index_vector(player_stats, t, flavor, unpulled, tol):
    """Index vector from one player's (reward_sum, pulls) pairs, float."""
    pulls = np.array([p for _, p in player_stats], dtype=np.float64)
    means = np.array([s / p if p else 0.0 for s, p in player_stats], dtype=np.float64)
    ft = exploration_f(max(t, 1))
    if flavor == "ucb":
        return ucb_index(means, pulls, ft, unpulled=unpulled)
    return klucb_index(means, pulls, ft, tol=tol, unpulled=unpulled)


def _argmax_set(idx):
    return [int(k) for k in np.flatnonzero(idx == idx.max())]


def detect_absorbing(config, flavor, horizon_check=50, unpulled=1.0, tol=1e-6):
    """True iff some pair of players with identical statistics is trapped.

    Trapped means: the shared index vector has a unique argmax now, and
    keeps one at every step while the pair deterministically collides on it
    (pulls grow, reward sums freeze) for horizon_check steps. The argmax is
    allowed to move between arms; only its uniqueness matters, since the
    pair moves together either way.
    """
    flavor = _flavor_tag(flavor)
    t = config.round_count
    seen = set()
    for i in range(config.players):
        for j in range(i + 1, config.players):
            pair = config.stats[i]
            if config.stats[j] != pair or pair in seen:
                continue
            seen.add(pair)
            vec = list(pair)
            trapped = True
            for s in range(horizon_check):
                idx = _player_index_vector(vec, t + s, flavor, unpulled, tol)
                am = _argmax_set(idx)
                if len(am) != 1:
                    trapped = False
                    break
                k = am[0]
                vec[k] = (vec[k][0], vec[k][1] + 1)
            if trapped:
                return True
    return False


def enumerate_tree(K, M, flavor, depth, means, unpulled=1.0, tol=1e-6,
                   horizon_check=50, node_cap=10_000_000, marginalize=True):
    """Complete joint game tree to the given depth.

    means: rationals (Fraction or parseable by Fraction) in [0, 1].
    Branches per round: every player's argmax choice (uniform 1/n over exact
    float ties; uniform 1/K at the very first round) crossed with every
    reward outcome. With marginalize on, arms nobody pulled keep their draw
    summed out, which leaves every reach probability identical and the tree
    smaller; turn it off to enumerate all 2^K outcomes literally.

    Raises ResourceCapError beyond node_cap nodes.
    """
    flavor = _flavor_tag(flavor)
    mu = [Fraction(m) for m in means]
    if len(mu) != K:
        raise ValueError("expected %d arm means, got %d" % (K, len(mu)))
    for m in mu:
        if not (0 <= m <= 1):
            raise ValueError("arm mean %s outside [0, 1]" % (m,))
    if not (1 <= M):
        raise ValueError("need at least one player")

    root = TreeNode(Configuration.initial(M, K), Fraction(1), 0)
    root.absorbing = detect_absorbing(root.config, flavor, horizon_check, unpulled, tol)
    node_count = 1
    stack = [root]
    while stack:
        node = stack.pop()
        if node.absorbing or node.depth >= depth:
            continue
        cfg = node.config
        t = cfg.round_count
        per_player = []
        for j in range(M):
            if t == 0:
                per_player.append([(a, Fraction(1, K)) for a in range(K)])
            else:
                idx = _player_index_vector(cfg.stats[j], t, flavor, unpulled, tol)
                am = _argmax_set(idx)
                per_player.append([(a, Fraction(1, len(am))) for a in am])
        for joint in itertools.product(*per_player):
            actions = [a for a, _ in joint]
            p_act = Fraction(1)
            for _, p in joint:
                p_act *= p
            occupancy = [0] * K
            for a in actions:
                occupancy[a] += 1
            outcome_arms = sorted(set(actions)) if marginalize else list(range(K))
            for bits in itertools.product((0, 1), repeat=len(outcome_arms)):
                p_out = Fraction(1)
                for arm, y in zip(outcome_arms, bits):
                    p_out *= mu[arm] if y else (1 - mu[arm])
                if p_out == 0:
                    continue
                draw = dict(zip(outcome_arms, bits))
                new_stats = []
                for j in range(M):
                    a = actions[j]
                    row = list(cfg.stats[j])
                    s, p = row[a]
                    gain = draw.get(a, 0) if occupancy[a] == 1 else 0
                    row[a] = (s + gain, p + 1)
                    new_stats.append(tuple(row))
                child = TreeNode(Configuration(tuple(new_stats)),
                                 node.probability * p_act * p_out,
                                 node.depth + 1)
                node_count += 1
                if node_count > node_cap:
                    raise ResourceCapError(
                        "enumeration exceeds %d nodes; reduce depth or arms"
                        % node_cap)
                child.absorbing = detect_absorbing(
                    child.config, flavor, horizon_check, unpulled, tol)
                node.children.append(child)
                stack.append(child)
    return root


def iter_nodes(root):
    stack = [root]
    while stack:
        node = stack.pop()
        yield node
        stack.extend(node.children)


def absorption_probability(root):
    """Exact total mass on trapped leaves; a lower bound on the chance of
    entering a trapped trajectory by the enumerated depth."""
    total = Fraction(0)
    for node in iter_nodes(root):
        if node.absorbing:
            total += node.probability
    return total


def tree_summary(root):
    nodes = list(iter_nodes(root))
    prob = absorption_probability(root)
    return {
        "depth": max(n.depth for n in nodes),
        "node_count": len(nodes),
        "absorbing_count": sum(1 for n in nodes if n.absorbing),
        "probability_fraction": "%d/%d" % (prob.numerator, prob.denominator),
        "probability_decimal": float(prob),
    }


def mc_absorption_frequency(K, M, flavor, depth, means, reps, master_seed,
                            unpulled=1.0, tol=1e-6, horizon_check=50):
    """Empirical frequency of hitting a trapped state within `depth` rounds.

    Simulates the same self-play policy on the same instance and checks each
    repetition's statistics after every round. Distinct configurations per
    round are few, so detection runs once per distinct state.
    """
    flavor = _flavor_tag(flavor)
    mu = np.array([float(Fraction(m)) for m in means])
    R = int(reps)
    hit = np.zeros(R, dtype=bool)
    MK = M * K
    cache = {}

    def hook(t, reward_sum, draws):
        flat = np.concatenate([reward_sum.reshape(R, -1), draws.reshape(R, -1)],
                              axis=1)
        uniq, inv = np.unique(flat, axis=0, return_inverse=True)
        trapped = np.zeros(len(uniq), dtype=bool)
        for i, row in enumerate(uniq):
            key = tuple(row)
            val = cache.get(key)
            if val is None:
                s = row[:MK].reshape(M, K)
                d = row[MK:].reshape(M, K)
                cfg = Configuration(tuple(
                    tuple((int(s[j, k]), int(d[j, k])) for k in range(K))
                    for j in range(M)))
                val = detect_absorbing(cfg, flavor, horizon_check, unpulled, tol)
                cache[key] = val
            trapped[i] = val
        hit[:] |= trapped[inv]

    engine.run_batch(master_seed, np.arange(R, dtype=np.uint64), mu, M=M,
                     T=depth, model="I", policy_tag="selfish", flavor=flavor,
                     tol=tol, unpulled=unpulled, trace_hook=hook)
    return float(hit.mean())
