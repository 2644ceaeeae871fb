"""Decentralized per-player decision rules and the centralized baseline.

Each step function sees one player's own censored observation history and
private randomness only. A step consumes a fixed block of uniforms from the
player's stream (see rng.round_stride) whether or not every value is used,
which keeps reference and vectorized executions aligned.

Step functions are called at the end of round t (t = 1..T-1) with the round-t
observation and return the arm for round t+1, chosen from indices g(t).
"""

import numpy as np

from . import rng as rngmod
from .indices import (ArmStatistics, exploration_f, klucb_index, ucb_index,
                      UNPULLED_INDEX)

POLICY_TAGS = ("rhorand", "randtopm", "mctopm", "selfish", "musicalchairs", "centralized")


class PlayerState:
    """Mutable per-player algorithm state."""

    def __init__(self, policy_tag, K, M, flavor="klucb", selfish=False, tol=1e-6,
                 unpulled=UNPULLED_INDEX, f_variant="theory",
                 collision_switch_in_topm=False, T0=0):
        self.policy_tag = policy_tag
        self.K = K
        self.M = M
        self.flavor = flavor
        self.selfish = selfish
        self.tol = tol
        self.unpulled = unpulled
        self.f_variant = f_variant
        self.collision_switch_in_topm = collision_switch_in_topm
        self.T0 = T0
        self.stats = [ArmStatistics() for _ in range(K)]
        self.current_arm = None
        self.chair = False
        self.rank = None
        self.prev_indices = np.full(K, float(unpulled))
        self.mc_phase = "explore"
        self.mc_top_set = None
        self.transition_counts = {1: 0, 2: 0, 3: 0, 4: 0, 5: 0}
        self.switch_count = 0
        self.fallback_count = 0
        self.step_count = 0


class TopMSet:
    """The M arms with the largest indices, with the values they came from."""

    def __init__(self, arms, index_values):
        self.arms = frozenset(arms)
        self.index_values = tuple(index_values)
        if len(self.arms) != len(arms):
            raise ValueError("TopMSet arms must be distinct")


def _sorted_order(indices, keys):
    """Arms by decreasing index; ties in uniformly random order via keys."""
    K = len(indices)
    return sorted(range(K), key=lambda k: (-indices[k], -keys[k]))


def top_m(indices, M, rng=None, keys=None):
    """TopM set of the index vector; boundary ties broken uniformly at random."""
    K = len(indices)
    if M > K:
        raise ValueError("M=%d exceeds number of arms K=%d" % (M, K))
    if keys is None:
        keys = rng.uniforms(K)
    order = _sorted_order(indices, keys)
    return TopMSet(order[:M], indices)


def _uniform_choice(arms, u):
    """Uniform element of a non-empty arm collection, driven by one uniform."""
    pool = sorted(arms)
    return pool[min(int(u * len(pool)), len(pool) - 1)]


def _collided_view(obs):
    """Collision bit as the policy sees it; a censored bit reads as False."""
    return bool(obs.collided) if obs.collided is not None else False


def _round_draws(state, rng):
    d = rng.uniforms(rngmod.round_stride(state.K))
    return d[rngmod.SLOT_CHOICE], d[rngmod.SLOT_RANK], d[rngmod.SLOTS_FIXED:]


def _indices_now(state, t):
    """Index vector g(t) from the player's own statistics."""
    pulls = np.array([s.pulls for s in state.stats], dtype=np.float64)
    if state.selfish:
        num = np.array([s.reward_sum for s in state.stats], dtype=np.float64)
    else:
        num = np.array([s.sensing_sum if s.sensing_sum is not None else 0 for s in state.stats],
                       dtype=np.float64)
        if any(s.sensing_sum is None and s.pulls > 0 for s in state.stats):
            raise ValueError("sensing statistics unavailable under this observation model")
    mean = np.divide(num, pulls, out=np.zeros_like(pulls), where=pulls > 0)
    ft = exploration_f(max(t, 1), state.f_variant)
    if state.flavor == "ucb":
        return ucb_index(mean, pulls, ft, unpulled=state.unpulled)
    return klucb_index(mean, pulls, ft, tol=state.tol, unpulled=state.unpulled)


def _commit(state, arm, indices):
    state.step_count += 1
    if arm != state.current_arm:
        state.switch_count += 1
    state.prev_indices = np.asarray(indices, dtype=np.float64)
    state.current_arm = arm


def init_player_state(policy_tag, K, M, rng, **kwargs):
    """Round-1 initialization: uniform random arm, rank uniform in {1..M}."""
    state = PlayerState(policy_tag, K, M, **kwargs)
    choice_u, rank_u, keys = _round_draws(state, rng)
    state.rank = 1 + min(int(rank_u * M), M - 1)
    if policy_tag == "musicalchairs" and state.T0 == 0:
        # degenerate config: seat search starts immediately from empty
        # statistics, all-tied means, random top-M via the keys
        order = _sorted_order([0.0] * K, keys)
        state.mc_top_set = frozenset(order[:M])
        state.mc_phase = "seek"
        state.current_arm = _uniform_choice(state.mc_top_set, choice_u)
    else:
        state.current_arm = min(int(choice_u * K), K - 1)
    return state


def rho_rand_step(state, obs, t, M, rng):
    """Rank-randomized index policy: target the R-th largest index."""
    choice_u, rank_u, keys = _round_draws(state, rng)
    state.stats[obs.arm].update(obs)
    if _collided_view(obs):
        state.rank = 1 + min(int(rank_u * M), M - 1)
    idx = _indices_now(state, t)
    order = _sorted_order(idx, keys)
    arm = order[state.rank - 1]
    _commit(state, arm, idx)
    return arm


def rand_topm_step(state, obs, t, M, rng):
    """Stay while the arm remains in TopM; resample inside TopM otherwise.

    Collisions force a resample only when the arm also left TopM, unless the
    collision_switch_in_topm variant is enabled.
    """
    choice_u, rank_u, keys = _round_draws(state, rng)
    state.stats[obs.arm].update(obs)
    idx = _indices_now(state, t)
    order = _sorted_order(idx, keys)
    topm = frozenset(order[:M])
    cur = obs.arm
    if cur not in topm:
        if _collided_view(obs):
            arm = _uniform_choice(topm, choice_u)
        else:
            cand = [k for k in topm if state.prev_indices[k] <= state.prev_indices[cur]]
            if not cand:
                cand = topm
                state.fallback_count += 1
            arm = _uniform_choice(cand, choice_u)
    elif state.collision_switch_in_topm and _collided_view(obs):
        arm = _uniform_choice(topm, choice_u)
    else:
        arm = cur
    _commit(state, arm, idx)
    return arm


def mctopm_step(state, obs, t, M, rng):
    """Musical-chairs-on-TopM step; returns (arm, transition label 1..5).

    (i) arm left TopM: move to a TopM arm whose previous index was not above
        the abandoned arm's, unchair; label 3 (was unchaired) or 5 (chaired).
    (ii) collided while not chaired: uniform resample inside TopM; label 2.
    (iii) otherwise stay and become or remain chaired; label 1 or 4.
    """
    choice_u, rank_u, keys = _round_draws(state, rng)
    state.stats[obs.arm].update(obs)
    idx = _indices_now(state, t)
    order = _sorted_order(idx, keys)
    topm = frozenset(order[:M])
    cur = obs.arm
    chair_was = state.chair
    if cur not in topm:
        cand = [k for k in topm if state.prev_indices[k] <= state.prev_indices[cur]]
        if not cand:
            cand = topm
            state.fallback_count += 1
        arm = _uniform_choice(cand, choice_u)
        state.chair = False
        label = 5 if chair_was else 3
    elif _collided_view(obs) and not chair_was:
        arm = _uniform_choice(topm, choice_u)
        label = 2
    else:
        arm = cur
        state.chair = True
        label = 4 if chair_was else 1
    state.transition_counts[label] += 1
    _commit(state, arm, idx)
    return arm, label


def selfish_step(state, obs, t, flavor, rng):
    """Argmax of the collision-censored index; needs no sensing and no M."""
    choice_u, rank_u, keys = _round_draws(state, rng)
    state.stats[obs.arm].update(obs)
    idx = _indices_now(state, t)
    arm = _sorted_order(idx, keys)[0]
    _commit(state, arm, idx)
    return arm


def musical_chair_step(state, obs, t, M, T0, rng):
    """Uniform exploration for T0 rounds, then seat on the empirical top-M."""
    choice_u, rank_u, keys = _round_draws(state, rng)
    state.stats[obs.arm].update(obs)
    if state.mc_phase == "seated":
        arm = state.current_arm
    elif state.mc_phase == "seek":
        if not _collided_view(obs):
            state.mc_phase = "seated"
            arm = obs.arm
        else:
            arm = _uniform_choice(state.mc_top_set, choice_u)
    elif t < T0:
        arm = min(int(choice_u * state.K), state.K - 1)
    else:
        # exploration over: rank arms by empirical mean, sensing-based when
        # available, reward-based otherwise (degraded under no-sensing)
        means = []
        for s in state.stats:
            num = s.sensing_sum if s.sensing_sum is not None else s.reward_sum
            means.append(num / s.pulls if s.pulls > 0 else -1.0)
        order = _sorted_order(means, keys)
        state.mc_top_set = frozenset(order[:M])
        state.mc_phase = "seek"
        arm = _uniform_choice(state.mc_top_set, choice_u)
    state.step_count += 1
    if arm != state.current_arm:
        state.switch_count += 1
    state.current_arm = arm
    return arm


def centralized_klucb_step(pooled_stats, t, M, rng, flavor="klucb", tol=1e-6,
                           unpulled=UNPULLED_INDEX, f_variant="theory", keys=None):
    """Top-M arms of the pooled-statistics index; players get them in order.

    Returns a tuple of M distinct arms: entry j is the arm of player j, so
    the controller never collides with itself.
    """
    K = len(pooled_stats)
    if keys is None:
        d = rng.uniforms(rngmod.round_stride(K))
        keys = d[rngmod.SLOTS_FIXED:]
    pulls = np.array([s.pulls for s in pooled_stats], dtype=np.float64)
    num = np.array([s.sensing_sum if s.sensing_sum is not None else s.reward_sum
                    for s in pooled_stats], dtype=np.float64)
    mean = np.divide(num, pulls, out=np.zeros_like(pulls), where=pulls > 0)
    ft = exploration_f(max(t, 1), f_variant)
    if flavor == "ucb":
        idx = ucb_index(mean, pulls, ft, unpulled=unpulled)
    else:
        idx = klucb_index(mean, pulls, ft, tol=tol, unpulled=unpulled)
    order = _sorted_order(idx, keys)
    return tuple(order[:M])
