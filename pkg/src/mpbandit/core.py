"""Bandit instances, collision resolution, round sampling, and censoring.

A round draws exactly one Bernoulli value per arm, shared by every player
that selected the arm; players involved in a collision receive reward zero.
Feedback is censored per observation model:

  I   simultaneous sensing and collision: Y and the collision bit.
  II  sensing, then collision: Y always; the collision bit only when Y = 1.
  III no sensing: the reward alone.
"""

from dataclasses import dataclass

import numpy as np

MODELS = ("I", "II", "III")


class BanditInstance:
    """K Bernoulli arms with means in [0, 1]; arms are indexed 0..K-1."""

    def __init__(self, means):
        means = tuple(float(m) for m in means)
        if len(means) == 0:
            raise ValueError("instance needs at least one arm")
        for m in means:
            if not (0.0 <= m <= 1.0):
                raise ValueError("arm mean %r outside [0, 1]" % (m,))
        self.means = means
        self.K = len(means)
        self._sorted = tuple(sorted(means, reverse=True))

    def sorted_means(self):
        """Means in decreasing order (mu*_1 >= mu*_2 >= ...)."""
        return self._sorted

    def mu_star(self, m):
        """m-th largest mean, 1-based."""
        return self._sorted[m - 1]

    def in_p_m(self, M):
        """True iff the M-best / M-worst split is uniquely defined."""
        if not (1 <= M <= self.K):
            return False
        if M == self.K:
            return True
        return self._sorted[M - 1] > self._sorted[M]

    def __repr__(self):
        return "BanditInstance(%r)" % (list(self.means),)


def m_best_m_worst(instance, M):
    """Partition arms into the M largest-mean arms and the rest.

    Rejects M out of range and instances where the split is ambiguous
    (M-th and (M+1)-th largest means equal).
    """
    K = instance.K
    if not (1 <= M <= K):
        raise ValueError("M=%d out of range for K=%d" % (M, K))
    if not instance.in_p_m(M):
        raise ValueError("instance not in P_M: tied means at the M boundary")
    order = sorted(range(K), key=lambda k: instance.means[k], reverse=True)
    best = set(order[:M])
    worst = set(order[M:])
    return best, worst


@dataclass
class RoundResult:
    """Joint outcome of one round before per-player censoring."""
    arms: tuple          # A^j(t) per player
    sensing: tuple       # Y_{A^j(t), t} per player
    collided: tuple      # C^j(t) per player
    reward: tuple        # r^j(t) = Y * (1 - C) per player
    arm_collision_counts: tuple  # per arm: multiplicity when >= 2, else 0


@dataclass
class PlayerObservation:
    """What one player gets to see, censored per observation model."""
    arm: int
    sensing: object      # 0/1 or None
    collided: object     # bool or None
    reward: int


def resolve_collisions(action, K):
    """Per-player collision flags and per-arm colliding-player counts.

    counts[k] is the number of players on arm k when that number is >= 2,
    and 0 otherwise (a lone player is not colliding).
    """
    arms = np.asarray(action, dtype=np.int64)
    if arms.size and (arms.min() < 0 or arms.max() >= K):
        raise ValueError("arm id outside 0..%d" % (K - 1,))
    counts = np.bincount(arms, minlength=K)
    collided = counts[arms] >= 2
    col_counts = np.where(counts >= 2, counts, 0)
    return [bool(c) for c in collided], [int(c) for c in col_counts]


def sample_round(instance, action, reward_rng):
    """Execute one round: draw each arm once, resolve collisions, pay rewards.

    Consumes exactly K uniforms from reward_rng regardless of the action, so
    the reward stream is identical across policies under a fixed seed.
    """
    K = instance.K
    u = reward_rng.uniforms(K)
    draws = (u < np.asarray(instance.means)).astype(np.int64)
    flags, col_counts = resolve_collisions(action, K)
    sensing = tuple(int(draws[a]) for a in action)
    reward = tuple(int(s and not c) for s, c in zip(sensing, flags))
    return RoundResult(
        arms=tuple(int(a) for a in action),
        sensing=sensing,
        collided=tuple(flags),
        reward=reward,
        arm_collision_counts=tuple(col_counts),
    )


def censor(result, model, player):
    """Project one player's view out of a RoundResult."""
    if model not in MODELS:
        raise ValueError("unknown observation model %r" % (model,))
    arm = result.arms[player]
    y = result.sensing[player]
    c = result.collided[player]
    r = result.reward[player]
    if model == "I":
        return PlayerObservation(arm=arm, sensing=y, collided=c, reward=r)
    if model == "II":
        return PlayerObservation(arm=arm, sensing=y, collided=(c if y == 1 else None), reward=r)
    return PlayerObservation(arm=arm, sensing=None, collided=None, reward=r)
