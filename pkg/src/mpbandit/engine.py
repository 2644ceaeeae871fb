"""Vectorized episode execution across a batch of repetitions.

State lives in (reps, players, arms) arrays; every random value is indexed
by counter (see rng), so results per repetition are identical whether reps
run in one batch, one at a time, or split across threads. The per-player
reference implementations in policies.py draw the same counters and are held
equal to this engine by tests.
"""

import numpy as np

from . import rng as rngmod
from .indices import klucb_index, ucb_index, exploration_f
from .core import BanditInstance

_U1 = np.uint64(1)


def _player_uniforms(pseed, counters):
    """Uniforms for all (rep, player) streams at the given counters."""
    c = np.asarray(counters, dtype=np.uint64)
    v = rngmod.mix64(pseed[..., None] + (c + _U1) * rngmod.GAMMA)
    return (v >> np.uint64(11)).astype(np.float64) * (2.0 ** -53)


def _reward_uniforms(rep_seeds, t, K):
    c = rngmod.reward_counters(K, t)
    v = rngmod.mix64(rep_seeds[:, None] + (c + _U1) * rngmod.GAMMA)
    return (v >> np.uint64(11)).astype(np.float64) * (2.0 ** -53)


def _sorted_order(idx, keys):
    """Arms by decreasing index, ties in decreasing-key order, batched."""
    p1 = np.argsort(-keys, axis=-1, kind="stable")
    idx2 = np.take_along_axis(idx, p1, axis=-1)
    p2 = np.argsort(-idx2, axis=-1, kind="stable")
    return np.take_along_axis(p1, p2, axis=-1)


def _choose_uniform(mask, u):
    """Index of the floor(u * count)-th set entry of mask, per row."""
    cnt = mask.sum(axis=-1)
    pick = np.minimum((u * cnt).astype(np.int64), np.maximum(cnt - 1, 0))
    cum = np.cumsum(mask, axis=-1)
    sel = (cum == (pick + 1)[..., None]) & mask
    return np.argmax(sel, axis=-1)


def sample_instances(master_seed, rep_indices, K, M):
    """Per-rep uniform means on [0,1]^K, resampled until the M-best split
    is unambiguous."""
    out = np.empty((len(rep_indices), K))
    for i, rep in enumerate(rep_indices):
        rs = rngmod.derive_seed(master_seed, rep)
        gen = rngmod.CounterRng(rngmod.instance_seed(rs))
        while True:
            mu = gen.uniforms(K)
            if BanditInstance(mu).in_p_m(M):
                out[i] = mu
                break
    return out


class BatchResult:
    """Counters and checkpointed curves for one policy over a rep batch."""

    def __init__(self, R, M, K, checkpoints):
        self.checkpoints = list(checkpoints)
        C = len(self.checkpoints)
        self.draws = np.zeros((R, M, K), dtype=np.int64)
        self.sensing_sum = np.zeros((R, M, K), dtype=np.int64)
        self.reward_sum = np.zeros((R, M, K), dtype=np.int64)
        self.collision_obs = np.zeros((R, M, K), dtype=np.int64)
        self.collided_sensing_sum = np.zeros((R, M, K), dtype=np.int64)
        self.colliding = np.zeros((R, K), dtype=np.int64)
        self.switches = np.zeros((R, M), dtype=np.int64)
        self.transitions = np.zeros((R, M, 5), dtype=np.int64)
        self.fallbacks = np.zeros(R, dtype=np.int64)
        self.regret_at = np.zeros((R, C))
        self.collisions_at = np.zeros((R, C), dtype=np.int64)
        self.realized_reward = np.zeros(R, dtype=np.int64)
        self.means = None
        self.seated_at = None

    @property
    def final_regret(self):
        return self.regret_at[:, -1]

    @property
    def collisions_total(self):
        return self.colliding.sum(axis=1)


class _IndexMixin:
    def _indices(self, st, t):
        ft = exploration_f(t, st.f_variant)
        num = st.reward_sum if st.selfish else st.sensing_sum
        pulls = st.draws.astype(np.float64)
        mean = np.divide(num, pulls, out=np.zeros_like(pulls), where=pulls > 0)
        if st.flavor == "ucb":
            return ucb_index(mean, st.draws, ft, unpulled=st.unpulled)
        return klucb_index(mean, st.draws, ft, tol=st.tol, unpulled=st.unpulled)


class _RhoRand(_IndexMixin):
    def init(self, st, choice0, rank0, keys0):
        st.rank = 1 + np.minimum((rank0 * st.M).astype(np.int64), st.M - 1)
        return np.minimum((choice0 * st.K).astype(np.int64), st.K - 1)

    def decide(self, st, t, cur, collided_view, choice_u, rank_u, keys):
        redraw = 1 + np.minimum((rank_u * st.M).astype(np.int64), st.M - 1)
        st.rank = np.where(collided_view, redraw, st.rank)
        idx = self._indices(st, t)
        order = _sorted_order(idx, keys)
        arm = np.take_along_axis(order, (st.rank - 1)[..., None], axis=-1)[..., 0]
        st.prev_idx = idx
        return arm


class _RandTopM(_IndexMixin):
    def init(self, st, choice0, rank0, keys0):
        return np.minimum((choice0 * st.K).astype(np.int64), st.K - 1)

    def decide(self, st, t, cur, collided_view, choice_u, rank_u, keys):
        idx = self._indices(st, t)
        order = _sorted_order(idx, keys)
        topm = np.zeros(idx.shape, dtype=bool)
        np.put_along_axis(topm, order[..., :st.M], True, axis=-1)
        in_topm = np.take_along_axis(topm, cur[..., None], axis=-1)[..., 0]
        prev_cur = np.take_along_axis(st.prev_idx, cur[..., None], axis=-1)[..., 0]
        cand = topm & (st.prev_idx <= prev_cur[..., None])
        empty = ~in_topm & ~collided_view & (cand.sum(axis=-1) == 0)
        st.fallbacks += empty.sum(axis=-1)
        cand = np.where(empty[..., None], topm, cand)
        moved_constrained = _choose_uniform(cand, choice_u)
        moved_free = _choose_uniform(topm, choice_u)
        out_arm = np.where(collided_view, moved_free, moved_constrained)
        if st.collision_switch_in_topm:
            stay_arm = np.where(collided_view, moved_free, cur)
        else:
            stay_arm = cur
        arm = np.where(in_topm, stay_arm, out_arm)
        st.prev_idx = idx
        return arm


class _MCTopM(_IndexMixin):
    def init(self, st, choice0, rank0, keys0):
        st.chair = np.zeros(choice0.shape, dtype=bool)
        return np.minimum((choice0 * st.K).astype(np.int64), st.K - 1)

    def decide(self, st, t, cur, collided_view, choice_u, rank_u, keys):
        idx = self._indices(st, t)
        order = _sorted_order(idx, keys)
        topm = np.zeros(idx.shape, dtype=bool)
        np.put_along_axis(topm, order[..., :st.M], True, axis=-1)
        in_topm = np.take_along_axis(topm, cur[..., None], axis=-1)[..., 0]
        prev_cur = np.take_along_axis(st.prev_idx, cur[..., None], axis=-1)[..., 0]
        cand = topm & (st.prev_idx <= prev_cur[..., None])
        empty = ~in_topm & (cand.sum(axis=-1) == 0)
        st.fallbacks += empty.sum(axis=-1)
        cand = np.where(empty[..., None], topm, cand)

        branch_i = ~in_topm
        branch_ii = in_topm & collided_view & ~st.chair
        arm_i = _choose_uniform(cand, choice_u)
        arm_ii = _choose_uniform(topm, choice_u)
        arm = np.where(branch_i, arm_i, np.where(branch_ii, arm_ii, cur))

        label = np.where(branch_i, np.where(st.chair, 5, 3),
                         np.where(branch_ii, 2, np.where(st.chair, 4, 1)))
        for L in range(1, 6):
            st.transitions[:, :, L - 1] += (label == L)
        st.chair = ~branch_i & ~branch_ii
        st.prev_idx = idx
        return arm


class _Selfish(_IndexMixin):
    def init(self, st, choice0, rank0, keys0):
        return np.minimum((choice0 * st.K).astype(np.int64), st.K - 1)

    def decide(self, st, t, cur, collided_view, choice_u, rank_u, keys):
        idx = self._indices(st, t)
        arm = _sorted_order(idx, keys)[..., 0]
        st.prev_idx = idx
        return arm


class _MusicalChairs:
    def init(self, st, choice0, rank0, keys0):
        R, M = choice0.shape
        st.seated = np.zeros((R, M), dtype=bool)
        st.seeking = np.zeros((R, M), dtype=bool)
        st.top_mask = np.zeros((R, M, st.K), dtype=bool)
        st.seated_at = np.zeros((R, M), dtype=np.int64)
        if st.T0 == 0:
            order = _sorted_order(np.zeros((R, M, st.K)), keys0)
            np.put_along_axis(st.top_mask, order[..., :st.M], True, axis=-1)
            st.seeking[:] = True
            return _choose_uniform(st.top_mask, choice0)
        return np.minimum((choice0 * st.K).astype(np.int64), st.K - 1)

    def decide(self, st, t, cur, collided_view, choice_u, rank_u, keys):
        seat_now = st.seeking & ~st.seated & ~collided_view
        st.seated = st.seated | seat_now
        st.seated_at = np.where(seat_now, t, st.seated_at)
        if t >= st.T0:
            fresh = ~st.seeking & ~st.seated
            if np.any(fresh):
                num = st.sensing_sum if st.model in ("I", "II") else st.reward_sum
                pulls = st.draws.astype(np.float64)
                meanv = np.divide(num, pulls, out=np.full_like(pulls, -1.0), where=pulls > 0)
                order = _sorted_order(meanv, keys)
                new_mask = np.zeros(meanv.shape, dtype=bool)
                np.put_along_axis(new_mask, order[..., :st.M], True, axis=-1)
                st.top_mask = np.where(fresh[..., None], new_mask, st.top_mask)
                st.seeking = st.seeking | fresh
        draw = _choose_uniform(st.top_mask, choice_u)
        explore = np.minimum((choice_u * st.K).astype(np.int64), st.K - 1)
        arm = np.where(st.seated, cur, np.where(st.seeking, draw, explore))
        return arm


class _Centralized:
    """One controller over pooled statistics; uses player 0's stream."""

    def init(self, st, choice0, rank0, keys0):
        R, M = choice0.shape
        st.pool_pulls = np.zeros((R, st.K), dtype=np.int64)
        st.pool_num = np.zeros((R, st.K), dtype=np.int64)
        order = _sorted_order(np.zeros((R, st.K)), keys0[:, 0, :])
        return order[:, :st.M].copy()

    def decide(self, st, t, cur, collided_view, choice_u, rank_u, keys):
        ft = exploration_f(t, st.f_variant)
        pulls = st.pool_pulls.astype(np.float64)
        mean = np.divide(st.pool_num, pulls, out=np.zeros_like(pulls), where=pulls > 0)
        if st.flavor == "ucb":
            idx = ucb_index(mean, st.pool_pulls, ft, unpulled=st.unpulled)
        else:
            idx = klucb_index(mean, st.pool_pulls, ft, tol=st.tol, unpulled=st.unpulled)
        order = _sorted_order(idx, keys[:, 0, :])
        return order[:, :st.M].copy()


_POLICIES = {
    "rhorand": _RhoRand,
    "randtopm": _RandTopM,
    "mctopm": _MCTopM,
    "selfish": _Selfish,
    "musicalchairs": _MusicalChairs,
    "centralized": _Centralized,
}


class _State:
    pass


def run_batch(master_seed, rep_indices, means, M, T, model, policy_tag,
              flavor="klucb", tol=1e-6, unpulled=1.0, f_variant="theory",
              collision_switch_in_topm=False, T0=0, checkpoints=None,
              trace_hook=None):
    """Run one policy over a batch of repetitions.

    means: (K,) array for a fixed instance or (R, K) for per-rep instances.
    checkpoints: increasing rounds ending at T (default: T only).
    trace_hook(t, reward_sum, draws): called after each round's update, for
    small-horizon diagnostics.
    """
    rep_indices = np.asarray(rep_indices, dtype=np.uint64)
    R = len(rep_indices)
    means = np.asarray(means, dtype=np.float64)
    if means.ndim == 1:
        means = np.broadcast_to(means, (R, means.shape[0]))
    K = means.shape[1]
    if checkpoints is None:
        checkpoints = [T]
    cp = list(checkpoints)

    res = BatchResult(R, M, K, cp)
    res.means = means

    rep_seeds = rngmod.mix64(np.uint64(master_seed) + rep_indices)
    pseed = rngmod.mix64(rep_seeds[:, None] + np.arange(M, dtype=np.uint64))

    st = _State()
    st.K, st.M, st.R = K, M, R
    st.flavor = flavor
    st.selfish = policy_tag == "selfish"
    st.tol = tol
    st.unpulled = float(unpulled)
    st.f_variant = f_variant
    st.collision_switch_in_topm = collision_switch_in_topm
    st.T0 = T0
    st.model = model
    st.draws = res.draws
    st.sensing_sum = res.sensing_sum
    st.reward_sum = res.reward_sum
    st.transitions = res.transitions
    st.fallbacks = res.fallbacks
    st.prev_idx = np.full((R, M, K), float(unpulled))

    policy = _POLICIES[policy_tag]()

    stride = rngmod.round_stride(K)
    slot0 = np.arange(stride, dtype=np.uint64)
    u0 = _player_uniforms(pseed, slot0)
    choice0 = u0[..., rngmod.SLOT_CHOICE]
    rank0 = u0[..., rngmod.SLOT_RANK]
    keys0 = u0[..., rngmod.SLOTS_FIXED:]
    cur = policy.init(st, choice0, rank0, keys0)

    rows = np.arange(R)
    oracle = np.sort(means, axis=1)[:, ::-1][:, :M].sum(axis=1)
    cum_regret = np.zeros(R)
    cum_collisions = np.zeros(R, dtype=np.int64)
    cp_pos = {t: i for i, t in enumerate(cp)}
    centralized = policy_tag == "centralized"
    rows_m = np.repeat(rows[:, None], M, axis=1)
    cols_m = np.broadcast_to(np.arange(M), (R, M))

    for t in range(1, T + 1):
        u = _reward_uniforms(rep_seeds, t, K)
        Y = (u < means)

        counts = np.bincount((rows_m * K + cur).ravel(), minlength=R * K).reshape(R, K)
        collided = np.take_along_axis(counts, cur, axis=1) >= 2
        y = np.take_along_axis(Y, cur, axis=1)
        reward = y & ~collided

        res.draws[rows_m, cols_m, cur] += 1
        res.sensing_sum[rows_m, cols_m, cur] += y
        res.reward_sum[rows_m, cols_m, cur] += reward
        if model == "I":
            obs_col = collided
        elif model == "II":
            obs_col = collided & y
        else:
            obs_col = np.zeros_like(collided)
        res.collision_obs[rows_m, cols_m, cur] += obs_col
        res.collided_sensing_sum[rows_m, cols_m, cur] += (y & obs_col)
        if centralized:
            np.add.at(st.pool_pulls, (rows_m, cur), 1)
            pool_y = y if model in ("I", "II") else reward
            np.add.at(st.pool_num, (rows_m, cur), pool_y)

        res.colliding += np.where(counts >= 2, counts, 0)
        cum_collisions += collided.sum(axis=1)
        res.realized_reward += reward.sum(axis=1)
        mu_played = np.take_along_axis(means, cur, axis=1)
        cum_regret += oracle - (mu_played * ~collided).sum(axis=1)

        if t in cp_pos:
            i = cp_pos[t]
            res.regret_at[:, i] = cum_regret
            res.collisions_at[:, i] = cum_collisions

        if trace_hook is not None:
            trace_hook(t, res.reward_sum, res.draws)

        if t == T:
            break

        base = rngmod.player_round_base(K, t)
        slots = np.arange(base, base + stride, dtype=np.uint64)
        up = _player_uniforms(pseed, slots)
        choice_u = up[..., rngmod.SLOT_CHOICE]
        rank_u = up[..., rngmod.SLOT_RANK]
        keys = up[..., rngmod.SLOTS_FIXED:]
        collided_view = obs_col

        new_cur = policy.decide(st, t, cur, collided_view, choice_u, rank_u, keys)
        res.switches += (new_cur != cur)
        cur = new_cur

    res.seated_at = getattr(st, "seated_at", None)
    return res
