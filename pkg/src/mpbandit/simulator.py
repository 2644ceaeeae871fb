"""Episode execution and Monte Carlo aggregation.

Two interchangeable executors produce identical traces: the vectorized
batch engine (production path) and a per-player reference loop kept for
clarity and as a test oracle. Every random value either path consumes is
addressed by (master_seed, repetition, player, round, slot), so results do
not depend on execution order or on how repetitions are split across
threads.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
import dataclasses
import math

import numpy as np

from . import engine
from . import rng as rngmod
from .rng import derive_seed  # part of the public seeding surface
from .analysis import EpisodeCounters, decomposition, pseudo_regret
from .core import MODELS, BanditInstance, censor, sample_round
from .indices import ArmStatistics
from .policies import (POLICY_TAGS, centralized_klucb_step, init_player_state,
                       mctopm_step, musical_chair_step, rand_topm_step,
                       rho_rand_step, selfish_step)

GENERATOR_NAME = "splitmix64"

# policies whose index needs the raw draw; reward-only observation cannot
# feed them
_SENSING_POLICIES = ("rhorand", "randtopm", "mctopm")

_FLAVORS = ("ucb", "klucb")
_F_VARIANTS = ("theory", "logt")
_CHECKPOINT_MODES = ("auto", "every", "geometric")


@dataclass(frozen=True)
class SimulationConfig:
    """Everything one experiment needs; immutable and echoed into outputs.

    Give explicit arm means, or set means=None with K to draw a fresh
    uniform instance per repetition from the repetition's seed.
    """

    M: int
    T: int
    reps: int
    master_seed: int
    means: tuple = None
    K: int = None
    model: str = "I"
    policy: str = "mctopm"
    flavor: str = "klucb"
    tol: float = 1e-6
    unpulled: float = 1.0
    f_variant: str = "theory"
    collision_switch_in_topm: bool = False
    T0: int = 0
    checkpoint_mode: str = "auto"
    checkpoint_ratio: float = 1.1
    threads: int = 1

    @property
    def arms(self):
        return len(self.means) if self.means is not None else self.K

    def validate(self):
        if self.master_seed is None:
            raise ValueError("master_seed is required; runs must be reproducible")
        if not (0 <= int(self.master_seed) < 2 ** 64):
            raise ValueError("master_seed must fit in 64 bits")
        if self.T < 1:
            raise ValueError("T must be >= 1")
        if self.reps < 1:
            raise ValueError("reps must be >= 1")
        if self.means is None and self.K is None:
            raise ValueError("either explicit means or K is required")
        K = self.arms
        if K < 1:
            raise ValueError("need at least one arm")
        if not (1 <= self.M <= K):
            raise ValueError("M=%d must be between 1 and K=%d" % (self.M, K))
        if self.means is not None:
            m = np.asarray(self.means, dtype=np.float64)
            if m.ndim != 1 or len(m) != K:
                raise ValueError("means must be a flat list of arm values")
            if np.any(m < 0.0) or np.any(m > 1.0):
                raise ValueError("means must lie in [0, 1]")
            if not BanditInstance(m).in_p_m(self.M):
                raise ValueError("means leave the M-best set ambiguous: "
                                 "the M-th and (M+1)-th largest are equal")
        if self.model not in MODELS:
            raise ValueError("unknown observation model %r" % (self.model,))
        if self.policy not in POLICY_TAGS:
            raise ValueError("unknown policy %r (choose from %s)"
                             % (self.policy, ", ".join(POLICY_TAGS)))
        if self.flavor not in _FLAVORS:
            raise ValueError("unknown index flavor %r" % (self.flavor,))
        if self.f_variant not in _F_VARIANTS:
            raise ValueError("unknown exploration-function variant %r" % (self.f_variant,))
        if self.model == "III" and self.policy in _SENSING_POLICIES:
            raise ValueError("policy %r needs the sensing information; "
                             "the reward-only model cannot drive it" % (self.policy,))
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.T0 < 0:
            raise ValueError("T0 must be >= 0")
        if self.checkpoint_mode not in _CHECKPOINT_MODES:
            raise ValueError("unknown checkpoint mode %r" % (self.checkpoint_mode,))
        if self.checkpoint_ratio <= 1.0:
            raise ValueError("geometric checkpoint ratio must be > 1")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")
        return self

    def to_dict(self):
        d = dataclasses.asdict(self)
        if d["means"] is not None:
            d["means"] = list(d["means"])
        if not math.isfinite(d["unpulled"]):
            # inf is not representable in strict JSON
            d["unpulled"] = "inf"
        return d


def checkpoint_schedule(T, mode="auto", ratio=1.1):
    """Rounds at which cumulative curves are recorded.

    Every round up to 10^4; geometrically spaced above that to keep memory
    flat. Strictly increasing, always ending at T.
    """
    if mode == "auto":
        mode = "every" if T <= 10_000 else "geometric"
    if mode == "every":
        return list(range(1, T + 1))
    pts = []
    t = 1
    while t < T:
        pts.append(t)
        t = max(t + 1, int(t * ratio))
    pts.append(T)
    return pts


def resolve_checkpoints(config):
    return checkpoint_schedule(config.T, config.checkpoint_mode, config.checkpoint_ratio)


def instance_matrix(config, rep_indices):
    """Per-repetition arm means, shape (len(rep_indices), K)."""
    if config.means is not None:
        m = np.asarray(config.means, dtype=np.float64)
        return np.broadcast_to(m, (len(rep_indices), len(m)))
    return engine.sample_instances(config.master_seed, rep_indices, config.K, config.M)


@dataclass
class EpisodeTrace:
    """One repetition's complete record."""

    rep_index: int
    means: np.ndarray
    counters: EpisodeCounters
    collision_curve: np.ndarray
    realized_reward: int
    fallbacks: int
    player_stats: list
    seated_at: np.ndarray = None

    @property
    def checkpoints(self):
        return self.counters.checkpoints

    @property
    def regret_curve(self):
        return self.counters.cumulative_pseudo_regret


@dataclass
class MonteCarloSummary:
    """Aggregates over repetitions plus the per-rep values behind them."""

    config: SimulationConfig
    generator: str
    checkpoints: np.ndarray
    means: np.ndarray
    regret_mean: np.ndarray
    regret_std: np.ndarray
    collisions_mean: np.ndarray
    final_pseudo: np.ndarray
    final_realized: np.ndarray
    term_a: np.ndarray
    term_b: np.ndarray
    term_c: np.ndarray
    collisions_total: np.ndarray
    switches_total: np.ndarray
    transitions: np.ndarray
    fallbacks: np.ndarray
    seated_at: object
    batch: object


def _engine_batch(config, rep_indices, means, checkpoints):
    return engine.run_batch(
        config.master_seed, rep_indices, means, M=config.M, T=config.T,
        model=config.model, policy_tag=config.policy, flavor=config.flavor,
        tol=config.tol, unpulled=config.unpulled, f_variant=config.f_variant,
        collision_switch_in_topm=config.collision_switch_in_topm,
        T0=config.T0, checkpoints=checkpoints)


def _counters_row(batch, i):
    return EpisodeCounters(
        draws=batch.draws[i], colliding_players=batch.colliding[i],
        switches=batch.switches[i], transitions=batch.transitions[i],
        cumulative_pseudo_regret=batch.regret_at[i],
        checkpoints=np.asarray(batch.checkpoints))


def _stats_rows(batch, i, model):
    """Per-player ArmStatistics as the player would hold them.

    The engine keeps raw counts; what a player can actually maintain
    depends on the observation model: reward-only censors sensing and
    collision counters outright, and sensing-then-collision censors the
    collision bit on every zero draw, so any arm with a zero draw ends with
    unusable collision counters.
    """
    M, K = batch.draws.shape[1:]
    out = []
    for j in range(M):
        row = []
        for k in range(K):
            d = int(batch.draws[i, j, k])
            s = int(batch.sensing_sum[i, j, k])
            r = int(batch.reward_sum[i, j, k])
            c = int(batch.collision_obs[i, j, k])
            cs = int(batch.collided_sensing_sum[i, j, k])
            if model == "III" and d > 0:
                row.append(ArmStatistics(d, None, r, None, None))
            elif model == "II" and d > s:
                row.append(ArmStatistics(d, s, r, None, None))
            else:
                row.append(ArmStatistics(d, s, r, c, cs))
        out.append(row)
    return out


def _trace_from_batch(config, batch, i, rep_index):
    seated = batch.seated_at[i].copy() if batch.seated_at is not None else None
    return EpisodeTrace(
        rep_index=int(rep_index), means=np.array(batch.means[i]),
        counters=_counters_row(batch, i),
        collision_curve=batch.collisions_at[i].copy(),
        realized_reward=int(batch.realized_reward[i]),
        fallbacks=int(batch.fallbacks[i]),
        player_stats=_stats_rows(batch, i, config.model),
        seated_at=seated)


def run_episode(config, rep_index):
    """Execute one repetition; bit-identical for identical inputs."""
    config.validate()
    reps = np.asarray([rep_index], dtype=np.uint64)
    means = instance_matrix(config, reps)
    batch = _engine_batch(config, reps, means, resolve_checkpoints(config))
    return _trace_from_batch(config, batch, 0, rep_index)


def _merge_batches(parts):
    first = parts[0]
    R = sum(p.draws.shape[0] for p in parts)
    out = engine.BatchResult(R, first.draws.shape[1], first.draws.shape[2],
                             first.checkpoints)
    for name in ("draws", "sensing_sum", "reward_sum", "collision_obs",
                 "collided_sensing_sum", "colliding", "switches", "transitions",
                 "fallbacks", "regret_at", "collisions_at", "realized_reward",
                 "means"):
        setattr(out, name, np.concatenate([getattr(p, name) for p in parts], axis=0))
    if first.seated_at is not None:
        out.seated_at = np.concatenate([p.seated_at for p in parts], axis=0)
    else:
        out.seated_at = None
    return out


def run_monte_carlo(config):
    """All repetitions, optionally split across threads.

    Chunking cannot change any number: each repetition's randomness is a
    pure function of (master_seed, rep), so the merged result is identical
    to a serial run.
    """
    config.validate()
    cps = resolve_checkpoints(config)
    rep_indices = np.arange(config.reps, dtype=np.uint64)
    means = instance_matrix(config, rep_indices)
    n_chunks = max(1, min(config.threads, config.reps))
    if n_chunks == 1:
        batch = _engine_batch(config, rep_indices, means, cps)
    else:
        rows = np.array_split(np.arange(config.reps), n_chunks)
        with ThreadPoolExecutor(max_workers=n_chunks) as pool:
            parts = list(pool.map(
                lambda rr: _engine_batch(config, rep_indices[rr], means[rr], cps),
                rows))
        batch = _merge_batches(parts)
    return summarize(config, batch)


def summarize(config, batch):
    """Reduce a finished batch to a MonteCarloSummary."""
    R = batch.draws.shape[0]
    term_a = np.empty(R)
    term_b = np.empty(R)
    term_c = np.empty(R)
    pseudo = np.empty(R)
    for i in range(R):
        inst = BanditInstance(batch.means[i])
        cnt = _counters_row(batch, i)
        d = decomposition(cnt, inst, config.M)
        term_a[i], term_b[i], term_c[i] = d.term_a, d.term_b, d.term_c
        pseudo[i] = pseudo_regret(cnt, inst, config.M)
    oracle = np.sort(batch.means, axis=1)[:, ::-1][:, :config.M].sum(axis=1)
    realized = oracle * config.T - batch.realized_reward
    return MonteCarloSummary(
        config=config, generator=GENERATOR_NAME,
        checkpoints=np.asarray(batch.checkpoints),
        means=np.array(batch.means),
        regret_mean=batch.regret_at.mean(axis=0),
        regret_std=batch.regret_at.std(axis=0),
        collisions_mean=batch.collisions_at.mean(axis=0),
        final_pseudo=pseudo, final_realized=realized,
        term_a=term_a, term_b=term_b, term_c=term_c,
        collisions_total=batch.colliding.sum(axis=1),
        switches_total=batch.switches.sum(axis=1),
        transitions=batch.transitions,
        fallbacks=batch.fallbacks,
        seated_at=batch.seated_at,
        batch=batch)


def run_episode_reference(config, rep_index):
    """Per-player episode loop; the readable twin of the batch engine.

    Used by tests as an oracle for the engine and by anyone who wants to
    follow one round at a time. Identical output to run_episode.
    """
    config.validate()
    cps = resolve_checkpoints(config)
    reps = np.asarray([rep_index], dtype=np.uint64)
    means = np.array(instance_matrix(config, reps)[0])
    instance = BanditInstance(means)
    K, M, T = len(means), config.M, config.T
    rep_seed = derive_seed(config.master_seed, int(rep_index))
    reward_rng = rngmod.CounterRng(rep_seed)
    prngs = [rngmod.CounterRng(rngmod.player_seed(rep_seed, j)) for j in range(M)]

    centralized = config.policy == "centralized"
    kw = dict(flavor=config.flavor, selfish=config.policy == "selfish",
              tol=config.tol, unpulled=config.unpulled,
              f_variant=config.f_variant,
              collision_switch_in_topm=config.collision_switch_in_topm,
              T0=config.T0)
    # independent fold of every observation: the policy states never see
    # round T (no decision follows it), but the trace must include it
    player_stats = [[ArmStatistics() for _ in range(K)] for _ in range(M)]
    states = None
    pooled = None
    switches = np.zeros(M, dtype=np.int64)
    if centralized:
        pooled = [ArmStatistics() for _ in range(K)]
        # zero pulls everywhere: the index vector is constant, so this is a
        # pure key-order draw consuming the same init block as the engine
        current = list(centralized_klucb_step(
            pooled, 1, M, prngs[0], flavor=config.flavor, tol=config.tol,
            unpulled=config.unpulled, f_variant=config.f_variant))
    else:
        states = [init_player_state(config.policy, K, M, prngs[j], **kw)
                  for j in range(M)]
        current = [s.current_arm for s in states]

    draws = np.zeros((M, K), dtype=np.int64)
    colliding = np.zeros(K, dtype=np.int64)
    transitions = np.zeros((M, 5), dtype=np.int64)
    regret_curve = np.zeros(len(cps))
    collision_curve = np.zeros(len(cps), dtype=np.int64)
    realized = 0
    seated_at = np.zeros(M, dtype=np.int64) if config.policy == "musicalchairs" else None

    oracle = float(np.sort(means)[::-1][:M].sum())
    cum_regret = 0.0
    cum_coll = 0
    cp_pos = {t: i for i, t in enumerate(cps)}

    for t in range(1, T + 1):
        action = np.asarray(current)
        rr = sample_round(instance, action, reward_rng)
        for j in range(M):
            draws[j, action[j]] += 1
        colliding += np.asarray(rr.arm_collision_counts, dtype=np.int64)
        realized += sum(rr.reward)
        cum_regret += oracle - float(
            (means[action] * ~np.asarray(rr.collided)).sum())
        cum_coll += sum(rr.collided)
        if t in cp_pos:
            regret_curve[cp_pos[t]] = cum_regret
            collision_curve[cp_pos[t]] = cum_coll

        observations = [censor(rr, config.model, j) for j in range(M)]
        for j in range(M):
            player_stats[j][action[j]].update(observations[j])

        if t == T:
            break

        if centralized:
            for j in range(M):
                pooled[action[j]].update(observations[j])
            prev = current
            current = list(centralized_klucb_step(
                pooled, t, M, prngs[0], flavor=config.flavor, tol=config.tol,
                unpulled=config.unpulled, f_variant=config.f_variant))
            switches += np.asarray(current) != np.asarray(prev)
        else:
            new = []
            for j, s in enumerate(states):
                obs = observations[j]
                if config.policy == "rhorand":
                    a = rho_rand_step(s, obs, t, M, prngs[j])
                elif config.policy == "randtopm":
                    a = rand_topm_step(s, obs, t, M, prngs[j])
                elif config.policy == "mctopm":
                    a, _ = mctopm_step(s, obs, t, M, prngs[j])
                elif config.policy == "selfish":
                    a = selfish_step(s, obs, t, config.flavor, prngs[j])
                else:
                    was = s.mc_phase
                    a = musical_chair_step(s, obs, t, M, config.T0, prngs[j])
                    if was != "seated" and s.mc_phase == "seated":
                        seated_at[j] = t
                new.append(a)
            current = new

    if states is not None:
        switches = np.array([s.switch_count for s in states], dtype=np.int64)
        if config.policy == "mctopm":
            transitions = np.array(
                [[s.transition_counts[L] for L in range(1, 6)] for s in states],
                dtype=np.int64)
        fallbacks = int(sum(s.fallback_count for s in states))
    else:
        fallbacks = 0

    counters = EpisodeCounters(
        draws=draws, colliding_players=colliding, switches=switches,
        transitions=transitions, cumulative_pseudo_regret=regret_curve,
        checkpoints=np.asarray(cps))
    return EpisodeTrace(
        rep_index=int(rep_index), means=means, counters=counters,
        collision_curve=collision_curve, realized_reward=realized,
        fallbacks=fallbacks, player_stats=player_stats, seated_at=seated_at)
