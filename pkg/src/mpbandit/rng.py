"""Counter-based pseudo-random number generation.

Every random value consumed anywhere in a simulation is a pure function of
(master seed, repetition index, player index, round, slot). This makes
repetitions embarrassingly parallel with results independent of scheduling,
and lets the vectorized engine and the per-player reference implementation
draw bit-identical values.

The generator is splitmix64: output i of a stream with seed s is
mix64(s + (i+1)*GAMMA), the standard Weyl-sequence construction.
"""

import numpy as np

MASK64 = np.uint64(0xFFFFFFFFFFFFFFFF)
GAMMA = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)

# Seed-domain tag keeping the instance-sampling stream away from player streams.
INSTANCE_TAG = np.uint64(0xA5B3570512C4F1D3)

_INV_2_53 = float(2.0 ** -53)


def mix64(z):
    """splitmix64 finalizer; accepts scalars or uint64 arrays."""
    z = np.asarray(z, dtype=np.uint64)
    # scalars would hit numpy's warning-on-overflow path; wraparound is the
    # whole point here, so run them through a 1-element array
    scalar = z.ndim == 0
    if scalar:
        z = z.reshape(1)
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    z = z ^ (z >> np.uint64(31))
    return z[0] if scalar else z


def stream_values(seed, counters):
    """Raw 64-bit outputs of the splitmix64 stream with the given seed."""
    c = np.asarray(counters, dtype=np.uint64)
    return mix64(np.asarray(seed, dtype=np.uint64) + (c + np.uint64(1)) * GAMMA)


def stream_uniforms(seed, counters):
    """Uniforms in [0, 1) at the given counter positions (53-bit mantissa)."""
    v = stream_values(seed, counters)
    return (v >> np.uint64(11)).astype(np.float64) * _INV_2_53


def derive_seed(master_seed, rep_index):
    """Per-repetition seed: splitmix64 finalizer applied to master + rep."""
    return int(mix64((int(master_seed) + int(rep_index)) & 0xFFFFFFFFFFFFFFFF))


def player_seed(rep_seed, player_index):
    """Per-player sub-seed, derived the same way from the rep seed."""
    return int(mix64((int(rep_seed) + int(player_index)) & 0xFFFFFFFFFFFFFFFF))


def instance_seed(rep_seed):
    return int(mix64(int(rep_seed) ^ 0xA5B3570512C4F1D3))


class CounterRng:
    """Sequential view of a splitmix64 stream.

    uniform()/uniforms(n) consume counters in order, so callers that always
    draw a fixed number of values per round stay aligned with the vectorized
    engine, which indexes the same counters directly.
    """

    def __init__(self, seed, counter=0):
        self.seed = np.uint64(seed)
        self.counter = int(counter)

    def uniforms(self, n):
        c = np.arange(self.counter, self.counter + n, dtype=np.uint64)
        self.counter += n
        return stream_uniforms(self.seed, c)

    def uniform(self):
        return float(self.uniforms(1)[0])

    def integer(self, n):
        """Uniform integer in [0, n)."""
        return int(self.uniform() * n)


# Per-player per-round slot layout. A player consumes exactly K + SLOTS_FIXED
# uniforms per decision, used or not, so counter positions never depend on
# the trajectory.
SLOT_CHOICE = 0   # uniform subset / initial arm selection
SLOT_RANK = 1     # rhoRand rank redraws
SLOT_SPARE = 2
SLOTS_FIXED = 3


def round_stride(K):
    return K + SLOTS_FIXED


def player_round_base(K, t):
    """First counter of the round-t decision block (t = 0 is initialization)."""
    return t * round_stride(K)


def reward_counters(K, t):
    """Counters of the K arm draws of round t (1-based rounds)."""
    base = (t - 1) * K
    return np.arange(base, base + K, dtype=np.uint64)
