"""Binary KL divergence, exploration function, and the index families.

All functions accept scalars or numpy arrays and broadcast; the vectorized
simulation engine calls them on (reps, players, arms) arrays.
"""

import numpy as np

EPS = 1e-15

# Index reported for a never-pulled arm. 1.0 is the largest value a kl-UCB
# index can take; downstream tie-breaking is uniform at random. Configurable
# because the additive-UCB flavor can exceed 1.0, in which case float("inf")
# makes never-pulled arms strictly preferred instead.
UNPULLED_INDEX = 1.0


def _clamp(y):
    return np.clip(y, EPS, 1.0 - EPS)


def kl_bernoulli(x, y):
    """kl(x, y) = x log(x/y) + (1-x) log((1-x)/(1-y)).

    y must lie in (0, 1); callers clamp boundary values to [EPS, 1-EPS]
    first. x may touch 0 or 1 (0 log 0 = 0).
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if np.any(y <= 0.0) or np.any(y >= 1.0):
        raise ValueError("kl_bernoulli: y must be in the open interval (0, 1)")
    xc = _clamp(x)
    out = x * np.log(xc / y) + (1.0 - x) * np.log((1.0 - xc) / (1.0 - y))
    # exact zero at x == y, despite the clamp
    out = np.where(x == y, 0.0, np.maximum(out, 0.0))
    return out if out.ndim else float(out)


def kl_bernoulli_derivative(x, y):
    """d/dx kl(x, y) = log(x/y) - log((1-x)/(1-y)); x, y in (0, 1)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if np.any(x <= 0.0) or np.any(x >= 1.0):
        raise ValueError("kl_bernoulli_derivative: x must be in (0, 1)")
    if np.any(y <= 0.0) or np.any(y >= 1.0):
        raise ValueError("kl_bernoulli_derivative: y must be in (0, 1)")
    out = np.log(x / y) - np.log((1.0 - x) / (1.0 - y))
    return out if out.ndim else float(out)


def exploration_f(t, variant="theory"):
    """Exploration function f(t).

    variant "theory": log t + 3 log log t for t >= 3, clamped to
    max(0, log t) for t in {1, 2} where log log is undefined or negative.
    variant "logt": plain log t (the common practical choice).
    """
    t = np.asarray(t, dtype=np.float64)
    if np.any(t < 1):
        raise ValueError("exploration_f: t must be >= 1")
    logt = np.log(t)
    if variant == "logt":
        out = logt
    elif variant == "theory":
        out = np.where(t >= 3, logt + 3.0 * np.log(np.maximum(logt, EPS)), np.maximum(logt, 0.0))
    else:
        raise ValueError("exploration_f: unknown variant %r" % (variant,))
    return out if out.ndim else float(out)


def ucb_index(mean, pulls, ft, unpulled=UNPULLED_INDEX):
    """mean + sqrt(f(t) / (2 pulls)); never-pulled arms get the sentinel."""
    mean = np.asarray(mean, dtype=np.float64)
    pulls = np.asarray(pulls, dtype=np.float64)
    safe = np.maximum(pulls, 1.0)
    out = np.where(pulls > 0, mean + np.sqrt(ft / (2.0 * safe)), unpulled)
    return out if out.ndim else float(out)


def klucb_index(mean, pulls, ft, tol=1e-6, unpulled=UNPULLED_INDEX, max_iter=100):
    """sup{ q in [0, 1] : pulls * kl(mean, q) <= f(t) } by bisection.

    Returns the lower (feasible) endpoint of the final bracket, so the
    constraint pulls * kl(mean, q) <= f(t) always holds at the returned
    value. Bisection runs until both the bracket is narrower than tol and
    the constraint slack at the returned point is below 1e-4, capped at
    max_iter halvings. Never-pulled arms get the sentinel.
    """
    mean = np.asarray(mean, dtype=np.float64)
    pulls = np.asarray(pulls, dtype=np.float64)
    ftb = np.broadcast_to(np.asarray(ft, dtype=np.float64), np.broadcast_shapes(mean.shape, pulls.shape, np.shape(ft)))
    mean_b = np.broadcast_to(mean, ftb.shape).copy()
    pulls_b = np.broadcast_to(pulls, ftb.shape).copy()
    pulled = pulls_b > 0
    m = np.clip(np.where(pulled, mean_b, 0.0), 0.0, 1.0)
    n = np.where(pulled, pulls_b, 1.0)

    hi_cap = 1.0 - EPS
    # whole interval feasible -> index saturates at 1
    saturated = n * kl_bernoulli(m, np.full_like(m, hi_cap)) <= ftb
    lo = m.copy()
    klo = np.zeros_like(m)  # kl(m, lo), maintained incrementally
    hi = np.full_like(m, hi_cap)
    active = pulled & ~saturated
    for _ in range(max_iter):
        if not np.any(active):
            break
        mid = 0.5 * (lo + hi)
        klmid = kl_bernoulli(m, _clamp(mid))
        feas = n * klmid <= ftb
        take = active & feas
        lo = np.where(take, mid, lo)
        klo = np.where(take, klmid, klo)
        hi = np.where(active & ~feas, mid, hi)
        active = active & ~(((hi - lo) < tol) & ((ftb - n * klo) < 1e-4))
    out = np.where(pulled, np.where(saturated, 1.0, lo), unpulled)
    return out if out.ndim else float(out)


def selfish_index(reward_sum, pulls, ft, flavor="klucb", tol=1e-6, unpulled=UNPULLED_INDEX):
    """Same formulas with the collision-censored mean S~/T in place of S/T."""
    pulls_a = np.asarray(pulls, dtype=np.float64)
    mean = np.divide(reward_sum, pulls_a, out=np.zeros_like(pulls_a, dtype=np.float64), where=pulls_a > 0)
    if flavor == "ucb":
        return ucb_index(mean, pulls, ft, unpulled=unpulled)
    if flavor == "klucb":
        return klucb_index(mean, pulls, ft, tol=tol, unpulled=unpulled)
    raise ValueError("selfish_index: unknown flavor %r" % (flavor,))


def index_for(stats, t, flavor="klucb", selfish=False, tol=1e-6,
              unpulled=UNPULLED_INDEX, f_variant="theory"):
    """Index of one arm from its ArmStatistics at round t (g(t) of the paper)."""
    ft = exploration_f(max(t, 1), f_variant)
    if selfish:
        return selfish_index(stats.reward_sum, stats.pulls, ft, flavor=flavor, tol=tol, unpulled=unpulled)
    if stats.sensing_sum is None:
        raise ValueError("sensing statistics unavailable; only selfish indices work without sensing")
    mean = stats.sensing_sum / stats.pulls if stats.pulls > 0 else 0.0
    if flavor == "ucb":
        return ucb_index(mean, stats.pulls, ft, unpulled=unpulled)
    if flavor == "klucb":
        return klucb_index(mean, stats.pulls, ft, tol=tol, unpulled=unpulled)
    raise ValueError("index_for: unknown flavor %r" % (flavor,))


class ArmStatistics:
    """Per-player counters for one arm.

    pulls: T, selections including collided rounds.
    sensing_sum: S, sum of observed raw draws Y (None when sensing is censored).
    reward_sum: S~, sum of received rewards (zero on collision).
    collision_count: N^C, observed collisions while on this arm (None without sensing).
    collided_sensing_sum: sum of Y over observed collided rounds, the quantity
    behind the penalty identity of the selfish index (model I only).
    """

    __slots__ = ("pulls", "sensing_sum", "reward_sum", "collision_count", "collided_sensing_sum")

    def __init__(self, pulls=0, sensing_sum=0, reward_sum=0, collision_count=0,
                 collided_sensing_sum=0):
        self.pulls = pulls
        self.sensing_sum = sensing_sum
        self.reward_sum = reward_sum
        self.collision_count = collision_count
        self.collided_sensing_sum = collided_sensing_sum

    def update(self, obs):
        """Fold in one PlayerObservation for this arm."""
        self.pulls += 1
        self.reward_sum += obs.reward
        if obs.sensing is None:
            # no sensing: neither S nor N^C can be maintained
            self.sensing_sum = None
            self.collision_count = None
            self.collided_sensing_sum = None
        else:
            if self.sensing_sum is not None:
                self.sensing_sum += obs.sensing
            if obs.collided is None:
                # censored collision bit (sensing-then-collision model, Y=0):
                # collision counters are no longer trustworthy
                self.collision_count = None
                self.collided_sensing_sum = None
            elif self.collision_count is not None:
                self.collision_count += int(obs.collided)
                if obs.collided:
                    self.collided_sensing_sum += obs.sensing

    def copy(self):
        return ArmStatistics(self.pulls, self.sensing_sum, self.reward_sum,
                             self.collision_count, self.collided_sensing_sum)

    def __repr__(self):
        return "ArmStatistics(T=%r, S=%r, S~=%r, NC=%r)" % (
            self.pulls, self.sensing_sum, self.reward_sum, self.collision_count)


def selfish_penalty_decomposition(stats, model="I"):
    """The two factors of the additive-UCB penalty identity.

    Returns (collision_fraction, collided_mean_estimate) whose product equals
    g_UCB - g~_UCB exactly: (N^C / T) * (sum of Y over collided rounds / N^C).
    Requires model-I statistics (the collided sensing sum).
    """
    if model != "I":
        raise ValueError("selfish penalty diagnostic unavailable under observation model %s" % model)
    if stats.sensing_sum is None or stats.collision_count is None:
        raise ValueError("selfish penalty diagnostic unavailable without sensing and collision counts")
    if stats.pulls == 0:
        return (0.0, 0.0)
    frac = stats.collision_count / stats.pulls
    if stats.collision_count == 0:
        return (frac, 0.0)
    return (frac, stats.collided_sensing_sum / stats.collision_count)
