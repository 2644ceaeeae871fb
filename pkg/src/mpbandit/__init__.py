"""Multi-player multi-armed bandit simulation and benchmarking.

Several players pick among the same Bernoulli arms each round; picking the
same arm voids everyone's reward for it. The package provides the sampling
model under three feedback regimes, a family of decentralized policies and
a centralized baseline, regret accounting against closed-form bounds, an
exact small-depth enumeration of self-play failure states, and a CLI that
writes reproducible CSV/JSON experiment artifacts.
"""

__version__ = "0.1.0"

from .core import (BanditInstance, MODELS, PlayerObservation, RoundResult,
                   censor, m_best_m_worst, resolve_collisions, sample_round)
from .indices import (ArmStatistics, exploration_f, kl_bernoulli,
                      kl_bernoulli_derivative, klucb_index, selfish_index,
                      selfish_penalty_decomposition, ucb_index)
from .analysis import (DecompositionTerms, EpisodeCounters, LowerBoundReport,
                       check_lemma2, check_lemma3, decomposition,
                       lower_bound_ours, lower_bound_report, lower_bound_zhao,
                       pseudo_regret, suboptimal_draw_upper_bound)
from .simulator import (EpisodeTrace, MonteCarloSummary, SimulationConfig,
                        checkpoint_schedule, derive_seed, run_episode,
                        run_episode_reference, run_monte_carlo)
from .tree import (Configuration, ResourceCapError, TreeNode,
                   absorption_probability, detect_absorbing, enumerate_tree,
                   mc_absorption_frequency)
