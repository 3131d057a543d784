"""Sequential prediction of finite-alphabet stochastic processes.

Simulation and analysis of a learner that predicts each next symbol by
minimizing expected loss under a model of the data process: divergence
measures between model and truth, regret bounds driven by those divergences,
Bayes mixture predictors for unknown Markov processes, and a lower-bound
construction showing which high-probability guarantees are unattainable.
"""

from .core import (AUX_STREAM, Alphabet, KernelCursor, LossFunction, Pmf,
                   ProductDistribution, SequentialDistribution,
                   TabularDistribution, classification_loss, dirac_pmf,
                   draw_symbol, episode_key, kernel_eval, make_rng,
                   sample_sequence, sequence_prob, table_loss, uniform_pmf)
from .divergences import (DivergenceTrace, ExpectedDivergences,
                          EXACT_ENUMERATION_CAP, expected_quantities,
                          instantaneous_trace, joint_kl, kl_divergence,
                          tv_distance)
from .errors import CapacityError, DegenerateInputError, InvalidInputError
from .impossibility import (ImpossibilityInstance, LowerBoundWitness,
                            WitnessVerification, WITNESS_PSI, build_instance,
                            choose_parameters, closed_form_avg_tv_given_first,
                            closed_form_expected_tv, closed_form_joint_kl,
                            regret_closed_form, verify_witness)
from .experiments import MixtureExperimentResult, run_mixture_experiment
from .markov import (ContextCounts, LaplaceMixtureDistribution, MarkovDistribution,
                     MarkovParams, McmcConfig, McmcMixtureDistribution,
                     McmcPredictive, context_index, context_of,
                     expected_divergences, history_counts,
                     laplace_mixture_predictive, markov_kernel,
                     mcmc_mixture_predictive, quadrature_mixture_predictive,
                     sample_theta)
from .predictors import (KernelPolicy, Policy, PolicyCursor,
                         cross_entropy_argmin_check, mismatched_policy,
                         optimal_policy, q_from_policy_classification,
                         verify_policy_representation)
from .regret import (BoundReport, QUANTILE_LEVELS, RegretSummary, RegretTrace,
                     avg_tv_concentration_bound, avg_tv_concentration_bound_kl,
                     empirical_coverage, expected_regret_bound_kl,
                     expected_regret_bound_tv, highprob_bound_expected_tv,
                     highprob_bound_kl, highprob_bound_realized_tv,
                     monte_carlo_summary, run_episode,
                     summarize_running_averages)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
