#ifndef OPMBRD_ESTIMATOR_HPP
#define OPMBRD_ESTIMATOR_HPP

#include <span>
#include <vector>

#include "opmbrd/core.hpp"

namespace opmbrd {

/// Where the acceptance exponent is anchored. Weights are identical either
/// way (softmax shift invariance); acceptance probabilities and N-hat are
/// only comparable across growing pools under the analytic anchor.
enum class Anchor {
  analytic,       // reward_max with zero log-ratio (the PRM, p_R = p setting)
  empirical_max,  // max of the pool's log-scores
};

/// R~ = reward/beta + (ref_logprob - gen_logprob).
double tilde_reward(double reward, double gen_logprob, double ref_logprob, double beta);

/// Per-candidate log acceptance under the step-count-normalized PRM rule:
/// (1/(beta*T)) * sum_t(score_t - reward_max). Always <= 0 for scores bounded
/// by reward_max.
double prm_log_acceptance(std::span<const double> step_scores, double beta, double reward_max);

/// PRM log acceptance plus the reference/generator log-ratio. Candidates
/// without steps count as a single step of score 0.
double candidate_log_score(const Candidate& c, const DecodeConfig& config);

/// True when every candidate's log-ratio term is zero, i.e. acceptance can be
/// anchored at the analytic bound.
bool analytic_anchor_available(const SamplePool& pool);

/// Numerically stable softmax via log-sum-exp.
std::vector<double> softmax(std::span<const double> logs);

WeightVector snis_weights(const SamplePool& pool, const DecodeConfig& config, Anchor anchor);

/// Anchor chosen automatically: analytic when all log-ratios vanish,
/// empirical max otherwise.
WeightVector snis_weights(const SamplePool& pool, const DecodeConfig& config);

/// Q[j] = sum_n w_n * M(y_n, y_j); uniform weights when `weights` is null.
std::vector<double> mbr_scores(const SamplePool& pool, const WeightVector* weights,
                               SimilarityKind kind);

/// Rejection-sampling estimator used as a test oracle: candidate n is
/// accepted iff acceptance_n >= u_n, and the accepted similarity rows are
/// normalized by the expected accepted count (n_hat) so that the estimator's
/// mean over draws equals the SNIS estimate. All-zero when nothing accepted.
std::vector<double> naive_rejection_estimate(const SamplePool& pool, const DecodeConfig& config,
                                             std::span<const double> uniform_draws,
                                             SimilarityKind kind);

/// N-hat: the sum of analytically anchored acceptance probabilities (Anchor
/// per config; see snis_weights).
double expected_optimal_samples(const SamplePool& pool, const DecodeConfig& config);

}  // namespace opmbrd

#endif  // OPMBRD_ESTIMATOR_HPP
