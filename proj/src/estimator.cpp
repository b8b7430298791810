#include "opmbrd/estimator.hpp"

#include <cmath>

#include "opmbrd/similarity.hpp"

namespace opmbrd {

double tilde_reward(double reward, double gen_logprob, double ref_logprob, double beta) {
  if (!(beta > 0.0)) throw NonPositiveBetaError();
  return reward / beta + (ref_logprob - gen_logprob);
}

double prm_log_acceptance(std::span<const double> step_scores, double beta, double reward_max) {
  if (!(beta > 0.0)) throw NonPositiveBetaError();
  if (step_scores.empty()) throw NoStepsError();
  double sum = 0.0;
  for (double s : step_scores) sum += s - reward_max;
  return sum / (beta * static_cast<double>(step_scores.size()));
}

double candidate_log_score(const Candidate& c, const DecodeConfig& config) {
  // Zero steps: maximally pessimistic single step of score 0.
  static const double kZeroStep[] = {0.0};
  std::span<const double> steps =
      c.step_scores.empty() ? std::span<const double>(kZeroStep) : std::span<const double>(c.step_scores);
  return prm_log_acceptance(steps, config.beta, config.reward_max) + c.log_ratio();
}

bool analytic_anchor_available(const SamplePool& pool) {
  for (const auto& c : pool.candidates)
    if (c.log_ratio() != 0.0) return false;
  return true;
}

std::vector<double> softmax(std::span<const double> logs) {
  double max_log = -std::numeric_limits<double>::infinity();
  for (double l : logs) max_log = std::max(max_log, l);
  std::vector<double> out(logs.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logs.size(); ++i) {
    out[i] = std::exp(logs[i] - max_log);
    sum += out[i];
  }
  for (double& w : out) w /= sum;
  return out;
}

WeightVector snis_weights(const SamplePool& pool, const DecodeConfig& config, Anchor anchor) {
  config.validate();
  if (pool.candidates.empty()) throw EmptyPoolError();

  const std::size_t n = pool.candidates.size();
  std::vector<double> logs(n);
  for (std::size_t i = 0; i < n; ++i) {
    logs[i] = candidate_log_score(pool.candidates[i], config);
    if (std::isnan(logs[i]) || std::isinf(logs[i]))
      throw NonFiniteScoreError("non-finite log-score for candidate " + std::to_string(i));
  }

  WeightVector wv;
  wv.beta = config.beta;
  wv.weights = softmax(logs);
  wv.acceptance.resize(n);
  if (anchor == Anchor::analytic) {
    // Exponent already anchored at reward_max with zero log-ratio; logs <= 0.
    for (std::size_t i = 0; i < n; ++i) wv.acceptance[i] = std::exp(logs[i]);
  } else {
    double max_log = *std::max_element(logs.begin(), logs.end());
    for (std::size_t i = 0; i < n; ++i) wv.acceptance[i] = std::exp(logs[i] - max_log);
  }
  wv.n_hat = 0.0;
  for (double a : wv.acceptance) wv.n_hat += a;
  return wv;
}

WeightVector snis_weights(const SamplePool& pool, const DecodeConfig& config) {
  Anchor anchor = analytic_anchor_available(pool) ? Anchor::analytic : Anchor::empirical_max;
  return snis_weights(pool, config, anchor);
}

std::vector<double> mbr_scores(const SamplePool& pool, const WeightVector* weights,
                               SimilarityKind kind) {
  const std::size_t n = pool.candidates.size();
  if (n == 0) throw EmptyPoolError();
  if (weights && weights->weights.size() != n)
    throw Error("weight vector size does not match pool");

  const double uniform = 1.0 / static_cast<double>(n);
  std::vector<double> q(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double w = weights ? weights->weights[i] : uniform;
    if (w == 0.0) continue;
    for (std::size_t j = 0; j < n; ++j)
      q[j] += w * similarity(kind, pool.candidates[i], pool.candidates[j]);
  }
  return q;
}

std::vector<double> naive_rejection_estimate(const SamplePool& pool, const DecodeConfig& config,
                                             std::span<const double> uniform_draws,
                                             SimilarityKind kind) {
  const std::size_t n = pool.candidates.size();
  if (uniform_draws.size() != n)
    throw DrawCountMismatchError("expected " + std::to_string(n) + " draws, got " +
                                 std::to_string(uniform_draws.size()));

  WeightVector wv = snis_weights(pool, config);
  std::vector<double> q(n, 0.0);
  std::size_t accepted = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (wv.acceptance[i] < uniform_draws[i]) continue;
    ++accepted;
    for (std::size_t j = 0; j < n; ++j)
      q[j] += similarity(kind, pool.candidates[i], pool.candidates[j]);
  }
  if (accepted == 0) return std::vector<double>(n, 0.0);
  for (double& v : q) v /= wv.n_hat;
  return q;
}

double expected_optimal_samples(const SamplePool& pool, const DecodeConfig& config) {
  return snis_weights(pool, config).n_hat;
}

}  // namespace opmbrd
