#ifndef OPMBRD_CORE_HPP
#define OPMBRD_CORE_HPP

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace opmbrd {

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct EmptyPoolError : Error {
  EmptyPoolError() : Error("pool has no candidates") {}
};
struct MalformedCandidateError : Error {
  using Error::Error;
};
struct MissingRewardError : Error {
  using Error::Error;
};
struct NonPositiveBetaError : Error {
  NonPositiveBetaError() : Error("beta must be > 0") {}
};
struct NoStepsError : Error {
  NoStepsError() : Error("candidate has no step scores") {}
};
struct NonFiniteScoreError : Error {
  using Error::Error;
};
struct DrawCountMismatchError : Error {
  using Error::Error;
};
struct InvalidWorldError : Error {
  using Error::Error;
};
struct BudgetTooLargeError : Error {
  using Error::Error;
};
struct AnchorUnavailableError : Error {
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

/// One sampled model output. Log-probabilities are natural-log and
/// sequence-level; step_scores carry one PRM score per reasoning step.
struct Candidate {
  std::string text;
  std::optional<double> generator_logprob;
  std::optional<double> reference_logprob;
  std::vector<double> step_scores;
  std::optional<std::string> answer;  // cached extracted answer

  /// log p_R(y|x) - log p(y|x); zero when either side is absent
  /// (reference defaults to the generator).
  double log_ratio() const {
    if (!generator_logprob || !reference_logprob) return 0.0;
    return *reference_logprob - *generator_logprob;
  }

  double mean_step_score() const {
    if (step_scores.empty()) throw MissingRewardError("candidate has no step scores");
    double sum = 0.0;
    for (double s : step_scores) sum += s;
    return sum / static_cast<double>(step_scores.size());
  }
};

/// The unit every decoder operates on: an ordered, index-addressable set of
/// candidates for a single prompt.
struct SamplePool {
  std::string prompt_id;
  std::string prompt;
  std::vector<Candidate> candidates;
  std::optional<std::int64_t> seed;

  std::size_t size() const { return candidates.size(); }
};

enum class Method { greedy_pick, bon, mbrd, op_mbrd, ope_mbrd };
enum class SimilarityKind { exact_match, rouge, em_times_reward };

std::string to_string(Method m);
std::string to_string(SimilarityKind k);
Method method_from_string(const std::string& s);
SimilarityKind similarity_from_string(const std::string& s);

struct DecodeConfig {
  double beta = 0.1;
  Method method = Method::op_mbrd;
  SimilarityKind similarity = SimilarityKind::exact_match;
  double target_optimal_samples = 1.0;  // OPE-MBRD only
  double max_sample_multiplier = 10.0;
  double reward_max = 1.0;
  // tie_break is a fixed policy: lowest candidate index.

  void validate() const {
    if (!(beta > 0.0)) throw NonPositiveBetaError();
    if (!(max_sample_multiplier >= 1.0)) throw Error("max_sample_multiplier must be >= 1");
    if (!(target_optimal_samples > 0.0)) throw Error("target_optimal_samples must be > 0");
  }
};

/// Acceptance probabilities, self-normalized weights and the expected number
/// of optimal-policy samples for one pool.
struct WeightVector {
  std::vector<double> acceptance;  // p(accept y_n)
  std::vector<double> weights;     // normalized, sum to 1
  double n_hat = 0.0;              // sum of acceptance
  double beta = 0.0;
};

struct DecodeResult {
  int chosen_index = 0;
  std::vector<double> q_scores;
  std::optional<WeightVector> weights;
  int samples_consumed = 0;
  Method method = Method::mbrd;
  bool stream_exhausted = false;  // OPE-MBRD stream ended before stopping
};

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// Clamps step scores into [0,1], fills reference_logprob from
/// generator_logprob when absent, rejects empty pools and empty texts.
/// Idempotent.
SamplePool validate_pool(SamplePool pool);

/// Lowest index among the maxima of q.
int argmax_lowest(const std::vector<double>& q);

}  // namespace opmbrd

#endif  // OPMBRD_CORE_HPP
