#ifndef OPMBRD_PROVIDERS_HPP
#define OPMBRD_PROVIDERS_HPP

#include <chrono>
#include <cstdint>
#include <string>
#include <vector>

#include "opmbrd/core.hpp"

namespace opmbrd {

// ---------------------------------------------------------------------------
// Deterministic RNG
// ---------------------------------------------------------------------------

/// SplitMix64 stream. The standard library distributions are not pinned
/// across implementations, so all sampling here is hand-derived from the raw
/// stream to keep (world, count, seed) -> pool byte-identical everywhere.
class DeterministicRng {
 public:
  explicit DeterministicRng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64();
  /// Uniform in [0, 1), 53-bit resolution.
  double next_uniform();
  /// Standard normal via Box-Muller.
  double next_gaussian();
  /// Index drawn from the categorical given by `probs` (inverse CDF).
  std::size_t next_categorical(const std::vector<double>& probs);

 private:
  std::uint64_t state_;
};

// ---------------------------------------------------------------------------
// Synthetic world
// ---------------------------------------------------------------------------

struct PrmProfile {
  double mean = 1.0;       // mean step score in [0,1]
  int step_count = 1;      // steps per candidate
  double noise_scale = 0;  // truncated-Gaussian noise, clamped to [0,1]
};

/// Finite categorical generator over a handful of answer strings with a
/// synthetic PRM; the enumeration oracle for the optimal policy lives on top
/// of this.
struct SyntheticWorld {
  std::vector<std::string> answers;
  std::vector<double> answer_probs;
  int correct_index = 0;
  std::vector<PrmProfile> prm_profile;  // one per answer
  std::uint64_t seed = 0;

  void validate() const;
};

SamplePool mock_sample(const SyntheticWorld& world, int count, std::uint64_t seed);

/// Exact optimal-policy mass per answer by enumeration:
/// p*(a) proportional to p(a) * exp((mean_a - reward_max)/beta). Requires
/// noise-free profiles so per-answer rewards are deterministic.
std::vector<double> enumerate_optimal_policy(const SyntheticWorld& world, double beta,
                                             double reward_max = 1.0);

// ---------------------------------------------------------------------------
// Step segmentation
// ---------------------------------------------------------------------------

/// Splits on the delimiter and drops empty/whitespace-only segments; a text
/// with no delimiter is one step.
std::vector<std::string> split_steps(const std::string& text, const std::string& delimiter = "\n\n");

// ---------------------------------------------------------------------------
// HTTP providers
// ---------------------------------------------------------------------------

struct ProviderConfig {
  std::string endpoint_url;
  std::string model_name;
  double temperature = 0.7;
  int max_tokens = 1024;
  int request_parallelism = 4;
  std::chrono::milliseconds timeout{30000};
  std::string auth_env;  // env var holding the bearer token
  std::string step_delimiter = "\n\n";
};

struct UnreachableError : Error {
  using Error::Error;
};
struct AuthFailureError : Error {
  using Error::Error;
};
struct ScoreShapeMismatch {
  std::size_t candidate_index;
  std::string detail;
};

/// Pool plus degradation flags: partial() when some requests failed after
/// retries; unscored lists candidates an http_score pass could not attach
/// scores to.
struct ProviderResult {
  SamplePool pool;
  int failed_requests = 0;
  std::vector<ScoreShapeMismatch> unscored;

  bool partial() const { return failed_requests > 0; }
};

/// Samples `count` completions from an OpenAI-compatible endpoint with
/// bounded parallelism and 3-attempt exponential backoff. Missing logprob
/// support leaves generator_logprob absent.
ProviderResult http_sample(const std::string& prompt, int count, const ProviderConfig& config);

/// Sends {prompt, steps} per candidate to a PRM endpoint and attaches the
/// clamped scores; a steps/scores length mismatch leaves that candidate
/// unscored and flagged.
ProviderResult http_score(SamplePool pool, const ProviderConfig& config);

}  // namespace opmbrd

#endif  // OPMBRD_PROVIDERS_HPP
