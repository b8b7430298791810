#ifndef OPMBRD_DECODER_HPP
#define OPMBRD_DECODER_HPP

#include <functional>
#include <optional>

#include "opmbrd/core.hpp"
#include "opmbrd/estimator.hpp"

namespace opmbrd {

/// Pull-based candidate source for the adaptive decoder; empty optional
/// signals exhaustion.
using CandidateStream = std::function<std::optional<Candidate>()>;

/// State of one OPE-MBRD episode: the pool grows one candidate at a time
/// until n_hat reaches the target or the real-sample cap is hit.
struct AdaptiveState {
  SamplePool pool;
  double n_hat = 0.0;
  double target = 1.0;
  int cap = 10;
  bool stopped = false;

  AdaptiveState(std::string prompt_id, const DecodeConfig& config);

  /// Appends a validated candidate and updates the stopping state.
  void push(Candidate c, const DecodeConfig& config);
};

/// greedy_pick baseline: candidate 0, the "regular decoding" reference point.
DecodeResult decode_greedy(const SamplePool& pool);

/// Best-of-N on the mean PRM step score.
DecodeResult decode_bon(const SamplePool& pool);

/// Plain Monte Carlo MBRD (uniform weights). Exact match makes this
/// majority voting.
DecodeResult decode_mbrd(const SamplePool& pool, SimilarityKind kind);

/// MBRD under the SNIS optimal-policy weights.
DecodeResult decode_op_mbrd(const SamplePool& pool, const DecodeConfig& config,
                            SimilarityKind kind);

/// Adaptive variant: pulls candidates one at a time until the expected
/// optimal-sample count reaches config.target_optimal_samples or the pool
/// hits ceil(target * max_sample_multiplier) candidates, then decodes the
/// accumulated pool with decode_op_mbrd. A stream that ends early decodes
/// what was gathered with stream_exhausted set.
DecodeResult decode_ope_mbrd(CandidateStream source, const DecodeConfig& config,
                             SimilarityKind kind, const std::string& prompt_id = "");

/// Dispatch on config.method (ope_mbrd not available here; it needs a stream).
DecodeResult decode(const SamplePool& pool, const DecodeConfig& config);

}  // namespace opmbrd

#endif  // OPMBRD_DECODER_HPP
