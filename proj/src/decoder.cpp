#include "opmbrd/decoder.hpp"

#include <cmath>

#include "opmbrd/similarity.hpp"

namespace opmbrd {

namespace {

// Guard against the stopping comparison missing the threshold by one ulp
// when acceptance probabilities round (e.g. exp(log(0.5)) sums to 2 - 1ulp).
constexpr double kStopEpsilon = 1e-9;

DecodeResult make_result(const SamplePool& pool, std::vector<double> q, Method method) {
  DecodeResult r;
  r.q_scores = std::move(q);
  r.chosen_index = argmax_lowest(r.q_scores);
  r.samples_consumed = static_cast<int>(pool.size());
  r.method = method;
  return r;
}

}  // namespace

AdaptiveState::AdaptiveState(std::string prompt_id, const DecodeConfig& config)
    : target(config.target_optimal_samples),
      cap(static_cast<int>(std::ceil(config.target_optimal_samples * config.max_sample_multiplier))) {
  config.validate();
  pool.prompt_id = std::move(prompt_id);
}

void AdaptiveState::push(Candidate c, const DecodeConfig& config) {
  if (c.log_ratio() != 0.0)
    throw AnchorUnavailableError(
        "OPE-MBRD requires the analytic anchor (PRM rewards with p_R = p); "
        "candidate has a nonzero log-ratio");
  for (double& s : c.step_scores) s = std::clamp(s, 0.0, 1.0);
  if (!c.reference_logprob && c.generator_logprob) c.reference_logprob = c.generator_logprob;
  n_hat += std::exp(candidate_log_score(c, config));
  pool.candidates.push_back(std::move(c));
  stopped = n_hat + kStopEpsilon >= target || static_cast<int>(pool.size()) >= cap;
}

DecodeResult decode_greedy(const SamplePool& pool) {
  if (pool.candidates.empty()) throw EmptyPoolError();
  std::vector<double> q(pool.size(), 0.0);
  q[0] = 1.0;
  return make_result(pool, std::move(q), Method::greedy_pick);
}

DecodeResult decode_bon(const SamplePool& pool) {
  if (pool.candidates.empty()) throw EmptyPoolError();
  std::vector<double> q;
  q.reserve(pool.size());
  for (const auto& c : pool.candidates) q.push_back(c.mean_step_score());
  return make_result(pool, std::move(q), Method::bon);
}

DecodeResult decode_mbrd(const SamplePool& pool, SimilarityKind kind) {
  return make_result(pool, mbr_scores(pool, nullptr, kind), Method::mbrd);
}

DecodeResult decode_op_mbrd(const SamplePool& pool, const DecodeConfig& config,
                            SimilarityKind kind) {
  WeightVector wv = snis_weights(pool, config);
  DecodeResult r = make_result(pool, mbr_scores(pool, &wv, kind), Method::op_mbrd);
  r.weights = std::move(wv);
  return r;
}

DecodeResult decode_ope_mbrd(CandidateStream source, const DecodeConfig& config,
                             SimilarityKind kind, const std::string& prompt_id) {
  AdaptiveState state(prompt_id, config);
  bool exhausted = false;
  while (!state.stopped) {
    std::optional<Candidate> next = source();
    if (!next) {
      exhausted = true;
      break;
    }
    state.push(std::move(*next), config);
  }
  if (state.pool.candidates.empty()) throw EmptyPoolError();

  DecodeResult r = decode_op_mbrd(state.pool, config, kind);
  r.method = Method::ope_mbrd;
  r.samples_consumed = static_cast<int>(state.pool.size());
  r.stream_exhausted = exhausted;
  return r;
}

DecodeResult decode(const SamplePool& pool, const DecodeConfig& config) {
  switch (config.method) {
    case Method::greedy_pick: return decode_greedy(pool);
    case Method::bon: return decode_bon(pool);
    case Method::mbrd: return decode_mbrd(pool, config.similarity);
    case Method::op_mbrd: return decode_op_mbrd(pool, config, config.similarity);
    case Method::ope_mbrd:
      throw Error("ope_mbrd needs a candidate stream; use decode_ope_mbrd");
  }
  throw Error("unknown method enum");
}

}  // namespace opmbrd
