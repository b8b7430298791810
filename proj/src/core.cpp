#include "opmbrd/core.hpp"

namespace opmbrd {

std::string to_string(Method m) {
  switch (m) {
    case Method::greedy_pick: return "greedy_pick";
    case Method::bon: return "bon";
    case Method::mbrd: return "mbrd";
    case Method::op_mbrd: return "op_mbrd";
    case Method::ope_mbrd: return "ope_mbrd";
  }
  throw Error("unknown method enum");
}

std::string to_string(SimilarityKind k) {
  switch (k) {
    case SimilarityKind::exact_match: return "exact_match";
    case SimilarityKind::rouge: return "rouge";
    case SimilarityKind::em_times_reward: return "em_times_reward";
  }
  throw Error("unknown similarity enum");
}

Method method_from_string(const std::string& s) {
  if (s == "greedy_pick") return Method::greedy_pick;
  if (s == "bon") return Method::bon;
  if (s == "mbrd") return Method::mbrd;
  if (s == "op_mbrd") return Method::op_mbrd;
  if (s == "ope_mbrd") return Method::ope_mbrd;
  throw Error("unknown method: " + s);
}

SimilarityKind similarity_from_string(const std::string& s) {
  if (s == "exact_match") return SimilarityKind::exact_match;
  if (s == "rouge") return SimilarityKind::rouge;
  if (s == "em_times_reward") return SimilarityKind::em_times_reward;
  throw Error("unknown similarity: " + s);
}

SamplePool validate_pool(SamplePool pool) {
  if (pool.candidates.empty()) throw EmptyPoolError();
  for (auto& c : pool.candidates) {
    if (c.text.empty())
      throw MalformedCandidateError("candidate with empty text in pool " + pool.prompt_id);
    for (double& s : c.step_scores) s = std::clamp(s, 0.0, 1.0);
    if (!c.reference_logprob && c.generator_logprob)
      c.reference_logprob = c.generator_logprob;
  }
  return pool;
}

int argmax_lowest(const std::vector<double>& q) {
  if (q.empty()) throw Error("argmax over empty vector");
  int best = 0;
  for (int i = 1; i < static_cast<int>(q.size()); ++i)
    if (q[i] > q[best]) best = i;
  return best;
}

}  // namespace opmbrd
