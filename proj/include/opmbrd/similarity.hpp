#ifndef OPMBRD_SIMILARITY_HPP
#define OPMBRD_SIMILARITY_HPP

#include <optional>
#include <string>

#include "opmbrd/core.hpp"

namespace opmbrd {

/// Trim, collapse internal whitespace runs to single spaces, strip one
/// trailing period.
std::string normalize_answer(const std::string& raw);

/// Contents of the last \boxed{...} in `text`, brace-balanced, normalized.
/// Absence is a value, not an error.
std::optional<std::string> extract_answer(const std::string& text);

/// Cached answer if present, else extracted on demand.
std::optional<std::string> answer_of(const Candidate& c);

/// 1 iff both answers are present and equal; absent-vs-absent is 0.
double exact_match(const Candidate& a, const Candidate& b);

/// Rouge-L F-measure over whitespace tokens of the full texts.
/// Both empty -> 1, exactly one empty -> 0.
double rouge(const Candidate& a, const Candidate& b);

/// exact_match(a,b) * mean(a.step_scores). Reward comes from the first
/// argument (the expectation variable).
double em_times_reward(const Candidate& a, const Candidate& b);

double similarity(SimilarityKind kind, const Candidate& a, const Candidate& b);

}  // namespace opmbrd

#endif  // OPMBRD_SIMILARITY_HPP
