#include "opmbrd/similarity.hpp"

#include <cctype>
#include <sstream>
#include <vector>

namespace opmbrd {

std::string normalize_answer(const std::string& raw) {
  std::string out;
  out.reserve(raw.size());
  bool in_space = true;  // leading whitespace dropped
  for (char ch : raw) {
    if (std::isspace(static_cast<unsigned char>(ch))) {
      in_space = true;
    } else {
      if (in_space && !out.empty()) out.push_back(' ');
      out.push_back(ch);
      in_space = false;
    }
  }
  if (!out.empty() && out.back() == '.') out.pop_back();
  while (!out.empty() && out.back() == ' ') out.pop_back();
  return out;
}

std::optional<std::string> extract_answer(const std::string& text) {
  static const std::string marker = "\\boxed{";
  std::size_t best = std::string::npos;
  for (std::size_t pos = text.find(marker); pos != std::string::npos;
       pos = text.find(marker, pos + 1)) {
    best = pos;
  }
  if (best == std::string::npos) return std::nullopt;

  std::size_t start = best + marker.size();
  int depth = 1;
  for (std::size_t i = start; i < text.size(); ++i) {
    if (text[i] == '{') {
      ++depth;
    } else if (text[i] == '}') {
      --depth;
      if (depth == 0) return normalize_answer(text.substr(start, i - start));
    }
  }
  return std::nullopt;  // unbalanced, treat as no answer
}

std::optional<std::string> answer_of(const Candidate& c) {
  if (c.answer) return c.answer;
  return extract_answer(c.text);
}

double exact_match(const Candidate& a, const Candidate& b) {
  auto aa = answer_of(a);
  auto ab = answer_of(b);
  if (!aa || !ab) return 0.0;
  return *aa == *ab ? 1.0 : 0.0;
}

namespace {

std::vector<std::string> whitespace_tokens(const std::string& text) {
  std::vector<std::string> toks;
  std::istringstream in(text);
  std::string tok;
  while (in >> tok) toks.push_back(std::move(tok));
  return toks;
}

std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  const std::size_t m = b.size();
  std::vector<std::size_t> prev(m + 1, 0), cur(m + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      if (a[i - 1] == b[j - 1])
        cur[j] = prev[j - 1] + 1;
      else
        cur[j] = std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[m];
}

}  // namespace

double rouge(const Candidate& a, const Candidate& b) {
  auto ta = whitespace_tokens(a.text);
  auto tb = whitespace_tokens(b.text);
  if (ta.empty() && tb.empty()) return 1.0;
  if (ta.empty() || tb.empty()) return 0.0;
  std::size_t lcs = lcs_length(ta, tb);
  return 2.0 * static_cast<double>(lcs) / static_cast<double>(ta.size() + tb.size());
}

double em_times_reward(const Candidate& a, const Candidate& b) {
  double reward = a.mean_step_score();  // throws MissingRewardError on empty
  double em = exact_match(a, b);
  return em == 0.0 ? 0.0 : em * reward;
}

double similarity(SimilarityKind kind, const Candidate& a, const Candidate& b) {
  switch (kind) {
    case SimilarityKind::exact_match: return exact_match(a, b);
    case SimilarityKind::rouge: return rouge(a, b);
    case SimilarityKind::em_times_reward: return em_times_reward(a, b);
  }
  throw Error("unknown similarity enum");
}

}  // namespace opmbrd
