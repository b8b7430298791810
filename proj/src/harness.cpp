#include "opmbrd/harness.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "opmbrd/decoder.hpp"
#include "opmbrd/similarity.hpp"

namespace opmbrd {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

namespace {

json candidate_to_json(const Candidate& c) {
  json j;
  j["text"] = c.text;
  j["generator_logprob"] = c.generator_logprob ? json(*c.generator_logprob) : json(nullptr);
  j["reference_logprob"] = c.reference_logprob ? json(*c.reference_logprob) : json(nullptr);
  j["step_scores"] = c.step_scores;
  j["answer"] = c.answer ? json(*c.answer) : json(nullptr);
  return j;
}

Candidate candidate_from_json(const json& j) {
  Candidate c;
  c.text = j.at("text").get<std::string>();
  if (j.contains("generator_logprob") && !j["generator_logprob"].is_null())
    c.generator_logprob = j["generator_logprob"].get<double>();
  if (j.contains("reference_logprob") && !j["reference_logprob"].is_null())
    c.reference_logprob = j["reference_logprob"].get<double>();
  if (j.contains("step_scores")) c.step_scores = j["step_scores"].get<std::vector<double>>();
  if (j.contains("answer") && !j["answer"].is_null())
    c.answer = j["answer"].get<std::string>();
  return c;
}

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

}  // namespace

json pool_to_json(const SamplePool& pool) {
  json j;
  j["version"] = 1;
  j["prompt_id"] = pool.prompt_id;
  j["prompt"] = pool.prompt;
  j["seed"] = pool.seed ? json(*pool.seed) : json(nullptr);
  json cands = json::array();
  for (const auto& c : pool.candidates) cands.push_back(candidate_to_json(c));
  j["candidates"] = std::move(cands);
  return j;
}

SamplePool pool_from_json(const json& j) {
  if (j.contains("version") && j["version"].get<int>() != 1)
    throw Error("unsupported pool schema version");
  SamplePool pool;
  pool.prompt_id = j.at("prompt_id").get<std::string>();
  pool.prompt = j.value("prompt", std::string{});
  if (j.contains("seed") && !j["seed"].is_null()) pool.seed = j["seed"].get<std::int64_t>();
  for (const auto& cj : j.at("candidates")) pool.candidates.push_back(candidate_from_json(cj));
  return pool;
}

std::vector<DatasetRecord> load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open dataset file: " + path);
  std::vector<DatasetRecord> records;
  std::unordered_set<std::string> seen;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    DatasetRecord r;
    r.prompt_id = j.at("prompt_id").get<std::string>();
    r.prompt = j.at("prompt").get<std::string>();
    r.gold_answer = j.at("gold_answer").get<std::string>();
    if (j.contains("unit_test") && !j["unit_test"].is_null())
      r.unit_test = j["unit_test"].get<std::string>();
    if (!seen.insert(r.prompt_id).second)
      throw Error("duplicate prompt_id in dataset: " + r.prompt_id);
    records.push_back(std::move(r));
  }
  return records;
}

std::vector<SamplePool> load_pool_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open pool file: " + path);
  std::vector<SamplePool> pools;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    pools.push_back(validate_pool(pool_from_json(json::parse(line))));
  }
  return pools;
}

void save_pool_file(const std::string& path, const std::vector<SamplePool>& pools) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write pool file: " + path);
  for (const auto& pool : pools) out << pool_to_json(pool).dump() << '\n';
}

std::string report_to_csv(const std::vector<ReportRow>& rows) {
  std::ostringstream out;
  out << "method,similarity,beta,budget,pass1_mean,pass1_std,mean_samples,repetitions\n";
  for (const auto& r : rows) {
    out << r.method << ',' << r.similarity << ',' << format_double(r.beta) << ','
        << format_double(r.budget) << ',' << format_double(r.pass1_mean) << ','
        << format_double(r.pass1_std) << ',' << format_double(r.mean_samples) << ','
        << r.repetitions << '\n';
  }
  return out.str();
}

std::string consumption_to_csv(const std::vector<ConsumptionRow>& rows) {
  std::ostringstream out;
  out << "prompt_id,difficulty_rank,mean_samples\n";
  for (const auto& r : rows)
    out << r.prompt_id << ',' << r.difficulty_rank << ',' << format_double(r.mean_samples) << '\n';
  return out.str();
}

// ---------------------------------------------------------------------------
// Pool construction
// ---------------------------------------------------------------------------

bool answer_matches_gold(const Candidate& chosen, const DatasetRecord& record) {
  auto ans = answer_of(chosen);
  if (!ans) return false;
  return *ans == normalize_answer(record.gold_answer);
}

int build_pool_file(const std::vector<DatasetRecord>& dataset, const PoolProvider& provider,
                    int n_samples, const std::string& path) {
  if (n_samples < 1) throw Error("n_samples must be >= 1");

  std::unordered_map<std::string, std::size_t> complete;
  {
    std::ifstream in(path);
    std::string line;
    while (in && std::getline(in, line)) {
      if (line.empty()) continue;
      SamplePool pool = pool_from_json(json::parse(line));
      if (static_cast<int>(pool.size()) >= n_samples) complete[pool.prompt_id] = pool.size();
    }
  }

  std::ofstream out(path, std::ios::app);
  if (!out) throw Error("cannot open pool file for append: " + path);

  int built = 0;
  for (const auto& record : dataset) {
    if (complete.count(record.prompt_id)) continue;
    SamplePool pool = provider(record, n_samples);  // provider errors propagate
    pool.prompt_id = record.prompt_id;
    pool.prompt = record.prompt;
    pool = validate_pool(std::move(pool));
    out << pool_to_json(pool).dump() << '\n';
    out.flush();  // partial progress survives a later provider failure
    ++built;
  }
  return built;
}

// ---------------------------------------------------------------------------
// Experiments
// ---------------------------------------------------------------------------

namespace {

const DatasetRecord& record_for(const std::vector<DatasetRecord>& dataset,
                                const std::string& prompt_id) {
  for (const auto& r : dataset)
    if (r.prompt_id == prompt_id) return r;
  throw Error("pool prompt_id not in dataset: " + prompt_id);
}

struct PromptStats {
  double mean = 0.0;
  double stddev = 0.0;
  int blocks = 0;
};

PromptStats summarize(const std::vector<double>& xs) {
  PromptStats s;
  s.blocks = static_cast<int>(xs.size());
  if (xs.empty()) return s;
  for (double x : xs) s.mean += x;
  s.mean /= xs.size();
  double var = 0.0;
  for (double x : xs) var += (x - s.mean) * (x - s.mean);
  s.stddev = std::sqrt(var / xs.size());
  return s;
}

SamplePool slice(const SamplePool& pool, int begin, int end) {
  SamplePool block;
  block.prompt_id = pool.prompt_id;
  block.prompt = pool.prompt;
  block.seed = pool.seed;
  block.candidates.assign(pool.candidates.begin() + begin, pool.candidates.begin() + end);
  return block;
}

}  // namespace

FixedBudgetOutcome run_fixed_budget(const std::vector<SamplePool>& pools,
                                    const std::vector<DatasetRecord>& dataset,
                                    const DecodeConfig& config, int budget,
                                    const CorrectnessFn& correct) {
  config.validate();
  if (budget < 1) throw Error("budget must be >= 1");
  if (config.method == Method::ope_mbrd)
    throw Error("use run_adaptive for ope_mbrd");

  FixedBudgetOutcome outcome;
  double mean_sum = 0.0, std_sum = 0.0;
  int total_blocks = 0;

  for (const auto& pool : pools) {
    const auto& record = record_for(dataset, pool.prompt_id);
    const int n = static_cast<int>(pool.size());
    if (budget > n)
      throw BudgetTooLargeError("budget " + std::to_string(budget) + " exceeds pool of " +
                                std::to_string(n));
    const int reps = n / budget;
    std::vector<double> scores;
    scores.reserve(reps);
    for (int b = 0; b < reps; ++b) {
      const int begin = b * budget, end = begin + budget;
      SamplePool block = slice(pool, begin, end);
      DecodeResult res = decode(block, config);
      scores.push_back(correct(block.candidates[res.chosen_index], record) ? 1.0 : 0.0);
      outcome.blocks.push_back({pool.prompt_id, begin, end});
    }
    PromptStats st = summarize(scores);
    mean_sum += st.mean;
    std_sum += st.stddev;
    total_blocks += st.blocks;
  }

  ReportRow row;
  row.method = to_string(config.method);
  row.similarity = to_string(config.similarity);
  row.beta = config.beta;
  row.budget = budget;
  row.pass1_mean = pools.empty() ? 0.0 : mean_sum / pools.size();
  row.pass1_std = pools.empty() ? 0.0 : std_sum / pools.size();
  row.mean_samples = budget;
  row.repetitions = total_blocks;
  outcome.rows.push_back(std::move(row));
  return outcome;
}

AdaptiveOutcome run_adaptive(const std::vector<SamplePool>& pools,
                             const std::vector<DatasetRecord>& dataset,
                             const DecodeConfig& config, const CorrectnessFn& correct) {
  config.validate();

  AdaptiveOutcome outcome;
  auto ranking = rank_difficulty(pools, dataset, correct);
  std::unordered_map<std::string, int> rank_of;
  for (std::size_t i = 0; i < ranking.size(); ++i)
    rank_of[ranking[i].first] = static_cast<int>(i);

  double mean_sum = 0.0, std_sum = 0.0, samples_sum = 0.0;
  int total_blocks = 0;

  for (const auto& pool : pools) {
    const auto& record = record_for(dataset, pool.prompt_id);
    const int n = static_cast<int>(pool.size());
    int pos = 0;
    std::vector<double> scores;
    std::vector<double> consumed;
    while (pos < n) {
      int cursor = pos;
      CandidateStream stream = [&pool, &cursor, n]() -> std::optional<Candidate> {
        if (cursor >= n) return std::nullopt;
        return pool.candidates[cursor++];
      };
      DecodeResult res = decode_ope_mbrd(stream, config, config.similarity, pool.prompt_id);
      outcome.blocks.push_back({pool.prompt_id, pos, pos + res.samples_consumed});
      scores.push_back(
          correct(pool.candidates[pos + res.chosen_index], record) ? 1.0 : 0.0);
      consumed.push_back(res.samples_consumed);
      pos += res.samples_consumed;
    }
    PromptStats st = summarize(scores);
    mean_sum += st.mean;
    std_sum += st.stddev;
    total_blocks += st.blocks;
    double mean_consumed = summarize(consumed).mean;
    samples_sum += mean_consumed;
    outcome.per_prompt.push_back({pool.prompt_id, rank_of[pool.prompt_id], mean_consumed});
  }

  ReportRow row;
  row.method = "ope_mbrd";
  row.similarity = to_string(config.similarity);
  row.beta = config.beta;
  row.budget = config.target_optimal_samples;
  row.pass1_mean = pools.empty() ? 0.0 : mean_sum / pools.size();
  row.pass1_std = pools.empty() ? 0.0 : std_sum / pools.size();
  row.mean_samples = pools.empty() ? 0.0 : samples_sum / pools.size();
  row.repetitions = total_blocks;
  outcome.rows.push_back(std::move(row));
  return outcome;
}

std::vector<std::pair<std::string, double>> rank_difficulty(
    const std::vector<SamplePool>& pools, const std::vector<DatasetRecord>& dataset,
    const CorrectnessFn& correct) {
  std::vector<std::pair<std::string, double>> ranked;
  for (const auto& pool : pools) {
    const auto& record = record_for(dataset, pool.prompt_id);
    double hits = 0.0;
    for (const auto& c : pool.candidates)
      if (correct(c, record)) hits += 1.0;
    ranked.emplace_back(pool.prompt_id, pool.candidates.empty() ? 0.0 : hits / pool.size());
  }
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;  // easy first
    return a.first < b.first;
  });
  return ranked;
}

}  // namespace opmbrd
