#ifndef OPMBRD_HARNESS_HPP
#define OPMBRD_HARNESS_HPP

#include <functional>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "opmbrd/core.hpp"
#include "opmbrd/providers.hpp"

namespace opmbrd {

// ---------------------------------------------------------------------------
// Records and files
// ---------------------------------------------------------------------------

struct DatasetRecord {
  std::string prompt_id;
  std::string prompt;
  std::string gold_answer;
  std::optional<std::string> unit_test;
};

struct ReportRow {
  std::string method;
  std::string similarity;
  double beta = 0.0;
  double budget = 0.0;  // nominal samples or the adaptive target
  double pass1_mean = 0.0;
  double pass1_std = 0.0;
  double mean_samples = 0.0;
  int repetitions = 0;
};

struct ConsumptionRow {
  std::string prompt_id;
  int difficulty_rank = 0;
  double mean_samples = 0.0;
};

/// One decoded block, kept for the disjointness audit.
struct BlockSpan {
  std::string prompt_id;
  int begin = 0;  // candidate index range [begin, end)
  int end = 0;
};

nlohmann::json pool_to_json(const SamplePool& pool);
SamplePool pool_from_json(const nlohmann::json& j);

std::vector<DatasetRecord> load_dataset(const std::string& path);
std::vector<SamplePool> load_pool_file(const std::string& path);
void save_pool_file(const std::string& path, const std::vector<SamplePool>& pools);

std::string report_to_csv(const std::vector<ReportRow>& rows);
std::string consumption_to_csv(const std::vector<ConsumptionRow>& rows);

// ---------------------------------------------------------------------------
// Pool construction
// ---------------------------------------------------------------------------

/// Produces `count` candidates for one prompt; harness wiring point for mock
/// and HTTP providers.
using PoolProvider = std::function<SamplePool(const DatasetRecord& record, int count)>;

/// Correctness predicate for a chosen candidate. The default checks the
/// extracted answer against the normalized gold answer; code tasks may plug
/// in a unit-test runner.
using CorrectnessFn = std::function<bool(const Candidate& chosen, const DatasetRecord& record)>;

bool answer_matches_gold(const Candidate& chosen, const DatasetRecord& record);

/// Persists one pool per record with exactly n_samples candidates each.
/// Resumable: records already complete in the file are skipped. Returns the
/// number of pools newly built.
int build_pool_file(const std::vector<DatasetRecord>& dataset, const PoolProvider& provider,
                    int n_samples, const std::string& path);

// ---------------------------------------------------------------------------
// Experiments
// ---------------------------------------------------------------------------

struct FixedBudgetOutcome {
  std::vector<ReportRow> rows;  // one aggregate row
  std::vector<BlockSpan> blocks;
};

/// Partitions each pool into floor(N/k) disjoint consecutive blocks of size
/// k, decodes each block, and scores pass@1 against the dataset gold.
/// Averages blocks within prompt first, then across prompts; pass1_std is
/// the block-level std within prompt, averaged across prompts.
FixedBudgetOutcome run_fixed_budget(const std::vector<SamplePool>& pools,
                                    const std::vector<DatasetRecord>& dataset,
                                    const DecodeConfig& config, int budget,
                                    const CorrectnessFn& correct = answer_matches_gold);

struct AdaptiveOutcome {
  std::vector<ReportRow> rows;
  std::vector<ConsumptionRow> per_prompt;
  std::vector<BlockSpan> blocks;
};

/// Streams each pool through repeated OPE-MBRD episodes, consuming disjoint
/// variable-size blocks until the pool is exhausted.
AdaptiveOutcome run_adaptive(const std::vector<SamplePool>& pools,
                             const std::vector<DatasetRecord>& dataset,
                             const DecodeConfig& config,
                             const CorrectnessFn& correct = answer_matches_gold);

/// Per-prompt pass@1 over the whole pool, sorted easy-first (descending),
/// ties by prompt_id.
std::vector<std::pair<std::string, double>> rank_difficulty(
    const std::vector<SamplePool>& pools, const std::vector<DatasetRecord>& dataset,
    const CorrectnessFn& correct = answer_matches_gold);

}  // namespace opmbrd

#endif  // OPMBRD_HARNESS_HPP
