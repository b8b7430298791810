#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "opmbrd/decoder.hpp"
#include "opmbrd/harness.hpp"
#include "opmbrd/providers.hpp"
#include "test_util.hpp"

using namespace opmbrd;
using opmbrd::test::cand_with_acceptance;
using opmbrd::test::make_candidate;
using opmbrd::test::make_pool;

namespace {

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("opmbrd-test-" + std::to_string(::getpid()) + "-" +
            std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

SyntheticWorld simple_world(double correct_prob) {
  SyntheticWorld world;
  world.answers = {"yes", "no"};
  world.answer_probs = {correct_prob, 1.0 - correct_prob};
  world.correct_index = 0;
  world.prm_profile = {{0.9, 2, 0.0}, {0.4, 2, 0.0}};
  world.seed = 13;
  return world;
}

std::vector<DatasetRecord> dataset_for(const std::vector<std::string>& ids,
                                       const std::string& gold = "yes") {
  std::vector<DatasetRecord> ds;
  for (const auto& id : ids) ds.push_back({id, "prompt " + id, gold, std::nullopt});
  return ds;
}

}  // namespace

TEST_CASE("dataset load and duplicate detection") {
  TempDir dir;
  {
    std::ofstream out(dir.file("data.jsonl"));
    out << R"({"prompt_id":"a","prompt":"p1","gold_answer":"1"})" << "\n";
    out << R"({"prompt_id":"b","prompt":"p2","gold_answer":"2","unit_test":"assert x"})" << "\n";
  }
  auto ds = load_dataset(dir.file("data.jsonl"));
  REQUIRE(ds.size() == 2);
  CHECK(ds[1].unit_test == "assert x");

  {
    std::ofstream out(dir.file("dup.jsonl"));
    out << R"({"prompt_id":"a","prompt":"p","gold_answer":"1"})" << "\n";
    out << R"({"prompt_id":"a","prompt":"p","gold_answer":"1"})" << "\n";
  }
  CHECK_THROWS(load_dataset(dir.file("dup.jsonl")));
}

TEST_CASE("pool file round-trip") {
  TempDir dir;
  std::vector<SamplePool> pools = {mock_sample(simple_world(0.6), 8, 1),
                                   mock_sample(simple_world(0.6), 8, 2)};
  pools[0].prompt_id = "a";
  pools[1].prompt_id = "b";
  save_pool_file(dir.file("pools.jsonl"), pools);
  auto back = load_pool_file(dir.file("pools.jsonl"));
  REQUIRE(back.size() == 2);
  CHECK(pool_to_json(back[0]) == pool_to_json(pools[0]));
  CHECK(pool_to_json(back[1]) == pool_to_json(pools[1]));
}

TEST_CASE("build_pool_file shape and resumability") {
  TempDir dir;
  auto ds = dataset_for({"a", "b", "c"});
  int provider_calls = 0;
  PoolProvider provider = [&](const DatasetRecord& record, int count) {
    ++provider_calls;
    std::uint64_t seed = std::hash<std::string>{}(record.prompt_id);
    return mock_sample(simple_world(0.6), count, seed);
  };

  int built = build_pool_file(ds, provider, 4, dir.file("pools.jsonl"));
  CHECK(built == 3);
  CHECK(provider_calls == 3);
  auto pools = load_pool_file(dir.file("pools.jsonl"));
  REQUIRE(pools.size() == 3);
  for (const auto& p : pools) CHECK(p.size() == 4);

  // rerun on a complete file: no new provider requests
  built = build_pool_file(ds, provider, 4, dir.file("pools.jsonl"));
  CHECK(built == 0);
  CHECK(provider_calls == 3);
}

TEST_CASE("build_pool_file saves partial progress when the provider fails") {
  TempDir dir;
  auto ds = dataset_for({"a", "b", "c"});
  PoolProvider provider = [&](const DatasetRecord& record, int count) -> SamplePool {
    if (record.prompt_id == "c") throw UnreachableError("boom");
    return mock_sample(simple_world(0.6), count, 1);
  };
  CHECK_THROWS_AS(build_pool_file(ds, provider, 4, dir.file("pools.jsonl")), UnreachableError);
  CHECK(load_pool_file(dir.file("pools.jsonl")).size() == 2);

  // resuming only rebuilds the missing prompt
  PoolProvider ok = [&](const DatasetRecord&, int count) {
    return mock_sample(simple_world(0.6), count, 1);
  };
  CHECK(build_pool_file(ds, ok, 4, dir.file("pools.jsonl")) == 1);
}

TEST_CASE("run_fixed_budget block arithmetic and disjointness") {
  auto ds = dataset_for({"a"});
  auto pool = mock_sample(simple_world(0.6), 16, 3);
  pool.prompt_id = "a";

  DecodeConfig cfg;
  cfg.method = Method::mbrd;
  auto outcome = run_fixed_budget({pool}, ds, cfg, 4);
  REQUIRE(outcome.rows.size() == 1);
  CHECK(outcome.rows[0].repetitions == 4);
  CHECK(outcome.rows[0].mean_samples == 4);
  REQUIRE(outcome.blocks.size() == 4);
  std::vector<bool> used(16, false);
  for (const auto& b : outcome.blocks)
    for (int i = b.begin; i < b.end; ++i) {
      CHECK_FALSE(used[i]);
      used[i] = true;
    }

  // k = N gives exactly one repetition
  auto one = run_fixed_budget({pool}, ds, cfg, 16);
  CHECK(one.rows[0].repetitions == 1);

  CHECK_THROWS_AS(run_fixed_budget({pool}, ds, cfg, 17), BudgetTooLargeError);
}

TEST_CASE("greedy at budget 1 equals the per-candidate correctness rate") {
  auto ds = dataset_for({"a"});
  auto pool = mock_sample(simple_world(0.6), 256, 9);
  pool.prompt_id = "a";
  DecodeConfig cfg;
  cfg.method = Method::greedy_pick;
  auto outcome = run_fixed_budget({pool}, ds, cfg, 1);

  double rate = 0.0;
  for (const auto& c : pool.candidates)
    if (answer_matches_gold(c, ds[0])) rate += 1.0;
  rate /= pool.size();
  CHECK(outcome.rows[0].pass1_mean == doctest::Approx(rate));
  CHECK(outcome.rows[0].repetitions == 256);
}

TEST_CASE("run_adaptive consumes disjoint variable blocks until exhaustion") {
  auto ds = dataset_for({"a"});
  // acceptance 0.5 per candidate, target 1 -> every episode consumes 2
  DecodeConfig cfg;
  cfg.beta = 0.1;
  cfg.method = Method::ope_mbrd;
  cfg.target_optimal_samples = 1.0;

  SamplePool pool;
  pool.prompt_id = "a";
  for (int i = 0; i < 8; ++i)
    pool.candidates.push_back(cand_with_acceptance("yes", 0.5, cfg.beta));
  pool = validate_pool(pool);

  auto outcome = run_adaptive({pool}, ds, cfg);
  REQUIRE(outcome.rows.size() == 1);
  CHECK(outcome.rows[0].repetitions == 4);
  CHECK(outcome.rows[0].mean_samples == doctest::Approx(2.0));
  CHECK(outcome.rows[0].pass1_mean == doctest::Approx(1.0));
  REQUIRE(outcome.per_prompt.size() == 1);
  CHECK(outcome.per_prompt[0].mean_samples == doctest::Approx(2.0));

  std::vector<bool> used(8, false);
  for (const auto& b : outcome.blocks)
    for (int i = b.begin; i < b.end; ++i) {
      CHECK_FALSE(used[i]);
      used[i] = true;
    }
  for (bool u : used) CHECK(u);
}

TEST_CASE("run_adaptive with a perfect first candidate gives 256 repetitions") {
  auto ds = dataset_for({"a"});
  DecodeConfig cfg;
  cfg.beta = 0.1;
  cfg.target_optimal_samples = 1.0;
  SamplePool pool;
  pool.prompt_id = "a";
  for (int i = 0; i < 256; ++i) pool.candidates.push_back(make_candidate("yes", {1.0, 1.0}));
  pool = validate_pool(pool);
  auto outcome = run_adaptive({pool}, ds, cfg);
  CHECK(outcome.rows[0].repetitions == 256);
  CHECK(outcome.rows[0].mean_samples == doctest::Approx(1.0));
}

TEST_CASE("rank_difficulty orders easy first with prompt_id tie-break") {
  auto ds = dataset_for({"a", "b", "c", "d"});
  SamplePool all = make_pool({make_candidate("yes"), make_candidate("yes")}, "a");
  SamplePool half = make_pool({make_candidate("yes"), make_candidate("no")}, "b");
  SamplePool none = make_pool({make_candidate("no"), make_candidate("no")}, "c");
  SamplePool half2 = make_pool({make_candidate("yes"), make_candidate("no")}, "d");

  auto ranked = rank_difficulty({none, half2, all, half}, ds);
  REQUIRE(ranked.size() == 4);
  CHECK(ranked[0].first == "a");
  CHECK(ranked[0].second == doctest::Approx(1.0));
  CHECK(ranked[1].first == "b");  // tie with d, ordered by prompt_id
  CHECK(ranked[2].first == "d");
  CHECK(ranked[3].first == "c");
}

TEST_CASE("report CSV is byte-stable") {
  std::vector<ReportRow> rows = {{"mbrd", "exact_match", 0.1, 16, 0.625, 0.125, 16.0, 16}};
  auto a = report_to_csv(rows);
  auto b = report_to_csv(rows);
  CHECK(a == b);
  CHECK(a ==
        "method,similarity,beta,budget,pass1_mean,pass1_std,mean_samples,repetitions\n"
        "mbrd,exact_match,0.1,16,0.625,0.125,16,16\n");

  std::vector<ConsumptionRow> cons = {{"a", 0, 2.5}};
  CHECK(consumption_to_csv(cons) == "prompt_id,difficulty_rank,mean_samples\na,0,2.5\n");
}

TEST_CASE("answer_matches_gold normalizes the gold answer") {
  DatasetRecord record{"a", "p", "  42 .", std::nullopt};
  CHECK(answer_matches_gold(make_candidate("42"), record));
  CHECK_FALSE(answer_matches_gold(make_candidate("43"), record));
}
