// Command-line front end: sample / score / decode / rank / simulate / report.
#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>

#include <nlohmann/json.hpp>

#include "opmbrd/decoder.hpp"
#include "opmbrd/harness.hpp"
#include "opmbrd/providers.hpp"

using namespace opmbrd;
using nlohmann::json;

namespace {

json load_config_file(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw Error("cannot open config file: " + path);
  return json::parse(in);
}

/// File values fill in anything the command line did not set.
template <typename T>
void merge(const CLI::App& app, const std::string& flag, const json& cfg, const char* key, T& out) {
  if (app.count(flag) == 0 && cfg.contains(key)) out = cfg.at(key).get<T>();
}

SyntheticWorld world_from_json(const json& j) {
  SyntheticWorld world;
  world.answers = {"yes", "no"};
  world.answer_probs = {0.6, 0.4};
  world.correct_index = 0;
  world.prm_profile = {{0.9, 2, 0.05}, {0.5, 2, 0.05}};
  world.seed = 1;
  if (j.is_null() || j.empty()) return world;
  if (j.contains("answers")) world.answers = j["answers"].get<std::vector<std::string>>();
  if (j.contains("answer_probs"))
    world.answer_probs = j["answer_probs"].get<std::vector<double>>();
  if (j.contains("correct_index")) world.correct_index = j["correct_index"].get<int>();
  if (j.contains("seed")) world.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("prm_profile")) {
    world.prm_profile.clear();
    for (const auto& p : j["prm_profile"])
      world.prm_profile.push_back({p.at("mean").get<double>(), p.at("steps").get<int>(),
                                   p.value("noise", 0.0)});
  }
  world.validate();
  return world;
}

void write_file(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::cout << content;
    return;
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write: " + path);
  out << content;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optimal-policy MBR decoding over LLM sample pools"};
  app.require_subcommand(1);

  std::string config_path;
  app.add_option("--config", config_path, "JSON configuration file; flags override it")
      ->expected(1);

  // --- sample -------------------------------------------------------------
  auto* sample = app.add_subcommand("sample", "build a pool file from a dataset");
  std::string s_dataset, s_out, s_provider = "mock", s_endpoint, s_model;
  int s_n = 256, s_parallel = 4;
  double s_temperature = 0.7;
  sample->add_option("--dataset", s_dataset, "dataset JSONL")->required();
  sample->add_option("--out", s_out, "pool file to write (JSONL)")->required();
  sample->add_option("--n", s_n, "samples per prompt");
  sample->add_option("--provider", s_provider, "mock or http");
  sample->add_option("--endpoint", s_endpoint, "completions endpoint URL");
  sample->add_option("--model", s_model, "model name");
  sample->add_option("--temperature", s_temperature, "sampling temperature");
  sample->add_option("--parallelism", s_parallel, "max in-flight requests");

  // --- score --------------------------------------------------------------
  auto* score = app.add_subcommand("score", "attach PRM step scores to a pool file");
  std::string sc_pool, sc_out, sc_endpoint, sc_delim = "\n\n";
  int sc_parallel = 4;
  score->add_option("--pool", sc_pool, "pool file")->required();
  score->add_option("--out", sc_out, "scored pool file")->required();
  score->add_option("--endpoint", sc_endpoint, "PRM endpoint URL")->required();
  score->add_option("--step-delimiter", sc_delim, "step delimiter");
  score->add_option("--parallelism", sc_parallel, "max in-flight requests");

  // --- decode -------------------------------------------------------------
  auto* decode_cmd = app.add_subcommand("decode", "run a decoding experiment over a pool file");
  std::string d_pool, d_dataset, d_method = "op_mbrd", d_similarity = "exact_match";
  std::string d_out, d_consumption_out;
  double d_beta = 0.1, d_target = 0.0, d_multiplier = 10.0;
  int d_budget = 0;
  decode_cmd->add_option("--pool", d_pool, "pool file")->required();
  decode_cmd->add_option("--dataset", d_dataset, "dataset JSONL with gold answers")->required();
  decode_cmd->add_option("--method", d_method, "greedy_pick|bon|mbrd|op_mbrd|ope_mbrd");
  decode_cmd->add_option("--similarity", d_similarity, "exact_match|rouge|em_times_reward");
  decode_cmd->add_option("--beta", d_beta, "KL-control weight");
  decode_cmd->add_option("--budget", d_budget, "fixed block size k");
  decode_cmd->add_option("--target", d_target, "adaptive optimal-sample target");
  decode_cmd->add_option("--multiplier", d_multiplier, "real-sample cap multiplier");
  decode_cmd->add_option("--out", d_out, "report CSV ('-' for stdout)");
  decode_cmd->add_option("--consumption-out", d_consumption_out,
                         "per-prompt consumption CSV (adaptive only)");

  // --- rank ---------------------------------------------------------------
  auto* rank = app.add_subcommand("rank", "rank prompts easy-first by pool pass@1");
  std::string r_pool, r_dataset, r_out;
  rank->add_option("--pool", r_pool, "pool file")->required();
  rank->add_option("--dataset", r_dataset, "dataset JSONL")->required();
  rank->add_option("--out", r_out, "CSV output ('-' for stdout)");

  // --- simulate -----------------------------------------------------------
  auto* simulate = app.add_subcommand("simulate", "synthetic-world end-to-end run");
  std::uint64_t sim_seed = 1;
  int sim_prompts = 4, sim_n = 64;
  double sim_beta = 0.1;
  std::string sim_out;
  simulate->add_option("--seed", sim_seed, "world seed");
  simulate->add_option("--prompts", sim_prompts, "number of synthetic prompts");
  simulate->add_option("--n", sim_n, "pool size per prompt");
  simulate->add_option("--beta", sim_beta, "KL-control weight");
  simulate->add_option("--out", sim_out, "report CSV ('-' for stdout)");

  // --- report -------------------------------------------------------------
  auto* report = app.add_subcommand("report", "merge report CSV files");
  std::vector<std::string> rep_inputs;
  std::string rep_out;
  report->add_option("inputs", rep_inputs, "CSV files to merge")->required();
  report->add_option("--out", rep_out, "merged CSV ('-' for stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;  // usage errors
  }

  try {
    json cfg = load_config_file(config_path);

    if (*sample) {
      merge(*sample, "--n", cfg, "n", s_n);
      merge(*sample, "--provider", cfg, "provider", s_provider);
      merge(*sample, "--endpoint", cfg, "endpoint", s_endpoint);
      merge(*sample, "--model", cfg, "model", s_model);
      merge(*sample, "--temperature", cfg, "temperature", s_temperature);
      merge(*sample, "--parallelism", cfg, "parallelism", s_parallel);

      auto ds = load_dataset(s_dataset);
      PoolProvider provider;
      if (s_provider == "mock") {
        SyntheticWorld world = world_from_json(cfg.value("world", json::object()));
        provider = [world](const DatasetRecord& record, int count) {
          std::uint64_t seed = std::hash<std::string>{}(record.prompt_id);
          return mock_sample(world, count, seed);
        };
      } else if (s_provider == "http") {
        ProviderConfig pc;
        pc.endpoint_url = s_endpoint;
        pc.model_name = s_model;
        pc.temperature = s_temperature;
        pc.request_parallelism = s_parallel;
        pc.auth_env = "OPMBRD_GEN_TOKEN";
        provider = [pc](const DatasetRecord& record, int count) {
          auto result = http_sample(record.prompt, count, pc);
          if (result.partial())
            std::cerr << "warning: partial pool for " << record.prompt_id << " ("
                      << result.failed_requests << " completions failed)\n";
          return result.pool;
        };
      } else {
        throw CLI::ValidationError("--provider must be mock or http");
      }
      int built = build_pool_file(ds, provider, s_n, s_out);
      std::cerr << "built " << built << " pools into " << s_out << "\n";
    }

    if (*score) {
      merge(*score, "--step-delimiter", cfg, "step_delimiter", sc_delim);
      merge(*score, "--parallelism", cfg, "parallelism", sc_parallel);
      ProviderConfig pc;
      pc.endpoint_url = sc_endpoint;
      pc.step_delimiter = sc_delim;
      pc.request_parallelism = sc_parallel;
      pc.auth_env = "OPMBRD_PRM_TOKEN";

      auto pools = load_pool_file(sc_pool);
      std::vector<SamplePool> scored;
      for (auto& pool : pools) {
        auto result = http_score(std::move(pool), pc);
        for (const auto& miss : result.unscored)
          std::cerr << "warning: candidate " << miss.candidate_index << " of "
                    << result.pool.prompt_id << " unscored: " << miss.detail << "\n";
        scored.push_back(std::move(result.pool));
      }
      save_pool_file(sc_out, scored);
    }

    if (*decode_cmd) {
      merge(*decode_cmd, "--method", cfg, "method", d_method);
      merge(*decode_cmd, "--similarity", cfg, "similarity", d_similarity);
      merge(*decode_cmd, "--beta", cfg, "beta", d_beta);
      merge(*decode_cmd, "--budget", cfg, "budget", d_budget);
      merge(*decode_cmd, "--target", cfg, "target", d_target);
      merge(*decode_cmd, "--multiplier", cfg, "multiplier", d_multiplier);

      if (!(d_beta > 0.0)) throw CLI::ValidationError("--beta must be > 0");
      DecodeConfig dc;
      dc.beta = d_beta;
      dc.method = method_from_string(d_method);
      dc.similarity = similarity_from_string(d_similarity);
      dc.max_sample_multiplier = d_multiplier;
      dc.validate();

      auto pools = load_pool_file(d_pool);
      auto ds = load_dataset(d_dataset);
      if (dc.method == Method::ope_mbrd) {
        if (d_target <= 0.0) throw CLI::ValidationError("--target is required for ope_mbrd");
        dc.target_optimal_samples = d_target;
        auto outcome = run_adaptive(pools, ds, dc);
        write_file(d_out, report_to_csv(outcome.rows));
        if (!d_consumption_out.empty())
          write_file(d_consumption_out, consumption_to_csv(outcome.per_prompt));
      } else {
        if (d_budget < 1) throw CLI::ValidationError("--budget is required for fixed methods");
        auto outcome = run_fixed_budget(pools, ds, dc, d_budget);
        write_file(d_out, report_to_csv(outcome.rows));
      }
    }

    if (*rank) {
      auto pools = load_pool_file(r_pool);
      auto ds = load_dataset(r_dataset);
      auto ranked = rank_difficulty(pools, ds);
      std::string csv = "prompt_id,pass1\n";
      for (const auto& [id, pass1] : ranked) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.10g", pass1);
        csv += id + "," + buf + "\n";
      }
      write_file(r_out, csv);
    }

    if (*simulate) {
      merge(*simulate, "--beta", cfg, "beta", sim_beta);
      SyntheticWorld world = world_from_json(cfg.value("world", json::object()));
      world.seed = sim_seed;

      std::vector<DatasetRecord> ds;
      std::vector<SamplePool> pools;
      for (int p = 0; p < sim_prompts; ++p) {
        std::string id = "sim-" + std::to_string(p);
        ds.push_back({id, "synthetic prompt " + std::to_string(p),
                      world.answers[world.correct_index], std::nullopt});
        auto pool = mock_sample(world, sim_n, sim_seed * 1000 + p);
        pool.prompt_id = id;
        pools.push_back(std::move(pool));
      }

      std::vector<ReportRow> rows;
      for (Method m : {Method::greedy_pick, Method::bon, Method::mbrd, Method::op_mbrd}) {
        DecodeConfig dc;
        dc.beta = sim_beta;
        dc.method = m;
        for (int k = 1; k <= sim_n; k *= 2) {
          auto outcome = run_fixed_budget(pools, ds, dc, k);
          rows.insert(rows.end(), outcome.rows.begin(), outcome.rows.end());
        }
      }
      {
        DecodeConfig dc;
        dc.beta = sim_beta;
        dc.method = Method::ope_mbrd;
        for (double target : {1.0, 2.0, 4.0}) {
          dc.target_optimal_samples = target;
          auto outcome = run_adaptive(pools, ds, dc);
          rows.insert(rows.end(), outcome.rows.begin(), outcome.rows.end());
        }
      }
      write_file(sim_out, report_to_csv(rows));
    }

    if (*report) {
      std::string merged = "method,similarity,beta,budget,pass1_mean,pass1_std,mean_samples,repetitions\n";
      for (const auto& path : rep_inputs) {
        std::ifstream in(path);
        if (!in) throw Error("cannot open report: " + path);
        std::string line;
        bool first = true;
        while (std::getline(in, line)) {
          if (first) {
            first = false;  // skip each file's header
            continue;
          }
          if (!line.empty()) merged += line + "\n";
        }
      }
      write_file(rep_out, merged);
    }
  } catch (const CLI::ValidationError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
