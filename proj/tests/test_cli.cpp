// End-to-end checks of the command-line tool via a real subprocess.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "opmbrd/harness.hpp"
#include "opmbrd/providers.hpp"

using namespace opmbrd;

namespace {

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("opmbrd-cli-" + std::to_string(::getpid()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

int run(const std::string& args) {
  std::string cmd = std::string(CLI_PATH) + " " + args + " 2>/dev/null";
  int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

}  // namespace

TEST_CASE("simulate is byte-deterministic") {
  TempDir dir;
  CHECK(run("simulate --seed 7 --out " + dir.file("a.csv")) == 0);
  CHECK(run("simulate --seed 7 --out " + dir.file("b.csv")) == 0);
  auto a = slurp(dir.file("a.csv"));
  CHECK(a == slurp(dir.file("b.csv")));
  CHECK(a.find("op_mbrd") != std::string::npos);
  CHECK(a.find("ope_mbrd") != std::string::npos);
}

TEST_CASE("sample + decode happy path emits a CSV row") {
  TempDir dir;
  {
    std::ofstream ds(dir.file("data.jsonl"));
    ds << R"({"prompt_id":"q1","prompt":"toss","gold_answer":"yes"})" << "\n";
    ds << R"({"prompt_id":"q2","prompt":"toss","gold_answer":"yes"})" << "\n";
  }
  CHECK(run("sample --dataset " + dir.file("data.jsonl") + " --out " + dir.file("pools.jsonl") +
            " --n 32 --provider mock") == 0);
  CHECK(load_pool_file(dir.file("pools.jsonl")).size() == 2);

  CHECK(run("decode --pool " + dir.file("pools.jsonl") + " --dataset " + dir.file("data.jsonl") +
            " --method op_mbrd --similarity exact_match --beta 0.1 --budget 16 --out " +
            dir.file("report.csv")) == 0);
  auto csv = slurp(dir.file("report.csv"));
  CHECK(csv.find("method,similarity,beta,budget,pass1_mean,pass1_std,mean_samples,repetitions") !=
        std::string::npos);
  CHECK(csv.find("op_mbrd,exact_match,0.1,16,") != std::string::npos);

  CHECK(run("rank --pool " + dir.file("pools.jsonl") + " --dataset " + dir.file("data.jsonl") +
            " --out " + dir.file("rank.csv")) == 0);
  CHECK(slurp(dir.file("rank.csv")).find("prompt_id,pass1") != std::string::npos);

  // adaptive path with consumption table
  CHECK(run("decode --pool " + dir.file("pools.jsonl") + " --dataset " + dir.file("data.jsonl") +
            " --method ope_mbrd --beta 0.1 --target 2 --out " + dir.file("adaptive.csv") +
            " --consumption-out " + dir.file("consumption.csv")) == 0);
  CHECK(slurp(dir.file("consumption.csv")).find("prompt_id,difficulty_rank,mean_samples") !=
        std::string::npos);
}

TEST_CASE("usage errors exit 2") {
  TempDir dir;
  CHECK(run("decode --pool x --dataset y --beta 0 --budget 4") == 2);
  CHECK(run("bogus-subcommand") == 2);
  CHECK(run("") == 2);  // missing required subcommand
}

TEST_CASE("config file supplies defaults, flags override") {
  TempDir dir;
  {
    std::ofstream ds(dir.file("data.jsonl"));
    ds << R"({"prompt_id":"q1","prompt":"toss","gold_answer":"yes"})" << "\n";
  }
  {
    std::ofstream cfg(dir.file("cfg.json"));
    cfg << R"({"budget": 8, "method": "mbrd"})" << "\n";
  }
  CHECK(run("sample --dataset " + dir.file("data.jsonl") + " --out " + dir.file("pools.jsonl") +
            " --n 32") == 0);

  // budget and method come from the config file
  CHECK(run("--config " + dir.file("cfg.json") + " decode --pool " + dir.file("pools.jsonl") +
            " --dataset " + dir.file("data.jsonl") + " --out " + dir.file("r1.csv")) == 0);
  CHECK(slurp(dir.file("r1.csv")).find("mbrd,exact_match,0.1,8,") != std::string::npos);

  // command line overrides the file
  CHECK(run("--config " + dir.file("cfg.json") + " decode --pool " + dir.file("pools.jsonl") +
            " --dataset " + dir.file("data.jsonl") + " --budget 4 --out " + dir.file("r2.csv")) ==
        0);
  CHECK(slurp(dir.file("r2.csv")).find("mbrd,exact_match,0.1,4,") != std::string::npos);
}
