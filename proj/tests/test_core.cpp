#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "opmbrd/core.hpp"
#include "opmbrd/harness.hpp"
#include "test_util.hpp"

using namespace opmbrd;

TEST_CASE("validate_pool clamps step scores into [0,1]") {
  SamplePool pool;
  pool.prompt_id = "p";
  Candidate c;
  c.text = "x";
  c.step_scores = {1.3, -0.2, 0.5};
  pool.candidates.push_back(c);

  auto out = validate_pool(pool);
  CHECK(out.candidates[0].step_scores == std::vector<double>{1.0, 0.0, 0.5});
}

TEST_CASE("validate_pool fills reference_logprob from generator_logprob") {
  SamplePool pool;
  Candidate c;
  c.text = "x";
  c.generator_logprob = -12.5;
  pool.candidates.push_back(c);

  auto out = validate_pool(pool);
  REQUIRE(out.candidates[0].reference_logprob.has_value());
  CHECK(*out.candidates[0].reference_logprob == -12.5);
  CHECK(out.candidates[0].log_ratio() == 0.0);
}

TEST_CASE("validate_pool rejects empty pools and empty texts") {
  SamplePool empty;
  CHECK_THROWS_AS(validate_pool(empty), EmptyPoolError);

  SamplePool bad;
  bad.candidates.push_back(Candidate{});
  CHECK_THROWS_AS(validate_pool(bad), MalformedCandidateError);
}

TEST_CASE("validate_pool is idempotent") {
  DeterministicRng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    SamplePool pool;
    int n = 1 + static_cast<int>(rng.next_u64() % 5);
    for (int i = 0; i < n; ++i) {
      Candidate c;
      c.text = "text " + std::to_string(i);
      int steps = static_cast<int>(rng.next_u64() % 4);
      for (int t = 0; t < steps; ++t) c.step_scores.push_back(rng.next_uniform() * 1.4 - 0.2);
      if (rng.next_uniform() < 0.5) c.generator_logprob = -rng.next_uniform() * 20;
      if (rng.next_uniform() < 0.3) c.reference_logprob = -rng.next_uniform() * 20;
      pool.candidates.push_back(std::move(c));
    }
    auto once = validate_pool(pool);
    auto twice = validate_pool(once);
    CHECK(pool_to_json(once) == pool_to_json(twice));
  }
}

TEST_CASE("serialization round-trip is identity on all fields") {
  Candidate c;
  c.text = "step\n\n\\boxed{42}";
  c.generator_logprob = -3.25;
  c.step_scores = {0.5, 0.75};
  c.answer = "42";
  SamplePool pool;
  pool.prompt_id = "id-1";
  pool.prompt = "what is 6*7?";
  pool.seed = 99;
  pool.candidates.push_back(c);
  pool = validate_pool(pool);

  auto back = pool_from_json(pool_to_json(pool));
  CHECK(back.prompt_id == pool.prompt_id);
  CHECK(back.prompt == pool.prompt);
  CHECK(back.seed == pool.seed);
  REQUIRE(back.candidates.size() == 1);
  CHECK(back.candidates[0].text == c.text);
  CHECK(back.candidates[0].generator_logprob == c.generator_logprob);
  CHECK(back.candidates[0].reference_logprob == pool.candidates[0].reference_logprob);
  CHECK(back.candidates[0].step_scores == c.step_scores);
  CHECK(back.candidates[0].answer == c.answer);
}

TEST_CASE("argmax breaks ties at the lowest index") {
  CHECK(argmax_lowest({0.7, 0.9, 0.9}) == 1);
  CHECK(argmax_lowest({0.5, 0.5}) == 0);
  CHECK(argmax_lowest({1.0}) == 0);
  CHECK_THROWS(argmax_lowest({}));
}

TEST_CASE("DecodeConfig validation") {
  DecodeConfig cfg;
  cfg.beta = 0.0;
  CHECK_THROWS_AS(cfg.validate(), NonPositiveBetaError);
  cfg.beta = 0.1;
  cfg.max_sample_multiplier = 0.5;
  CHECK_THROWS(cfg.validate());
}
