#include "opmbrd/providers.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <mutex>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "opmbrd/similarity.hpp"

namespace opmbrd {

using nlohmann::json;

// ---------------------------------------------------------------------------
// DeterministicRng
// ---------------------------------------------------------------------------

std::uint64_t DeterministicRng::next_u64() {
  // SplitMix64 (Steele, Lea, Flood 2014).
  std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double DeterministicRng::next_uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double DeterministicRng::next_gaussian() {
  // Box-Muller, cosine branch only.
  double u1 = next_uniform();
  double u2 = next_uniform();
  if (u1 <= 0.0) u1 = 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

std::size_t DeterministicRng::next_categorical(const std::vector<double>& probs) {
  double u = next_uniform();
  double cum = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    cum += probs[i];
    if (u < cum) return i;
  }
  return probs.size() - 1;  // guards rounding at the top of the CDF
}

// ---------------------------------------------------------------------------
// SyntheticWorld / mock_sample
// ---------------------------------------------------------------------------

void SyntheticWorld::validate() const {
  if (answers.empty()) throw InvalidWorldError("world has no answers");
  if (answer_probs.size() != answers.size())
    throw InvalidWorldError("answer_probs size mismatch");
  if (prm_profile.size() != answers.size())
    throw InvalidWorldError("prm_profile size mismatch");
  double sum = 0.0;
  for (double p : answer_probs) {
    if (p < 0.0) throw InvalidWorldError("negative answer probability");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw InvalidWorldError("answer_probs must sum to 1");
  if (correct_index < 0 || correct_index >= static_cast<int>(answers.size()))
    throw InvalidWorldError("correct_index out of range");
  for (const auto& prof : prm_profile) {
    if (prof.mean < 0.0 || prof.mean > 1.0) throw InvalidWorldError("profile mean outside [0,1]");
    if (prof.step_count < 1) throw InvalidWorldError("profile step_count < 1");
    if (prof.noise_scale < 0.0) throw InvalidWorldError("negative noise_scale");
  }
}

SamplePool mock_sample(const SyntheticWorld& world, int count, std::uint64_t seed) {
  world.validate();
  if (count < 1) throw InvalidWorldError("count must be >= 1");

  DeterministicRng rng(world.seed ^ (0x9E3779B97F4A7C15ULL * (seed + 1)));
  SamplePool pool;
  pool.prompt_id = "synthetic";
  pool.prompt = "synthetic world prompt";
  pool.seed = static_cast<std::int64_t>(seed);
  pool.candidates.reserve(count);

  for (int i = 0; i < count; ++i) {
    std::size_t idx = rng.next_categorical(world.answer_probs);
    const PrmProfile& prof = world.prm_profile[idx];

    Candidate c;
    std::string body;
    for (int t = 0; t < prof.step_count; ++t) {
      body += "Step " + std::to_string(t + 1) + " towards " + world.answers[idx] + ".\n\n";
    }
    c.text = body + "The answer is \\boxed{" + world.answers[idx] + "}.";
    c.generator_logprob = std::log(world.answer_probs[idx]);
    c.answer = normalize_answer(world.answers[idx]);
    c.step_scores.reserve(prof.step_count);
    for (int t = 0; t < prof.step_count; ++t) {
      double s = prof.mean;
      if (prof.noise_scale > 0.0) s += prof.noise_scale * rng.next_gaussian();
      c.step_scores.push_back(std::clamp(s, 0.0, 1.0));
    }
    pool.candidates.push_back(std::move(c));
  }
  return validate_pool(std::move(pool));
}

std::vector<double> enumerate_optimal_policy(const SyntheticWorld& world, double beta,
                                             double reward_max) {
  world.validate();
  if (!(beta > 0.0)) throw NonPositiveBetaError();
  for (const auto& prof : world.prm_profile)
    if (prof.noise_scale != 0.0)
      throw InvalidWorldError("enumeration needs noise-free PRM profiles");

  std::vector<double> mass(world.answers.size());
  double total = 0.0;
  for (std::size_t a = 0; a < world.answers.size(); ++a) {
    mass[a] = world.answer_probs[a] * std::exp((world.prm_profile[a].mean - reward_max) / beta);
    total += mass[a];
  }
  for (double& m : mass) m /= total;
  return mass;
}

// ---------------------------------------------------------------------------
// split_steps
// ---------------------------------------------------------------------------

namespace {

bool whitespace_only(const std::string& s) {
  for (char ch : s)
    if (!std::isspace(static_cast<unsigned char>(ch))) return false;
  return true;
}

}  // namespace

std::vector<std::string> split_steps(const std::string& text, const std::string& delimiter) {
  std::vector<std::string> steps;
  if (delimiter.empty()) {
    if (!whitespace_only(text)) steps.push_back(text);
    return steps;
  }
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t next = text.find(delimiter, pos);
    std::string seg = text.substr(pos, next == std::string::npos ? std::string::npos : next - pos);
    if (!seg.empty() && !whitespace_only(seg)) steps.push_back(std::move(seg));
    if (next == std::string::npos) break;
    pos = next + delimiter.size();
  }
  return steps;
}

// ---------------------------------------------------------------------------
// HTTP plumbing
// ---------------------------------------------------------------------------

namespace {

struct ParsedUrl {
  std::string base;  // scheme://host:port
  std::string path;  // leading slash, possibly "/"
};

ParsedUrl parse_url(const std::string& url) {
  auto scheme_end = url.find("://");
  std::size_t host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
  auto path_start = url.find('/', host_start);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

std::string bearer_token(const ProviderConfig& config) {
  if (config.auth_env.empty()) return {};
  const char* tok = std::getenv(config.auth_env.c_str());
  return tok ? std::string(tok) : std::string{};
}

httplib::Headers make_headers(const ProviderConfig& config) {
  httplib::Headers headers;
  std::string tok = bearer_token(config);
  if (!tok.empty()) headers.emplace("Authorization", "Bearer " + tok);
  return headers;
}

constexpr int kMaxAttempts = 3;
constexpr int kBackoffBaseMs = 100;

/// POSTs `body` with retries on transport errors and 5xx. Returns the
/// response body on 2xx, nullopt after exhausting attempts. 401/403 aborts
/// immediately via AuthFailureError.
std::optional<std::string> post_with_retry(const ParsedUrl& url, const ProviderConfig& config,
                                           const std::string& body) {
  httplib::Client client(url.base);
  auto secs = std::chrono::duration_cast<std::chrono::seconds>(config.timeout);
  client.set_connection_timeout(std::max<long>(1, secs.count()), 0);
  client.set_read_timeout(std::max<long>(1, secs.count()), 0);
  httplib::Headers headers = make_headers(config);

  for (int attempt = 0; attempt < kMaxAttempts; ++attempt) {
    if (attempt > 0)
      std::this_thread::sleep_for(std::chrono::milliseconds(kBackoffBaseMs << (attempt - 1)));
    auto res = client.Post(url.path, headers, body, "application/json");
    if (!res) continue;  // transport failure, retry
    if (res->status == 401 || res->status == 403)
      throw AuthFailureError("authentication rejected by " + url.base);
    if (res->status >= 200 && res->status < 300) return res->body;
    if (res->status >= 500) continue;  // transient server error, retry
    return std::nullopt;               // other 4xx: not retryable
  }
  return std::nullopt;
}

}  // namespace

ProviderResult http_sample(const std::string& prompt, int count, const ProviderConfig& config) {
  if (count < 1) throw Error("count must be >= 1");
  ParsedUrl url = parse_url(config.endpoint_url);

  // Chunk into n-per-request batches, at most kBatchSize completions each.
  constexpr int kBatchSize = 8;
  std::vector<int> chunk_sizes;
  for (int remaining = count; remaining > 0; remaining -= kBatchSize)
    chunk_sizes.push_back(std::min(remaining, kBatchSize));

  std::vector<std::vector<Candidate>> chunk_results(chunk_sizes.size());
  std::atomic<std::size_t> next_chunk{0};
  std::atomic<int> failed{0};
  std::mutex error_mutex;
  std::exception_ptr fatal;

  auto worker = [&]() {
    for (std::size_t i = next_chunk.fetch_add(1); i < chunk_sizes.size();
         i = next_chunk.fetch_add(1)) {
      json req = {
          {"model", config.model_name}, {"prompt", prompt},
          {"temperature", config.temperature}, {"max_tokens", config.max_tokens},
          {"n", chunk_sizes[i]}, {"logprobs", 1},
      };
      try {
        auto body = post_with_retry(url, config, req.dump());
        if (!body) {
          failed += chunk_sizes[i];
          continue;
        }
        json res = json::parse(*body);
        for (const auto& choice : res.at("choices")) {
          Candidate c;
          c.text = choice.at("text").get<std::string>();
          if (choice.contains("logprobs") && !choice["logprobs"].is_null() &&
              choice["logprobs"].contains("token_logprobs")) {
            double sum = 0.0;
            bool ok = true;
            for (const auto& lp : choice["logprobs"]["token_logprobs"]) {
              if (lp.is_null()) { ok = false; break; }
              sum += lp.get<double>();
            }
            if (ok) c.generator_logprob = sum;
          }
          chunk_results[i].push_back(std::move(c));
        }
      } catch (const AuthFailureError&) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!fatal) fatal = std::current_exception();
        return;
      } catch (const json::exception&) {
        failed += chunk_sizes[i];
      }
    }
  };

  int threads = std::min<int>(config.request_parallelism, static_cast<int>(chunk_sizes.size()));
  std::vector<std::thread> workers;
  for (int t = 0; t < threads; ++t) workers.emplace_back(worker);
  for (auto& w : workers) w.join();
  if (fatal) std::rethrow_exception(fatal);

  ProviderResult result;
  result.pool.prompt = prompt;
  result.failed_requests = failed.load();
  for (auto& chunk : chunk_results)
    for (auto& c : chunk) result.pool.candidates.push_back(std::move(c));
  if (result.pool.candidates.empty())
    throw UnreachableError("no completions retrieved from " + config.endpoint_url);
  result.pool = validate_pool(std::move(result.pool));
  return result;
}

ProviderResult http_score(SamplePool pool, const ProviderConfig& config) {
  ParsedUrl url = parse_url(config.endpoint_url);

  const std::size_t n = pool.candidates.size();
  std::vector<std::optional<std::vector<double>>> scored(n);
  std::vector<std::optional<ScoreShapeMismatch>> mismatches(n);
  std::atomic<std::size_t> next{0};
  std::atomic<int> failed{0};
  std::mutex error_mutex;
  std::exception_ptr fatal;

  auto worker = [&]() {
    for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
      auto steps = split_steps(pool.candidates[i].text, config.step_delimiter);
      json req = {{"prompt", pool.prompt}, {"steps", steps}};
      try {
        auto body = post_with_retry(url, config, req.dump());
        if (!body) {
          ++failed;
          continue;
        }
        json res = json::parse(*body);
        auto scores = res.at("scores").get<std::vector<double>>();
        if (scores.size() != steps.size()) {
          mismatches[i] = ScoreShapeMismatch{
              i, "sent " + std::to_string(steps.size()) + " steps, got " +
                     std::to_string(scores.size()) + " scores"};
          continue;
        }
        for (double& s : scores) s = std::clamp(s, 0.0, 1.0);
        scored[i] = std::move(scores);
      } catch (const AuthFailureError&) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!fatal) fatal = std::current_exception();
        return;
      } catch (const json::exception& e) {
        mismatches[i] = ScoreShapeMismatch{i, std::string("bad response: ") + e.what()};
      }
    }
  };

  int threads = std::min<int>(config.request_parallelism, static_cast<int>(n));
  std::vector<std::thread> workers;
  for (int t = 0; t < std::max(threads, 1); ++t) workers.emplace_back(worker);
  for (auto& w : workers) w.join();
  if (fatal) std::rethrow_exception(fatal);

  ProviderResult result;
  result.failed_requests = failed.load();
  if (result.failed_requests == static_cast<int>(n) && n > 0)
    throw UnreachableError("PRM endpoint unreachable: " + config.endpoint_url);
  for (std::size_t i = 0; i < n; ++i) {
    if (scored[i]) pool.candidates[i].step_scores = std::move(*scored[i]);
    if (mismatches[i]) result.unscored.push_back(*mismatches[i]);
  }
  result.pool = std::move(pool);
  return result;
}

}  // namespace opmbrd
