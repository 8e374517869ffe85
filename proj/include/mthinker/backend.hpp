#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <random>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "mthinker/error.hpp"

namespace mthinker {

struct SamplingParams {
  double temperature = 0.9;
  double top_p = 1.0;
  int max_tokens = 16384;
};

struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds base_backoff{500};
};

/// Connection settings for one OpenAI-compatible endpoint. The API key is
/// never stored: only the name of the environment variable that holds it.
struct BackendConfig {
  std::string endpoint_url = "http://127.0.0.1:8000/v1/chat/completions";
  std::string model_name = "default";
  std::string api_key_env = "MTHINKER_GEN_KEY";
  std::size_t max_in_flight = 8;
  RetryPolicy retry;
  SamplingParams sampling;
  std::chrono::seconds timeout{600};

  void validate() const;
};

void to_json(nlohmann::json& j, const BackendConfig& config);
void from_json(const nlohmann::json& j, BackendConfig& config);

/// BACKEND_FAILURE or TIMEOUT; `retryable` marks transient failures.
class BackendError : public Error {
 public:
  BackendError(Errc code, const std::string& what, bool retryable = true)
      : Error(code, what), retryable_(retryable) {}
  bool retryable() const noexcept { return retryable_; }

 private:
  bool retryable_;
};

/// Caps concurrent requests and records the high-water mark.
class InFlightLimiter {
 public:
  explicit InFlightLimiter(std::size_t max_in_flight);

  class Guard {
   public:
    explicit Guard(InFlightLimiter& limiter) : limiter_(&limiter) { limiter_->acquire(); }
    ~Guard() { limiter_->release(); }
    Guard(const Guard&) = delete;
    Guard& operator=(const Guard&) = delete;

   private:
    InFlightLimiter* limiter_;
  };

  void acquire();
  void release();
  std::size_t peak() const;
  std::size_t capacity() const { return capacity_; }

 private:
  std::size_t capacity_;
  std::size_t active_ = 0;
  std::size_t peak_ = 0;
  mutable std::mutex mutex_;
  std::condition_variable cv_;
};

using Sleeper = std::function<void(std::chrono::milliseconds)>;

/// Backoff before retry number `attempt` (1-based): base * 2^(attempt-1)
/// scaled by a jitter factor in [1, 1.5).
std::chrono::milliseconds backoff_delay(const RetryPolicy& policy, int attempt, double jitter);

/// Runs `call` until it succeeds, a non-retryable BackendError escapes, or
/// `max_attempts` is exhausted (the last error is rethrown).
template <class Call>
auto with_retry(const RetryPolicy& policy, Call&& call, const Sleeper& sleep = {}) -> decltype(call()) {
  thread_local std::mt19937 jitter_rng{std::random_device{}()};
  std::uniform_real_distribution<double> jitter(0.0, 0.5);
  for (int attempt = 1;; ++attempt) {
    try {
      return call();
    } catch (const BackendError& e) {
      if (!e.retryable() || attempt >= policy.max_attempts) throw;
      const auto delay = backoff_delay(policy, attempt, jitter(jitter_rng));
      if (sleep) {
        sleep(delay);
      } else if (delay.count() > 0) {
        std::this_thread::sleep_for(delay);
      }
    }
  }
}

struct GenerationRequest {
  std::string key;        // question id; English prompts use "<id>:en"
  std::string prompt;
  std::size_t n = 1;
  std::string model_tag;  // policy identity, e.g. "model-0"
  SamplingParams sampling;
};

class GenerationBackend {
 public:
  virtual ~GenerationBackend() = default;
  /// Exactly `request.n` completions, index order.
  virtual std::vector<std::string> generate_n(const GenerationRequest& request) = 0;
};

class JudgeBackend {
 public:
  virtual ~JudgeBackend() = default;
  /// Single completion, returned verbatim.
  virtual std::string judge(const std::string& prompt) = 0;
};

/// Canned generation outputs keyed by (model tag, request key, candidate
/// index). A model tag of "*" matches every model. Lookups of unscripted
/// fingerprints throw; they never fall back to a default text.
class MockScript {
 public:
  void add(std::string model, std::string key, std::size_t index, std::string text);
  /// Makes the first `count` attempts for (key, index) fail with a retryable error.
  void fail_first(std::string key, std::size_t index, int count);

  const std::string& lookup(const std::string& model, const std::string& key, std::size_t index) const;
  int scripted_failures(const std::string& key, std::size_t index) const;
  std::size_t size() const { return texts_.size(); }

  /// JSON lines: {"key", "index", "text", "model"?, "fail_first"?}.
  static MockScript load_jsonl(const std::filesystem::path& path);
  void save_jsonl(const std::filesystem::path& path) const;

 private:
  std::map<std::tuple<std::string, std::string, std::size_t>, std::string> texts_;
  std::map<std::pair<std::string, std::size_t>, int> failures_;
};

class MockGenerationBackend : public GenerationBackend {
 public:
  explicit MockGenerationBackend(MockScript script, BackendConfig config = {});

  std::vector<std::string> generate_n(const GenerationRequest& request) override;

  /// Artificial per-request latency, used to create overlap under load.
  void set_latency(std::chrono::milliseconds latency) { latency_ = latency; }
  void set_sleeper(Sleeper sleeper) { sleeper_ = std::move(sleeper); }

  std::size_t attempts() const { return attempts_.load(); }
  std::size_t peak_in_flight() const { return limiter_.peak(); }

 private:
  MockScript script_;
  BackendConfig config_;
  InFlightLimiter limiter_;
  std::chrono::milliseconds latency_{0};
  Sleeper sleeper_ = [](std::chrono::milliseconds) {};
  std::atomic<std::size_t> attempts_{0};
  std::mutex failure_mutex_;
  std::map<std::pair<std::string, std::size_t>, int> failures_seen_;
};

/// Scripted judge. Replies are chosen by the first rule whose `contains`
/// substring occurs in the prompt (an empty substring matches everything),
/// or by a custom responder. No matching rule is an error.
class MockJudgeBackend : public JudgeBackend {
 public:
  struct Rule {
    std::string contains;
    std::string reply;
  };
  using Responder = std::function<std::string(const std::string& prompt, std::size_t call_index)>;

  explicit MockJudgeBackend(std::vector<Rule> rules, std::size_t max_in_flight = 8);
  explicit MockJudgeBackend(Responder responder, std::size_t max_in_flight = 8);

  std::string judge(const std::string& prompt) override;

  /// JSON lines: {"contains", "reply"}.
  static std::vector<Rule> load_rules(const std::filesystem::path& path);

  std::size_t calls() const { return calls_.load(); }
  std::size_t peak_in_flight() const { return limiter_.peak(); }
  void set_latency(std::chrono::milliseconds latency) { latency_ = latency; }

 private:
  std::vector<Rule> rules_;
  Responder responder_;
  InFlightLimiter limiter_;
  std::chrono::milliseconds latency_{0};
  std::atomic<std::size_t> calls_{0};
};

/// Chat-completions client; the API key is read from the configured
/// environment variable at call time.
class OpenAiChatClient : public GenerationBackend, public JudgeBackend {
 public:
  explicit OpenAiChatClient(BackendConfig config);

  std::vector<std::string> generate_n(const GenerationRequest& request) override;
  std::string judge(const std::string& prompt) override;

  /// The request body sent for one completion.
  nlohmann::json request_body(const std::string& prompt, const std::string& model, const SamplingParams& sampling) const;

 private:
  std::string complete(const std::string& prompt, const std::string& model, const SamplingParams& sampling);

  BackendConfig config_;
  InFlightLimiter limiter_;
  std::string base_;
  std::string path_;
};

}  // namespace mthinker
