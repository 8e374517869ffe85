#include "mthinker/backend.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>

#include <fmt/format.h>
#include <httplib.h>
#include <spdlog/spdlog.h>

namespace mthinker {

using nlohmann::json;

void BackendConfig::validate() const {
  if (retry.max_attempts < 1) throw Error(Errc::invalid_argument, "retry.max_attempts must be >= 1");
  if (sampling.temperature < 0.0) throw Error(Errc::invalid_argument, "sampling.temperature must be >= 0");
  if (max_in_flight < 1) throw Error(Errc::invalid_argument, "max_in_flight must be >= 1");
}

void to_json(json& j, const BackendConfig& c) {
  j = json{{"endpoint_url", c.endpoint_url},
           {"model_name", c.model_name},
           {"api_key_env", c.api_key_env},
           {"max_in_flight", c.max_in_flight},
           {"retry", {{"max_attempts", c.retry.max_attempts}, {"base_backoff_ms", c.retry.base_backoff.count()}}},
           {"sampling",
            {{"temperature", c.sampling.temperature},
             {"top_p", c.sampling.top_p},
             {"max_tokens", c.sampling.max_tokens}}},
           {"timeout_s", c.timeout.count()}};
}

void from_json(const json& j, BackendConfig& c) {
  c.endpoint_url = j.value("endpoint_url", c.endpoint_url);
  c.model_name = j.value("model_name", c.model_name);
  c.api_key_env = j.value("api_key_env", c.api_key_env);
  c.max_in_flight = j.value("max_in_flight", c.max_in_flight);
  if (j.contains("retry")) {
    const auto& r = j.at("retry");
    c.retry.max_attempts = r.value("max_attempts", c.retry.max_attempts);
    c.retry.base_backoff = std::chrono::milliseconds(r.value("base_backoff_ms", c.retry.base_backoff.count()));
  }
  if (j.contains("sampling")) {
    const auto& s = j.at("sampling");
    c.sampling.temperature = s.value("temperature", c.sampling.temperature);
    c.sampling.top_p = s.value("top_p", c.sampling.top_p);
    c.sampling.max_tokens = s.value("max_tokens", c.sampling.max_tokens);
  }
  c.timeout = std::chrono::seconds(j.value("timeout_s", c.timeout.count()));
  c.validate();
}

InFlightLimiter::InFlightLimiter(std::size_t max_in_flight) : capacity_(std::max<std::size_t>(1, max_in_flight)) {}

void InFlightLimiter::acquire() {
  std::unique_lock lock(mutex_);
  cv_.wait(lock, [this] { return active_ < capacity_; });
  ++active_;
  peak_ = std::max(peak_, active_);
}

void InFlightLimiter::release() {
  {
    std::lock_guard lock(mutex_);
    --active_;
  }
  cv_.notify_one();
}

std::size_t InFlightLimiter::peak() const {
  std::lock_guard lock(mutex_);
  return peak_;
}

std::chrono::milliseconds backoff_delay(const RetryPolicy& policy, int attempt, double jitter) {
  const double scale = std::ldexp(1.0, attempt - 1) * (1.0 + jitter);
  return std::chrono::milliseconds(static_cast<long long>(static_cast<double>(policy.base_backoff.count()) * scale));
}

// ---------------------------------------------------------------------------
// Mock script

void MockScript::add(std::string model, std::string key, std::size_t index, std::string text) {
  texts_[{std::move(model), std::move(key), index}] = std::move(text);
}

void MockScript::fail_first(std::string key, std::size_t index, int count) {
  failures_[{std::move(key), index}] = count;
}

const std::string& MockScript::lookup(const std::string& model, const std::string& key, std::size_t index) const {
  if (auto it = texts_.find({model, key, index}); it != texts_.end()) return it->second;
  if (auto it = texts_.find({"*", key, index}); it != texts_.end()) return it->second;
  throw Error(Errc::invalid_argument,
              fmt::format("mock script has no entry for model={} key={} index={}", model, key, index));
}

int MockScript::scripted_failures(const std::string& key, std::size_t index) const {
  const auto it = failures_.find({key, index});
  return it == failures_.end() ? 0 : it->second;
}

MockScript MockScript::load_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_error, fmt::format("cannot open mock script {}", path.string()));
  MockScript script;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json rec = json::parse(line);
      const std::string key = rec.at("key").get<std::string>();
      const auto index = rec.at("index").get<std::size_t>();
      script.add(rec.value("model", std::string("*")), key, index, rec.at("text").get<std::string>());
      if (rec.contains("fail_first")) script.fail_first(key, index, rec.at("fail_first").get<int>());
    } catch (const json::exception& e) {
      throw Error(Errc::invalid_argument, fmt::format("{}:{}: {}", path.string(), line_no, e.what()));
    }
  }
  return script;
}

void MockScript::save_jsonl(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::io_error, fmt::format("cannot write mock script {}", path.string()));
  for (const auto& [fp, text] : texts_) {
    const auto& [model, key, index] = fp;
    json rec{{"model", model}, {"key", key}, {"index", index}, {"text", text}};
    if (int n = scripted_failures(key, index); n > 0) rec["fail_first"] = n;
    out << rec.dump() << '\n';
  }
}

MockGenerationBackend::MockGenerationBackend(MockScript script, BackendConfig config)
    : script_(std::move(script)), config_(std::move(config)), limiter_(config_.max_in_flight) {}

std::vector<std::string> MockGenerationBackend::generate_n(const GenerationRequest& request) {
  std::vector<std::string> out;
  out.reserve(request.n);
  for (std::size_t i = 0; i < request.n; ++i) {
    out.push_back(with_retry(
        config_.retry,
        [&]() -> std::string {
          InFlightLimiter::Guard guard(limiter_);
          ++attempts_;
          if (latency_.count() > 0) std::this_thread::sleep_for(latency_);
          if (const int scripted = script_.scripted_failures(request.key, i); scripted > 0) {
            std::lock_guard lock(failure_mutex_);
            int& seen = failures_seen_[{request.key, i}];
            if (seen < scripted) {
              ++seen;
              throw BackendError(Errc::backend_failure,
                                 fmt::format("scripted transient failure {} for {}#{}", seen, request.key, i));
            }
          }
          return script_.lookup(request.model_tag, request.key, i);
        },
        sleeper_));
  }
  return out;
}

MockJudgeBackend::MockJudgeBackend(std::vector<Rule> rules, std::size_t max_in_flight)
    : rules_(std::move(rules)), limiter_(max_in_flight) {}

MockJudgeBackend::MockJudgeBackend(Responder responder, std::size_t max_in_flight)
    : responder_(std::move(responder)), limiter_(max_in_flight) {}

std::string MockJudgeBackend::judge(const std::string& prompt) {
  InFlightLimiter::Guard guard(limiter_);
  const std::size_t call_index = calls_++;
  if (latency_.count() > 0) std::this_thread::sleep_for(latency_);
  if (responder_) return responder_(prompt, call_index);
  for (const auto& rule : rules_) {
    if (prompt.find(rule.contains) != std::string::npos) return rule.reply;
  }
  throw Error(Errc::invalid_argument, "mock judge has no rule matching the prompt");
}

std::vector<MockJudgeBackend::Rule> MockJudgeBackend::load_rules(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_error, fmt::format("cannot open judge script {}", path.string()));
  std::vector<Rule> rules;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const json rec = json::parse(line);
    rules.push_back({rec.value("contains", std::string()), rec.at("reply").get<std::string>()});
  }
  return rules;
}

// ---------------------------------------------------------------------------
// OpenAI-compatible client

OpenAiChatClient::OpenAiChatClient(BackendConfig config)
    : config_(std::move(config)), limiter_(config_.max_in_flight) {
  config_.validate();
  const std::size_t scheme_end = config_.endpoint_url.find("://");
  const std::size_t host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
  const std::size_t path_start = config_.endpoint_url.find('/', host_start);
  base_ = config_.endpoint_url.substr(0, path_start);
  path_ = path_start == std::string::npos ? "/v1/chat/completions" : config_.endpoint_url.substr(path_start);
}

json OpenAiChatClient::request_body(const std::string& prompt, const std::string& model,
                                    const SamplingParams& sampling) const {
  return json{{"model", model},
              {"messages", json::array({{{"role", "user"}, {"content", prompt}}})},
              {"temperature", sampling.temperature},
              {"top_p", sampling.top_p},
              {"max_tokens", sampling.max_tokens}};
}

std::string OpenAiChatClient::complete(const std::string& prompt, const std::string& model,
                                       const SamplingParams& sampling) {
  return with_retry(config_.retry, [&]() -> std::string {
    InFlightLimiter::Guard guard(limiter_);
    httplib::Client client(base_);
    const auto timeout = static_cast<time_t>(config_.timeout.count());
    client.set_connection_timeout(timeout, 0);
    client.set_read_timeout(timeout, 0);
    client.set_write_timeout(timeout, 0);
    httplib::Headers headers;
    if (const char* key = std::getenv(config_.api_key_env.c_str()); key != nullptr && *key != '\0') {
      headers.emplace("Authorization", std::string("Bearer ") + key);
    }
    const std::string body = request_body(prompt, model, sampling).dump();
    const auto started = std::chrono::steady_clock::now();
    auto res = client.Post(path_, headers, body, "application/json");
    const auto elapsed =
        std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - started);
    if (!res) {
      const auto err = res.error();
      const bool timed_out = err == httplib::Error::Read || err == httplib::Error::Write ||
                             err == httplib::Error::ConnectionTimeout;
      spdlog::warn("chat completion to {} failed after {} ms: {}", base_, elapsed.count(), httplib::to_string(err));
      throw BackendError(timed_out ? Errc::timeout : Errc::backend_failure,
                         fmt::format("request to {} failed: {}", base_, httplib::to_string(err)));
    }
    spdlog::debug("chat completion {} -> HTTP {} in {} ms ({} request bytes, {} response bytes)", model, res->status,
                  elapsed.count(), body.size(), res->body.size());
    if (res->status < 200 || res->status >= 300) {
      const bool retryable = res->status == 429 || res->status >= 500;
      throw BackendError(Errc::backend_failure, fmt::format("HTTP {} from {}", res->status, base_), retryable);
    }
    try {
      const json reply = json::parse(res->body);
      const auto& message = reply.at("choices").at(0).at("message");
      return message.at("content").is_null() ? std::string() : message.at("content").get<std::string>();
    } catch (const json::exception& e) {
      throw BackendError(Errc::backend_failure, fmt::format("malformed completion response: {}", e.what()), false);
    }
  });
}

std::vector<std::string> OpenAiChatClient::generate_n(const GenerationRequest& request) {
  std::string model = config_.model_name;
  if (const auto pos = model.find("{tag}"); pos != std::string::npos) model.replace(pos, 5, request.model_tag);
  std::vector<std::string> out;
  out.reserve(request.n);
  for (std::size_t i = 0; i < request.n; ++i) out.push_back(complete(request.prompt, model, request.sampling));
  return out;
}

std::string OpenAiChatClient::judge(const std::string& prompt) {
  return complete(prompt, config_.model_name, config_.sampling);
}

}  // namespace mthinker
