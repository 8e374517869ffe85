#pragma once

#include <memory>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "mthinker/reward.hpp"

namespace mthinker {

/// One `/v1/score` record: {question, lang, gold, response, en_reference_think?}.
/// `question_en` is used for the judge when present, else `question`.
struct ScoreRequest {
  std::string question;
  std::string question_en;
  Language lang = Language::unknown;
  std::string gold;
  std::string response;
  std::optional<std::string> en_reference_think;
};

/// Error(invalid_argument) on a missing or mistyped field.
ScoreRequest parse_score_request(const nlohmann::json& body);

/// Shared by the CLI and the HTTP service so both produce identical output.
nlohmann::json score_request(const ScoreRequest& request, const RewardEngine& engine);

struct ServiceOptions {
  std::string host = "127.0.0.1";
  int port = 8088;
};

/// HTTP front end over a RewardEngine. Handlers are stateless and run on the
/// server's worker threads.
class ScoreServer {
 public:
  explicit ScoreServer(const RewardEngine& engine);
  ~ScoreServer();
  ScoreServer(const ScoreServer&) = delete;
  ScoreServer& operator=(const ScoreServer&) = delete;

  /// Binds the socket; port 0 picks a free port. Returns the bound port.
  int bind(const std::string& host, int port);
  /// Serves until stop(); call after bind().
  void run();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Blocks serving `POST /v1/score` and `GET /healthz` until the process stops.
void serve_scores(const RewardEngine& engine, const ServiceOptions& options);

}  // namespace mthinker
