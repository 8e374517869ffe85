#include "mthinker/service.hpp"

#include <httplib.h>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "mthinker/error.hpp"

namespace mthinker {

using nlohmann::json;

namespace {

std::string required_string(const json& body, const char* key) {
  const auto it = body.find(key);
  if (it == body.end() || !it->is_string()) {
    throw Error(Errc::invalid_argument, fmt::format("field '{}' must be a string", key));
  }
  return it->get<std::string>();
}

json error_body(std::string_view code, std::string_view message) {
  return json{{"error", code}, {"message", message}};
}

}  // namespace

ScoreRequest parse_score_request(const json& body) {
  if (!body.is_object()) throw Error(Errc::invalid_argument, "request body must be a JSON object");
  ScoreRequest r;
  r.question = required_string(body, "question");
  r.gold = required_string(body, "gold");
  r.response = required_string(body, "response");
  const auto lang = required_string(body, "lang");
  const auto parsed = parse_language(lang);
  if (!parsed) throw Error(Errc::invalid_argument, fmt::format("unknown language code '{}'", lang));
  r.lang = *parsed;
  if (body.contains("question_en") && !body.at("question_en").is_null()) r.question_en = required_string(body, "question_en");
  if (body.contains("en_reference_think") && !body.at("en_reference_think").is_null()) {
    r.en_reference_think = required_string(body, "en_reference_think");
  }
  return r;
}

json score_request(const ScoreRequest& request, const RewardEngine& engine) {
  RolloutInput input{.response = request.response,
                     .lang = request.lang,
                     .gold = request.gold,
                     .en_reference_think = std::nullopt,
                     .en_question = request.question_en.empty() ? request.question : request.question_en};
  if (request.en_reference_think) input.en_reference_think = *request.en_reference_think;
  return json(engine.score(input));
}

struct ScoreServer::Impl {
  httplib::Server server;
};

ScoreServer::ScoreServer(const RewardEngine& engine) : impl_(std::make_unique<Impl>()) {
  auto& server = impl_->server;
  server.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(json{{"status", "ok"}}.dump(), "application/json");
  });
  server.Post("/v1/score", [&engine](const httplib::Request& req, httplib::Response& res) {
    ScoreRequest request;
    try {
      request = parse_score_request(json::parse(req.body));
    } catch (const std::exception& e) {
      res.status = 400;
      res.set_content(error_body("BAD_REQUEST", e.what()).dump(), "application/json");
      return;
    }
    try {
      res.set_content(score_request(request, engine).dump(), "application/json");
    } catch (const Error& e) {
      res.status = e.code() == Errc::judge_unreachable ? 502 : 500;
      res.set_content(error_body(to_string(e.code()), e.what()).dump(), "application/json");
    }
  });
}

ScoreServer::~ScoreServer() { stop(); }

int ScoreServer::bind(const std::string& host, int port) {
  const int bound = port == 0 ? impl_->server.bind_to_any_port(host) : (impl_->server.bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw Error(Errc::io_error, fmt::format("cannot bind {}:{}", host, port));
  return bound;
}

void ScoreServer::run() { impl_->server.listen_after_bind(); }

void ScoreServer::stop() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

void serve_scores(const RewardEngine& engine, const ServiceOptions& options) {
  ScoreServer server(engine);
  const int port = server.bind(options.host, options.port);
  spdlog::info("serving scores on {}:{}", options.host, port);
  server.run();
}

}  // namespace mthinker
