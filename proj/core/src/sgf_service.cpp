#include "warp/sgf_service.hpp"

#include <istream>
#include <ostream>

#include "httplib.h"
#include "json.hpp"
#include "warp/errors.hpp"

namespace warp::sgf {

namespace {

using nlohmann::json;

json error_object(std::string_view kind, std::string_view message) {
  return json{{"error", kind}, {"message", message}};
}

json breakdown_json(const RewardBreakdown& r) {
  json j{{"reward", r.reward()},
         {"syntactic", r.syntactic_ok},
         {"semantic", r.semantic_ok},
         {"detail", r.detail}};
  j["answer"] = r.extracted_answer ? json(*r.extracted_answer) : json(nullptr);
  return j;
}

const json* find_string(const json& obj, std::initializer_list<const char*> keys) {
  for (const char* k : keys) {
    auto it = obj.find(k);
    if (it != obj.end() && it->is_string()) return &*it;
  }
  return nullptr;
}

json score_pair(const std::string& completion, const std::string& ground_truth,
                const ServiceConfig& cfg) {
  smt::Formula truth;
  try {
    truth = smt::parse_formula(ground_truth);
  } catch (const ParseError& e) {
    return error_object("invalid_ground_truth", e.what());
  }
  return breakdown_json(compute_reward(completion, truth, cfg.solver, cfg.reward));
}

json score_object(const json& req, const ServiceConfig& cfg) {
  if (!req.is_object()) return error_object("invalid_request", "request must be a JSON object");
  const json* completion = find_string(req, {"completion"});
  const json* truth = find_string(req, {"ground_truth", "ground_truth_smt2"});
  json out;
  if (!completion || !truth) {
    out = error_object("invalid_request", "expected string fields completion and ground_truth");
  } else {
    out = score_pair(completion->get<std::string>(), truth->get<std::string>(), cfg);
  }
  for (const char* echo : {"id", "tag"}) {
    if (req.contains(echo)) out[echo] = req.at(echo);
  }
  return out;
}

json batch_results(const json& body, const ServiceConfig& cfg) {
  if (!body.is_object()) return error_object("invalid_request", "batch body must be an object");
  json results = json::array();
  if (auto it = body.find("requests"); it != body.end()) {
    if (!it->is_array()) return error_object("invalid_request", "requests must be an array");
    for (const json& r : *it) results.push_back(score_object(r, cfg));
    return json{{"results", results}};
  }
  auto comps = body.find("completions");
  if (comps == body.end() || !comps->is_array()) {
    return error_object("invalid_request", "expected requests or completions array");
  }
  auto truths = body.find("ground_truths");
  const json* shared = find_string(body, {"ground_truth", "ground_truth_smt2"});
  if (truths != body.end()) {
    if (!truths->is_array() || truths->size() != comps->size()) {
      return error_object("invalid_request", "ground_truths must match completions in length");
    }
  } else if (!shared) {
    return error_object("invalid_request", "missing ground_truth");
  }
  for (std::size_t i = 0; i < comps->size(); ++i) {
    json req{{"completion", (*comps)[i]},
             {"ground_truth", shared ? *shared : (*truths)[i]}};
    results.push_back(score_object(req, cfg));
  }
  return json{{"results", results}};
}

}  // namespace

std::string handle_request(std::string_view json_body, const ServiceConfig& cfg) {
  json req = json::parse(json_body, nullptr, false);
  if (req.is_discarded()) return error_object("parse", "malformed JSON").dump();
  return score_object(req, cfg).dump();
}

std::string handle_batch(std::string_view json_body, const ServiceConfig& cfg) {
  json body = json::parse(json_body, nullptr, false);
  if (body.is_discarded()) return error_object("parse", "malformed JSON").dump();
  return batch_results(body, cfg).dump();
}

void serve_stdio(std::istream& in, std::ostream& out, const ServiceConfig& cfg) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json req = json::parse(line, nullptr, false);
    if (req.is_discarded()) {
      out << json{{"error", "parse"}, {"line", line_no}}.dump() << '\n';
    } else {
      out << score_object(req, cfg).dump() << '\n';
    }
    out.flush();
  }
}

struct HttpService::Impl {
  ServiceConfig cfg;
  httplib::Server server;
};

namespace {

void reply(httplib::Response& res, const std::string& body) {
  json parsed = json::parse(body, nullptr, false);
  if (parsed.is_object() && parsed.contains("error")) {
    res.status = parsed["error"] == "parse" || parsed["error"] == "invalid_request" ||
                         parsed["error"] == "invalid_ground_truth"
                     ? 400
                     : 500;
  }
  res.set_content(body, "application/json");
}

}  // namespace

HttpService::HttpService(ServiceConfig cfg) : impl_(std::make_unique<Impl>()) {
  impl_->cfg = std::move(cfg);
  Impl* impl = impl_.get();
  // httplib also sets SO_REUSEPORT by default, which lets a second server
  // silently share a port that is already taken.
  impl->server.set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const void*>(&yes), sizeof(yes));
  });
  impl->server.Post("/v1/reward", [impl](const httplib::Request& req, httplib::Response& res) {
    reply(res, handle_request(req.body, impl->cfg));
  });
  impl->server.Post("/v1/reward/batch",
                    [impl](const httplib::Request& req, httplib::Response& res) {
                      reply(res, handle_batch(req.body, impl->cfg));
                    });
  impl->server.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"status":"ok"})", "application/json");
  });
}

HttpService::~HttpService() { stop(); }

int HttpService::bind(const std::string& host, int port) {
  int bound = port == 0 ? impl_->server.bind_to_any_port(host)
                        : (impl_->server.bind_to_port(host, port) ? port : -1);
  if (bound < 0) throw ConfigError("cannot bind " + host + ":" + std::to_string(port));
  return bound;
}

void HttpService::run() { impl_->server.listen_after_bind(); }

void HttpService::stop() {
  if (impl_) impl_->server.stop();
}

BindAddress parse_bind(std::string_view text) {
  const std::size_t colon = text.rfind(':');
  if (colon == std::string_view::npos || colon == 0 || colon + 1 == text.size()) {
    throw ConfigError("bind address must be host:port, got '" + std::string(text) + "'");
  }
  BindAddress out{std::string(text.substr(0, colon)), 0};
  try {
    std::size_t pos = 0;
    const std::string port(text.substr(colon + 1));
    out.port = std::stoi(port, &pos);
    if (pos != port.size() || out.port < 0 || out.port > 65535) throw std::out_of_range("port");
  } catch (const std::exception&) {
    throw ConfigError("invalid port in '" + std::string(text) + "'");
  }
  return out;
}

}  // namespace warp::sgf
