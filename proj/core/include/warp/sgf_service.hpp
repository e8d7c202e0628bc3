#pragma once

// Reward service front ends: newline-delimited JSON over a stream and an
// HTTP server with single and batch endpoints.
//
// Request:  {"completion": str, "ground_truth": str, "id"?: any, "tag"?: any}
// Response: {"reward": num, "syntactic": bool, "semantic": bool,
//            "detail": str, "answer": str|null} (+ echoed id/tag)

#include <iosfwd>
#include <memory>
#include <string>
#include <string_view>

#include "warp/equivalence.hpp"
#include "warp/reward.hpp"

namespace warp::sgf {

struct ServiceConfig {
  equiv::SolverConfig solver;
  RewardOptions reward;
};

// One request object to one response object, both as JSON text. Bad input
// produces an {"error": ...} object rather than an exception.
std::string handle_request(std::string_view json_body, const ServiceConfig& cfg);

// Accepts {"requests": [...]}, or {"completions": [...], "ground_truth": str},
// or {"completions": [...], "ground_truths": [...]}. Returns
// {"results": [...]} in request order.
std::string handle_batch(std::string_view json_body, const ServiceConfig& cfg);

// Reads requests line by line until EOF. Malformed lines yield
// {"error": "parse", "line": k} with k counted from 1. Blank lines are skipped.
void serve_stdio(std::istream& in, std::ostream& out, const ServiceConfig& cfg);

class HttpService {
 public:
  explicit HttpService(ServiceConfig cfg);
  ~HttpService();
  HttpService(const HttpService&) = delete;
  HttpService& operator=(const HttpService&) = delete;

  // Binds to host:port; port 0 picks a free port. Returns the bound port.
  // Throws warp::ConfigError when binding fails.
  int bind(const std::string& host, int port);
  // Serves until stop() is called.
  void run();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

struct BindAddress {
  std::string host;
  int port = 0;
};

// Parses "host:port". Throws warp::ConfigError.
BindAddress parse_bind(std::string_view text);

}  // namespace warp::sgf
