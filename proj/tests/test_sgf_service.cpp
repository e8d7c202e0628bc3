#include <gtest/gtest.h>

#include <sstream>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "test_support.hpp"
#include "warp/errors.hpp"
#include "warp/sgf_service.hpp"

using namespace warp;
using namespace warp::sgf;
using nlohmann::json;

namespace {

const std::string kQs3 = "(assert (and (and (<= in0 in2) (<= in1 in2)) (<= in0 in1)))";

std::string wrap(const std::string& answer) { return "<think>t</think><answer>" + answer + "</answer>"; }

ServiceConfig config() { return {warp::testing::internal_only(), {}}; }

json request(const std::string& completion, const std::string& truth = kQs3) {
  return json{{"completion", completion}, {"ground_truth", truth}};
}

// Sixteen completions with a known reward pattern.
std::vector<std::pair<std::string, double>> rollout_group() {
  std::vector<std::pair<std::string, double>> out;
  for (int i = 0; i < 16; ++i) {
    switch (i % 4) {
      case 0:
        out.emplace_back(wrap(kQs3), 1.0);
        break;
      case 1:
        out.emplace_back(wrap("(assert (<= in0 in" + std::to_string(i % 3 + 1) + "))"), 0.1);
        break;
      case 2:
        out.emplace_back("noise <answer>" + kQs3 + "</answer>", 0.9);
        break;
      default:
        out.emplace_back("nothing " + std::to_string(i), 0.0);
    }
  }
  return out;
}

}  // namespace

TEST(HandleRequest, MatchingPair) {
  json r = json::parse(handle_request(request(wrap(kQs3)).dump(), config()));
  EXPECT_EQ(r["reward"], 1.0);
  EXPECT_EQ(r["syntactic"], true);
  EXPECT_EQ(r["semantic"], true);
  EXPECT_EQ(r["answer"], kQs3);
  EXPECT_TRUE(r["detail"].is_string());
}

TEST(HandleRequest, AliasEchoAndErrors) {
  json req{{"completion", wrap(kQs3)}, {"ground_truth_smt2", kQs3}, {"id", 7}, {"tag", "x"}};
  json r = json::parse(handle_request(req.dump(), config()));
  EXPECT_EQ(r["reward"], 1.0);
  EXPECT_EQ(r["id"], 7);
  EXPECT_EQ(r["tag"], "x");
  EXPECT_EQ(json::parse(handle_request("{not json", config()))["error"], "parse");
  EXPECT_EQ(json::parse(handle_request(R"({"completion": 3})", config()))["error"], "invalid_request");
  EXPECT_EQ(json::parse(handle_request("[]", config()))["error"], "invalid_request");
  EXPECT_EQ(json::parse(handle_request(request("x", "(assert (<= in0").dump(), config()))["error"],
            "invalid_ground_truth");
}

TEST(HandleRequest, Idempotent) {
  std::string body = request("junk <answer>" + kQs3 + "</answer>").dump();
  std::string first = handle_request(body, config());
  for (int i = 0; i < 5; ++i) EXPECT_EQ(handle_request(body, config()), first);
  EXPECT_EQ(json::parse(first)["reward"], 0.9);
}

TEST(HandleBatch, SixteenInOrder) {
  auto group = rollout_group();
  json comps = json::array();
  for (auto& [c, _] : group) comps.push_back(c);
  for (const json& body : {json{{"completions", comps}, {"ground_truth", kQs3}},
                           json{{"completions", comps}, {"ground_truths", json(std::vector<std::string>(16, kQs3))}}}) {
    json r = json::parse(handle_batch(body.dump(), config()));
    ASSERT_EQ(r["results"].size(), 16u);
    for (std::size_t i = 0; i < 16; ++i) EXPECT_EQ(r["results"][i]["reward"], group[i].second) << i;
  }
  json reqs = json::array();
  for (std::size_t i = 0; i < group.size(); ++i) {
    json q = request(group[i].first);
    q["id"] = i;
    reqs.push_back(q);
  }
  json r = json::parse(handle_batch(json{{"requests", reqs}}.dump(), config()));
  for (std::size_t i = 0; i < 16; ++i) EXPECT_EQ(r["results"][i]["id"], i);
}

TEST(HandleBatch, Errors) {
  EXPECT_EQ(json::parse(handle_batch("nope", config()))["error"], "parse");
  EXPECT_EQ(json::parse(handle_batch(R"({"completions": ["a"]})", config()))["error"], "invalid_request");
  EXPECT_EQ(json::parse(handle_batch(R"({"completions": ["a"], "ground_truths": []})", config()))["error"],
            "invalid_request");
  // One bad entry does not spoil the rest.
  json body{{"requests", {request(wrap(kQs3)), json{{"completion", 1}}}}};
  json r = json::parse(handle_batch(body.dump(), config()));
  EXPECT_EQ(r["results"][0]["reward"], 1.0);
  EXPECT_EQ(r["results"][1]["error"], "invalid_request");
}

TEST(Stdio, OneResponsePerLine) {
  std::stringstream in;
  in << request(wrap(kQs3)).dump() << "\n\n"
     << "{broken\n"
     << request("x").dump() << "\n";
  std::stringstream out;
  serve_stdio(in, out, config());
  std::vector<json> lines;
  for (std::string line; std::getline(out, line);) lines.push_back(json::parse(line));
  ASSERT_EQ(lines.size(), 3u);
  EXPECT_EQ(lines[0]["reward"], 1.0);
  EXPECT_EQ(lines[1], (json{{"error", "parse"}, {"line", 3}}));
  EXPECT_EQ(lines[2]["reward"], 0.0);
}

TEST(ParseBind, Forms) {
  BindAddress a = parse_bind("127.0.0.1:8841");
  EXPECT_EQ(a.host, "127.0.0.1");
  EXPECT_EQ(a.port, 8841);
  EXPECT_EQ(parse_bind("localhost:0").port, 0);
  EXPECT_THROW(parse_bind("8841"), ConfigError);
  EXPECT_THROW(parse_bind("host:99999"), ConfigError);
  EXPECT_THROW(parse_bind("host:12ab"), ConfigError);
}

class Http : public ::testing::Test {
 protected:
  void SetUp() override {
    port_ = service_.bind("127.0.0.1", 0);
    thread_ = std::thread([this] { service_.run(); });
    client_ = std::make_unique<httplib::Client>("127.0.0.1", port_);
    for (int i = 0; i < 100 && !client_->Get("/healthz"); ++i) {
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
  }
  void TearDown() override {
    service_.stop();
    thread_.join();
  }

  HttpService service_{config()};
  int port_ = 0;
  std::thread thread_;
  std::unique_ptr<httplib::Client> client_;
};

TEST_F(Http, SingleMatchesDirectCall) {
  for (auto& [completion, reward] : rollout_group()) {
    std::string body = request(completion).dump();
    auto res = client_->Post("/v1/reward", body, "application/json");
    ASSERT_TRUE(res);
    EXPECT_EQ(res->status, 200);
    EXPECT_EQ(json::parse(res->body), json::parse(handle_request(body, config())));
    EXPECT_EQ(json::parse(res->body)["reward"], reward);
  }
}

TEST_F(Http, BatchAndErrors) {
  json comps = json::array();
  for (auto& [c, _] : rollout_group()) comps.push_back(c);
  auto res = client_->Post("/v1/reward/batch", json{{"completions", comps}, {"ground_truth", kQs3}}.dump(),
                           "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(json::parse(res->body)["results"].size(), 16u);
  res = client_->Post("/v1/reward", "{oops", "application/json");
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 400);
  EXPECT_EQ(json::parse(res->body)["error"], "parse");
  res = client_->Get("/healthz");
  ASSERT_TRUE(res);
  EXPECT_EQ(json::parse(res->body)["status"], "ok");
  EXPECT_EQ(client_->Get("/v1/missing")->status, 404);
}

TEST(HttpBind, PortInUse) {
  HttpService a(config());
  int port = a.bind("127.0.0.1", 0);
  HttpService b(config());
  EXPECT_THROW(b.bind("127.0.0.1", port), ConfigError);
}
