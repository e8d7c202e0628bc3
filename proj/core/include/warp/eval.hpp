#pragma once

// Evaluation protocol: obtain one completion per (instance, trial), score
// it by solver-verified equivalence with the instance solution, and
// aggregate per-trial accuracy.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "warp/benchmark.hpp"
#include "warp/equivalence.hpp"

namespace warp::eval {

enum class FailureClass { kNoAnswer, kParseError, kNotEquivalent, kSolverUnknown };

const char* to_string(FailureClass f);

struct Score {
  bool correct = false;
  std::optional<FailureClass> failure;
  std::string detail;
};

// Never throws for bad completions; every failure is classified.
Score score_instance(const bench::BenchmarkInstance& instance, std::string_view completion,
                     const equiv::SolverConfig& cfg);

struct ModelEndpoint {
  std::string base_url;
  std::string model_name;
  std::string api_key;
  int max_retries = 3;
  int request_timeout_ms = 120000;
  double temperature = 0.0;
  // When set, trial t sends seed = seed + t - 1. Unset sends no seed.
  std::optional<std::uint64_t> seed;
  std::size_t max_in_flight = 4;

  // Throws warp::ConfigError.
  void validate() const;
};

// JSON object with the ModelEndpoint fields; "api_key_env" names an
// environment variable to read the key from. Throws warp::ConfigError.
ModelEndpoint load_endpoint_config(const std::filesystem::path& path);

struct ChatMessage {
  std::string role;
  std::string content;
};

struct ChatRequest {
  std::string model;
  std::vector<ChatMessage> messages;
  double temperature = 0.0;
  std::optional<std::uint64_t> seed;
};

// The fixed evaluation instructions preceding the question.
std::string instruction_text();

// System message plus the instructions followed by the eval prompt. No
// output length cap is set.
ChatRequest render_eval_request(const bench::BenchmarkInstance& instance,
                                const std::string& model = "");

std::string to_json(const ChatRequest& req);

// Supplies the completion for trial t (1-based) of an instance. Must be
// safe to call concurrently.
class CompletionSource {
 public:
  virtual ~CompletionSource() = default;
  virtual std::string completion(const bench::BenchmarkInstance& instance, int trial) = 0;
};

// Prerecorded NDJSON {"instance_id", "trial", "completion"}.
class RecordedCompletions : public CompletionSource {
 public:
  static RecordedCompletions from_file(const std::filesystem::path& path);
  static RecordedCompletions from_stream(std::istream& in);

  void add(std::string instance_id, int trial, std::string completion);
  // Throws warp::MissingCompletion.
  std::string completion(const bench::BenchmarkInstance& instance, int trial) override;

 private:
  std::map<std::pair<std::string, int>, std::string> table_;
};

// Answers with the instance solution in a well-formed template.
class OracleSource : public CompletionSource {
 public:
  std::string completion(const bench::BenchmarkInstance& instance, int trial) override;
};

// Answers with the solution minus its last conjunct.
class AtomDeletionAdversary : public CompletionSource {
 public:
  std::string completion(const bench::BenchmarkInstance& instance, int trial) override;
};

// Drops the last flattened conjunct of a constraint and re-serializes.
std::string delete_last_atom(std::string_view constraint);

// Chat-completions endpoint. Throws warp::EndpointUnreachable once the
// retries are exhausted.
class EndpointSource : public CompletionSource {
 public:
  explicit EndpointSource(ModelEndpoint endpoint);
  std::string completion(const bench::BenchmarkInstance& instance, int trial) override;

 private:
  struct Gate;

  ModelEndpoint endpoint_;
  // Caps concurrent requests at endpoint_.max_in_flight.
  std::shared_ptr<Gate> gate_;
};

struct Failure {
  std::string instance_id;
  int trial = 0;
  FailureClass failure_class = FailureClass::kNoAnswer;
  std::string detail;
};

struct Tally {
  std::size_t verified = 0;
  std::size_t total = 0;

  double accuracy() const {
    return total == 0 ? 0.0 : static_cast<double>(verified) / static_cast<double>(total);
  }
};

struct TrialResult {
  int trial = 0;
  Tally overall;
  std::map<bench::Tier, Tally> per_tier;
  std::map<std::string, Tally> per_program;
  std::vector<Failure> failures;
};

struct AccuracySummary {
  double mean = 0;
  // Sample standard deviation; 0 for a single trial.
  double stddev = 0;
  bool single_trial = false;
};

AccuracySummary summarize_trials(const std::vector<double>& accuracies);

struct EvalReport {
  std::size_t instances = 0;
  std::vector<double> trial_accuracy;
  std::vector<std::size_t> trial_verified;
  double mean = 0;
  double stddev = 0;
  bool single_trial = false;
  std::map<bench::Tier, double> per_tier;
  std::map<std::string, double> per_program;
  std::vector<Failure> failures;
};

// Breakdowns are computed per trial, then averaged. Throws
// std::invalid_argument for an empty trial list.
EvalReport aggregate(const std::vector<TrialResult>& trials);

struct EvalOptions {
  int trials = 3;
  // Worker threads for fetching and scoring.
  std::size_t workers = 4;
};

EvalReport run_eval(const std::vector<bench::BenchmarkInstance>& instances,
                    CompletionSource& source, const equiv::SolverConfig& cfg,
                    const EvalOptions& options = {});

std::string report_to_json(const EvalReport& r);
std::string format_report(const EvalReport& r);

}  // namespace warp::eval
