#pragma once

// Tiered extrapolation benchmark: instance type, NDJSON persistence,
// prompt rendering, token-budget reduction, seeded construction and
// corpus statistics.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace warp::bench {

enum class Tier { kSmall, kMedium, kLarge };

const char* to_string(Tier t);
// Accepts "small", "medium", "large". Throws warp::ConfigError.
Tier tier_from_string(std::string_view s);

// Small: jump <= 5. Medium: 6..15. Large: > 15. Throws
// std::invalid_argument for jump < 1.
Tier classify_tier(int jump);

// Inclusive jump range of a tier; the Large range ends at `max_jump`.
std::pair<int, int> jump_range(Tier t, int max_jump);

struct Example {
  int n = 0;
  std::string constraint;

  friend bool operator==(const Example&, const Example&) = default;
};

struct BenchmarkInstance {
  std::string id;
  std::string program;
  std::vector<Example> examples;
  int target_n = 0;
  std::string solution;
  Tier tier = Tier::kSmall;
  int jump = 0;

  friend bool operator==(const BenchmarkInstance&, const BenchmarkInstance&) = default;
};

constexpr int kMaxTarget = 30;
constexpr std::size_t kMinExamples = 3;

// Throws warp::InvalidInstance naming the violated invariant.
void validate(const BenchmarkInstance& inst);

std::string to_json_line(const BenchmarkInstance& inst);
// Parses and validates one line. Throws warp::InvalidInstance.
BenchmarkInstance from_json_line(std::string_view line);

void write_benchmark(const std::filesystem::path& path,
                     const std::vector<BenchmarkInstance>& instances);
void write_benchmark(std::ostream& out, const std::vector<BenchmarkInstance>& instances);
// Throws warp::InvalidInstance with the 1-based line number.
std::vector<BenchmarkInstance> read_benchmark(const std::filesystem::path& path);

// Parentheses count one token each; every other maximal run of
// non-space characters counts one.
std::size_t estimate_tokens(std::string_view text);

using TokenEstimator = std::function<std::size_t(std::string_view)>;
// "lexeme" (estimate_tokens) or "whitespace". Throws warp::ConfigError.
TokenEstimator estimator_by_id(std::string_view id);

std::string render_examples(const std::vector<Example>& examples);
std::string render_eval_prompt(const std::vector<Example>& examples, int target_n);
std::string render_eval_prompt(const BenchmarkInstance& inst);
std::string render_training_prompt(const BenchmarkInstance& inst);

struct Excluded {};
using Reduction = std::variant<std::vector<Example>, Excluded>;

// Cost of a prompt built from the given examples.
using PromptCost = std::function<std::size_t(const std::vector<Example>&)>;

// All examples if they fit; otherwise first, lower median and last; if
// those still do not fit, Excluded.
Reduction reduce_examples(const std::vector<Example>& examples, std::size_t budget,
                          const PromptCost& cost);

struct BuildConfig {
  std::vector<std::string> programs = {"QuickSort"};
  std::size_t token_budget = 2048;
  // Totals across all programs, dealt out round-robin.
  std::map<Tier, int> tier_mix = {{Tier::kSmall, 2}, {Tier::kMedium, 2}, {Tier::kLarge, 1}};
  std::uint64_t seed = 0;
  std::string tokenizer = "lexeme";
  int min_target = 4;
  int max_target = kMaxTarget;
  std::size_t max_examples = 18;
  // Resampling attempts per instance before giving up on the tier.
  int max_attempts = 1000;

  // Throws warp::ConfigError.
  void validate() const;
};

// 333 small, 333 medium, 5 large over the shipped programs.
BuildConfig reference_preset();

// JSON object with the BuildConfig field names; tier_mix keys are tier
// names; "preset": "reference" starts from reference_preset(). Throws ConfigError.
BuildConfig load_build_config(const std::filesystem::path& path);

struct BuildReport {
  std::size_t written = 0;
  std::map<Tier, std::size_t> per_tier;
  std::map<std::string, std::size_t> per_program;
  // Candidates over budget even after reduction (resampled).
  std::size_t excluded = 0;
  // Instances whose examples were cut to three.
  std::size_t reduced = 0;
};

struct BuildResult {
  std::vector<BenchmarkInstance> instances;  // sorted by id
  BuildReport report;
};

// Throws warp::UnknownProgram, warp::InfeasibleTierMix.
BuildResult build_benchmark(const BuildConfig& cfg);

struct Summary {
  double min = 0;
  double max = 0;
  double mean = 0;
  double median = 0;
  double p90 = 0;
};

// Linear interpolation between order statistics. Empty input gives zeros.
Summary summarize(std::vector<double> values);

struct Stats {
  std::size_t instances = 0;
  std::map<Tier, std::size_t> per_tier;
  std::map<Tier, double> per_tier_percent;
  std::map<int, std::size_t> target_distribution;
  std::map<std::string, std::size_t> per_program;
  Summary examples_per_instance;
  Summary prompt_tokens;
  Summary solution_tokens;
  // 1-based line numbers that failed to parse or validate.
  std::vector<std::size_t> malformed_lines;
};

Stats profile(std::istream& in, const TokenEstimator& estimator = estimate_tokens);
Stats profile(const std::filesystem::path& path,
              const TokenEstimator& estimator = estimate_tokens);

std::string format_stats(const Stats& s);
std::string stats_to_json(const Stats& s);

}  // namespace warp::bench
