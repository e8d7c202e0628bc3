#include "warp/benchmark.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>

#include "json.hpp"
#include "warp/errors.hpp"
#include "warp/generators.hpp"
#include "warp/smtlib.hpp"

namespace warp::bench {

namespace {

using ojson = nlohmann::ordered_json;
using nlohmann::json;

constexpr std::string_view kEvalHeader =
    "Given the following examples of constraints for increasing input sizes:";

constexpr std::string_view kTrainingTemplate =
    "A conversation between User and Assistant. The user asks a question, and the Assistant "
    "solves it.\n"
    "User: Your role is to take a known pattern of symbolic constraints that represent the "
    "longest execution path of a program and generalize it for any given input size N.\n"
    "When you receive an input value N, you must generate a canonical SMT-LIB constraint "
    "string that adheres to the following rules:\n"
    "(assert (op (op (op var_1 var_2)) (op (op var_3 var_4)) (op (op var_5 var_6)) (op var_7 "
    "var_8)))\n"
    "where op is a logical operator (e.g., 'and', 'or', 'not') and var_i are variables or "
    "constants.\n"
    "All per-variable constraints must be combined using a top-level (assert (and ...)) "
    "clause.\n"
    "The output must be in exact, canonical SMT-LIB format without extra commentary in the "
    "constraint string.\n"
    "Show your work in <think> </think> tags. And return the final SMT-LIB constraint string "
    "in <answer> </answer> tags.\n"
    "For example: <answer>(assert (and  ( >=  in0 97)  ( <=  in0 122)))</answer>.\n"
    "Here are the known constraints:\n"
    "[EXAMPLES]\n"
    "What is the constraint for N=[QUESTION]?\n"
    "Assistant: Let me solve this step by step.\n"
    "<think>";

void fail(const std::string& what) { throw InvalidInstance(what); }

// Platform-independent uniform integer in [lo, hi] by rejection sampling.
std::int64_t uniform(std::mt19937_64& g, std::int64_t lo, std::int64_t hi) {
  const std::uint64_t range = static_cast<std::uint64_t>(hi - lo) + 1;
  if (range == 0) return lo + static_cast<std::int64_t>(g());
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % range;
  std::uint64_t x;
  do {
    x = g();
  } while (x >= limit);
  return lo + static_cast<std::int64_t>(x % range);
}

std::string replace_all(std::string text, std::string_view from, std::string_view to) {
  for (std::size_t pos = text.find(from); pos != std::string::npos;
       pos = text.find(from, pos + to.size())) {
    text.replace(pos, from.size(), to);
  }
  return text;
}

std::set<smt::Var> vars_of(const std::string& text, const std::string& what) {
  try {
    return smt::free_vars(smt::parse_formula(text));
  } catch (const ParseError& e) {
    fail(what + " does not parse: " + e.what());
  }
  return {};
}

void check_vars_below(const std::set<smt::Var>& vars, int n, const std::string& what) {
  for (smt::Var v : vars) {
    if (v.index >= static_cast<std::uint32_t>(n)) {
      fail(what + " mentions " + v.name() + " beyond n=" + std::to_string(n));
    }
  }
}

}  // namespace

const char* to_string(Tier t) {
  switch (t) {
    case Tier::kSmall:
      return "small";
    case Tier::kMedium:
      return "medium";
    case Tier::kLarge:
      return "large";
  }
  return "?";
}

Tier tier_from_string(std::string_view s) {
  if (s == "small") return Tier::kSmall;
  if (s == "medium") return Tier::kMedium;
  if (s == "large") return Tier::kLarge;
  throw ConfigError("unknown tier '" + std::string(s) + "'");
}

Tier classify_tier(int jump) {
  if (jump < 1) throw std::invalid_argument("jump must be at least 1");
  if (jump <= 5) return Tier::kSmall;
  if (jump <= 15) return Tier::kMedium;
  return Tier::kLarge;
}

std::pair<int, int> jump_range(Tier t, int max_jump) {
  switch (t) {
    case Tier::kSmall:
      return {1, std::min(5, max_jump)};
    case Tier::kMedium:
      return {6, std::min(15, max_jump)};
    case Tier::kLarge:
      return {16, max_jump};
  }
  return {1, 0};
}

void validate(const BenchmarkInstance& inst) {
  const std::string where = inst.id.empty() ? "instance" : inst.id;
  if (inst.id.empty()) fail("instance id is empty");
  if (inst.examples.size() < kMinExamples) {
    fail(where + ": needs at least " + std::to_string(kMinExamples) + " examples");
  }
  for (std::size_t i = 0; i < inst.examples.size(); ++i) {
    const Example& e = inst.examples[i];
    if (e.n < 1) fail(where + ": example n must be positive");
    if (i > 0 && e.n <= inst.examples[i - 1].n) {
      fail(where + ": examples must be strictly ascending in n");
    }
    check_vars_below(vars_of(e.constraint, where + ": example N=" + std::to_string(e.n)), e.n,
                     where + ": example N=" + std::to_string(e.n));
  }
  const int max_n = inst.examples.back().n;
  if (inst.target_n <= max_n) fail(where + ": target_n must exceed every example n");
  if (inst.target_n > kMaxTarget) {
    fail(where + ": target_n exceeds " + std::to_string(kMaxTarget));
  }
  if (inst.jump != inst.target_n - max_n) fail(where + ": jump does not match target_n");
  if (inst.tier != classify_tier(inst.jump)) fail(where + ": tier does not match jump");
  check_vars_below(vars_of(inst.solution, where + ": solution"), inst.target_n,
                   where + ": solution");
}

std::string to_json_line(const BenchmarkInstance& inst) {
  ojson examples = ojson::array();
  for (const Example& e : inst.examples) {
    examples.push_back(ojson{{"n", e.n}, {"constraint", e.constraint}});
  }
  ojson j;
  j["id"] = inst.id;
  j["program"] = inst.program;
  j["examples"] = std::move(examples);
  j["target_n"] = inst.target_n;
  j["solution"] = inst.solution;
  j["tier"] = to_string(inst.tier);
  j["jump"] = inst.jump;
  return j.dump();
}

BenchmarkInstance from_json_line(std::string_view line) {
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) fail("line is not a JSON object");
  BenchmarkInstance inst;
  try {
    inst.id = j.at("id").get<std::string>();
    inst.program = j.at("program").get<std::string>();
    for (const json& e : j.at("examples")) {
      inst.examples.push_back({e.at("n").get<int>(), e.at("constraint").get<std::string>()});
    }
    inst.target_n = j.at("target_n").get<int>();
    inst.solution = j.at("solution").get<std::string>();
    inst.tier = tier_from_string(j.at("tier").get<std::string>());
    inst.jump = j.at("jump").get<int>();
  } catch (const json::exception& e) {
    fail(std::string("schema violation: ") + e.what());
  } catch (const ConfigError& e) {
    fail(e.what());
  }
  validate(inst);
  return inst;
}

void write_benchmark(std::ostream& out, const std::vector<BenchmarkInstance>& instances) {
  for (const BenchmarkInstance& inst : instances) {
    validate(inst);
    out << to_json_line(inst) << '\n';
  }
}

void write_benchmark(const std::filesystem::path& path,
                     const std::vector<BenchmarkInstance>& instances) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  write_benchmark(out, instances);
}

std::vector<BenchmarkInstance> read_benchmark(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::vector<BenchmarkInstance> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(from_json_line(line));
    } catch (const InvalidInstance& e) {
      throw InvalidInstance(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

std::size_t estimate_tokens(std::string_view text) {
  std::size_t count = 0;
  bool in_word = false;
  for (char c : text) {
    if (c == '(' || c == ')') {
      ++count;
      in_word = false;
    } else if (std::isspace(static_cast<unsigned char>(c))) {
      in_word = false;
    } else if (!in_word) {
      ++count;
      in_word = true;
    }
  }
  return count;
}

TokenEstimator estimator_by_id(std::string_view id) {
  if (id == "lexeme") return estimate_tokens;
  if (id == "whitespace") {
    return [](std::string_view text) {
      std::istringstream in{std::string(text)};
      std::size_t n = 0;
      std::string w;
      while (in >> w) ++n;
      return n;
    };
  }
  throw ConfigError("unknown token estimator '" + std::string(id) + "'");
}

std::string render_examples(const std::vector<Example>& examples) {
  std::string out;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    if (i) out += '\n';
    out += "N=" + std::to_string(examples[i].n) + ": " + examples[i].constraint;
  }
  return out;
}

std::string render_eval_prompt(const std::vector<Example>& examples, int target_n) {
  std::string out(kEvalHeader);
  out += '\n';
  if (!examples.empty()) out += render_examples(examples) + '\n';
  out += "What is the constraint for N=" + std::to_string(target_n) + "?";
  return out;
}

std::string render_eval_prompt(const BenchmarkInstance& inst) {
  return render_eval_prompt(inst.examples, inst.target_n);
}

std::string render_training_prompt(const BenchmarkInstance& inst) {
  std::string out = replace_all(std::string(kTrainingTemplate), "[EXAMPLES]",
                                render_examples(inst.examples));
  return replace_all(std::move(out), "[QUESTION]", std::to_string(inst.target_n));
}

Reduction reduce_examples(const std::vector<Example>& examples, std::size_t budget,
                          const PromptCost& cost) {
  if (examples.empty()) throw std::invalid_argument("reduce_examples needs examples");
  if (cost(examples) <= budget) return examples;
  const std::size_t c = examples.size();
  std::vector<Example> three;
  if (c <= 3) {
    three = examples;
  } else {
    three = {examples.front(), examples[(c - 1) / 2], examples.back()};
  }
  if (cost(three) <= budget) return three;
  return Excluded{};
}

void BuildConfig::validate() const {
  if (programs.empty()) throw ConfigError("programs must not be empty");
  if (token_budget == 0) throw ConfigError("token_budget must be positive");
  for (const auto& [tier, count] : tier_mix) {
    if (count < 0) throw ConfigError(std::string("negative count for tier ") + to_string(tier));
  }
  if (max_target > kMaxTarget) {
    throw ConfigError("max_target cannot exceed " + std::to_string(kMaxTarget));
  }
  if (min_target < 4 || min_target > max_target) {
    throw ConfigError("need 4 <= min_target <= max_target");
  }
  if (max_examples < kMinExamples) throw ConfigError("max_examples must be at least 3");
  if (max_attempts < 1) throw ConfigError("max_attempts must be positive");
  estimator_by_id(tokenizer);
}

BuildConfig reference_preset() {
  BuildConfig cfg;
  cfg.programs.clear();
  for (const gen::ProgramSpec& p : gen::list_programs()) cfg.programs.push_back(p.name);
  cfg.tier_mix = {{Tier::kSmall, 333}, {Tier::kMedium, 333}, {Tier::kLarge, 5}};
  return cfg;
}

namespace {

// nlohmann converts negative numbers to unsigned types silently.
std::uint64_t unsigned_field(const json& j, const char* key) {
  const json& v = j.at(key);
  if (!v.is_number_unsigned()) throw ConfigError(std::string(key) + " must be a non-negative integer");
  return v.get<std::uint64_t>();
}

}  // namespace

BuildConfig load_build_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open build config " + path.string());
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw ConfigError("build config must be a JSON object");
  BuildConfig cfg;
  try {
    if (j.contains("preset")) {
      if (j.at("preset").get<std::string>() != "reference") {
        throw ConfigError("unknown preset '" + j.at("preset").get<std::string>() + "'");
      }
      cfg = reference_preset();
    }
    if (j.contains("programs")) cfg.programs = j.at("programs").get<std::vector<std::string>>();
    if (j.contains("token_budget")) cfg.token_budget = unsigned_field(j, "token_budget");
    if (j.contains("tier_mix")) {
      cfg.tier_mix.clear();
      for (const auto& [k, v] : j.at("tier_mix").items()) {
        cfg.tier_mix[tier_from_string(k)] = v.get<int>();
      }
    }
    if (j.contains("seed")) cfg.seed = unsigned_field(j, "seed");
    if (j.contains("tokenizer")) cfg.tokenizer = j.at("tokenizer").get<std::string>();
    if (j.contains("min_target")) cfg.min_target = j.at("min_target").get<int>();
    if (j.contains("max_target")) cfg.max_target = j.at("max_target").get<int>();
    if (j.contains("max_examples")) cfg.max_examples = unsigned_field(j, "max_examples");
    if (j.contains("max_attempts")) cfg.max_attempts = j.at("max_attempts").get<int>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid build config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

BuildResult build_benchmark(const BuildConfig& cfg) {
  cfg.validate();
  std::vector<const gen::ProgramSpec*> programs;
  for (const std::string& name : cfg.programs) programs.push_back(&gen::find_program(name));

  // With at least three examples the largest example is n >= 3.
  const int max_jump = cfg.max_target - 3;
  for (const auto& [tier, count] : cfg.tier_mix) {
    if (count == 0) continue;
    auto [lo, hi] = jump_range(tier, max_jump);
    if (lo > hi || 3 + lo > cfg.max_target) {
      throw InfeasibleTierMix(std::string("tier ") + to_string(tier) +
                              " needs a jump of at least " + std::to_string(lo) +
                              ", impossible with max_target " + std::to_string(cfg.max_target));
    }
  }

  const TokenEstimator tokens = estimator_by_id(cfg.tokenizer);
  std::mt19937_64 rng(cfg.seed);
  BuildResult result;
  std::map<std::pair<std::string, Tier>, int> serial;
  std::size_t slot = 0;

  for (Tier tier : {Tier::kSmall, Tier::kMedium, Tier::kLarge}) {
    auto it = cfg.tier_mix.find(tier);
    const int count = it == cfg.tier_mix.end() ? 0 : it->second;
    auto [jlo, jhi] = jump_range(tier, max_jump);
    for (int c = 0; c < count; ++c, ++slot) {
      const gen::ProgramSpec& program = *programs[slot % programs.size()];
      std::optional<BenchmarkInstance> made;
      for (int attempt = 0; attempt < cfg.max_attempts && !made; ++attempt) {
        const int target = static_cast<int>(
            uniform(rng, std::max(cfg.min_target, 3 + jlo), cfg.max_target));
        const int jump = static_cast<int>(uniform(rng, jlo, std::min(jhi, target - 3)));
        const int m = target - jump;

        // m is always an example; the rest are distinct draws from 1..m-1.
        const std::size_t k = static_cast<std::size_t>(
            uniform(rng, kMinExamples, std::min<std::size_t>(m, cfg.max_examples)));
        std::vector<int> pool;
        for (int v = 1; v < m; ++v) pool.push_back(v);
        for (std::size_t i = 0; i + 1 < k; ++i) {
          std::size_t j = static_cast<std::size_t>(
              uniform(rng, static_cast<std::int64_t>(i), static_cast<std::int64_t>(pool.size()) - 1));
          std::swap(pool[i], pool[j]);
        }
        std::vector<int> ns(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(k - 1));
        ns.push_back(m);
        std::sort(ns.begin(), ns.end());

        std::vector<Example> examples;
        for (int n : ns) {
          examples.push_back({n, smt::serialize_canonical(gen::generate(program, n))});
        }
        Reduction red = reduce_examples(examples, cfg.token_budget,
                                        [&](const std::vector<Example>& ex) {
                                          return tokens(render_eval_prompt(ex, target));
                                        });
        if (std::holds_alternative<Excluded>(red)) {
          ++result.report.excluded;
          continue;
        }
        auto& kept = std::get<std::vector<Example>>(red);
        if (kept.size() < examples.size()) ++result.report.reduced;

        BenchmarkInstance inst;
        inst.program = program.name;
        inst.examples = std::move(kept);
        inst.target_n = target;
        inst.jump = jump;
        inst.tier = classify_tier(jump);
        inst.solution = smt::serialize_canonical(gen::generate(program, target));
        made = std::move(inst);
      }
      if (!made) {
        throw InfeasibleTierMix(std::string("could not fit a ") + to_string(tier) + " " +
                                program.name + " instance into the token budget after " +
                                std::to_string(cfg.max_attempts) + " attempts");
      }
      std::ostringstream id;
      id << program.name << '-' << to_string(tier) << '-' << std::setw(4) << std::setfill('0')
         << ++serial[{program.name, tier}];
      made->id = id.str();
      validate(*made);
      result.report.per_tier[tier]++;
      result.report.per_program[program.name]++;
      result.instances.push_back(std::move(*made));
    }
  }
  std::sort(result.instances.begin(), result.instances.end(),
            [](const BenchmarkInstance& a, const BenchmarkInstance& b) { return a.id < b.id; });
  result.report.written = result.instances.size();
  return result;
}

Summary summarize(std::vector<double> values) {
  Summary s;
  if (values.empty()) return s;
  std::sort(values.begin(), values.end());
  auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (values[hi] - values[lo]) * (pos - static_cast<double>(lo));
  };
  s.min = values.front();
  s.max = values.back();
  double total = 0;
  for (double v : values) total += v;
  s.mean = total / static_cast<double>(values.size());
  s.median = quantile(0.5);
  s.p90 = quantile(0.9);
  return s;
}

Stats profile(std::istream& in, const TokenEstimator& estimator) {
  Stats s;
  std::vector<double> examples, prompt, solution;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    BenchmarkInstance inst;
    try {
      inst = from_json_line(line);
    } catch (const InvalidInstance&) {
      s.malformed_lines.push_back(line_no);
      continue;
    }
    ++s.instances;
    s.per_tier[inst.tier]++;
    s.target_distribution[inst.target_n]++;
    s.per_program[inst.program]++;
    examples.push_back(static_cast<double>(inst.examples.size()));
    prompt.push_back(static_cast<double>(estimator(render_eval_prompt(inst))));
    solution.push_back(static_cast<double>(estimator(inst.solution)));
  }
  for (const auto& [tier, count] : s.per_tier) {
    s.per_tier_percent[tier] = 100.0 * static_cast<double>(count) / static_cast<double>(s.instances);
  }
  s.examples_per_instance = summarize(std::move(examples));
  s.prompt_tokens = summarize(std::move(prompt));
  s.solution_tokens = summarize(std::move(solution));
  return s;
}

Stats profile(const std::filesystem::path& path, const TokenEstimator& estimator) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  return profile(in, estimator);
}

std::string format_stats(const Stats& s) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2);
  os << "Instances: " << s.instances << '\n';
  os << "Tier      Count  Percent\n";
  for (Tier t : {Tier::kSmall, Tier::kMedium, Tier::kLarge}) {
    auto c = s.per_tier.count(t) ? s.per_tier.at(t) : 0;
    auto p = s.per_tier_percent.count(t) ? s.per_tier_percent.at(t) : 0.0;
    os << std::left << std::setw(8) << to_string(t) << std::right << std::setw(7) << c
       << std::setw(9) << p << '\n';
  }
  auto row = [&](const char* name, const Summary& m) {
    os << std::left << std::setw(22) << name << std::right << " min " << m.min << "  max "
       << m.max << "  mean " << m.mean << "  median " << m.median << "  p90 " << m.p90 << '\n';
  };
  row("Examples per instance", s.examples_per_instance);
  row("Prompt tokens", s.prompt_tokens);
  row("Solution tokens", s.solution_tokens);
  if (!s.target_distribution.empty()) {
    os << "Target N distribution:";
    for (const auto& [n, c] : s.target_distribution) os << ' ' << n << ':' << c;
    os << '\n';
  }
  if (!s.malformed_lines.empty()) {
    os << "Malformed lines:";
    for (std::size_t l : s.malformed_lines) os << ' ' << l;
    os << '\n';
  }
  return os.str();
}

std::string stats_to_json(const Stats& s) {
  auto summary = [](const Summary& m) {
    return ojson{{"min", m.min}, {"max", m.max}, {"mean", m.mean}, {"median", m.median},
                 {"p90", m.p90}};
  };
  ojson j;
  j["instances"] = s.instances;
  ojson tiers = ojson::object();
  for (Tier t : {Tier::kSmall, Tier::kMedium, Tier::kLarge}) {
    tiers[to_string(t)] = {
        {"count", s.per_tier.count(t) ? s.per_tier.at(t) : 0},
        {"percent", s.per_tier_percent.count(t) ? s.per_tier_percent.at(t) : 0.0}};
  }
  j["tiers"] = tiers;
  ojson targets = ojson::object();
  for (const auto& [n, c] : s.target_distribution) targets[std::to_string(n)] = c;
  j["target_distribution"] = targets;
  j["per_program"] = s.per_program;
  j["examples_per_instance"] = summary(s.examples_per_instance);
  j["prompt_tokens"] = summary(s.prompt_tokens);
  j["solution_tokens"] = summary(s.solution_tokens);
  j["malformed_lines"] = s.malformed_lines;
  return j.dump(2);
}

}  // namespace warp::bench
