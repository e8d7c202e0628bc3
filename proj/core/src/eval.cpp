#include "warp/eval.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <sstream>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "warp/errors.hpp"
#include "warp/reward.hpp"
#include "warp/smtlib.hpp"

namespace warp::eval {

namespace {

using nlohmann::json;
using ojson = nlohmann::ordered_json;

constexpr std::string_view kSystemMessage = "You are a helpful assistant.";

constexpr std::string_view kInstructions =
    "All per-variable constraints must be combined using a top-level (assert (and ...)) "
    "clause.\n"
    "The output must be in exact, canonical SMT-LIB format without extra commentary in the "
    "constraint string.\n"
    "Show your work in <think> </think> tags. And return the final SMT-LIB constraint string "
    "in <answer> </answer> tags.\n"
    "For example: <answer>(assert (and  ( >=  in0 97)  ( <=  in0 122)))</answer>.";

// Runs fn(i) for i in [0, count) on up to `workers` threads. The first
// exception is rethrown after all workers stop.
template <typename Fn>
void parallel_for(std::size_t count, std::size_t workers, Fn fn) {
  workers = std::max<std::size_t>(1, std::min(workers, count));
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto work = [&] {
    for (std::size_t i; !failed && (i = next++) < count;) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        failed = true;
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (std::thread& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);
}

std::string wrap_answer(std::string_view answer) {
  return "<think>Extending the observed pattern.</think><answer>" + std::string(answer) +
         "</answer>";
}

struct UrlParts {
  std::string origin;  // scheme://host[:port]
  std::string path;    // without trailing slash
};

UrlParts split_url(const std::string& url) {
  const std::size_t scheme = url.find("://");
  if (scheme == std::string::npos) throw ConfigError("base_url needs a scheme: " + url);
  const std::size_t path = url.find('/', scheme + 3);
  UrlParts p;
  p.origin = url.substr(0, path);
  p.path = path == std::string::npos ? "" : url.substr(path);
  while (!p.path.empty() && p.path.back() == '/') p.path.pop_back();
  return p;
}

}  // namespace

const char* to_string(FailureClass f) {
  switch (f) {
    case FailureClass::kNoAnswer:
      return "no_answer";
    case FailureClass::kParseError:
      return "parse_error";
    case FailureClass::kNotEquivalent:
      return "not_equivalent";
    case FailureClass::kSolverUnknown:
      return "solver_unknown";
  }
  return "?";
}

Score score_instance(const bench::BenchmarkInstance& instance, std::string_view completion,
                     const equiv::SolverConfig& cfg) {
  Score s;
  std::optional<std::string> answer = sgf::extract_answer(completion);
  if (!answer || answer->empty()) {
    s.failure = FailureClass::kNoAnswer;
    s.detail = "no answer block";
    return s;
  }
  smt::Formula candidate, solution;
  try {
    candidate = smt::parse_formula(*answer);
  } catch (const ParseError& e) {
    s.failure = FailureClass::kParseError;
    s.detail = e.what();
    return s;
  }
  try {
    solution = smt::parse_formula(instance.solution);
  } catch (const ParseError& e) {
    s.failure = FailureClass::kSolverUnknown;
    s.detail = std::string("solution does not parse: ") + e.what();
    return s;
  }
  try {
    equiv::Verdict v = equiv::check_equivalence(candidate, solution, cfg);
    s.detail = equiv::describe(v);
    if (equiv::is_equivalent(v)) {
      s.correct = true;
    } else if (std::holds_alternative<equiv::NotEquivalent>(v)) {
      s.failure = FailureClass::kNotEquivalent;
    } else {
      s.failure = FailureClass::kSolverUnknown;
    }
  } catch (const Error& e) {
    s.failure = FailureClass::kSolverUnknown;
    s.detail = e.what();
  }
  return s;
}

void ModelEndpoint::validate() const {
  if (base_url.empty()) throw ConfigError("endpoint base_url is empty");
  if (max_retries < 0) throw ConfigError("max_retries must be non-negative");
  if (request_timeout_ms <= 0) throw ConfigError("request_timeout_ms must be positive");
  if (max_in_flight == 0) throw ConfigError("max_in_flight must be positive");
  split_url(base_url);
}

ModelEndpoint load_endpoint_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open endpoint config " + path.string());
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw ConfigError("endpoint config must be a JSON object");
  ModelEndpoint e;
  try {
    e.base_url = j.at("base_url").get<std::string>();
    e.model_name = j.value("model_name", std::string());
    if (j.contains("api_key")) e.api_key = j.at("api_key").get<std::string>();
    if (j.contains("api_key_env")) {
      const std::string var = j.at("api_key_env").get<std::string>();
      const char* v = std::getenv(var.c_str());
      if (!v) throw ConfigError("environment variable " + var + " is not set");
      e.api_key = v;
    }
    e.max_retries = j.value("max_retries", e.max_retries);
    e.request_timeout_ms = j.value("request_timeout_ms", e.request_timeout_ms);
    e.temperature = j.value("temperature", e.temperature);
    e.max_in_flight = j.value("max_in_flight", e.max_in_flight);
    if (j.contains("seed") && !j.at("seed").is_null()) {
      if (!j.at("seed").is_number_unsigned()) throw ConfigError("seed must be a non-negative integer");
      e.seed = j.at("seed").get<std::uint64_t>();
    }
  } catch (const json::exception& ex) {
    throw ConfigError(std::string("invalid endpoint config: ") + ex.what());
  }
  e.validate();
  return e;
}

std::string instruction_text() { return std::string(kInstructions); }

ChatRequest render_eval_request(const bench::BenchmarkInstance& instance,
                                const std::string& model) {
  ChatRequest req;
  req.model = model;
  req.messages.push_back({"system", std::string(kSystemMessage)});
  req.messages.push_back({"user", instruction_text() + "\n" + bench::render_eval_prompt(instance)});
  return req;
}

std::string to_json(const ChatRequest& req) {
  ojson j;
  j["model"] = req.model;
  ojson msgs = ojson::array();
  for (const ChatMessage& m : req.messages) msgs.push_back({{"role", m.role}, {"content", m.content}});
  j["messages"] = std::move(msgs);
  j["temperature"] = req.temperature;
  if (req.seed) j["seed"] = *req.seed;
  return j.dump();
}

RecordedCompletions RecordedCompletions::from_stream(std::istream& in) {
  RecordedCompletions r;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j = json::parse(line, nullptr, false);
    try {
      if (j.is_discarded()) throw std::invalid_argument("not JSON");
      r.add(j.at("instance_id").get<std::string>(), j.at("trial").get<int>(),
            j.at("completion").get<std::string>());
    } catch (const std::exception& e) {
      throw ConfigError("completions line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return r;
}

RecordedCompletions RecordedCompletions::from_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read completions file " + path.string());
  return from_stream(in);
}

void RecordedCompletions::add(std::string instance_id, int trial, std::string completion) {
  table_[{std::move(instance_id), trial}] = std::move(completion);
}

std::string RecordedCompletions::completion(const bench::BenchmarkInstance& instance, int trial) {
  auto it = table_.find({instance.id, trial});
  if (it == table_.end()) {
    throw MissingCompletion("no completion for " + instance.id + " trial " + std::to_string(trial));
  }
  return it->second;
}

std::string OracleSource::completion(const bench::BenchmarkInstance& instance, int) {
  return wrap_answer(instance.solution);
}

std::string delete_last_atom(std::string_view constraint) {
  std::vector<smt::Formula> parts = smt::flatten_conjunction(smt::parse_formula(constraint));
  if (!parts.empty()) parts.pop_back();
  return smt::serialize_canonical(smt::Formula::conj_of(std::move(parts)));
}

std::string AtomDeletionAdversary::completion(const bench::BenchmarkInstance& instance, int) {
  return wrap_answer(delete_last_atom(instance.solution));
}

struct EndpointSource::Gate {
  std::mutex mu;
  std::condition_variable cv;
  std::size_t active = 0;
};

EndpointSource::EndpointSource(ModelEndpoint endpoint)
    : endpoint_(std::move(endpoint)), gate_(std::make_shared<Gate>()) {
  endpoint_.validate();
}

std::string EndpointSource::completion(const bench::BenchmarkInstance& instance, int trial) {
  const UrlParts url = split_url(endpoint_.base_url);
  ChatRequest req = render_eval_request(instance, endpoint_.model_name);
  req.temperature = endpoint_.temperature;
  if (endpoint_.seed) req.seed = *endpoint_.seed + static_cast<std::uint64_t>(trial - 1);
  const std::string body = to_json(req);

  httplib::Client client(url.origin);
  const auto timeout = std::chrono::milliseconds(endpoint_.request_timeout_ms);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);
  httplib::Headers headers;
  if (!endpoint_.api_key.empty()) headers.emplace("Authorization", "Bearer " + endpoint_.api_key);

  std::unique_lock<std::mutex> lock(gate_->mu);
  gate_->cv.wait(lock, [&] { return gate_->active < endpoint_.max_in_flight; });
  ++gate_->active;
  lock.unlock();
  struct Release {
    Gate& g;
    ~Release() {
      {
        std::lock_guard<std::mutex> l(g.mu);
        --g.active;
      }
      g.cv.notify_one();
    }
  } release{*gate_};

  std::string last_error = "no attempt made";
  for (int attempt = 0; attempt <= endpoint_.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(std::chrono::milliseconds(200LL << std::min(attempt - 1, 6)));
    }
    auto res = client.Post(url.path + "/chat/completions", headers, body, "application/json");
    if (!res) {
      last_error = httplib::to_string(res.error());
      continue;
    }
    if (res->status < 200 || res->status >= 300) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    json reply = json::parse(res->body, nullptr, false);
    try {
      const json& content = reply.at("choices").at(0).at("message").at("content");
      return content.is_string() ? content.get<std::string>() : std::string();
    } catch (const json::exception&) {
      last_error = "malformed chat response";
    }
  }
  throw EndpointUnreachable(endpoint_.base_url + " after " +
                            std::to_string(endpoint_.max_retries + 1) + " attempts: " + last_error);
}

AccuracySummary summarize_trials(const std::vector<double>& acc) {
  if (acc.empty()) throw std::invalid_argument("at least one trial is required");
  AccuracySummary s;
  double total = 0;
  for (double a : acc) total += a;
  s.mean = total / static_cast<double>(acc.size());
  if (acc.size() == 1) {
    s.single_trial = true;
    return s;
  }
  double sq = 0;
  for (double a : acc) sq += (a - s.mean) * (a - s.mean);
  s.stddev = std::sqrt(sq / static_cast<double>(acc.size() - 1));
  return s;
}

EvalReport aggregate(const std::vector<TrialResult>& trials) {
  if (trials.empty()) throw std::invalid_argument("at least one trial is required");
  EvalReport r;
  r.instances = trials.front().overall.total;
  for (const TrialResult& t : trials) {
    r.trial_accuracy.push_back(t.overall.accuracy());
    r.trial_verified.push_back(t.overall.verified);
    for (const auto& [tier, tally] : t.per_tier) r.per_tier[tier] += tally.accuracy();
    for (const auto& [prog, tally] : t.per_program) r.per_program[prog] += tally.accuracy();
    r.failures.insert(r.failures.end(), t.failures.begin(), t.failures.end());
  }
  const double n = static_cast<double>(trials.size());
  for (auto& [tier, acc] : r.per_tier) acc /= n;
  for (auto& [prog, acc] : r.per_program) acc /= n;
  AccuracySummary s = summarize_trials(r.trial_accuracy);
  r.mean = s.mean;
  r.stddev = s.stddev;
  r.single_trial = s.single_trial;
  return r;
}

EvalReport run_eval(const std::vector<bench::BenchmarkInstance>& instances,
                    CompletionSource& source, const equiv::SolverConfig& cfg,
                    const EvalOptions& options) {
  if (options.trials < 1) throw std::invalid_argument("trials must be at least 1");
  const std::size_t n = instances.size();
  const std::size_t jobs = n * static_cast<std::size_t>(options.trials);
  std::vector<Score> scores(jobs);
  parallel_for(jobs, options.workers, [&](std::size_t k) {
    const bench::BenchmarkInstance& inst = instances[k % n];
    const int trial = static_cast<int>(k / n) + 1;
    scores[k] = score_instance(inst, source.completion(inst, trial), cfg);
  });

  std::vector<TrialResult> trials;
  for (int t = 1; t <= options.trials; ++t) {
    TrialResult tr;
    tr.trial = t;
    for (std::size_t i = 0; i < n; ++i) {
      const bench::BenchmarkInstance& inst = instances[i];
      const Score& s = scores[static_cast<std::size_t>(t - 1) * n + i];
      for (Tally* tally : {&tr.overall, &tr.per_tier[inst.tier], &tr.per_program[inst.program]}) {
        ++tally->total;
        if (s.correct) ++tally->verified;
      }
      if (!s.correct) tr.failures.push_back({inst.id, t, *s.failure, s.detail});
    }
    trials.push_back(std::move(tr));
  }
  return aggregate(trials);
}

std::string report_to_json(const EvalReport& r) {
  ojson j;
  j["instances"] = r.instances;
  j["trial_accuracy"] = r.trial_accuracy;
  j["trial_verified"] = r.trial_verified;
  j["mean"] = r.mean;
  j["stddev"] = r.stddev;
  j["single_trial"] = r.single_trial;
  ojson tiers = ojson::object();
  for (const auto& [tier, acc] : r.per_tier) tiers[bench::to_string(tier)] = acc;
  j["per_tier"] = tiers;
  j["per_program"] = r.per_program;
  ojson failures = ojson::array();
  for (const Failure& f : r.failures) {
    failures.push_back({{"instance_id", f.instance_id},
                        {"trial", f.trial},
                        {"class", to_string(f.failure_class)},
                        {"detail", f.detail}});
  }
  j["failures"] = std::move(failures);
  return j.dump(2);
}

std::string format_report(const EvalReport& r) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2);
  os << "Instances: " << r.instances << "  Trials: " << r.trial_accuracy.size() << '\n';
  for (std::size_t t = 0; t < r.trial_accuracy.size(); ++t) {
    os << "  trial " << (t + 1) << ": " << 100.0 * r.trial_accuracy[t] << "% ("
       << r.trial_verified[t] << "/" << r.instances << ")\n";
  }
  os << "Average: " << 100.0 * r.mean << "%  stddev: " << 100.0 * r.stddev
     << (r.single_trial ? "  (single trial)" : "") << '\n';
  for (const auto& [tier, acc] : r.per_tier) {
    os << "  " << std::left << std::setw(20) << bench::to_string(tier) << std::right
       << 100.0 * acc << "%\n";
  }
  for (const auto& [prog, acc] : r.per_program) {
    os << "  " << std::left << std::setw(20) << prog << std::right << 100.0 * acc << "%\n";
  }
  std::map<FailureClass, std::size_t> classes;
  for (const Failure& f : r.failures) classes[f.failure_class]++;
  if (!classes.empty()) {
    os << "Failures:";
    for (const auto& [c, k] : classes) os << ' ' << to_string(c) << '=' << k;
    os << '\n';
  }
  return os.str();
}

}  // namespace warp::eval
