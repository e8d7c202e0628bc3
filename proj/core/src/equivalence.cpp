#include "warp/equivalence.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <optional>
#include <set>
#include <sstream>

#include "json.hpp"

#include "warp/diff_logic.hpp"
#include "warp/errors.hpp"
#include "warp/linear.hpp"
#include "warp/process.hpp"

namespace warp::equiv {

namespace {

using smt::Formula;
using smt::Model;
using smt::Var;

std::vector<std::string> split_words(std::string_view text) {
  std::vector<std::string> out;
  std::istringstream in{std::string(text)};
  std::string word;
  while (in >> word) out.push_back(word);
  return out;
}

std::vector<Var> union_vars(const Formula& a, const Formula& b) {
  std::set<Var> vs = smt::free_vars(a);
  for (Var v : smt::free_vars(b)) vs.insert(v);
  return {vs.begin(), vs.end()};
}

Model complete_model(Model m, const std::vector<Var>& vars) {
  for (Var v : vars) m.try_emplace(v, 0);
  return m;
}

// Literal lists for the conjunctive fragment; nullopt when some conjunct is
// not a (possibly negated) linear comparison.
std::optional<std::vector<lin::LinearConstraint>> literals_of(const Formula& f) {
  std::vector<lin::LinearConstraint> out;
  for (const Formula& part : smt::flatten_conjunction(f)) {
    auto c = lin::from_literal(part);
    if (!c) return std::nullopt;
    out.push_back(std::move(*c));
  }
  return out;
}

void visit_terms(const smt::Term& t, std::int64_t& max_abs) {
  if (t.is_const()) {
    std::int64_t v = t.value();
    if (v == std::numeric_limits<std::int64_t>::min()) {
      max_abs = std::numeric_limits<std::int64_t>::max();
    } else {
      max_abs = std::max(max_abs, v < 0 ? -v : v);
    }
    return;
  }
  if (t.is_var()) return;
  visit_terms(t.lhs(), max_abs);
  visit_terms(t.rhs(), max_abs);
}

// Walks every atom. Returns false if some atom is outside difference logic.
bool scan_atoms(const Formula& f, std::int64_t& max_abs) {
  switch (f.kind()) {
    case Formula::Kind::kTrue:
      return true;
    case Formula::Kind::kAtom: {
      const smt::Atom& a = f.as_atom();
      visit_terms(a.lhs, max_abs);
      visit_terms(a.rhs, max_abs);
      auto c = lin::from_atom(a);
      if (!c) return false;
      auto t = lin::tighten(*c);
      if (!t) return true;  // integer-infeasible equality, still decidable
      if (t->rel == lin::Rel::kEq) {
        return lin::as_difference({t->form, lin::Rel::kLe}).has_value();
      }
      return lin::as_difference(*t).has_value();
    }
    case Formula::Kind::kNot:
      return scan_atoms(f.child(), max_abs);
    case Formula::Kind::kAnd:
    case Formula::Kind::kOr: {
      bool all = true;
      for (const Formula& c : f.children()) all = scan_atoms(c, max_abs) && all;
      return all;
    }
  }
  return false;
}

struct Domain {
  std::int64_t bound = 0;
  // True when every atom is a difference constraint, so the small-model
  // bound makes a failed search a proof of unsatisfiability.
  bool complete = false;
};

Domain domain_for(const std::vector<const Formula*>& fs) {
  std::int64_t max_abs = 0;
  bool complete = true;
  std::set<Var> vars;
  for (const Formula* f : fs) {
    complete = scan_atoms(*f, max_abs) && complete;
    for (Var v : smt::free_vars(*f)) vars.insert(v);
  }
  // Strict comparisons shift constants by one.
  max_abs = std::max<std::int64_t>(max_abs, 1);
  if (max_abs > (1LL << 30)) return {0, false};
  return {dl::small_model_bound(vars.size(), max_abs), complete};
}

// ---------------------------------------------------------------------------
// External solver.

struct ExternalReply {
  SatStatus status = SatStatus::kUnknown;
  bool timed_out = false;
  std::vector<smt::SExpr> rest;
};

ExternalReply run_external(const std::string& script, const SolverConfig& cfg) {
  ProcessOutput out;
  {
    ChildSlot slot(cfg.max_concurrent_solvers);
    out = run_process(cfg.external_solver_command, script,
                      std::chrono::milliseconds(cfg.timeout_ms));
  }
  ExternalReply reply;
  if (out.timed_out) {
    reply.timed_out = true;
    return reply;
  }
  const std::string& text = out.stdout_text;
  std::size_t start = text.find_first_not_of(" \t\r\n");
  if (start == std::string::npos) {
    throw ProtocolError("solver produced no status (exit status " +
                        std::to_string(out.exit_status) + ")");
  }
  if (text[start] == '(') {
    throw ProtocolError("solver error: " + text.substr(start, 200));
  }
  std::size_t end = text.find_first_of(" \t\r\n()", start);
  if (end == std::string::npos) end = text.size();
  const std::string head = text.substr(start, end - start);
  if (head == "sat") {
    reply.status = SatStatus::kSat;
  } else if (head == "unsat") {
    reply.status = SatStatus::kUnsat;
  } else if (head == "unknown") {
    reply.status = SatStatus::kUnknown;
  } else if (head == "timeout") {
    reply.timed_out = true;
  } else {
    throw ProtocolError("unexpected solver status '" + head + "'");
  }
  if (reply.status == SatStatus::kSat) {
    try {
      reply.rest = smt::read_sexprs(std::string_view(text).substr(end));
    } catch (const ParseError& e) {
      throw ProtocolError(std::string("unreadable model: ") + e.what());
    }
  }
  return reply;
}

std::int64_t parse_int_value(const smt::SExpr& e) {
  if (!e.is_list) {
    std::size_t pos = 0;
    std::int64_t v = 0;
    try {
      v = std::stoll(e.atom, &pos);
    } catch (const std::exception&) {
      throw ProtocolError("non-integer model value '" + e.atom + "'");
    }
    if (pos != e.atom.size()) throw ProtocolError("non-integer model value '" + e.atom + "'");
    return v;
  }
  if (e.items.size() == 2 && !e.items[0].is_list && e.items[0].atom == "-") {
    return smt::detail::checked_sub(0, parse_int_value(e.items[1]));
  }
  throw ProtocolError("unsupported model value expression");
}

Model parse_model(const std::vector<smt::SExpr>& rest, const std::vector<Var>& vars) {
  Model m;
  if (vars.empty()) return m;
  if (rest.empty() || !rest.front().is_list) {
    throw ProtocolError("solver reported sat without a get-value reply");
  }
  for (const smt::SExpr& pair : rest.front().items) {
    if (!pair.is_list || pair.items.size() != 2 || pair.items[0].is_list) {
      throw ProtocolError("malformed get-value entry");
    }
    Var v;
    try {
      v = smt::var_from_name(pair.items[0].atom);
    } catch (const std::invalid_argument&) {
      throw ProtocolError("unknown symbol in model: " + pair.items[0].atom);
    }
    m[v] = parse_int_value(pair.items[1]);
  }
  for (Var v : vars) {
    if (!m.count(v)) throw ProtocolError("model lacks " + v.name());
  }
  return m;
}

// Satisfiability of the conjunction of `parts` through the external solver.
SatResult external_sat(const std::vector<Formula>& parts, const std::vector<Var>& vars,
                       const SolverConfig& cfg) {
  ExternalReply reply = run_external(build_script(parts, vars), cfg);
  SatResult r;
  if (reply.timed_out) {
    r.status = SatStatus::kUnknown;
    r.detail = "timeout";
    return r;
  }
  r.status = reply.status;
  if (r.status == SatStatus::kSat) {
    r.model = parse_model(reply.rest, vars);
    bool ok = false;
    try {
      ok = std::all_of(parts.begin(), parts.end(),
                       [&](const Formula& f) { return smt::evaluate(f, r.model); });
    } catch (const std::exception&) {
      ok = false;
    }
    if (!ok) throw ProtocolError("solver model does not satisfy the assertions");
  } else if (r.status == SatStatus::kUnknown) {
    r.detail = "solver returned unknown";
  }
  return r;
}

// ---------------------------------------------------------------------------
// Strategies.

Verdict unsupported(std::string detail) {
  return Unknown{Unknown::Reason::kUnsupported, std::move(detail)};
}

Verdict not_equivalent(Model witness, Direction d, const Formula& a, const Formula& b,
                       const std::vector<Var>& vars) {
  witness = complete_model(std::move(witness), vars);
  const Formula& holds = d == Direction::kFirstNotSecond ? a : b;
  const Formula& fails = d == Direction::kFirstNotSecond ? b : a;
  if (!smt::evaluate(holds, witness) || smt::evaluate(fails, witness)) {
    throw std::logic_error("equivalence witness failed re-verification: " +
                           smt::to_string(witness));
  }
  return NotEquivalent{std::move(witness), d};
}

Verdict by_diff_logic(const Formula& a, const Formula& b) {
  const auto vars = union_vars(a, b);
  ImplicationResult ab = implies_conjunctive(a, b);
  if (ab.status == ImplicationResult::Status::kUnsupported) return unsupported(ab.reason);
  if (ab.status == ImplicationResult::Status::kNotImplied) {
    return not_equivalent(ab.witness, Direction::kFirstNotSecond, a, b, vars);
  }
  ImplicationResult ba = implies_conjunctive(b, a);
  if (ba.status == ImplicationResult::Status::kUnsupported) return unsupported(ba.reason);
  if (ba.status == ImplicationResult::Status::kNotImplied) {
    return not_equivalent(ba.witness, Direction::kSecondNotFirst, a, b, vars);
  }
  return Equivalent{};
}

Verdict by_external(const Formula& a, const Formula& b, const SolverConfig& cfg) {
  if (cfg.external_solver_command.empty()) return unsupported("no external solver configured");
  const auto vars = union_vars(a, b);
  bool timed_out = false;
  std::string detail;
  for (Direction d : {Direction::kFirstNotSecond, Direction::kSecondNotFirst}) {
    const Formula& p = d == Direction::kFirstNotSecond ? a : b;
    const Formula& q = d == Direction::kFirstNotSecond ? b : a;
    SatResult r = external_sat({p, Formula::negate(q)}, vars, cfg);
    if (r.status == SatStatus::kSat) return not_equivalent(r.model, d, a, b, vars);
    if (r.status == SatStatus::kUnknown) {
      timed_out = timed_out || r.detail == "timeout";
      detail = r.detail;
    }
  }
  if (!detail.empty()) {
    return Unknown{timed_out ? Unknown::Reason::kTimeout : Unknown::Reason::kUnsupported,
                   detail};
  }
  return Equivalent{};
}

Verdict by_brute_force(const Formula& a, const Formula& b, const SolverConfig& cfg) {
  const auto vars = union_vars(a, b);
  Domain dom = domain_for({&a, &b});
  if (dom.bound == 0 && !vars.empty()) return unsupported("constants too large for a finite search");
  dl::BruteForceOptions opts{cfg.brute_force_max_visits};
  bool all_unsat = true;
  for (Direction d : {Direction::kFirstNotSecond, Direction::kSecondNotFirst}) {
    const Formula& p = d == Direction::kFirstNotSecond ? a : b;
    const Formula& q = d == Direction::kFirstNotSecond ? b : a;
    Formula query = Formula::conj({p, Formula::negate(q)});
    try {
      auto r = dl::brute_force_sat(query, -dom.bound, dom.bound, opts);
      if (auto* sat = std::get_if<dl::Sat>(&r)) {
        return not_equivalent(sat->model, d, a, b, vars);
      }
    } catch (const DomainTooLarge& e) {
      return unsupported(e.what());
    } catch (const std::overflow_error& e) {
      all_unsat = false;
    }
  }
  if (!dom.complete || !all_unsat) {
    return unsupported("no counterexample in the finite domain; search incomplete outside difference logic");
  }
  return Equivalent{};
}

}  // namespace

const char* to_string(Strategy s) {
  switch (s) {
    case Strategy::kDiffLogic:
      return "diff_logic";
    case Strategy::kExternal:
      return "external";
    case Strategy::kBruteForce:
      return "brute_force";
  }
  return "?";
}

Strategy strategy_from_string(std::string_view name) {
  if (name == "diff_logic") return Strategy::kDiffLogic;
  if (name == "external") return Strategy::kExternal;
  if (name == "brute_force") return Strategy::kBruteForce;
  throw ConfigError("unknown strategy '" + std::string(name) + "'");
}

const char* to_string(SatStatus s) {
  switch (s) {
    case SatStatus::kSat:
      return "sat";
    case SatStatus::kUnsat:
      return "unsat";
    case SatStatus::kUnknown:
      return "unknown";
  }
  return "?";
}

void SolverConfig::validate() const {
  if (timeout_ms <= 0) throw ConfigError("timeout_ms must be positive");
  if (strategy_order.empty()) throw ConfigError("strategy_order must not be empty");
  if (max_concurrent_solvers == 0) throw ConfigError("max_concurrent_solvers must be positive");
  if (brute_force_max_visits == 0) throw ConfigError("brute_force_max_visits must be positive");
}

void apply_env_overrides(SolverConfig& cfg) {
  if (const char* cmd = std::getenv("WARP_SOLVER_CMD")) {
    cfg.external_solver_command = split_words(cmd);
  }
  if (const char* t = std::getenv("WARP_SOLVER_TIMEOUT_MS")) {
    try {
      std::size_t pos = 0;
      int v = std::stoi(t, &pos);
      if (pos != std::string_view(t).size()) throw std::invalid_argument("trailing");
      cfg.timeout_ms = v;
    } catch (const std::exception&) {
      throw ConfigError(std::string("WARP_SOLVER_TIMEOUT_MS is not an integer: ") + t);
    }
  }
  cfg.validate();
}

SolverConfig default_solver_config() {
  SolverConfig cfg;
  apply_env_overrides(cfg);
  return cfg;
}

SolverConfig load_solver_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open solver config " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("invalid solver config JSON: " + std::string(e.what()));
  }
  if (!j.is_object()) throw ConfigError("solver config must be a JSON object");
  SolverConfig cfg;
  try {
    if (j.contains("external_solver_command")) {
      const auto& c = j.at("external_solver_command");
      if (c.is_string()) {
        cfg.external_solver_command = split_words(c.get<std::string>());
      } else {
        cfg.external_solver_command = c.get<std::vector<std::string>>();
      }
    }
    if (j.contains("timeout_ms")) cfg.timeout_ms = j.at("timeout_ms").get<int>();
    if (j.contains("strategy_order")) {
      cfg.strategy_order.clear();
      for (const auto& s : j.at("strategy_order")) {
        cfg.strategy_order.push_back(strategy_from_string(s.get<std::string>()));
      }
    }
    if (j.contains("max_concurrent_solvers")) {
      cfg.max_concurrent_solvers = j.at("max_concurrent_solvers").get<std::size_t>();
    }
    if (j.contains("brute_force_max_visits")) {
      cfg.brute_force_max_visits = j.at("brute_force_max_visits").get<std::uint64_t>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("invalid solver config field: " + std::string(e.what()));
  }
  apply_env_overrides(cfg);
  return cfg;
}

std::string describe(const Verdict& v) {
  if (std::holds_alternative<Equivalent>(v)) return "equivalent";
  if (const auto* ne = std::get_if<NotEquivalent>(&v)) {
    std::string s = "not equivalent (";
    s += ne->direction == Direction::kFirstNotSecond ? "first holds, second fails"
                                                     : "second holds, first fails";
    s += "; witness " + smt::to_string(ne->witness) + ")";
    return s;
  }
  const auto& u = std::get<Unknown>(v);
  std::string s = u.reason == Unknown::Reason::kTimeout ? "unknown (timeout" : "unknown (unsupported";
  if (!u.detail.empty()) s += ": " + u.detail;
  return s + ")";
}

bool is_equivalent(const Verdict& v) { return std::holds_alternative<Equivalent>(v); }

Verdict check_equivalence_with(Strategy strategy, const Formula& a, const Formula& b,
                               const SolverConfig& cfg) {
  switch (strategy) {
    case Strategy::kDiffLogic:
      return by_diff_logic(a, b);
    case Strategy::kExternal:
      return by_external(a, b, cfg);
    case Strategy::kBruteForce:
      return by_brute_force(a, b, cfg);
  }
  return unsupported("unknown strategy");
}

Verdict check_equivalence(const Formula& a, const Formula& b, const SolverConfig& cfg) {
  std::optional<Unknown> last;
  for (Strategy s : cfg.strategy_order) {
    Verdict v = check_equivalence_with(s, a, b, cfg);
    if (const auto* u = std::get_if<Unknown>(&v)) {
      if (!last || u->reason == Unknown::Reason::kTimeout) last = *u;
      continue;
    }
    return v;
  }
  if (last) return *last;
  return unsupported("no strategy configured");
}

ImplicationResult implies_conjunctive(const Formula& a, const Formula& b) {
  ImplicationResult out;
  auto lhs = literals_of(a);
  auto rhs = literals_of(b);
  if (!lhs || !rhs) {
    out.status = ImplicationResult::Status::kUnsupported;
    out.reason = "conjunct outside the linear comparison fragment";
    return out;
  }
  lin::Conjunction premise(std::move(*lhs));
  if (premise.unsupported()) {
    out.status = ImplicationResult::Status::kUnsupported;
    out.reason = premise.reason();
    return out;
  }
  for (const lin::LinearConstraint& beta : *rhs) {
    std::optional<bool> e = premise.entails(beta);
    if (!e) {
      out.status = ImplicationResult::Status::kUnsupported;
      out.reason = "entailment query left the supported fragment";
      return out;
    }
    if (*e) continue;
    lin::LinResult cex = premise.counterexample(beta);
    auto* sat = std::get_if<lin::LinSat>(&cex);
    if (!sat) throw std::logic_error("entailment refuted without a counterexample");
    out.status = ImplicationResult::Status::kNotImplied;
    out.witness = complete_model(sat->model, union_vars(a, b));
    return out;
  }
  out.status = ImplicationResult::Status::kImplied;
  return out;
}

SatResult check_satisfiable(const Formula& f, const SolverConfig& cfg) {
  const std::set<Var> fv = smt::free_vars(f);
  const std::vector<Var> vars(fv.begin(), fv.end());
  SatResult last;
  last.detail = "no strategy configured";
  for (Strategy s : cfg.strategy_order) {
    switch (s) {
      case Strategy::kDiffLogic: {
        auto lits = literals_of(f);
        if (!lits) {
          last.detail = "formula is not a conjunction of literals";
          break;
        }
        lin::LinResult r = lin::decide(std::move(*lits));
        if (auto* sat = std::get_if<lin::LinSat>(&r)) {
          return {SatStatus::kSat, complete_model(sat->model, vars), ""};
        }
        if (std::holds_alternative<lin::LinUnsat>(r)) return {SatStatus::kUnsat, {}, ""};
        last.detail = std::get<lin::LinUnsupported>(r).reason;
        break;
      }
      case Strategy::kExternal: {
        if (cfg.external_solver_command.empty()) {
          last.detail = "no external solver configured";
          break;
        }
        SatResult r = external_sat({f}, vars, cfg);
        if (r.status != SatStatus::kUnknown) return r;
        last = r;
        break;
      }
      case Strategy::kBruteForce: {
        Domain dom = domain_for({&f});
        try {
          auto r = dl::brute_force_sat(f, -dom.bound, dom.bound,
                                       dl::BruteForceOptions{cfg.brute_force_max_visits});
          if (auto* sat = std::get_if<dl::Sat>(&r)) {
            return {SatStatus::kSat, complete_model(sat->model, vars), ""};
          }
          if (dom.complete) return {SatStatus::kUnsat, {}, ""};
          last.detail = "finite search incomplete outside difference logic";
        } catch (const DomainTooLarge& e) {
          last.detail = e.what();
        } catch (const std::overflow_error& e) {
          last.detail = e.what();
        }
        break;
      }
    }
  }
  last.status = SatStatus::kUnknown;
  return last;
}

std::string build_script(const std::vector<Formula>& assertions,
                         const std::vector<Var>& declared) {
  std::ostringstream os;
  os << "(set-option :produce-models true)\n(set-logic QF_LIA)\n";
  for (Var v : declared) os << "(declare-fun " << v.name() << " () Int)\n";
  for (const Formula& f : assertions) os << "(assert " << smt::to_sexpr(f) << ")\n";
  os << "(check-sat)\n";
  if (!declared.empty()) {
    os << "(get-value (";
    for (std::size_t i = 0; i < declared.size(); ++i) {
      if (i) os << ' ';
      os << declared[i].name();
    }
    os << "))\n";
  }
  os << "(exit)\n";
  return os.str();
}

SatStatus external_check_sat(const std::string& script, const SolverConfig& cfg) {
  ExternalReply reply = run_external(script, cfg);
  if (reply.timed_out) return SatStatus::kUnknown;
  return reply.status;
}

}  // namespace warp::equiv
