#pragma once

// Semantic equivalence of two constraints: a <=> b holds iff (a and not b)
// and (b and not a) are both unsatisfiable. Three interchangeable back
// ends decide the two checks: the internal difference-logic engine, an
// external SMT-LIB solver process, and finite-domain refutation.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "warp/smtlib.hpp"

namespace warp::equiv {

enum class Strategy { kDiffLogic, kExternal, kBruteForce };

const char* to_string(Strategy s);
Strategy strategy_from_string(std::string_view name);

struct SolverConfig {
  // argv of a solver reading SMT-LIB v2 on stdin, e.g. {"z3", "-in", "-smt2"}.
  // Empty disables the external strategy.
  std::vector<std::string> external_solver_command;
  int timeout_ms = 5000;
  std::vector<Strategy> strategy_order = {Strategy::kDiffLogic, Strategy::kExternal,
                                          Strategy::kBruteForce};
  // Upper bound on concurrently running solver children, process-wide.
  std::size_t max_concurrent_solvers = 4;
  std::uint64_t brute_force_max_visits = 10'000'000;

  // Throws warp::ConfigError.
  void validate() const;
};

// Defaults with WARP_SOLVER_CMD / WARP_SOLVER_TIMEOUT_MS applied.
SolverConfig default_solver_config();

// Reads a JSON object with optional keys external_solver_command (string or
// array), timeout_ms, strategy_order, max_concurrent_solvers,
// brute_force_max_visits; then applies the environment overrides.
SolverConfig load_solver_config(const std::filesystem::path& path);
void apply_env_overrides(SolverConfig& cfg);

enum class Direction {
  // The first formula holds and the second does not.
  kFirstNotSecond,
  kSecondNotFirst,
};

struct Equivalent {};

struct NotEquivalent {
  smt::Model witness;
  Direction direction = Direction::kFirstNotSecond;
};

struct Unknown {
  enum class Reason { kTimeout, kUnsupported };
  Reason reason = Reason::kUnsupported;
  std::string detail;
};

using Verdict = std::variant<Equivalent, NotEquivalent, Unknown>;

std::string describe(const Verdict& v);
bool is_equivalent(const Verdict& v);

// Throws SolverSpawnFailure or ProtocolError from the external strategy.
Verdict check_equivalence(const smt::Formula& a, const smt::Formula& b,
                          const SolverConfig& cfg);

// Runs a single strategy.
Verdict check_equivalence_with(Strategy strategy, const smt::Formula& a,
                               const smt::Formula& b, const SolverConfig& cfg);

// Conjunctive entailment: for every conjunct beta of b, a and not beta is
// infeasible. Both sides must flatten to comparison literals.
struct ImplicationResult {
  enum class Status { kImplied, kNotImplied, kUnsupported };
  Status status = Status::kUnsupported;
  // Set for kNotImplied: satisfies a, falsifies b.
  smt::Model witness;
  std::string reason;
};

ImplicationResult implies_conjunctive(const smt::Formula& a, const smt::Formula& b);

enum class SatStatus { kSat, kUnsat, kUnknown };

const char* to_string(SatStatus s);

// Satisfiability of a single formula, strategies tried in order.
struct SatResult {
  SatStatus status = SatStatus::kUnknown;
  smt::Model model;
  std::string detail;
};

SatResult check_satisfiable(const smt::Formula& f, const SolverConfig& cfg);

// Complete QF_LIA session: declarations for every variable of the given
// formulas, one assert per formula, check-sat, and a get-value request.
std::string build_script(const std::vector<smt::Formula>& assertions,
                         const std::vector<smt::Var>& declared);

// Sends `script` to the configured solver and reads the first status
// token. Timeouts map to kUnknown. Throws SolverSpawnFailure, ProtocolError.
SatStatus external_check_sat(const std::string& script, const SolverConfig& cfg);

}  // namespace warp::equiv
