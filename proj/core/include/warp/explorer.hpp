#pragma once

// Desk-scale symbolic worst-case executor. A toy program is run repeatedly
// against a PathContext; each symbolic branch forks the search, infeasible
// prefixes are pruned, and every completed path reports its condition and
// accumulated cost.

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "warp/equivalence.hpp"
#include "warp/smtlib.hpp"

namespace warp::wca {

// What a toy program sees while it runs.
class PathContext {
 public:
  virtual ~PathContext() = default;

  // Decides a symbolic comparison. The explorer returns each feasible
  // outcome on some run.
  virtual bool branch(const smt::Atom& cond) = 0;

  // Adds cost_model[kind] * units to the path cost.
  virtual void charge(const std::string& kind, std::int64_t units = 1) = 0;
};

// Structured statement form for programs without data movement.
struct Stmt;
using StmtPtr = std::shared_ptr<const Stmt>;

struct Seq {
  std::vector<StmtPtr> body;
};
struct If {
  smt::Atom cond;
  StmtPtr then_branch;
  StmtPtr else_branch;
};
struct BoundedLoop {
  std::function<int(int n)> count;
  // Statement for iteration i (0-based).
  std::function<StmtPtr(int i)> body;
};
struct Charge {
  std::string kind;
  std::int64_t units = 1;
};
struct Nop {};

struct Stmt {
  std::variant<Seq, If, BoundedLoop, Charge, Nop> node;
};

StmtPtr seq(std::vector<StmtPtr> body);
StmtPtr if_(smt::Atom cond, StmtPtr then_branch, StmtPtr else_branch = nullptr);
StmtPtr loop(std::function<int(int n)> count, std::function<StmtPtr(int i)> body);
StmtPtr charge(std::string kind, std::int64_t units = 1);
StmtPtr nop();

void interpret(const Stmt& s, int n, PathContext& ctx);

using CostModel = std::map<std::string, std::int64_t>;

struct ToyProgram {
  std::string name;
  CostModel cost_model;
  std::function<void(PathContext& ctx, int n)> run;
};

// Wraps a statement builder as a toy program.
ToyProgram from_stmt(std::string name, CostModel cost_model,
                     std::function<StmtPtr(int n)> build);

// Toy counterparts of the registered generator programs.
const std::vector<ToyProgram>& toy_programs();
// Throws warp::UnknownProgram.
const ToyProgram& toy_program(std::string_view name);

struct PathResult {
  // Conjunction of the taken-branch literals in execution order.
  smt::Formula condition;
  std::int64_t cost = 0;
  // Branch outcomes in execution order.
  std::vector<bool> trace;
};

struct ExploreOptions {
  // Maximum number of program runs before PathBudgetExceeded.
  std::size_t path_budget = std::size_t{1} << 20;
  // When false, every branch is forked and infeasible paths are filtered
  // out after completion.
  bool prune = true;
  // Used when a path condition leaves the internal fragment.
  equiv::SolverConfig solver = {{}, 5000, {equiv::Strategy::kDiffLogic, equiv::Strategy::kExternal}};
};

// The literal taken on the false side of `cond`. Comparisons flip by
// swapping operands; equality is negated with Not.
smt::Formula negate_condition(const smt::Atom& cond);

// Feasible paths sorted by trace. Throws PathBudgetExceeded,
// UnsupportedCondition.
std::vector<PathResult> enumerate_paths(const ToyProgram& p, int n,
                                        const ExploreOptions& options = {});

// Maximum cost; ties go to the lexicographically smallest trace.
PathResult worst_case(const ToyProgram& p, int n, const ExploreOptions& options = {});

std::vector<std::pair<int, std::size_t>> path_growth(const ToyProgram& p, int n_lo, int n_hi,
                                                     const ExploreOptions& options = {});

// Re-runs the program following `trace` and sums the charges. Throws
// std::invalid_argument if the trace does not match the program's branches.
std::int64_t replay_cost(const ToyProgram& p, int n, const std::vector<bool>& trace);

struct ConcreteRun {
  std::vector<bool> trace;
  std::int64_t cost = 0;
};

// Runs the program on concrete inputs in0..in{n-1}.
ConcreteRun run_concrete(const ToyProgram& p, int n, const smt::Model& inputs);

}  // namespace warp::wca
