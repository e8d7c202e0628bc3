#include "warp/explorer.hpp"

#include <algorithm>
#include <stdexcept>

#include "warp/errors.hpp"
#include "warp/linear.hpp"

namespace warp::wca {

namespace {

using smt::Atom;
using smt::Cmp;
using smt::Formula;
using smt::Term;

std::int64_t cost_of(const CostModel& model, const std::string& kind, std::int64_t units) {
  auto it = model.find(kind);
  if (it == model.end()) throw std::invalid_argument("cost model has no entry for '" + kind + "'");
  return smt::detail::checked_mul(it->second, units);
}

class CostingContext : public PathContext {
 public:
  explicit CostingContext(const CostModel& model) : model_(model) {}

  void charge(const std::string& kind, std::int64_t units) override {
    cost_ = smt::detail::checked_add(cost_, cost_of(model_, kind, units));
  }

  std::int64_t cost() const { return cost_; }
  const std::vector<bool>& trace() const { return trace_; }

 protected:
  std::vector<bool> trace_;

 private:
  const CostModel& model_;
  std::int64_t cost_ = 0;
};

bool feasible(const std::vector<Formula>& literals, const equiv::SolverConfig& solver) {
  std::vector<lin::LinearConstraint> cs;
  cs.reserve(literals.size());
  bool linear = true;
  for (const Formula& f : literals) {
    auto c = lin::from_literal(f);
    if (!c) {
      linear = false;
      break;
    }
    cs.push_back(std::move(*c));
  }
  if (linear) {
    lin::LinResult r = lin::decide(std::move(cs));
    if (std::holds_alternative<lin::LinSat>(r)) return true;
    if (std::holds_alternative<lin::LinUnsat>(r)) return false;
  }
  equiv::SatResult r = equiv::check_satisfiable(Formula::conj_of(literals), solver);
  if (r.status == equiv::SatStatus::kUnknown) {
    throw UnsupportedCondition("path condition outside the supported fragment: " +
                               smt::to_sexpr(Formula::conj_of(literals)) +
                               (r.detail.empty() ? "" : " (" + r.detail + ")"));
  }
  return r.status == equiv::SatStatus::kSat;
}

// Follows a fixed decision prefix, then extends it with fresh decisions.
// Each fork whose other side is feasible is queued as a new prefix.
class ExploringContext : public CostingContext {
 public:
  ExploringContext(const CostModel& model, const std::vector<bool>& prefix,
                   const ExploreOptions& options, std::vector<std::vector<bool>>& pending)
      : CostingContext(model), prefix_(prefix), options_(options), pending_(pending) {}

  bool branch(const Atom& cond) override {
    const std::size_t k = trace_.size();
    bool take;
    if (k < prefix_.size()) {
      take = prefix_[k];
    } else if (!options_.prune) {
      take = true;
      fork_false();
    } else {
      literals_.push_back(Formula::atom(cond));
      bool yes = feasible(literals_, options_.solver);
      literals_.back() = negate_condition(cond);
      bool no = feasible(literals_, options_.solver);
      literals_.pop_back();
      if (!yes && !no) throw std::logic_error("explorer reached an infeasible prefix");
      if (yes && no) fork_false();
      take = yes;
    }
    literals_.push_back(take ? Formula::atom(cond) : negate_condition(cond));
    trace_.push_back(take);
    return take;
  }

  const std::vector<Formula>& literals() const { return literals_; }

 private:
  void fork_false() {
    std::vector<bool> alt = trace_;
    alt.push_back(false);
    pending_.push_back(std::move(alt));
  }

  const std::vector<bool>& prefix_;
  const ExploreOptions& options_;
  std::vector<std::vector<bool>>& pending_;
  std::vector<Formula> literals_;
};

class ReplayContext : public CostingContext {
 public:
  ReplayContext(const CostModel& model, const std::vector<bool>& trace)
      : CostingContext(model), target_(trace) {}

  bool branch(const Atom&) override {
    if (trace_.size() >= target_.size()) {
      throw std::invalid_argument("trace is shorter than the program's branch sequence");
    }
    bool d = target_[trace_.size()];
    trace_.push_back(d);
    return d;
  }

  void finish() const {
    if (trace_.size() != target_.size()) {
      throw std::invalid_argument("trace is longer than the program's branch sequence");
    }
  }

 private:
  const std::vector<bool>& target_;
};

class ConcreteContext : public CostingContext {
 public:
  ConcreteContext(const CostModel& model, const smt::Model& inputs)
      : CostingContext(model), inputs_(inputs) {}

  bool branch(const Atom& cond) override {
    bool d = smt::evaluate(cond, inputs_);
    trace_.push_back(d);
    return d;
  }

 private:
  const smt::Model& inputs_;
};

// ---------------------------------------------------------------------------
// Toy programs.

Term in(int i) { return Term::var(static_cast<std::uint32_t>(i)); }

std::vector<Term> symbolic_inputs(int n) {
  std::vector<Term> a;
  for (int i = 0; i < n; ++i) a.push_back(in(i));
  return a;
}

// Lomuto partition with the last element as pivot.
void quick_sort(PathContext& ctx, std::vector<Term>& a, int lo, int hi) {
  if (lo >= hi) return;
  const Term pivot = a[hi];
  int i = lo - 1;
  for (int j = lo; j < hi; ++j) {
    ctx.charge("compare");
    if (ctx.branch(smt::make_atom(Cmp::kLe, a[j], pivot))) {
      ++i;
      std::swap(a[i], a[j]);
      ctx.charge("swap");
    }
  }
  std::swap(a[i + 1], a[hi]);
  ctx.charge("swap");
  quick_sort(ctx, a, lo, i);
  quick_sort(ctx, a, i + 2, hi);
}

void bubble_sort(PathContext& ctx, int n) {
  std::vector<Term> a = symbolic_inputs(n);
  for (int i = 0; i + 1 < n; ++i) {
    for (int j = 0; j + 1 < n - i; ++j) {
      ctx.charge("compare");
      if (ctx.branch(smt::make_atom(Cmp::kGt, a[j], a[j + 1]))) {
        std::swap(a[j], a[j + 1]);
        ctx.charge("swap");
      }
    }
  }
}

// Checks conds[k..] in order, returning early on the first failure; the
// heavy loop runs only when every check passes.
StmtPtr guarded_heavy(const std::vector<Atom>& conds, std::size_t k) {
  if (k == conds.size()) return charge("heavy");
  return seq({charge("compare"), if_(conds[k], guarded_heavy(conds, k + 1), nop())});
}

ToyProgram guarded(std::string name, std::function<std::vector<Atom>(int n)> checks) {
  return from_stmt(std::move(name), {{"compare", 1}, {"heavy", 1000}},
                   [checks = std::move(checks)](int n) { return guarded_heavy(checks(n), 0); });
}

std::vector<ToyProgram> build_toys() {
  std::vector<ToyProgram> toys;
  toys.push_back({"QuickSort", {{"compare", 1}, {"swap", 1}}, [](PathContext& ctx, int n) {
                    std::vector<Term> a = symbolic_inputs(n);
                    quick_sort(ctx, a, 0, n - 1);
                  }});
  toys.push_back(guarded("SameHundred", [](int n) {
    std::vector<Atom> c;
    for (int i = 0; i < n; ++i) c.push_back(smt::make_atom(Cmp::kEq, in(i), Term::constant(100)));
    return c;
  }));
  toys.push_back(guarded("WeirdFibonacci", [](int n) {
    std::vector<Atom> c;
    for (int i = 2; i < n; ++i) {
      c.push_back(smt::make_atom(Cmp::kEq, in(i), Term::add(in(i - 1), in(i - 2))));
    }
    return c;
  }));
  toys.push_back(guarded("WeirdConstDiff", [](int n) {
    std::vector<Atom> c;
    for (int i = 2; i < n; ++i) {
      c.push_back(smt::make_atom(Cmp::kEq, Term::sub(in(i), in(i - 1)), Term::sub(in(1), in(0))));
    }
    return c;
  }));
  toys.push_back(guarded("SimpleAscendingLast", [](int n) {
    std::vector<Atom> c;
    if (n >= 2) c.push_back(smt::make_atom(Cmp::kLt, in(n - 2), in(n - 1)));
    return c;
  }));
  toys.push_back({"BubbleSort", {{"compare", 1}, {"swap", 1}}, bubble_sort});
  toys.push_back(guarded("ComplexPalindrome", [](int n) {
    std::vector<Atom> c;
    for (int i = 0; i < n / 2; ++i) c.push_back(smt::make_atom(Cmp::kEq, in(i), in(n - 1 - i)));
    return c;
  }));
  return toys;
}

template <typename T>
StmtPtr make(T node) {
  return std::make_shared<const Stmt>(Stmt{std::move(node)});
}

}  // namespace

StmtPtr seq(std::vector<StmtPtr> body) { return make(Seq{std::move(body)}); }

StmtPtr if_(Atom cond, StmtPtr then_branch, StmtPtr else_branch) {
  return make(If{std::move(cond), then_branch ? then_branch : nop(),
                 else_branch ? else_branch : nop()});
}

StmtPtr loop(std::function<int(int n)> count, std::function<StmtPtr(int i)> body) {
  return make(BoundedLoop{std::move(count), std::move(body)});
}

StmtPtr charge(std::string kind, std::int64_t units) {
  if (units < 0) throw std::invalid_argument("charge units must be non-negative");
  return make(Charge{std::move(kind), units});
}

StmtPtr nop() { return make(Nop{}); }

void interpret(const Stmt& s, int n, PathContext& ctx) {
  std::visit(
      [&](const auto& node) {
        using T = std::decay_t<decltype(node)>;
        if constexpr (std::is_same_v<T, Seq>) {
          for (const StmtPtr& child : node.body) interpret(*child, n, ctx);
        } else if constexpr (std::is_same_v<T, If>) {
          interpret(ctx.branch(node.cond) ? *node.then_branch : *node.else_branch, n, ctx);
        } else if constexpr (std::is_same_v<T, BoundedLoop>) {
          const int count = node.count(n);
          for (int i = 0; i < count; ++i) interpret(*node.body(i), n, ctx);
        } else if constexpr (std::is_same_v<T, Charge>) {
          ctx.charge(node.kind, node.units);
        }
      },
      s.node);
}

ToyProgram from_stmt(std::string name, CostModel cost_model,
                     std::function<StmtPtr(int n)> build) {
  return {std::move(name), std::move(cost_model),
          [build = std::move(build)](PathContext& ctx, int n) { interpret(*build(n), n, ctx); }};
}

const std::vector<ToyProgram>& toy_programs() {
  static const std::vector<ToyProgram> toys = build_toys();
  return toys;
}

const ToyProgram& toy_program(std::string_view name) {
  for (const ToyProgram& p : toy_programs()) {
    if (p.name == name) return p;
  }
  throw UnknownProgram("no toy program named '" + std::string(name) + "'");
}

Formula negate_condition(const Atom& cond) {
  switch (cond.op) {
    case Cmp::kLe:
      return Formula::atom(smt::make_atom(Cmp::kLt, cond.rhs, cond.lhs));
    case Cmp::kLt:
      return Formula::atom(smt::make_atom(Cmp::kLe, cond.rhs, cond.lhs));
    case Cmp::kGe:
      return Formula::atom(smt::make_atom(Cmp::kLt, cond.lhs, cond.rhs));
    case Cmp::kGt:
      return Formula::atom(smt::make_atom(Cmp::kLe, cond.lhs, cond.rhs));
    case Cmp::kEq:
      break;
  }
  return Formula::negate(Formula::atom(cond));
}

std::vector<PathResult> enumerate_paths(const ToyProgram& p, int n,
                                        const ExploreOptions& options) {
  if (n < 1) throw std::invalid_argument("input size must be positive");
  std::vector<PathResult> out;
  std::vector<std::vector<bool>> pending{{}};
  std::size_t runs = 0;
  while (!pending.empty()) {
    if (++runs > options.path_budget) {
      throw PathBudgetExceeded(p.name + " at n=" + std::to_string(n) + " exceeds the budget of " +
                               std::to_string(options.path_budget) + " paths");
    }
    std::vector<bool> prefix = std::move(pending.back());
    pending.pop_back();
    ExploringContext ctx(p.cost_model, prefix, options, pending);
    p.run(ctx, n);
    if (!options.prune && !feasible(ctx.literals(), options.solver)) continue;
    out.push_back({Formula::conj_of(ctx.literals()), ctx.cost(), ctx.trace()});
  }
  std::sort(out.begin(), out.end(),
            [](const PathResult& a, const PathResult& b) { return a.trace < b.trace; });
  return out;
}

PathResult worst_case(const ToyProgram& p, int n, const ExploreOptions& options) {
  std::vector<PathResult> paths = enumerate_paths(p, n, options);
  if (paths.empty()) throw std::logic_error("program has no feasible path");
  // Sorted by trace, so the first maximum is the tie-break winner.
  auto best = std::max_element(paths.begin(), paths.end(),
                               [](const PathResult& a, const PathResult& b) {
                                 return a.cost < b.cost;
                               });
  return std::move(*best);
}

std::vector<std::pair<int, std::size_t>> path_growth(const ToyProgram& p, int n_lo, int n_hi,
                                                     const ExploreOptions& options) {
  std::vector<std::pair<int, std::size_t>> out;
  for (int n = n_lo; n <= n_hi; ++n) out.emplace_back(n, enumerate_paths(p, n, options).size());
  return out;
}

std::int64_t replay_cost(const ToyProgram& p, int n, const std::vector<bool>& trace) {
  ReplayContext ctx(p.cost_model, trace);
  p.run(ctx, n);
  ctx.finish();
  return ctx.cost();
}

ConcreteRun run_concrete(const ToyProgram& p, int n, const smt::Model& inputs) {
  ConcreteContext ctx(p.cost_model, inputs);
  p.run(ctx, n);
  return {ctx.trace(), ctx.cost()};
}

}  // namespace warp::wca
