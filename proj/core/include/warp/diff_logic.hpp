#pragma once

// Integer difference logic: conjunctions of `x - y <= c` decided by
// negative-cycle detection, plus an exhaustive finite-domain oracle.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "warp/smtlib.hpp"

namespace warp::dl {

// A constraint-graph node: an input variable or the distinguished ZERO.
class Node {
 public:
  static Node zero() { return Node(); }
  static Node of(smt::Var v) { return Node(v); }

  bool is_zero() const { return !var_; }
  smt::Var var() const { return *var_; }
  std::string name() const { return var_ ? var_->name() : "ZERO"; }

  friend auto operator<=>(const Node&, const Node&) = default;

 private:
  Node() = default;
  explicit Node(smt::Var v) : var_(v) {}

  std::optional<smt::Var> var_;
};

// x - y <= c.
struct DiffConstraint {
  Node x;
  Node y;
  std::int64_t c = 0;

  friend bool operator==(const DiffConstraint&, const DiffConstraint&) = default;
};

std::string to_string(const DiffConstraint& d);

struct Feasible {
  smt::Model model;
};

struct Infeasible {
  // Consecutive constraints forming a cycle; the constants sum below zero.
  std::vector<DiffConstraint> cycle;
};

struct Unsupported {
  std::string reason;
};

using FeasibilityResult = std::variant<Feasible, Infeasible, Unsupported>;

// A constraint `x - x <= c` with c < 0 is rejected as an Infeasible
// self-loop rather than constructed.
std::variant<DiffConstraint, Infeasible> make_diff(Node x, Node y, std::int64_t c);

// Translates comparison atoms into difference constraints. Strict
// comparisons tighten by one (integer semantics); `=` yields two opposing
// constraints; comparisons against constants go through ZERO.
using NormalizeResult =
    std::variant<std::vector<DiffConstraint>, Infeasible, Unsupported>;

NormalizeResult normalize_atoms(std::span<const smt::Atom> atoms);

// Bellman-Ford over the graph with an edge y -> x of weight c for each
// constraint. The model is read off the distances, shifted so ZERO = 0.
FeasibilityResult check_feasible(std::span<const DiffConstraint> cs);

bool satisfies(const smt::Model& model, const DiffConstraint& d);

// Finite-domain oracle. Explores assignments of free_vars(f) over
// [domain_lo, domain_hi] in lexicographic order (in0 most significant,
// values ascending) and returns the first model of f. Each top-level
// conjunct is checked as soon as at most one of its variables is still
// open, which filters that variable's remaining values.
struct BruteForceOptions {
  // Upper bound on visited partial assignments before DomainTooLarge.
  std::uint64_t max_visits = 10'000'000;
};

struct Sat {
  smt::Model model;
};
struct Unsat {};

using BruteForceResult = std::variant<Sat, Unsat>;

BruteForceResult brute_force_sat(const smt::Formula& f, std::int64_t domain_lo,
                                 std::int64_t domain_hi,
                                 BruteForceOptions options = {});

// Half-width of the symmetric small-model domain (v + 1) * (K + 1) for v
// variables and maximum absolute constant K.
std::int64_t small_model_bound(std::size_t var_count, std::int64_t max_abs_constant);

}  // namespace warp::dl
