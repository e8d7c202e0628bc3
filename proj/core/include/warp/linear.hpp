#pragma once

// Linear integer forms over the input variables, and an exact decision
// procedure for conjunctions that reduce to difference logic once unit
// equalities are substituted away and single-occurrence variables are
// set aside.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "warp/diff_logic.hpp"
#include "warp/smtlib.hpp"

namespace warp::lin {

// sum(coeffs[v] * v) + constant. Zero coefficients are never stored.
struct LinearForm {
  std::map<smt::Var, std::int64_t> coeffs;
  std::int64_t constant = 0;

  std::int64_t coeff(smt::Var v) const;
  bool is_constant() const { return coeffs.empty(); }

  friend bool operator==(const LinearForm&, const LinearForm&) = default;
};

// Throws std::overflow_error if a coefficient leaves the 64-bit range.
LinearForm add(const LinearForm& a, const LinearForm& b);
LinearForm scale(const LinearForm& a, std::int64_t k);
LinearForm negate(const LinearForm& a);

// Nullopt when the term multiplies two non-constant subterms.
std::optional<LinearForm> linearize(const smt::Term& t);

enum class Rel { kLe, kEq, kNe };

// form rel 0
struct LinearConstraint {
  LinearForm form;
  Rel rel = Rel::kLe;

  friend bool operator==(const LinearConstraint&, const LinearConstraint&) = default;
};

std::string to_string(const LinearConstraint& c);

// Integer semantics: a < b becomes a - b + 1 <= 0.
std::optional<LinearConstraint> from_atom(const smt::Atom& a);
LinearConstraint negate(const LinearConstraint& c);

// Literal = an atom or a negated atom. Nullopt for anything else or for
// nonlinear atoms.
std::optional<LinearConstraint> from_literal(const smt::Formula& f);

// Divides by the gcd of the coefficients (flooring the bound of an
// inequality). Returns nullopt when an equality has no integer solution.
std::optional<LinearConstraint> tighten(const LinearConstraint& c);

// A tightened inequality in difference shape, or nullopt.
std::optional<dl::DiffConstraint> as_difference(const LinearConstraint& le);

struct LinSat {
  smt::Model model;
};
struct LinUnsat {};
struct LinUnsupported {
  std::string reason;
};

using LinResult = std::variant<LinSat, LinUnsat, LinUnsupported>;

struct DecideOptions {
  // Disequalities surviving preprocessing are split into < / >; beyond
  // this many the problem is reported unsupported.
  std::size_t max_disequality_splits = 12;
};

LinResult decide(std::vector<LinearConstraint> cs, DecideOptions options = {});

// A conjunction preprocessed once and queried for entailment of many
// single constraints.
class Conjunction {
 public:
  explicit Conjunction(std::vector<LinearConstraint> cs, DecideOptions options = {});

  bool unsat() const { return state_ == State::kUnsat; }
  bool unsupported() const { return state_ == State::kUnsupported; }
  const std::string& reason() const { return reason_; }

  // Does every model of the conjunction satisfy `c`? Nullopt when the
  // question leaves the supported fragment.
  std::optional<bool> entails(const LinearConstraint& c) const;

  // A model of the conjunction violating `c`, if one exists.
  LinResult counterexample(const LinearConstraint& c) const;

 private:
  enum class State { kOpen, kUnsat, kUnsupported };

  std::optional<bool> entails_by_distances(const LinearConstraint& c) const;

  std::vector<LinearConstraint> original_;
  DecideOptions options_;
  State state_ = State::kOpen;
  std::string reason_;

  // Populated when the conjunction is a pure difference system after
  // equality elimination.
  bool has_distances_ = false;
  std::vector<std::pair<smt::Var, LinearForm>> substitutions_;
  std::map<dl::Node, std::size_t> node_index_;
  std::vector<std::vector<std::optional<std::int64_t>>> dist_;
};

}  // namespace warp::lin
