#pragma once

// AST, parser and canonical printer for the SMT-LIB v2 constraint fragment
// used by worst-case path constraints: a single (assert ...) over integer
// inputs in0, in1, ... combined with and/or/not and the five comparators.

#include <compare>
#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace warp::smt {

// Program input `in<index>`.
struct Var {
  std::uint32_t index = 0;

  std::string name() const { return "in" + std::to_string(index); }

  friend auto operator<=>(const Var&, const Var&) = default;
};

// Returns the variable for a name of the form in<k> (no leading zeros).
// Throws std::invalid_argument otherwise.
Var var_from_name(std::string_view name);

class Term {
 public:
  enum class Kind { kVar, kConst, kAdd, kSub, kMul };

  Term() = default;

  static Term var(Var v);
  static Term var(std::uint32_t index) { return var(Var{index}); }
  static Term constant(std::int64_t value);
  static Term add(Term lhs, Term rhs);
  static Term sub(Term lhs, Term rhs);
  static Term mul(Term lhs, Term rhs);

  Kind kind() const { return kind_; }
  bool is_var() const { return kind_ == Kind::kVar; }
  bool is_const() const { return kind_ == Kind::kConst; }

  Var as_var() const;
  std::int64_t value() const;
  const Term& lhs() const;
  const Term& rhs() const;

  friend bool operator==(const Term&, const Term&) = default;

 private:
  Term(Kind kind, std::int64_t value, std::vector<Term> args)
      : kind_(kind), value_(value), args_(std::move(args)) {}

  Kind kind_ = Kind::kConst;
  // Constant value, or the variable index for kVar.
  std::int64_t value_ = 0;
  std::vector<Term> args_;
};

enum class Cmp { kLe, kLt, kGe, kGt, kEq };

const char* to_string(Cmp op);

struct Atom {
  Cmp op = Cmp::kLe;
  Term lhs;
  Term rhs;

  friend bool operator==(const Atom&, const Atom&) = default;
};

Atom make_atom(Cmp op, Term lhs, Term rhs);

class Formula {
 public:
  enum class Kind { kTrue, kAtom, kAnd, kOr, kNot };

  // The vacuous constraint (printed as `None`).
  Formula() = default;

  static Formula truth() { return Formula(); }
  static Formula atom(Atom a);
  // Requires at least two children.
  static Formula conj(std::vector<Formula> children);
  static Formula disj(std::vector<Formula> children);
  static Formula negate(Formula child);

  // Builds the natural conjunction of `parts`: True when empty, the single
  // element when there is one, an n-ary And otherwise.
  static Formula conj_of(std::vector<Formula> parts);

  Kind kind() const { return kind_; }
  bool is_true() const { return kind_ == Kind::kTrue; }
  bool is_atom() const { return kind_ == Kind::kAtom; }

  const Atom& as_atom() const;
  const std::vector<Formula>& children() const { return children_; }
  // The operand of a Not.
  const Formula& child() const;

  friend bool operator==(const Formula&, const Formula&) = default;

 private:
  Formula(Kind kind, Atom atom, std::vector<Formula> children)
      : kind_(kind), atom_(std::move(atom)), children_(std::move(children)) {}

  Kind kind_ = Kind::kTrue;
  Atom atom_;
  std::vector<Formula> children_;
};

// Raw S-expression; `offset` is the byte position of its first character.
struct SExpr {
  bool is_list = false;
  std::string atom;
  std::vector<SExpr> items;
  std::size_t offset = 0;
};

// Reads every top-level S-expression (`;` comments skipped).
// Throws warp::ParseError on unbalanced parentheses.
std::vector<SExpr> read_sexprs(std::string_view text);

// Parses the body of a single top-level (assert ...). The literal `None`
// (any case, surrounding whitespace ignored) parses to True.
// Throws warp::ParseError.
Formula parse_formula(std::string_view text);

// `(assert <body>)` with single spaces; n-ary and/or print as left-folded
// binary nodes; True prints as `None`.
std::string serialize_canonical(const Formula& f);

// Body only, without the surrounding assert.
std::string to_sexpr(const Formula& f);
std::string to_sexpr(const Term& t);
std::string to_sexpr(const Atom& a);

// Rewrites every n-ary And/Or into nested binary nodes folded to the left.
Formula left_fold(const Formula& f);

// Leaves of nested And nodes, left to right. True contributes nothing.
std::vector<Formula> flatten_conjunction(const Formula& f);

std::set<Var> free_vars(const Formula& f);
std::set<Var> free_vars(const Term& t);

// Number of leaves of flatten_conjunction.
std::size_t conjunct_count(const Formula& f);

using Model = std::map<Var, std::int64_t>;

// Throws std::out_of_range for unassigned variables and std::overflow_error
// when an intermediate value leaves the 64-bit range.
template <typename Lookup>
std::int64_t evaluate_with(const Term& t, const Lookup& lookup);
template <typename Lookup>
bool evaluate_with(const Formula& f, const Lookup& lookup);

std::int64_t evaluate(const Term& t, const Model& model);
bool evaluate(const Atom& a, const Model& model);
bool evaluate(const Formula& f, const Model& model);

std::string to_string(const Model& model);

// ---------------------------------------------------------------------------

namespace detail {
std::int64_t checked_add(std::int64_t a, std::int64_t b);
std::int64_t checked_sub(std::int64_t a, std::int64_t b);
std::int64_t checked_mul(std::int64_t a, std::int64_t b);
bool compare(Cmp op, std::int64_t lhs, std::int64_t rhs);
}  // namespace detail

template <typename Lookup>
std::int64_t evaluate_with(const Term& t, const Lookup& lookup) {
  switch (t.kind()) {
    case Term::Kind::kVar:
      return lookup(t.as_var());
    case Term::Kind::kConst:
      return t.value();
    case Term::Kind::kAdd:
      return detail::checked_add(evaluate_with(t.lhs(), lookup),
                                 evaluate_with(t.rhs(), lookup));
    case Term::Kind::kSub:
      return detail::checked_sub(evaluate_with(t.lhs(), lookup),
                                 evaluate_with(t.rhs(), lookup));
    case Term::Kind::kMul:
      return detail::checked_mul(evaluate_with(t.lhs(), lookup),
                                 evaluate_with(t.rhs(), lookup));
  }
  return 0;
}

template <typename Lookup>
bool evaluate_with(const Formula& f, const Lookup& lookup) {
  switch (f.kind()) {
    case Formula::Kind::kTrue:
      return true;
    case Formula::Kind::kAtom: {
      const Atom& a = f.as_atom();
      return detail::compare(a.op, evaluate_with(a.lhs, lookup),
                             evaluate_with(a.rhs, lookup));
    }
    case Formula::Kind::kAnd:
      for (const Formula& c : f.children()) {
        if (!evaluate_with(c, lookup)) return false;
      }
      return true;
    case Formula::Kind::kOr:
      for (const Formula& c : f.children()) {
        if (evaluate_with(c, lookup)) return true;
      }
      return false;
    case Formula::Kind::kNot:
      return !evaluate_with(f.child(), lookup);
  }
  return false;
}

}  // namespace warp::smt
