#include "warp/smtlib.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <limits>
#include <optional>
#include <sstream>

#include "warp/errors.hpp"

namespace warp::smt {

Var var_from_name(std::string_view name) {
  if (name.size() < 3 || name.substr(0, 2) != "in") {
    throw std::invalid_argument("not an input variable: " + std::string(name));
  }
  std::string_view digits = name.substr(2);
  if (digits.size() > 1 && digits[0] == '0') {
    throw std::invalid_argument("leading zero in variable: " +
                                std::string(name));
  }
  std::uint32_t index = 0;
  auto [ptr, ec] =
      std::from_chars(digits.data(), digits.data() + digits.size(), index);
  if (ec != std::errc() || ptr != digits.data() + digits.size()) {
    throw std::invalid_argument("not an input variable: " + std::string(name));
  }
  return Var{index};
}

// --- Term -------------------------------------------------------------------

Term Term::var(Var v) { return Term(Kind::kVar, v.index, {}); }

Term Term::constant(std::int64_t value) { return Term(Kind::kConst, value, {}); }

Term Term::add(Term lhs, Term rhs) {
  return Term(Kind::kAdd, 0, {std::move(lhs), std::move(rhs)});
}

Term Term::sub(Term lhs, Term rhs) {
  return Term(Kind::kSub, 0, {std::move(lhs), std::move(rhs)});
}

Term Term::mul(Term lhs, Term rhs) {
  return Term(Kind::kMul, 0, {std::move(lhs), std::move(rhs)});
}

Var Term::as_var() const {
  if (kind_ != Kind::kVar) throw std::logic_error("term is not a variable");
  return Var{static_cast<std::uint32_t>(value_)};
}

std::int64_t Term::value() const {
  if (kind_ != Kind::kConst) throw std::logic_error("term is not a constant");
  return value_;
}

const Term& Term::lhs() const {
  if (args_.size() != 2) throw std::logic_error("term has no operands");
  return args_[0];
}

const Term& Term::rhs() const {
  if (args_.size() != 2) throw std::logic_error("term has no operands");
  return args_[1];
}

const char* to_string(Cmp op) {
  switch (op) {
    case Cmp::kLe:
      return "<=";
    case Cmp::kLt:
      return "<";
    case Cmp::kGe:
      return ">=";
    case Cmp::kGt:
      return ">";
    case Cmp::kEq:
      return "=";
  }
  return "?";
}

Atom make_atom(Cmp op, Term lhs, Term rhs) {
  return Atom{op, std::move(lhs), std::move(rhs)};
}

// --- Formula ----------------------------------------------------------------

Formula Formula::atom(Atom a) { return Formula(Kind::kAtom, std::move(a), {}); }

Formula Formula::conj(std::vector<Formula> children) {
  if (children.size() < 2) {
    throw std::invalid_argument("and needs at least two children");
  }
  return Formula(Kind::kAnd, Atom{}, std::move(children));
}

Formula Formula::disj(std::vector<Formula> children) {
  if (children.size() < 2) {
    throw std::invalid_argument("or needs at least two children");
  }
  return Formula(Kind::kOr, Atom{}, std::move(children));
}

Formula Formula::negate(Formula child) {
  std::vector<Formula> c;
  c.push_back(std::move(child));
  return Formula(Kind::kNot, Atom{}, std::move(c));
}

Formula Formula::conj_of(std::vector<Formula> parts) {
  if (parts.empty()) return Formula();
  if (parts.size() == 1) return std::move(parts.front());
  return conj(std::move(parts));
}

const Atom& Formula::as_atom() const {
  if (kind_ != Kind::kAtom) throw std::logic_error("formula is not an atom");
  return atom_;
}

const Formula& Formula::child() const {
  if (kind_ != Kind::kNot) throw std::logic_error("formula is not a negation");
  return children_.front();
}

// --- Parsing ----------------------------------------------------------------

namespace {

class Reader {
 public:
  explicit Reader(std::string_view text) : text_(text) {}

  std::vector<SExpr> read_all() {
    std::vector<SExpr> out;
    while (true) {
      skip_space();
      if (pos_ >= text_.size()) break;
      if (text_[pos_] == ')') {
        throw ParseError(ParseErrc::kUnbalancedParens, pos_,
                         "unexpected ')'");
      }
      out.push_back(read());
    }
    return out;
  }

 private:
  void skip_space() {
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (c == ';') {
        while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  SExpr read() {
    SExpr e;
    e.offset = pos_;
    if (text_[pos_] == '(') {
      e.is_list = true;
      ++pos_;
      while (true) {
        skip_space();
        if (pos_ >= text_.size()) {
          throw ParseError(ParseErrc::kUnbalancedParens, e.offset,
                           "unclosed '('");
        }
        if (text_[pos_] == ')') {
          ++pos_;
          return e;
        }
        e.items.push_back(read());
      }
    }
    std::size_t start = pos_;
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (c == '(' || c == ')' || c == ';' ||
          std::isspace(static_cast<unsigned char>(c))) {
        break;
      }
      ++pos_;
    }
    e.atom = std::string(text_.substr(start, pos_ - start));
    return e;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

bool is_integer_literal(std::string_view s) {
  std::size_t i = (!s.empty() && s[0] == '-') ? 1 : 0;
  if (i >= s.size()) return false;
  return std::all_of(s.begin() + static_cast<std::ptrdiff_t>(i), s.end(),
                     [](char c) { return c >= '0' && c <= '9'; });
}

std::optional<Cmp> comparator(std::string_view s) {
  if (s == "<=") return Cmp::kLe;
  if (s == "<") return Cmp::kLt;
  if (s == ">=") return Cmp::kGe;
  if (s == ">") return Cmp::kGt;
  if (s == "=") return Cmp::kEq;
  return std::nullopt;
}

std::string_view head_of(const SExpr& e) {
  if (!e.is_list || e.items.empty() || e.items.front().is_list) return {};
  return e.items.front().atom;
}

Term to_term(const SExpr& e) {
  if (!e.is_list) {
    if (is_integer_literal(e.atom)) {
      std::int64_t v = 0;
      auto [ptr, ec] =
          std::from_chars(e.atom.data(), e.atom.data() + e.atom.size(), v);
      if (ec != std::errc()) {
        throw ParseError(ParseErrc::kMalformedExpression, e.offset,
                         "integer literal out of range: " + e.atom);
      }
      return Term::constant(v);
    }
    try {
      return Term::var(var_from_name(e.atom));
    } catch (const std::invalid_argument&) {
      throw ParseError(ParseErrc::kMalformedVariable, e.offset,
                       "expected in<k>, got '" + e.atom + "'");
    }
  }
  if (e.items.empty()) {
    throw ParseError(ParseErrc::kMalformedExpression, e.offset, "empty term");
  }
  if (e.items.front().is_list) {
    throw ParseError(ParseErrc::kMalformedExpression, e.offset,
                     "term operator must be a symbol");
  }
  std::string_view op = e.items.front().atom;
  std::size_t argc = e.items.size() - 1;
  auto arg = [&](std::size_t i) { return to_term(e.items[i + 1]); };

  if (op == "+" || op == "*") {
    if (argc < 1) {
      throw ParseError(ParseErrc::kMalformedExpression, e.offset,
                       std::string(op) + " needs operands");
    }
    Term acc = arg(0);
    for (std::size_t i = 1; i < argc; ++i) {
      acc = op == "+" ? Term::add(std::move(acc), arg(i))
                      : Term::mul(std::move(acc), arg(i));
    }
    return acc;
  }
  if (op == "-") {
    if (argc == 0) {
      throw ParseError(ParseErrc::kMalformedExpression, e.offset,
                       "- needs operands");
    }
    if (argc == 1) {
      Term t = arg(0);
      if (t.is_const() && t.value() != std::numeric_limits<std::int64_t>::min()) {
        return Term::constant(-t.value());
      }
      return Term::sub(Term::constant(0), std::move(t));
    }
    Term acc = arg(0);
    for (std::size_t i = 1; i < argc; ++i) acc = Term::sub(std::move(acc), arg(i));
    return acc;
  }
  throw ParseError(ParseErrc::kUnknownOperator, e.items.front().offset,
                   "unknown term operator '" + std::string(op) + "'");
}

Formula to_formula(const SExpr& e) {
  if (!e.is_list) {
    if (e.atom == "true") return Formula::truth();
    throw ParseError(ParseErrc::kMalformedExpression, e.offset,
                     "expected a formula, got '" + e.atom + "'");
  }
  if (e.items.empty() || e.items.front().is_list) {
    throw ParseError(ParseErrc::kMalformedExpression, e.offset,
                     "expected an operator application");
  }
  std::string_view op = e.items.front().atom;
  std::size_t argc = e.items.size() - 1;

  if (auto cmp = comparator(op)) {
    if (argc != 2) {
      throw ParseError(ParseErrc::kMalformedExpression, e.offset,
                       std::string(op) + " takes exactly two operands");
    }
    return Formula::atom(make_atom(*cmp, to_term(e.items[1]), to_term(e.items[2])));
  }
  if (op == "and" || op == "or") {
    std::vector<Formula> kids;
    kids.reserve(argc);
    for (std::size_t i = 1; i < e.items.size(); ++i) {
      kids.push_back(to_formula(e.items[i]));
    }
    if (kids.empty()) {
      if (op == "and") return Formula::truth();
      throw ParseError(ParseErrc::kMalformedExpression, e.offset,
                       "empty or");
    }
    if (kids.size() == 1) return std::move(kids.front());
    return op == "and" ? Formula::conj(std::move(kids))
                       : Formula::disj(std::move(kids));
  }
  if (op == "not") {
    if (argc != 1) {
      throw ParseError(ParseErrc::kMalformedExpression, e.offset,
                       "not takes exactly one operand");
    }
    return Formula::negate(to_formula(e.items[1]));
  }
  throw ParseError(ParseErrc::kUnknownOperator, e.items.front().offset,
                   "unknown operator '" + std::string(op) + "'");
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
    s.remove_prefix(1);
  }
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
    s.remove_suffix(1);
  }
  return s;
}

bool is_none_literal(std::string_view s) {
  s = trim(s);
  if (s.size() != 4) return false;
  return std::tolower(static_cast<unsigned char>(s[0])) == 'n' &&
         std::tolower(static_cast<unsigned char>(s[1])) == 'o' &&
         std::tolower(static_cast<unsigned char>(s[2])) == 'n' &&
         std::tolower(static_cast<unsigned char>(s[3])) == 'e';
}

}  // namespace

std::vector<SExpr> read_sexprs(std::string_view text) {
  return Reader(text).read_all();
}

Formula parse_formula(std::string_view text) {
  if (is_none_literal(text)) return Formula::truth();

  std::vector<SExpr> top = read_sexprs(text);
  if (top.empty()) {
    throw ParseError(ParseErrc::kMalformedExpression, text.size(),
                     "no (assert ...) found");
  }
  const SExpr* body = nullptr;
  for (const SExpr& e : top) {
    std::string_view head = head_of(e);
    if (head != "assert") {
      if (e.is_list && !head.empty()) {
        throw ParseError(ParseErrc::kUnknownOperator, e.items.front().offset,
                         "unsupported top-level command '" +
                             std::string(head) + "'");
      }
      throw ParseError(ParseErrc::kMalformedExpression, e.offset,
                       "expected (assert ...)");
    }
    if (body != nullptr) {
      throw ParseError(ParseErrc::kMultipleAsserts, e.offset,
                       "more than one assert");
    }
    if (e.items.size() != 2) {
      throw ParseError(ParseErrc::kMalformedExpression, e.offset,
                       "assert takes exactly one formula");
    }
    body = &e.items[1];
  }
  return to_formula(*body);
}

// --- Printing ---------------------------------------------------------------

namespace {

void print(std::ostream& os, const Term& t) {
  switch (t.kind()) {
    case Term::Kind::kVar:
      os << t.as_var().name();
      return;
    case Term::Kind::kConst:
      if (t.value() < 0) {
        // (- k) with k > 0; the minimum int64 keeps its own digits.
        std::string digits = std::to_string(t.value()).substr(1);
        os << "(- " << digits << ')';
      } else {
        os << t.value();
      }
      return;
    case Term::Kind::kAdd:
    case Term::Kind::kSub:
    case Term::Kind::kMul: {
      const char* op = t.kind() == Term::Kind::kAdd   ? "+"
                       : t.kind() == Term::Kind::kSub ? "-"
                                                      : "*";
      os << '(' << op << ' ';
      print(os, t.lhs());
      os << ' ';
      print(os, t.rhs());
      os << ')';
      return;
    }
  }
}

void print(std::ostream& os, const Atom& a) {
  os << '(' << to_string(a.op) << ' ';
  print(os, a.lhs);
  os << ' ';
  print(os, a.rhs);
  os << ')';
}

void print(std::ostream& os, const Formula& f) {
  switch (f.kind()) {
    case Formula::Kind::kTrue:
      os << "true";
      return;
    case Formula::Kind::kAtom:
      print(os, f.as_atom());
      return;
    case Formula::Kind::kNot:
      os << "(not ";
      print(os, f.child());
      os << ')';
      return;
    case Formula::Kind::kAnd:
    case Formula::Kind::kOr: {
      const char* op = f.kind() == Formula::Kind::kAnd ? "and" : "or";
      const auto& kids = f.children();
      // ((a b) c) d ...: open one paren per fold step up front.
      for (std::size_t i = 1; i < kids.size(); ++i) os << '(' << op << ' ';
      print(os, kids[0]);
      for (std::size_t i = 1; i < kids.size(); ++i) {
        os << ' ';
        print(os, kids[i]);
        os << ')';
      }
      return;
    }
  }
}

}  // namespace

std::string to_sexpr(const Formula& f) {
  std::ostringstream os;
  print(os, f);
  return os.str();
}

std::string to_sexpr(const Term& t) {
  std::ostringstream os;
  print(os, t);
  return os.str();
}

std::string to_sexpr(const Atom& a) {
  std::ostringstream os;
  print(os, a);
  return os.str();
}

std::string serialize_canonical(const Formula& f) {
  if (f.is_true()) return "None";
  return "(assert " + to_sexpr(f) + ")";
}

Formula left_fold(const Formula& f) {
  switch (f.kind()) {
    case Formula::Kind::kTrue:
    case Formula::Kind::kAtom:
      return f;
    case Formula::Kind::kNot:
      return Formula::negate(left_fold(f.child()));
    case Formula::Kind::kAnd:
    case Formula::Kind::kOr: {
      const bool is_and = f.kind() == Formula::Kind::kAnd;
      const auto& kids = f.children();
      auto make = [is_and](Formula a, Formula b) {
        std::vector<Formula> pair;
        pair.push_back(std::move(a));
        pair.push_back(std::move(b));
        return is_and ? Formula::conj(std::move(pair))
                      : Formula::disj(std::move(pair));
      };
      Formula acc = make(left_fold(kids[0]), left_fold(kids[1]));
      for (std::size_t i = 2; i < kids.size(); ++i) {
        acc = make(std::move(acc), left_fold(kids[i]));
      }
      return acc;
    }
  }
  return f;
}

namespace {

void flatten_into(const Formula& f, std::vector<Formula>& out) {
  if (f.is_true()) return;
  if (f.kind() == Formula::Kind::kAnd) {
    for (const Formula& c : f.children()) flatten_into(c, out);
    return;
  }
  out.push_back(f);
}

void collect(const Term& t, std::set<Var>& out) {
  switch (t.kind()) {
    case Term::Kind::kVar:
      out.insert(t.as_var());
      return;
    case Term::Kind::kConst:
      return;
    default:
      collect(t.lhs(), out);
      collect(t.rhs(), out);
  }
}

void collect(const Formula& f, std::set<Var>& out) {
  switch (f.kind()) {
    case Formula::Kind::kTrue:
      return;
    case Formula::Kind::kAtom:
      collect(f.as_atom().lhs, out);
      collect(f.as_atom().rhs, out);
      return;
    default:
      for (const Formula& c : f.children()) collect(c, out);
  }
}

}  // namespace

std::vector<Formula> flatten_conjunction(const Formula& f) {
  std::vector<Formula> out;
  flatten_into(f, out);
  return out;
}

std::size_t conjunct_count(const Formula& f) {
  return flatten_conjunction(f).size();
}

std::set<Var> free_vars(const Formula& f) {
  std::set<Var> out;
  collect(f, out);
  return out;
}

std::set<Var> free_vars(const Term& t) {
  std::set<Var> out;
  collect(t, out);
  return out;
}

// --- Evaluation -------------------------------------------------------------

namespace detail {

std::int64_t checked_add(std::int64_t a, std::int64_t b) {
  std::int64_t r = 0;
  if (__builtin_add_overflow(a, b, &r)) throw std::overflow_error("add overflow");
  return r;
}

std::int64_t checked_sub(std::int64_t a, std::int64_t b) {
  std::int64_t r = 0;
  if (__builtin_sub_overflow(a, b, &r)) throw std::overflow_error("sub overflow");
  return r;
}

std::int64_t checked_mul(std::int64_t a, std::int64_t b) {
  std::int64_t r = 0;
  if (__builtin_mul_overflow(a, b, &r)) throw std::overflow_error("mul overflow");
  return r;
}

bool compare(Cmp op, std::int64_t lhs, std::int64_t rhs) {
  switch (op) {
    case Cmp::kLe:
      return lhs <= rhs;
    case Cmp::kLt:
      return lhs < rhs;
    case Cmp::kGe:
      return lhs >= rhs;
    case Cmp::kGt:
      return lhs > rhs;
    case Cmp::kEq:
      return lhs == rhs;
  }
  return false;
}

}  // namespace detail

namespace {

struct MapLookup {
  const Model& model;
  std::int64_t operator()(Var v) const {
    auto it = model.find(v);
    if (it == model.end()) throw std::out_of_range("unassigned " + v.name());
    return it->second;
  }
};

}  // namespace

std::int64_t evaluate(const Term& t, const Model& model) {
  return evaluate_with(t, MapLookup{model});
}

bool evaluate(const Atom& a, const Model& model) {
  return detail::compare(a.op, evaluate(a.lhs, model), evaluate(a.rhs, model));
}

bool evaluate(const Formula& f, const Model& model) {
  return evaluate_with(f, MapLookup{model});
}

std::string to_string(const Model& model) {
  std::string out;
  for (const auto& [v, value] : model) {
    if (!out.empty()) out += ' ';
    out += v.name() + "=" + std::to_string(value);
  }
  return out;
}

}  // namespace warp::smt
