#include "warp/linear.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <sstream>

namespace warp::lin {

namespace {

using smt::detail::checked_add;
using smt::detail::checked_mul;

std::int64_t floor_div(std::int64_t n, std::int64_t d) {
  std::int64_t q = n / d;
  if ((n % d != 0) && ((n < 0) != (d < 0))) --q;
  return q;
}

std::int64_t ceil_div(std::int64_t n, std::int64_t d) {
  std::int64_t q = n / d;
  if ((n % d != 0) && ((n < 0) == (d < 0))) ++q;
  return q;
}

std::int64_t abs_checked(std::int64_t x) {
  if (x == std::numeric_limits<std::int64_t>::min()) {
    throw std::overflow_error("abs overflow");
  }
  return x < 0 ? -x : x;
}

LinearForm without(const LinearForm& f, smt::Var v) {
  LinearForm out = f;
  out.coeffs.erase(v);
  return out;
}

// Replaces v by `expr` in f.
LinearForm substitute(const LinearForm& f, smt::Var v, const LinearForm& expr) {
  std::int64_t k = f.coeff(v);
  if (k == 0) return f;
  return add(without(f, v), scale(expr, k));
}

std::int64_t evaluate(const LinearForm& f, const smt::Model& model) {
  std::int64_t acc = f.constant;
  for (const auto& [v, k] : f.coeffs) {
    auto it = model.find(v);
    std::int64_t value = it == model.end() ? 0 : it->second;
    acc = checked_add(acc, checked_mul(k, value));
  }
  return acc;
}

bool holds(const LinearConstraint& c, const smt::Model& model) {
  std::int64_t value = evaluate(c.form, model);
  switch (c.rel) {
    case Rel::kLe:
      return value <= 0;
    case Rel::kEq:
      return value == 0;
    case Rel::kNe:
      return value != 0;
  }
  return false;
}

// Truth value of a constraint without variables.
bool constant_holds(const LinearConstraint& c) {
  return holds(c, smt::Model{});
}

}  // namespace

std::int64_t LinearForm::coeff(smt::Var v) const {
  auto it = coeffs.find(v);
  return it == coeffs.end() ? 0 : it->second;
}

LinearForm add(const LinearForm& a, const LinearForm& b) {
  LinearForm out = a;
  out.constant = checked_add(a.constant, b.constant);
  for (const auto& [v, k] : b.coeffs) {
    std::int64_t sum = checked_add(out.coeff(v), k);
    if (sum == 0) {
      out.coeffs.erase(v);
    } else {
      out.coeffs[v] = sum;
    }
  }
  return out;
}

LinearForm scale(const LinearForm& a, std::int64_t k) {
  LinearForm out;
  if (k == 0) return out;
  out.constant = checked_mul(a.constant, k);
  for (const auto& [v, c] : a.coeffs) out.coeffs[v] = checked_mul(c, k);
  return out;
}

LinearForm negate(const LinearForm& a) { return scale(a, -1); }

std::optional<LinearForm> linearize(const smt::Term& t) {
  switch (t.kind()) {
    case smt::Term::Kind::kVar: {
      LinearForm f;
      f.coeffs[t.as_var()] = 1;
      return f;
    }
    case smt::Term::Kind::kConst: {
      LinearForm f;
      f.constant = t.value();
      return f;
    }
    case smt::Term::Kind::kAdd:
    case smt::Term::Kind::kSub: {
      auto l = linearize(t.lhs());
      auto r = linearize(t.rhs());
      if (!l || !r) return std::nullopt;
      return t.kind() == smt::Term::Kind::kAdd ? add(*l, *r) : add(*l, negate(*r));
    }
    case smt::Term::Kind::kMul: {
      auto l = linearize(t.lhs());
      auto r = linearize(t.rhs());
      if (!l || !r) return std::nullopt;
      if (l->is_constant()) return scale(*r, l->constant);
      if (r->is_constant()) return scale(*l, r->constant);
      return std::nullopt;
    }
  }
  return std::nullopt;
}

std::string to_string(const LinearConstraint& c) {
  std::ostringstream os;
  bool first = true;
  for (const auto& [v, k] : c.form.coeffs) {
    if (!first) os << (k < 0 ? " - " : " + ");
    else if (k < 0) os << '-';
    std::int64_t mag = k < 0 ? -k : k;
    if (mag != 1) os << mag << '*';
    os << v.name();
    first = false;
  }
  if (first) {
    os << c.form.constant;
  } else if (c.form.constant != 0) {
    os << (c.form.constant < 0 ? " - " : " + ")
       << (c.form.constant < 0 ? -c.form.constant : c.form.constant);
  }
  switch (c.rel) {
    case Rel::kLe:
      os << " <= 0";
      break;
    case Rel::kEq:
      os << " = 0";
      break;
    case Rel::kNe:
      os << " != 0";
      break;
  }
  return os.str();
}

std::optional<LinearConstraint> from_atom(const smt::Atom& a) {
  auto l = linearize(a.lhs);
  auto r = linearize(a.rhs);
  if (!l || !r) return std::nullopt;
  LinearForm diff = add(*l, negate(*r));
  LinearForm one;
  one.constant = 1;
  switch (a.op) {
    case smt::Cmp::kLe:
      return LinearConstraint{diff, Rel::kLe};
    case smt::Cmp::kLt:
      return LinearConstraint{add(diff, one), Rel::kLe};
    case smt::Cmp::kGe:
      return LinearConstraint{negate(diff), Rel::kLe};
    case smt::Cmp::kGt:
      return LinearConstraint{add(negate(diff), one), Rel::kLe};
    case smt::Cmp::kEq:
      return LinearConstraint{diff, Rel::kEq};
  }
  return std::nullopt;
}

LinearConstraint negate(const LinearConstraint& c) {
  switch (c.rel) {
    case Rel::kLe: {
      // not (L <= 0)  <=>  L >= 1  <=>  -L + 1 <= 0
      LinearForm f = negate(c.form);
      f.constant = checked_add(f.constant, 1);
      return {f, Rel::kLe};
    }
    case Rel::kEq:
      return {c.form, Rel::kNe};
    case Rel::kNe:
      return {c.form, Rel::kEq};
  }
  return c;
}

std::optional<LinearConstraint> from_literal(const smt::Formula& f) {
  try {
    if (f.is_atom()) return from_atom(f.as_atom());
    if (f.kind() == smt::Formula::Kind::kNot) {
      auto inner = from_literal(f.child());
      if (!inner) return std::nullopt;
      return negate(*inner);
    }
  } catch (const std::overflow_error&) {
    return std::nullopt;
  }
  return std::nullopt;
}

std::optional<LinearConstraint> tighten(const LinearConstraint& c) {
  if (c.form.coeffs.empty()) return c;
  std::int64_t g = 0;
  for (const auto& [v, k] : c.form.coeffs) g = std::gcd(g, abs_checked(k));
  if (g <= 1) return c;
  LinearConstraint out{LinearForm{}, c.rel};
  for (const auto& [v, k] : c.form.coeffs) out.form.coeffs[v] = k / g;
  const std::int64_t k = c.form.constant;
  switch (c.rel) {
    case Rel::kLe:
      // sum <= -k  becomes  sum/g <= floor(-k/g)
      out.form.constant = -floor_div(-k, g);
      return out;
    case Rel::kEq:
      if (k % g != 0) return std::nullopt;
      out.form.constant = k / g;
      return out;
    case Rel::kNe:
      if (k % g != 0) {
        LinearForm always;
        always.constant = 1;
        return LinearConstraint{always, Rel::kNe};
      }
      out.form.constant = k / g;
      return out;
  }
  return out;
}

std::optional<dl::DiffConstraint> as_difference(const LinearConstraint& le) {
  if (le.rel != Rel::kLe) return std::nullopt;
  const auto& cs = le.form.coeffs;
  std::int64_t bound = 0;
  if (__builtin_sub_overflow(std::int64_t{0}, le.form.constant, &bound)) {
    return std::nullopt;
  }
  if (cs.empty()) return dl::DiffConstraint{dl::Node::zero(), dl::Node::zero(), bound};
  if (cs.size() == 1) {
    const auto& [v, k] = *cs.begin();
    if (k == 1) return dl::DiffConstraint{dl::Node::of(v), dl::Node::zero(), bound};
    if (k == -1) return dl::DiffConstraint{dl::Node::zero(), dl::Node::of(v), bound};
    return std::nullopt;
  }
  if (cs.size() == 2) {
    auto it = cs.begin();
    const auto [v1, k1] = *it++;
    const auto [v2, k2] = *it;
    if (k1 == 1 && k2 == -1) return dl::DiffConstraint{dl::Node::of(v1), dl::Node::of(v2), bound};
    if (k1 == -1 && k2 == 1) return dl::DiffConstraint{dl::Node::of(v2), dl::Node::of(v1), bound};
  }
  return std::nullopt;
}

// --- decision procedure -------------------------------------------------------

namespace {

// Result of equality elimination and single-occurrence removal.
struct Reduced {
  enum class State { kOpen, kUnsat, kUnsupported } state = State::kOpen;
  std::string reason;
  // Remaining inequalities and disequalities over surviving variables.
  std::vector<LinearConstraint> rest;
  // x := expr, in elimination order.
  std::vector<std::pair<smt::Var, LinearForm>> substitutions;
  // Constraints set aside because `var` occurred nowhere else.
  std::vector<std::pair<smt::Var, LinearConstraint>> dropped;
};

// Tightens `c` and folds constant constraints. Returns false if c is
// unsatisfiable; sets `keep` to false when c is trivially true.
bool normalize_one(LinearConstraint& c, bool& keep) {
  auto t = tighten(c);
  if (!t) return false;
  c = *t;
  if (c.form.is_constant()) {
    keep = false;
    return constant_holds(c);
  }
  keep = true;
  return true;
}

Reduced reduce(std::vector<LinearConstraint> cs, bool drop_singletons) {
  Reduced r;
  std::vector<LinearConstraint> work;
  for (auto& c : cs) {
    bool keep = false;
    if (!normalize_one(c, keep)) {
      r.state = Reduced::State::kUnsat;
      return r;
    }
    if (keep) work.push_back(std::move(c));
  }

  // Unit-coefficient equalities become substitutions.
  while (true) {
    auto eq = std::find_if(work.begin(), work.end(), [](const LinearConstraint& c) {
      return c.rel == Rel::kEq;
    });
    if (eq == work.end()) break;

    std::optional<smt::Var> pivot;
    for (auto it = eq->form.coeffs.rbegin(); it != eq->form.coeffs.rend(); ++it) {
      if (it->second == 1 || it->second == -1) {
        pivot = it->first;
        break;
      }
    }
    if (!pivot) {
      r.state = Reduced::State::kUnsupported;
      r.reason = "equality without a unit coefficient: " + to_string(*eq);
      return r;
    }
    const std::int64_t k = eq->form.coeff(*pivot);
    // k*x + rest = 0  =>  x = -rest / k
    LinearForm expr = without(eq->form, *pivot);
    if (k == 1) expr = negate(expr);
    work.erase(eq);
    r.substitutions.emplace_back(*pivot, expr);

    std::vector<LinearConstraint> next;
    next.reserve(work.size());
    for (auto& c : work) {
      LinearConstraint s{substitute(c.form, *pivot, expr), c.rel};
      bool keep = false;
      if (!normalize_one(s, keep)) {
        r.state = Reduced::State::kUnsat;
        return r;
      }
      if (keep) next.push_back(std::move(s));
    }
    work = std::move(next);
  }

  if (drop_singletons) {
    bool progress = true;
    while (progress) {
      progress = false;
      std::map<smt::Var, std::size_t> occurrences;
      for (const auto& c : work) {
        for (const auto& [v, k] : c.form.coeffs) ++occurrences[v];
      }
      for (std::size_t i = 0; i < work.size(); ++i) {
        const auto& c = work[i];
        // Difference-shaped inequalities stay for the graph.
        if (c.rel == Rel::kLe && as_difference(c)) continue;
        for (const auto& [v, k] : c.form.coeffs) {
          if (occurrences[v] == 1) {
            r.dropped.emplace_back(v, c);
            work.erase(work.begin() + static_cast<std::ptrdiff_t>(i));
            progress = true;
            break;
          }
        }
        if (progress) break;
      }
    }
  }
  r.rest = std::move(work);
  return r;
}

smt::Model reconstruct(const Reduced& r, smt::Model model,
                       const std::vector<LinearConstraint>& original) {
  auto value_of = [&](smt::Var v) {
    auto [it, inserted] = model.emplace(v, 0);
    return it->second;
  };
  for (auto it = r.dropped.rbegin(); it != r.dropped.rend(); ++it) {
    const auto& [v, c] = *it;
    for (const auto& [w, k] : c.form.coeffs) {
      if (w != v) value_of(w);
    }
    const std::int64_t a = c.form.coeff(v);
    model[v] = 0;
    const std::int64_t rest = evaluate(c.form, model);
    if (c.rel == Rel::kNe) {
      // a*v + rest != 0
      model[v] = rest != 0 ? 0 : 1;
    } else {
      // a*v <= -rest
      model[v] = a > 0 ? floor_div(-rest, a) : ceil_div(-rest, a);
    }
  }
  for (auto it = r.substitutions.rbegin(); it != r.substitutions.rend(); ++it) {
    for (const auto& [w, k] : it->second.coeffs) value_of(w);
    model[it->first] = evaluate(it->second, model);
  }
  for (const auto& c : original) {
    for (const auto& [w, k] : c.form.coeffs) value_of(w);
  }
  return model;
}

LinResult decide_impl(const std::vector<LinearConstraint>& cs, DecideOptions options) {
  Reduced r = reduce(cs, /*drop_singletons=*/true);
  if (r.state == Reduced::State::kUnsat) return LinUnsat{};
  if (r.state == Reduced::State::kUnsupported) return LinUnsupported{r.reason};

  std::vector<dl::DiffConstraint> base;
  std::vector<LinearConstraint> disequalities;
  for (const auto& c : r.rest) {
    if (c.rel == Rel::kNe) {
      disequalities.push_back(c);
      continue;
    }
    auto d = as_difference(c);
    if (!d) return LinUnsupported{"inequality outside difference logic: " + to_string(c)};
    base.push_back(*d);
  }
  if (disequalities.size() > options.max_disequality_splits) {
    return LinUnsupported{"too many disequalities (" +
                          std::to_string(disequalities.size()) + ")"};
  }

  std::optional<std::string> unsupported;
  const std::size_t cases = std::size_t{1} << disequalities.size();
  for (std::size_t mask = 0; mask < cases; ++mask) {
    std::vector<dl::DiffConstraint> diffs = base;
    bool trivially_false = false;
    bool skip = false;
    for (std::size_t i = 0; i < disequalities.size(); ++i) {
      // L != 0 splits into L <= -1 or -L <= -1.
      LinearForm f = (mask >> i) & 1 ? negate(disequalities[i].form) : disequalities[i].form;
      f.constant = checked_add(f.constant, 1);
      bool keep = false;
      LinearConstraint side{f, Rel::kLe};
      if (!normalize_one(side, keep)) {
        trivially_false = true;
        break;
      }
      if (!keep) continue;
      auto d = as_difference(side);
      if (!d) {
        unsupported = "disequality outside difference logic: " + to_string(disequalities[i]);
        skip = true;
        break;
      }
      diffs.push_back(*d);
    }
    if (trivially_false || skip) continue;
    auto result = dl::check_feasible(diffs);
    if (auto* feasible = std::get_if<dl::Feasible>(&result)) {
      return LinSat{reconstruct(r, std::move(feasible->model), cs)};
    }
  }
  if (unsupported) return LinUnsupported{*unsupported};
  return LinUnsat{};
}

}  // namespace

LinResult decide(std::vector<LinearConstraint> cs, DecideOptions options) {
  try {
    LinResult result = decide_impl(cs, options);
    if (auto* sat = std::get_if<LinSat>(&result)) {
      for (const auto& c : cs) {
        if (!holds(c, sat->model)) {
          throw std::logic_error("reconstructed model violates " + to_string(c));
        }
      }
    }
    return result;
  } catch (const std::overflow_error& e) {
    return LinUnsupported{std::string("arithmetic overflow: ") + e.what()};
  }
}

// --- Conjunction --------------------------------------------------------------

Conjunction::Conjunction(std::vector<LinearConstraint> cs, DecideOptions options)
    : original_(std::move(cs)), options_(options) {
  LinResult overall = decide(original_, options_);
  if (std::holds_alternative<LinUnsat>(overall)) {
    state_ = State::kUnsat;
    return;
  }
  if (auto* u = std::get_if<LinUnsupported>(&overall)) {
    state_ = State::kUnsupported;
    reason_ = u->reason;
    return;
  }

  Reduced r;
  try {
    r = reduce(original_, /*drop_singletons=*/false);
  } catch (const std::overflow_error&) {
    return;
  }
  if (r.state != Reduced::State::kOpen) return;
  std::vector<dl::DiffConstraint> diffs;
  for (const auto& c : r.rest) {
    auto d = c.rel == Rel::kLe ? as_difference(c) : std::nullopt;
    if (!d) return;
    diffs.push_back(*d);
  }

  node_index_.emplace(dl::Node::zero(), 0);
  for (const auto& d : diffs) {
    node_index_.emplace(d.x, node_index_.size());
    node_index_.emplace(d.y, node_index_.size());
  }
  const std::size_t n = node_index_.size();
  dist_.assign(n, std::vector<std::optional<std::int64_t>>(n));
  for (std::size_t i = 0; i < n; ++i) dist_[i][i] = 0;
  for (const auto& d : diffs) {
    auto& cell = dist_[node_index_.at(d.y)][node_index_.at(d.x)];
    if (!cell || d.c < *cell) cell = d.c;
  }
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      if (!dist_[i][k]) continue;
      for (std::size_t j = 0; j < n; ++j) {
        if (!dist_[k][j]) continue;
        const std::int64_t via = *dist_[i][k] + *dist_[k][j];
        if (!dist_[i][j] || via < *dist_[i][j]) dist_[i][j] = via;
      }
    }
  }
  substitutions_ = std::move(r.substitutions);
  has_distances_ = true;
}

std::optional<bool> Conjunction::entails_by_distances(const LinearConstraint& c) const {
  LinearForm f = c.form;
  for (const auto& [v, expr] : substitutions_) f = substitute(f, v, expr);

  auto entails_le = [this](const LinearForm& form) -> std::optional<bool> {
    auto t = tighten(LinearConstraint{form, Rel::kLe});
    if (t->form.is_constant()) return constant_holds(*t);
    auto d = as_difference(*t);
    if (!d) return std::nullopt;
    if (d->x == d->y) return d->c >= 0;
    auto from = node_index_.find(d->y);
    auto to = node_index_.find(d->x);
    if (from == node_index_.end() || to == node_index_.end()) return false;
    const auto& best = dist_[from->second][to->second];
    return best && *best <= d->c;
  };

  switch (c.rel) {
    case Rel::kLe:
      return entails_le(f);
    case Rel::kEq: {
      auto up = entails_le(f);
      auto down = entails_le(negate(f));
      if (!up || !down) return std::nullopt;
      return *up && *down;
    }
    case Rel::kNe:
      return std::nullopt;
  }
  return std::nullopt;
}

std::optional<bool> Conjunction::entails(const LinearConstraint& c) const {
  if (state_ == State::kUnsat) return true;
  if (state_ == State::kUnsupported) return std::nullopt;
  if (has_distances_) {
    try {
      if (auto fast = entails_by_distances(c)) return fast;
    } catch (const std::overflow_error&) {
    }
  }
  LinResult cex = counterexample(c);
  if (std::holds_alternative<LinSat>(cex)) return false;
  if (std::holds_alternative<LinUnsat>(cex)) return true;
  return std::nullopt;
}

LinResult Conjunction::counterexample(const LinearConstraint& c) const {
  if (state_ == State::kUnsat) return LinUnsat{};
  std::vector<LinearConstraint> cs = original_;
  try {
    cs.push_back(negate(c));
  } catch (const std::overflow_error& e) {
    return LinUnsupported{e.what()};
  }
  return decide(std::move(cs), options_);
}

}  // namespace warp::lin
