#include "warp/diff_logic.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <memory>

#include "warp/errors.hpp"
#include "warp/linear.hpp"

namespace warp::dl {

std::string to_string(const DiffConstraint& d) {
  return d.x.name() + " - " + d.y.name() + " <= " + std::to_string(d.c);
}

std::variant<DiffConstraint, Infeasible> make_diff(Node x, Node y, std::int64_t c) {
  DiffConstraint d{x, y, c};
  if (x == y && c < 0) return Infeasible{{d}};
  return d;
}

NormalizeResult normalize_atoms(std::span<const smt::Atom> atoms) {
  std::vector<DiffConstraint> out;
  for (const smt::Atom& atom : atoms) {
    std::optional<lin::LinearConstraint> lc;
    try {
      lc = lin::from_atom(atom);
    } catch (const std::overflow_error&) {
      return Unsupported{"coefficient overflow in " + smt::to_sexpr(atom)};
    }
    if (!lc) return Unsupported{"nonlinear atom " + smt::to_sexpr(atom)};

    std::vector<lin::LinearConstraint> sides;
    if (lc->rel == lin::Rel::kEq) {
      sides.push_back({lc->form, lin::Rel::kLe});
      sides.push_back({lin::negate(lc->form), lin::Rel::kLe});
    } else {
      sides.push_back(*lc);
    }
    for (const auto& side : sides) {
      auto tight = lin::tighten(side);
      auto diff = tight ? lin::as_difference(*tight) : std::nullopt;
      if (!diff) {
        return Unsupported{"atom outside difference logic: " + smt::to_sexpr(atom)};
      }
      auto made = make_diff(diff->x, diff->y, diff->c);
      if (auto* bad = std::get_if<Infeasible>(&made)) return *bad;
      const auto& d = std::get<DiffConstraint>(made);
      // x - x <= c with c >= 0 carries no information.
      if (d.x == d.y) continue;
      out.push_back(d);
    }
  }
  return out;
}

FeasibilityResult check_feasible(std::span<const DiffConstraint> cs) {
  std::map<Node, std::size_t> index;
  std::vector<Node> nodes;
  auto node_id = [&](const Node& n) {
    auto [it, inserted] = index.emplace(n, nodes.size());
    if (inserted) nodes.push_back(n);
    return it->second;
  };
  node_id(Node::zero());

  struct Edge {
    std::size_t from;
    std::size_t to;
    std::int64_t w;
    std::size_t constraint;
  };
  std::vector<Edge> edges;
  edges.reserve(cs.size());
  for (std::size_t i = 0; i < cs.size(); ++i) {
    const DiffConstraint& d = cs[i];
    if (d.x == d.y) {
      if (d.c < 0) return Infeasible{{d}};
      continue;
    }
    std::size_t to = node_id(d.x);
    std::size_t from = node_id(d.y);
    edges.push_back({from, to, d.c, i});
  }

  const std::size_t n = nodes.size();
  constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
  // All-zero start is a virtual source joined to every node by 0-edges.
  std::vector<std::int64_t> dist(n, 0);
  std::vector<std::size_t> pred(n, kNone);

  auto relax_pass = [&]() {
    bool changed = false;
    for (std::size_t e = 0; e < edges.size(); ++e) {
      const Edge& edge = edges[e];
      std::int64_t candidate = 0;
      if (__builtin_add_overflow(dist[edge.from], edge.w, &candidate)) continue;
      if (candidate < dist[edge.to]) {
        dist[edge.to] = candidate;
        pred[edge.to] = e;
        changed = true;
      }
    }
    return changed;
  };

  bool changed = true;
  for (std::size_t pass = 0; pass <= n && changed; ++pass) changed = relax_pass();

  if (changed) {
    // Any cycle in the predecessor graph has negative weight; one appears
    // within a bounded number of further passes.
    auto find_cycle = [&]() -> std::vector<DiffConstraint> {
      std::vector<int> color(n, 0);
      for (std::size_t start = 0; start < n; ++start) {
        if (color[start] != 0) continue;
        std::vector<std::size_t> chain;
        std::size_t v = start;
        while (v != kNone && color[v] == 0) {
          color[v] = 1;
          chain.push_back(v);
          v = pred[v] == kNone ? kNone : edges[pred[v]].from;
        }
        if (v != kNone && color[v] == 1) {
          std::vector<DiffConstraint> cycle;
          std::size_t u = v;
          do {
            const Edge& edge = edges[pred[u]];
            cycle.push_back(cs[edge.constraint]);
            u = edge.from;
          } while (u != v);
          std::reverse(cycle.begin(), cycle.end());
          return cycle;
        }
        for (std::size_t c : chain) color[c] = 2;
      }
      return {};
    };
    for (std::size_t extra = 0; extra <= 4 * n + 4; ++extra) {
      auto cycle = find_cycle();
      if (!cycle.empty()) return Infeasible{std::move(cycle)};
      relax_pass();
    }
    throw std::logic_error("negative cycle detected but not isolated");
  }

  Feasible result;
  const std::int64_t base = dist[0];
  for (std::size_t i = 1; i < n; ++i) {
    result.model[nodes[i].var()] = dist[i] - base;
  }
  return result;
}

bool satisfies(const smt::Model& model, const DiffConstraint& d) {
  auto value = [&](const Node& node) -> std::int64_t {
    if (node.is_zero()) return 0;
    auto it = model.find(node.var());
    if (it == model.end()) throw std::out_of_range("unassigned " + node.name());
    return it->second;
  };
  return value(d.x) - value(d.y) <= d.c;
}

std::int64_t small_model_bound(std::size_t var_count, std::int64_t max_abs_constant) {
  return static_cast<std::int64_t>(var_count + 1) * (max_abs_constant + 1);
}

// --- brute force --------------------------------------------------------------

namespace {

class FiniteSearch {
 public:
  FiniteSearch(const smt::Formula& f, std::int64_t lo, std::int64_t hi,
               BruteForceOptions options)
      : options_(options) {
    for (const smt::Var& v : smt::free_vars(f)) vars_.push_back(v);
    std::uint32_t max_index = 0;
    for (const smt::Var& v : vars_) max_index = std::max(max_index, v.index);
    position_.assign(vars_.empty() ? 0 : max_index + 1, 0);
    for (std::size_t i = 0; i < vars_.size(); ++i) position_[vars_[i].index] = i;
    values_.assign(vars_.size(), 0);

    for (smt::Formula& c : smt::flatten_conjunction(f)) {
      Conjunct conjunct{std::move(c), {}};
      for (const smt::Var& v : smt::free_vars(conjunct.formula)) {
        conjunct.positions.push_back(position_[v.index]);
      }
      std::sort(conjunct.positions.begin(), conjunct.positions.end());
      conjuncts_.push_back(std::move(conjunct));
    }
    by_position_.resize(vars_.size());
    for (std::size_t ci = 0; ci < conjuncts_.size(); ++ci) {
      for (std::size_t p : conjuncts_[ci].positions) by_position_[p].push_back(ci);
    }

    // A domain wider than the visit budget could not be swept even once.
    const std::uint64_t width = static_cast<std::uint64_t>(hi) - static_cast<std::uint64_t>(lo) + 1;
    if (!vars_.empty() && width > options_.max_visits) {
      throw DomainTooLarge("finite-domain search over " + std::to_string(width) +
                           " values per variable exceeds " + std::to_string(options_.max_visits) +
                           " candidate assignments");
    }
    if (!vars_.empty()) {
      auto full = std::make_shared<std::vector<std::int64_t>>();
      full->reserve(static_cast<std::size_t>(width));
      for (std::int64_t x = lo; x <= hi; ++x) full->push_back(x);
      full_domain_ = std::move(full);
    }
  }

  BruteForceResult run() {
    Domains domains(vars_.size(), full_domain_);
    for (const Conjunct& c : conjuncts_) {
      if (c.positions.empty()) {
        if (!holds(c)) return Unsat{};
      } else if (c.positions.size() == 1) {
        if (!filter(c, c.positions[0], domains)) return Unsat{};
      }
    }
    if (!search(0, domains)) return Unsat{};
    Sat sat;
    for (std::size_t i = 0; i < vars_.size(); ++i) sat.model[vars_[i]] = values_[i];
    return sat;
  }

 private:
  // Domains are shared between search levels; filtering replaces one entry.
  using Domains = std::vector<std::shared_ptr<const std::vector<std::int64_t>>>;

  struct Conjunct {
    smt::Formula formula;
    std::vector<std::size_t> positions;
  };

  bool holds(const Conjunct& c) const {
    auto lookup = [this](smt::Var v) { return values_[position_[v.index]]; };
    try {
      return smt::evaluate_with(c.formula, lookup);
    } catch (const std::overflow_error&) {
      return false;
    }
  }

  // Keeps the values of `open` that satisfy `c` under the current prefix.
  bool filter(const Conjunct& c, std::size_t open, Domains& domains) {
    auto kept = std::make_shared<std::vector<std::int64_t>>();
    for (std::int64_t x : *domains[open]) {
      tick();
      values_[open] = x;
      if (holds(c)) kept->push_back(x);
    }
    domains[open] = std::move(kept);
    return !domains[open]->empty();
  }

  // Every candidate value tried, in the search or while filtering, counts
  // as one visit.
  void tick() {
    if (++visits_ > options_.max_visits) {
      throw DomainTooLarge("finite-domain search exceeded " +
                           std::to_string(options_.max_visits) +
                           " candidate assignments");
    }
  }

  bool search(std::size_t depth, const Domains& domains) {
    if (depth == vars_.size()) return true;
    for (std::int64_t x : *domains[depth]) {
      tick();
      values_[depth] = x;
      Domains next = domains;
      bool ok = true;
      for (std::size_t ci : by_position_[depth]) {
        const Conjunct& c = conjuncts_[ci];
        auto first_open = std::upper_bound(c.positions.begin(), c.positions.end(), depth);
        auto open_count = c.positions.end() - first_open;
        if (open_count == 1) {
          if (!filter(c, *first_open, next)) {
            ok = false;
            break;
          }
        }
      }
      if (ok && search(depth + 1, next)) return true;
    }
    return false;
  }

  BruteForceOptions options_;
  std::vector<smt::Var> vars_;
  std::vector<std::size_t> position_;
  std::vector<std::int64_t> values_;
  std::vector<Conjunct> conjuncts_;
  std::vector<std::vector<std::size_t>> by_position_;
  std::shared_ptr<const std::vector<std::int64_t>> full_domain_;
  std::uint64_t visits_ = 0;
};

}  // namespace

BruteForceResult brute_force_sat(const smt::Formula& f, std::int64_t domain_lo,
                                 std::int64_t domain_hi, BruteForceOptions options) {
  if (domain_hi < domain_lo) {
    throw std::invalid_argument("empty brute-force domain");
  }
  return FiniteSearch(f, domain_lo, domain_hi, options).run();
}

}  // namespace warp::dl
