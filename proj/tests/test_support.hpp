#pragma once

// Shared helpers for the test binaries: seeded random formula builders,
// reference fixtures and solver discovery.

#include <cstdint>
#include <cstdlib>
#include <algorithm>
#include <filesystem>
#include <functional>
#include <ostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "warp/diff_logic.hpp"
#include "warp/equivalence.hpp"
#include "warp/generators.hpp"
#include "warp/errors.hpp"
#include "warp/smtlib.hpp"

namespace warp::smt {

// Readable failure messages in assertions.
inline void PrintTo(const Formula& f, std::ostream* os) { *os << serialize_canonical(f); }

}  // namespace warp::smt

namespace warp::testing {

// Appendix-style reference strings with their original double spacing.
inline const char* kRefN2 = "(assert  ( <=  in0 in1))";
inline const char* kRefN3 = "(assert (and (and  ( <=  in0 in2)  ( <=  in1 in2))  ( <=  in0 in1)))";
inline const char* kRefN4 =
    "(assert (and (and (and (and (and  ( <=  in0 in3)  ( <=  in1 in3))  ( <=  in2 in3))  ( <=  "
    "in0 in2))  ( <=  in1 in2))  ( <=  in0 in1)))";
inline const char* kRefN5 =
    "(assert (and (and (and (and (and (and (and (and (and  ( <=  in0 in4)  ( <=  in1 in4))  ( "
    "<=  in2 in4))  ( <=  in3 in4))  ( <=  in0 in3))  ( <=  in1 in3))  ( <=  in2 in3))  ( <=  "
    "in0 in2))  ( <=  in1 in2))  ( <=  in0 in1)))";
inline const char* kRefN8 =
    "(assert (and (and (and (and (and (and (and (and (and (and (and (and (and (and (and (and "
    "(and (and (and (and (and (and (and (and (and (and (and  ( <=  in0 in7)  ( <=  in1 in7))  ( "
    "<=  in2 in7))  ( <=  in3 in7))  ( <=  in4 in7))  ( <=  in5 in7))  ( <=  in6 in7))  ( <=  "
    "in0 in6))  ( <=  in1 in6))  ( <=  in2 in6))  ( <=  in3 in6))  ( <=  in4 in6))  ( <=  in5 "
    "in6))  ( <=  in0 in5))  ( <=  in1 in5))  ( <=  in2 in5))  ( <=  in3 in5))  ( <=  in4 in5)) "
    " ( <=  in0 in4))  ( <=  in1 in4))  ( <=  in2 in4))  ( <=  in3 in4))  ( <=  in0 in3))  ( <=  "
    "in1 in3))  ( <=  in2 in3))  ( <=  in0 in2))  ( <=  in1 in2))  ( <=  in0 in1)))";

inline smt::Term v(std::uint32_t i) { return smt::Term::var(i); }
inline smt::Term k(std::int64_t c) { return smt::Term::constant(c); }
inline smt::Formula at(smt::Cmp op, smt::Term a, smt::Term b) {
  return smt::Formula::atom(smt::make_atom(op, std::move(a), std::move(b)));
}

inline int uniform_int(std::mt19937_64& g, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(g);
}

// Difference-logic atom over in0..in{vars-1}: var-var or var-constant with
// <=, < or =, constants in [-bound, bound]. Var-var atoms may carry an
// offset as (op x (+ y c)).
inline smt::Formula random_dl_atom(std::mt19937_64& g, int vars, int bound) {
  static const smt::Cmp ops[] = {smt::Cmp::kLe, smt::Cmp::kLt, smt::Cmp::kEq, smt::Cmp::kGe,
                                 smt::Cmp::kGt};
  smt::Cmp op = ops[uniform_int(g, 0, 4)];
  auto x = static_cast<std::uint32_t>(uniform_int(g, 0, vars - 1));
  int shape = uniform_int(g, 0, 2);
  if (shape == 0 || vars == 1) return at(op, v(x), k(uniform_int(g, -bound, bound)));
  auto y = static_cast<std::uint32_t>(uniform_int(g, 0, vars - 1));
  if (y == x) y = (y + 1) % static_cast<std::uint32_t>(vars);
  if (shape == 1) return at(op, v(x), v(y));
  return at(op, v(x), smt::Term::add(v(y), k(uniform_int(g, -bound, bound))));
}

inline std::vector<smt::Formula> random_dl_conjuncts(std::mt19937_64& g, int vars, int atoms,
                                                     int bound) {
  std::vector<smt::Formula> out;
  for (int i = 0; i < atoms; ++i) out.push_back(random_dl_atom(g, vars, bound));
  return out;
}

inline std::int64_t max_abs_constant(const std::vector<smt::Formula>& fs) {
  std::int64_t m = 0;
  std::function<void(const smt::Term&)> term = [&](const smt::Term& t) {
    if (t.is_const()) m = std::max(m, t.value() < 0 ? -t.value() : t.value());
    if (t.kind() != smt::Term::Kind::kVar && !t.is_const()) {
      term(t.lhs());
      term(t.rhs());
    }
  };
  for (const smt::Formula& f : fs) {
    for (const smt::Formula& leaf : smt::flatten_conjunction(f)) {
      if (leaf.is_atom()) {
        term(leaf.as_atom().lhs);
        term(leaf.as_atom().rhs);
      }
    }
  }
  return m;
}

// Solver command from WARP_TEST_SOLVER, else z3 on PATH, else empty.
inline std::vector<std::string> find_external_solver() {
  if (const char* cmd = std::getenv("WARP_TEST_SOLVER")) {
    std::vector<std::string> out;
    std::string word;
    for (const char* p = cmd;; ++p) {
      if (*p == ' ' || *p == '\0') {
        if (!word.empty()) out.push_back(word);
        word.clear();
        if (*p == '\0') break;
      } else {
        word += *p;
      }
    }
    return out;
  }
  if (const char* path = std::getenv("PATH")) {
    std::string p = path;
    std::size_t start = 0;
    while (start <= p.size()) {
      std::size_t end = p.find(':', start);
      if (end == std::string::npos) end = p.size();
      std::filesystem::path candidate = std::filesystem::path(p.substr(start, end - start)) / "z3";
      std::error_code ec;
      if (std::filesystem::is_regular_file(candidate, ec)) return {"z3", "-in", "-smt2"};
      start = end + 1;
    }
  }
  return {};
}

// ---------------------------------------------------------------------------
// Mutation corpus for equivalence testing.

// Random n-ary/binary nesting of the given conjuncts.
inline smt::Formula reassociate(std::vector<smt::Formula> parts, std::mt19937_64& g) {
  if (parts.empty()) return smt::Formula::truth();
  while (parts.size() > 1) {
    std::size_t width = static_cast<std::size_t>(uniform_int(g, 2, std::min<int>(3, static_cast<int>(parts.size()))));
    std::size_t at = static_cast<std::size_t>(uniform_int(g, 0, static_cast<int>(parts.size() - width)));
    std::vector<smt::Formula> group(parts.begin() + static_cast<std::ptrdiff_t>(at),
                                    parts.begin() + static_cast<std::ptrdiff_t>(at + width));
    parts.erase(parts.begin() + static_cast<std::ptrdiff_t>(at),
                parts.begin() + static_cast<std::ptrdiff_t>(at + width));
    parts.insert(parts.begin() + static_cast<std::ptrdiff_t>(at), smt::Formula::conj(std::move(group)));
  }
  return parts.front();
}

// Completes a model with zeros for variables it does not mention.
inline smt::Model completed(smt::Model m, const std::vector<const smt::Formula*>& fs) {
  for (const smt::Formula* f : fs) {
    for (const smt::Var& x : smt::free_vars(*f)) m.emplace(x, 0);
  }
  return m;
}

// Satisfiable atom list: a generator output (n <= 6) or a random
// difference-logic conjunction.
inline std::vector<smt::Formula> random_base(std::mt19937_64& g) {
  const auto& programs = gen::list_programs();
  if (uniform_int(g, 0, 1) == 0) {
    const gen::ProgramSpec& p = programs[static_cast<std::size_t>(uniform_int(g, 0, static_cast<int>(programs.size()) - 1))];
    int n = uniform_int(g, std::max(p.min_n, 2), 6);
    return smt::flatten_conjunction(gen::generate(p, n));
  }
  for (;;) {
    auto atoms = random_dl_conjuncts(g, uniform_int(g, 2, 5), uniform_int(g, 2, 6), 3);
    auto r = dl::brute_force_sat(smt::Formula::conj_of(atoms), -24, 24);
    if (std::holds_alternative<dl::Sat>(r)) return atoms;
  }
}

// Shuffled, partly duplicated and re-nested copy of the atoms.
inline smt::Formula equivalent_variant(std::vector<smt::Formula> atoms, std::mt19937_64& g) {
  int dups = uniform_int(g, 0, 2);
  for (int i = 0; i < dups; ++i) {
    atoms.push_back(atoms[static_cast<std::size_t>(uniform_int(g, 0, static_cast<int>(atoms.size()) - 1))]);
  }
  std::shuffle(atoms.begin(), atoms.end(), g);
  return reassociate(std::move(atoms), g);
}

// Strict strengthening of a comparison atom, or nullopt for equalities.
inline std::optional<smt::Formula> strengthen(const smt::Atom& a) {
  using smt::Cmp;
  using smt::Term;
  switch (a.op) {
    case Cmp::kLe:
      return at(Cmp::kLt, a.lhs, a.rhs);
    case Cmp::kGe:
      return at(Cmp::kGt, a.lhs, a.rhs);
    case Cmp::kLt:
      return at(Cmp::kLt, Term::add(a.lhs, k(1)), a.rhs);
    case Cmp::kGt:
      return at(Cmp::kGt, a.lhs, Term::add(a.rhs, k(1)));
    case Cmp::kEq:
      return std::nullopt;
  }
  return std::nullopt;
}

struct Mutant {
  smt::Formula formula;
  std::string kind;
};

// One atom deleted or strengthened. Admitted only when a finite search
// finds a model separating it from the original: deleting an implied atom
// or strengthening into an implied atom leaves the models unchanged.
inline std::optional<Mutant> distinguishing_variant(const std::vector<smt::Formula>& atoms,
                                                    std::mt19937_64& g) {
  std::size_t i = static_cast<std::size_t>(uniform_int(g, 0, static_cast<int>(atoms.size()) - 1));
  std::vector<smt::Formula> rest = atoms;
  rest.erase(rest.begin() + static_cast<std::ptrdiff_t>(i));
  std::optional<smt::Formula> stronger =
      uniform_int(g, 0, 1) == 0 ? strengthen(atoms[i].as_atom()) : std::nullopt;
  // A separating model satisfies exactly one side; build that query as a
  // conjunction so forward checking applies.
  std::vector<smt::Formula> query;
  smt::Formula mutant;
  std::string kind;
  if (stronger) {
    query = atoms;
    query.push_back(smt::Formula::negate(*stronger));
    std::vector<smt::Formula> swapped = atoms;
    swapped[i] = *stronger;
    mutant = smt::Formula::conj_of(std::move(swapped));
    kind = "strengthen";
  } else {
    query = rest;
    query.push_back(smt::Formula::negate(atoms[i]));
    mutant = smt::Formula::conj_of(rest);
    kind = "delete";
  }
  std::int64_t bound = dl::small_model_bound(smt::free_vars(smt::Formula::conj_of(query)).size(),
                                             max_abs_constant(query) + 1);
  try {
    auto r = dl::brute_force_sat(smt::Formula::conj_of(query), -bound, bound);
    if (!std::holds_alternative<dl::Sat>(r)) return std::nullopt;
  } catch (const DomainTooLarge&) {
    return std::nullopt;
  }
  return Mutant{std::move(mutant), kind};
}

inline equiv::SolverConfig internal_only() {
  equiv::SolverConfig cfg;
  cfg.strategy_order = {equiv::Strategy::kDiffLogic, equiv::Strategy::kBruteForce};
  return cfg;
}

}  // namespace warp::testing
