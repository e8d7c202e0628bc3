#include "warp/generators.hpp"

#include "warp/errors.hpp"

namespace warp::gen {

namespace {

using smt::Atom;
using smt::Cmp;
using smt::Formula;
using smt::Term;

Term in(int i) { return Term::var(static_cast<std::uint32_t>(i)); }

Formula atom(Cmp op, Term lhs, Term rhs) {
  return Formula::atom(smt::make_atom(op, std::move(lhs), std::move(rhs)));
}

// Pivot j runs from the last index down; inside each pivot the compared
// element i runs upward. This is the order a last-element-pivot partition
// visits the comparisons on sorted input.
Formula quick_sort(int n) {
  std::vector<Formula> atoms;
  for (int j = n - 1; j >= 1; --j) {
    for (int i = 0; i < j; ++i) atoms.push_back(atom(Cmp::kLe, in(i), in(j)));
  }
  return Formula::conj_of(std::move(atoms));
}

Formula same_hundred(int n) {
  std::vector<Formula> atoms;
  for (int i = 0; i < n; ++i) atoms.push_back(atom(Cmp::kEq, in(i), Term::constant(100)));
  return Formula::conj_of(std::move(atoms));
}

Formula weird_fibonacci(int n) {
  std::vector<Formula> atoms;
  for (int i = 2; i < n; ++i) {
    atoms.push_back(atom(Cmp::kEq, in(i), Term::add(in(i - 1), in(i - 2))));
  }
  return Formula::conj_of(std::move(atoms));
}

Formula weird_const_diff(int n) {
  std::vector<Formula> atoms;
  for (int i = 2; i < n; ++i) {
    atoms.push_back(
        atom(Cmp::kEq, Term::sub(in(i), in(i - 1)), Term::sub(in(1), in(0))));
  }
  return Formula::conj_of(std::move(atoms));
}

Formula simple_ascending_last(int n) { return atom(Cmp::kLt, in(n - 2), in(n - 1)); }

// Strictly decreasing input makes every adjacent comparison swap.
Formula bubble_sort(int n) {
  std::vector<Formula> atoms;
  for (int i = 0; i + 1 < n; ++i) atoms.push_back(atom(Cmp::kGt, in(i), in(i + 1)));
  return Formula::conj_of(std::move(atoms));
}

Formula complex_palindrome(int n) {
  std::vector<Formula> atoms;
  for (int i = 0; i < n / 2; ++i) atoms.push_back(atom(Cmp::kEq, in(i), in(n - 1 - i)));
  return Formula::conj_of(std::move(atoms));
}

std::vector<ProgramSpec> build_registry() {
  return {
      {"QuickSort", "Recursive sorting algorithm using pivot-based partitioning.", 2, 64,
       quick_sort},
      {"SameHundred", "Verifies all elements equal 100, then triggers heavy computation.", 1,
       64, same_hundred},
      {"WeirdFibonacci",
       "Validates a Fibonacci-like progression (each element equals the sum of the two "
       "previous ones) before heavy computation.",
       3, 64, weird_fibonacci},
      {"WeirdConstDiff",
       "Confirms constant differences between consecutive elements (arithmetic progression) "
       "prior to heavy processing.",
       3, 64, weird_const_diff},
      {"SimpleAscendingLast",
       "Verifies that the last element is strictly greater than its predecessor before heavy "
       "computation.",
       2, 64, simple_ascending_last},
      {"BubbleSort", "Elementary nested-loop sorting algorithm; worst case is full reverse order.",
       2, 64, bubble_sort},
      {"ComplexPalindrome",
       "Checks if an input sequence is palindromic before executing a heavy loop.", 2, 64,
       complex_palindrome},
  };
}

}  // namespace

const std::vector<ProgramSpec>& list_programs() {
  static const std::vector<ProgramSpec> registry = build_registry();
  return registry;
}

const ProgramSpec& find_program(std::string_view name) {
  for (const ProgramSpec& p : list_programs()) {
    if (p.name == name) return p;
  }
  throw UnknownProgram("unknown program '" + std::string(name) + "'");
}

Formula generate(const ProgramSpec& program, int n) {
  if (n < 1 || n > program.max_supported_n) {
    throw UnsupportedSize(program.name + " supports 1 <= n <= " +
                          std::to_string(program.max_supported_n) + ", got " +
                          std::to_string(n));
  }
  if (n < program.min_n) return Formula::truth();
  return program.generator(n);
}

Formula generate(std::string_view program, int n) { return generate(find_program(program), n); }

std::size_t atom_count(const ProgramSpec& program, int n) {
  return smt::conjunct_count(generate(program, n));
}

}  // namespace warp::gen
