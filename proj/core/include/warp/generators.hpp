#pragma once

// Registry of programs with closed-form worst-case path constraints.

#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "warp/smtlib.hpp"

namespace warp::gen {

struct ProgramSpec {
  std::string name;
  std::string description;
  // Below this size the worst case is unconstrained (True).
  int min_n = 1;
  int max_supported_n = 64;
  // Called only with min_n <= n <= max_supported_n.
  std::function<smt::Formula(int n)> generator;
};

const std::vector<ProgramSpec>& list_programs();

// Throws warp::UnknownProgram.
const ProgramSpec& find_program(std::string_view name);

// Throws warp::UnsupportedSize unless 1 <= n <= max_supported_n.
smt::Formula generate(const ProgramSpec& program, int n);
smt::Formula generate(std::string_view program, int n);

std::size_t atom_count(const ProgramSpec& program, int n);

}  // namespace warp::gen
