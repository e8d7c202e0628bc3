#pragma once

// Template check, answer extraction and the weighted reward
// R = 0.1 * syntactic + 0.9 * semantic.

#include <optional>
#include <string>
#include <string_view>

#include "warp/equivalence.hpp"
#include "warp/smtlib.hpp"

namespace warp::sgf {

// True iff the trimmed text is exactly one <think>...</think> block, optional
// whitespace, then exactly one <answer>...</answer> block.
bool check_template(std::string_view completion);

// Trimmed body of the last complete <answer>...</answer> block.
std::optional<std::string> extract_answer(std::string_view completion);

struct RewardOptions {
  // When set, an answer outside a valid template earns no semantic credit.
  bool strict_semantic_requires_template = false;
};

struct RewardBreakdown {
  bool syntactic_ok = false;
  bool semantic_ok = false;
  std::optional<std::string> extracted_answer;
  // Reward in tenths: one of 0, 1, 9, 10.
  int reward_tenths = 0;
  std::string detail;

  double reward() const { return reward_tenths / 10.0; }
};

constexpr int kSyntacticTenths = 1;
constexpr int kSemanticTenths = 9;

RewardBreakdown compute_reward(std::string_view completion, const smt::Formula& ground_truth,
                               const equiv::SolverConfig& cfg, const RewardOptions& options = {});

}  // namespace warp::sgf
