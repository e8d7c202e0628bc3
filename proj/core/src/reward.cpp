#include "warp/reward.hpp"

#include "warp/errors.hpp"

namespace warp::sgf {

namespace {

constexpr std::string_view kThinkOpen = "<think>";
constexpr std::string_view kThinkClose = "</think>";
constexpr std::string_view kAnswerOpen = "<answer>";
constexpr std::string_view kAnswerClose = "</answer>";

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::size_t occurrences(std::string_view text, std::string_view tag) {
  std::size_t count = 0;
  for (std::size_t pos = text.find(tag); pos != std::string_view::npos;
       pos = text.find(tag, pos + tag.size())) {
    ++count;
  }
  return count;
}

}  // namespace

bool check_template(std::string_view completion) {
  std::string_view t = trim(completion);
  if (!t.starts_with(kThinkOpen) || !t.ends_with(kAnswerClose)) return false;
  for (std::string_view tag : {kThinkOpen, kThinkClose, kAnswerOpen, kAnswerClose}) {
    if (occurrences(t, tag) != 1) return false;
  }
  const std::size_t think_close = t.find(kThinkClose);
  const std::size_t answer_open = t.find(kAnswerOpen);
  if (answer_open < think_close + kThinkClose.size()) return false;
  std::string_view between =
      t.substr(think_close + kThinkClose.size(), answer_open - think_close - kThinkClose.size());
  return trim(between).empty();
}

std::optional<std::string> extract_answer(std::string_view completion) {
  const std::size_t close = completion.rfind(kAnswerClose);
  if (close == std::string_view::npos) return std::nullopt;
  const std::size_t open = completion.substr(0, close).rfind(kAnswerOpen);
  if (open == std::string_view::npos) return std::nullopt;
  const std::size_t body = open + kAnswerOpen.size();
  return std::string(trim(completion.substr(body, close - body)));
}

RewardBreakdown compute_reward(std::string_view completion, const smt::Formula& ground_truth,
                               const equiv::SolverConfig& cfg, const RewardOptions& options) {
  RewardBreakdown r;
  r.syntactic_ok = check_template(completion);
  r.extracted_answer = extract_answer(completion);
  if (!r.extracted_answer) {
    r.detail = "no answer block";
  } else if (options.strict_semantic_requires_template && !r.syntactic_ok) {
    r.detail = "template invalid; semantic check skipped";
  } else {
    try {
      smt::Formula answer = smt::parse_formula(*r.extracted_answer);
      equiv::Verdict v = equiv::check_equivalence(answer, ground_truth, cfg);
      r.semantic_ok = equiv::is_equivalent(v);
      r.detail = equiv::describe(v);
    } catch (const ParseError& e) {
      r.detail = std::string("parse error: ") + e.what();
    } catch (const Error& e) {
      r.detail = std::string("solver error: ") + e.what();
    }
  }
  r.reward_tenths = (r.syntactic_ok ? kSyntacticTenths : 0) + (r.semantic_ok ? kSemanticTenths : 0);
  return r;
}

}  // namespace warp::sgf
