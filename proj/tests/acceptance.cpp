// Acceptance runner: prints one PASS/FAIL line per criterion and exits
// nonzero when any criterion fails. Seeds are fixed so runs are repeatable.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "test_support.hpp"
#include "warp/benchmark.hpp"
#include "warp/diff_logic.hpp"
#include "warp/equivalence.hpp"
#include "warp/eval.hpp"
#include "warp/explorer.hpp"
#include "warp/generators.hpp"
#include "warp/reward.hpp"

using namespace warp;
using smt::Formula;

namespace {

// Collects the first mismatch; later checks are skipped once one fails.
class Check {
 public:
  bool expect(bool ok, const std::string& what) {
    if (!ok && failure_.empty()) failure_ = what;
    return ok;
  }
  bool ok() const { return failure_.empty(); }
  const std::string& failure() const { return failure_; }

 private:
  std::string failure_;
};

struct Criterion {
  const char* name;
  double limit_seconds;  // 0 means no time limit
  std::function<void(Check&, std::ostringstream&)> run;
};

std::string canon(const Formula& f) { return smt::serialize_canonical(f); }

bool separates(const equiv::Verdict& v, const Formula& a, const Formula& b) {
  const auto* ne = std::get_if<equiv::NotEquivalent>(&v);
  if (!ne) return false;
  smt::Model m = warp::testing::completed(ne->witness, {&a, &b});
  return smt::evaluate(a, m) != smt::evaluate(b, m);
}

void quicksort_ground_truth(Check& c, std::ostringstream& note) {
  const std::pair<int, const char*> refs[] = {{2, warp::testing::kRefN2}, {3, warp::testing::kRefN3},
                                              {4, warp::testing::kRefN4}, {5, warp::testing::kRefN5},
                                              {8, warp::testing::kRefN8}};
  auto cfg = warp::testing::internal_only();
  for (auto [n, text] : refs) {
    Formula got = gen::generate("QuickSort", n);
    Formula ref = smt::parse_formula(text);
    c.expect(equiv::is_equivalent(equiv::check_equivalence(got, ref, cfg)), "n=" + std::to_string(n) + " not equivalent");
    c.expect(canon(got) == canon(ref), "n=" + std::to_string(n) + " text differs");
  }
  for (int n = 2; n <= 30; ++n) {
    auto count = smt::flatten_conjunction(gen::generate("QuickSort", n)).size();
    c.expect(count == static_cast<std::size_t>(n * (n - 1) / 2), "atom count at n=" + std::to_string(n));
  }
  note << "5 reference strings, atom counts n=2..30";
}

void solver_cross_validation(Check& c, std::ostringstream& note) {
  std::mt19937_64 g(1000);
  int sat = 0;
  for (int i = 0; i < 1000 && c.ok(); ++i) {
    int vars = warp::testing::uniform_int(g, 1, 5);
    auto conj = warp::testing::random_dl_conjuncts(g, vars, warp::testing::uniform_int(g, 1, 8), 3);
    Formula f = Formula::conj_of(conj);
    std::vector<smt::Atom> atoms;
    for (const Formula& a : conj) atoms.push_back(a.as_atom());
    bool dl_sat = false;
    auto norm = dl::normalize_atoms(atoms);
    if (auto* cs = std::get_if<std::vector<dl::DiffConstraint>>(&norm)) {
      auto res = dl::check_feasible(*cs);
      if (auto* fe = std::get_if<dl::Feasible>(&res)) {
        dl_sat = true;
        for (const auto& d : *cs) c.expect(dl::satisfies(fe->model, d), "model violates " + dl::to_string(d));
      }
    } else {
      c.expect(std::holds_alternative<dl::Infeasible>(norm), "unsupported atom in " + canon(f));
    }
    std::int64_t bound = dl::small_model_bound(smt::free_vars(f).size(), warp::testing::max_abs_constant(conj));
    bool bf_sat = std::holds_alternative<dl::Sat>(dl::brute_force_sat(f, -bound, bound));
    c.expect(dl_sat == bf_sat, "disagreement on " + canon(f));
    sat += dl_sat;
  }
  note << "1000 conjunctions, " << sat << " satisfiable";
}

void equivalence_engine(Check& c, std::ostringstream& note) {
  std::mt19937_64 g(500);
  auto cfg = warp::testing::internal_only();
  for (int i = 0; i < 500 && c.ok(); ++i) {
    auto atoms = warp::testing::random_base(g);
    Formula a = smt::left_fold(Formula::conj_of(atoms));
    Formula b = warp::testing::equivalent_variant(atoms, g);
    c.expect(equiv::is_equivalent(equiv::check_equivalence(a, b, cfg)), canon(a) + " vs " + canon(b));
  }
  int distinguishing = 0, candidates = 0;
  while (distinguishing < 500 && c.ok()) {
    auto atoms = warp::testing::random_base(g);
    ++candidates;
    auto mutant = warp::testing::distinguishing_variant(atoms, g);
    if (!mutant) continue;
    ++distinguishing;
    Formula a = Formula::conj_of(atoms);
    equiv::Verdict v = equiv::check_equivalence(a, mutant->formula, cfg);
    c.expect(separates(v, a, mutant->formula), canon(a) + " vs " + canon(mutant->formula) + ": " + equiv::describe(v));
  }
  note << "500 equivalent, 500 distinguishing (" << candidates << " mutants drawn)";
}

void reward_table(Check& c, std::ostringstream& note) {
  const std::string truth = "(assert (and (and (<= in0 in2) (<= in1 in2)) (<= in0 in1)))";
  const std::string wrong = "(assert (<= in0 in1))";
  auto gt = smt::parse_formula(truth);
  auto r = [&](const std::string& completion) {
    return sgf::compute_reward(completion, gt, warp::testing::internal_only()).reward();
  };
  auto tmpl = [](const std::string& a) { return "<think>x</think><answer>" + a + "</answer>"; };
  auto bare = [](const std::string& a) { return "text <answer>" + a + "</answer>"; };
  double got[] = {r(tmpl(truth)), r(bare(truth)), r(tmpl(wrong)), r(bare(wrong))};
  double want[] = {1.0, 0.9, 0.1, 0.0};
  for (int i = 0; i < 4; ++i) c.expect(got[i] == want[i], "combination " + std::to_string(i) + " gave " + std::to_string(got[i]));
  note << "rewards " << got[0] << " " << got[1] << " " << got[2] << " " << got[3];
}

void tier_boundaries(Check& c, std::ostringstream& note) {
  for (int jump = 1; jump <= 29; ++jump) {
    bench::Tier want = jump <= 5 ? bench::Tier::kSmall : jump <= 15 ? bench::Tier::kMedium : bench::Tier::kLarge;
    c.expect(bench::classify_tier(jump) == want, "jump " + std::to_string(jump));
  }
  note << "jumps 1..29";
}

std::vector<bench::Example> examples(std::initializer_list<int> ns) {
  std::vector<bench::Example> out;
  for (int n : ns) out.push_back({n, canon(gen::generate("QuickSort", n))});
  return out;
}

std::vector<int> ns_of(const bench::Reduction& r) {
  std::vector<int> out;
  if (auto* ex = std::get_if<std::vector<bench::Example>>(&r)) {
    for (const auto& e : *ex) out.push_back(e.n);
  }
  return out;
}

void prompt_reduction(Check& c, std::ostringstream& note) {
  bench::PromptCost ten_each = [](const std::vector<bench::Example>& e) { return e.size() * 10; };
  c.expect(ns_of(bench::reduce_examples(examples({1, 2, 3, 4, 5}), 100, ten_each)) == std::vector<int>{1, 2, 3, 4, 5},
           "in-budget set changed");
  c.expect(ns_of(bench::reduce_examples(examples({1, 2, 3, 4, 5, 6, 7}), 50, ten_each)) == std::vector<int>{1, 4, 7},
           "odd count");
  c.expect(ns_of(bench::reduce_examples(examples({1, 2, 4, 5, 7, 9}), 50, ten_each)) == std::vector<int>{1, 4, 9},
           "even count keeps lower median");
  c.expect(std::holds_alternative<bench::Excluded>(bench::reduce_examples(examples({1, 2, 3, 4, 5, 6, 7}), 29, ten_each)),
           "over-budget triple not excluded");
  auto twelve = examples({1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12});
  bench::PromptCost real = [](const std::vector<bench::Example>& e) {
    return bench::estimate_tokens(bench::render_eval_prompt(e, 30));
  };
  c.expect(ns_of(bench::reduce_examples(twelve, real(twelve) - 1, real)) == std::vector<int>{1, 6, 12},
           "real prompt cost");
  c.expect(std::holds_alternative<bench::Excluded>(bench::reduce_examples(twelve, real(examples({1, 6, 12})) - 1, real)),
           "real prompt exclusion");
  note << "6 fixtures";
}

void end_to_end(Check& c, std::ostringstream& note) {
  bench::BuildConfig cfg = bench::reference_preset();
  cfg.tier_mix = {{bench::Tier::kSmall, 25}, {bench::Tier::kMedium, 20}, {bench::Tier::kLarge, 5}};
  cfg.seed = 50;
  auto instances = bench::build_benchmark(cfg).instances;
  c.expect(instances.size() == 50, "built " + std::to_string(instances.size()) + " instances");
  auto solver = warp::testing::internal_only();
  eval::OracleSource oracle;
  auto good = eval::run_eval(instances, oracle, solver, {3, 4});
  c.expect(good.trial_accuracy.size() == 3 && good.mean == 1.0 && good.stddev == 0.0, "oracle scored " + std::to_string(good.mean));
  eval::AtomDeletionAdversary adversary;
  auto bad = eval::run_eval(instances, adversary, solver, {3, 4});
  c.expect(bad.mean == 0.0, "adversary scored " + std::to_string(bad.mean));
  char buf[96];
  std::snprintf(buf, sizeof buf, "oracle %.3f (sd %.3f), adversary %.3f over %zu instances", good.mean, good.stddev,
                bad.mean, instances.size());
  note << buf;
}

void explorer_oracle(Check& c, std::ostringstream& note) {
  auto solver = warp::testing::internal_only();
  int checked = 0;
  for (const wca::ToyProgram& p : wca::toy_programs()) {
    for (int n = 1; n <= 6; ++n) {
      wca::PathResult best = wca::worst_case(p, n);
      Formula expected = gen::generate(p.name, n);
      c.expect(equiv::is_equivalent(equiv::check_equivalence(best.condition, expected, solver)),
               p.name + " n=" + std::to_string(n));
      ++checked;
    }
  }
  auto growth = wca::path_growth(wca::toy_program("QuickSort"), 2, 6);
  c.expect(growth.size() == 5, "path growth size");
  for (std::size_t i = 1; i < growth.size(); ++i) {
    c.expect(growth[i].second > growth[i - 1].second, "paths not increasing at n=" + std::to_string(growth[i].first));
  }
  note << checked << " (program, n) pairs; QuickSort paths";
  for (auto [n, count] : growth) note << ' ' << count;
}

void aggregation(Check& c, std::ostringstream& note) {
  auto s = eval::summarize_trials({41.43, 41.58, 40.24});
  c.expect(std::fabs(s.mean - 41.08) <= 0.01, "mean " + std::to_string(s.mean));
  char buf[48];
  std::snprintf(buf, sizeof buf, "mean %.4f", s.mean);
  note << buf;
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {"quicksort-ground-truth", 5, quicksort_ground_truth},
      {"solver-cross-validation", 30, solver_cross_validation},
      {"equivalence-engine", 60, equivalence_engine},
      {"reward-table", 0, reward_table},
      {"tier-boundaries", 0, tier_boundaries},
      {"prompt-reduction", 0, prompt_reduction},
      {"end-to-end", 120, end_to_end},
      {"explorer-oracle", 60, explorer_oracle},
      {"aggregation", 0, aggregation},
  };
  int failed = 0;
  for (const Criterion& cr : criteria) {
    Check check;
    std::ostringstream note;
    auto start = std::chrono::steady_clock::now();
    try {
      cr.run(check, note);
    } catch (const std::exception& e) {
      check.expect(false, std::string("exception: ") + e.what());
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (cr.limit_seconds > 0) {
      check.expect(secs < cr.limit_seconds, "took longer than " + std::to_string(cr.limit_seconds) + " s");
    }
    bool pass = check.ok();
    failed += !pass;
    std::printf("%s %-24s %7.2fs  %s\n", pass ? "PASS" : "FAIL", cr.name, secs,
                pass ? note.str().c_str() : check.failure().c_str());
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - static_cast<std::size_t>(failed), criteria.size());
  return failed == 0 ? 0 : 1;
}
