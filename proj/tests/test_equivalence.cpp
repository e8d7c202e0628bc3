#include <gtest/gtest.h>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <thread>

#include "test_support.hpp"
#include "warp/equivalence.hpp"
#include "warp/errors.hpp"
#include "warp/generators.hpp"
#include "warp/process.hpp"

using namespace warp;
using namespace warp::equiv;
using smt::Cmp;
using smt::Formula;
using smt::Var;
using warp::testing::at;
using warp::testing::k;
using warp::testing::v;

namespace {

Formula le(std::uint32_t a, std::uint32_t b) { return at(Cmp::kLe, v(a), v(b)); }
Formula lt(std::uint32_t a, std::uint32_t b) { return at(Cmp::kLt, v(a), v(b)); }

bool is_not_equivalent(const Verdict& vd) { return std::holds_alternative<NotEquivalent>(vd); }

// A NotEquivalent witness must separate the two formulas.
void expect_separating(const Verdict& vd, const Formula& a, const Formula& b) {
  ASSERT_TRUE(is_not_equivalent(vd)) << describe(vd);
  smt::Model m = warp::testing::completed(std::get<NotEquivalent>(vd).witness, {&a, &b});
  EXPECT_NE(smt::evaluate(a, m), smt::evaluate(b, m)) << smt::to_string(m);
}

Formula qs(int n) { return gen::generate("QuickSort", n); }

Formula without(const Formula& f, const Formula& atom) {
  std::vector<Formula> parts;
  for (const Formula& p : smt::flatten_conjunction(f)) {
    if (!(p == atom)) parts.push_back(p);
  }
  return Formula::conj_of(parts);
}

SolverConfig only(Strategy s) {
  SolverConfig cfg;
  cfg.strategy_order = {s};
  return cfg;
}

// Writes an executable shell script into the test's temp directory.
std::string fake_solver(const std::string& name, const std::string& body) {
  auto path = std::filesystem::temp_directory_path() / ("warp-" + name + "-" + std::to_string(::getpid()));
  std::ofstream(path) << "#!/bin/sh\n" << body << "\n";
  std::filesystem::permissions(path, std::filesystem::perms::owner_all);
  return path.string();
}

class ScopedEnv {
 public:
  ScopedEnv(const char* name, const char* value) : name_(name) {
    if (const char* old = std::getenv(name)) old_ = old;
    ::setenv(name, value, 1);
  }
  ~ScopedEnv() {
    if (old_) {
      ::setenv(name_, old_->c_str(), 1);
    } else {
      ::unsetenv(name_);
    }
  }

 private:
  const char* name_;
  std::optional<std::string> old_;
};

}  // namespace

TEST(CheckEquivalence, Examples) {
  SolverConfig cfg = warp::testing::internal_only();
  Formula phi = qs(4);
  EXPECT_TRUE(is_equivalent(check_equivalence(phi, phi, cfg)));
  EXPECT_TRUE(is_equivalent(check_equivalence(Formula::conj({le(0, 1), le(1, 2)}),
                                               Formula::conj({le(1, 2), le(0, 1)}), cfg)));
  Verdict vd = check_equivalence(le(0, 1), lt(0, 1), cfg);
  expect_separating(vd, le(0, 1), lt(0, 1));
  EXPECT_EQ(std::get<NotEquivalent>(vd).witness.at(Var{0}), std::get<NotEquivalent>(vd).witness.at(Var{1}));
}

// in0 <= in3 follows from in0 <= in1 <= in2 <= in3, so deleting it keeps
// the formula's meaning; deleting a chain link does not.
TEST(CheckEquivalence, QuickSortAtomDeletion) {
  SolverConfig cfg = warp::testing::internal_only();
  Formula phi = qs(4);
  EXPECT_TRUE(is_equivalent(check_equivalence(phi, without(phi, le(0, 3)), cfg)));
  Formula weaker = without(phi, le(0, 1));
  Verdict vd = check_equivalence(phi, weaker, cfg);
  expect_separating(vd, phi, weaker);
  EXPECT_EQ(std::get<NotEquivalent>(vd).direction, Direction::kSecondNotFirst);
  EXPECT_GT(std::get<NotEquivalent>(vd).witness.at(Var{0}), std::get<NotEquivalent>(vd).witness.at(Var{1}));
  // Every strategy alone reaches the same verdicts.
  for (Strategy s : {Strategy::kDiffLogic, Strategy::kBruteForce}) {
    EXPECT_TRUE(is_equivalent(check_equivalence(phi, without(phi, le(0, 3)), only(s)))) << to_string(s);
    expect_separating(check_equivalence(phi, weaker, only(s)), phi, weaker);
  }
}

TEST(CheckEquivalence, TrueOnlyMatchesValidFormulas) {
  SolverConfig cfg = warp::testing::internal_only();
  EXPECT_TRUE(is_equivalent(check_equivalence(Formula::truth(), Formula::truth(), cfg)));
  expect_separating(check_equivalence(Formula::truth(), le(0, 1), cfg), Formula::truth(), le(0, 1));
  EXPECT_TRUE(is_equivalent(check_equivalence(Formula::truth(), le(0, 0), cfg)));
}

TEST(CheckEquivalence, DifferingVariableSets) {
  SolverConfig cfg = warp::testing::internal_only();
  // in2 only constrained vacuously.
  EXPECT_TRUE(is_equivalent(check_equivalence(le(0, 1), Formula::conj({le(0, 1), le(2, 2)}), cfg)));
  Formula b = Formula::conj({le(0, 1), le(1, 2)});
  expect_separating(check_equivalence(le(0, 1), b, cfg), le(0, 1), b);
}

TEST(CheckEquivalence, NonDifferenceFamilies) {
  SolverConfig cfg = warp::testing::internal_only();
  for (const char* name : {"WeirdFibonacci", "WeirdConstDiff"}) {
    Formula phi = gen::generate(name, 6);
    auto parts = smt::flatten_conjunction(phi);
    std::reverse(parts.begin(), parts.end());
    EXPECT_TRUE(is_equivalent(check_equivalence(phi, Formula::conj_of(parts), cfg))) << name;
    Formula weaker = without(phi, parts.front());
    expect_separating(check_equivalence(phi, weaker, cfg), phi, weaker);
  }
}

TEST(CheckEquivalence, UnsupportedIsUnknown) {
  Formula a = at(Cmp::kLe, smt::Term::mul(v(0), v(1)), k(4));
  Verdict vd = check_equivalence(a, a, only(Strategy::kDiffLogic));
  ASSERT_TRUE(std::holds_alternative<Unknown>(vd));
  EXPECT_EQ(std::get<Unknown>(vd).reason, Unknown::Reason::kUnsupported);
  // External strategy with no solver configured is not conclusive.
  EXPECT_TRUE(std::holds_alternative<Unknown>(check_equivalence(le(0, 1), le(0, 1), only(Strategy::kExternal))));
  EXPECT_FALSE(is_equivalent(vd));
}

TEST(ImpliesConjunctive, Examples) {
  auto r = implies_conjunctive(Formula::conj({le(0, 1), le(1, 2)}), le(0, 2));
  EXPECT_EQ(r.status, ImplicationResult::Status::kImplied);
  r = implies_conjunctive(le(0, 1), lt(0, 1));
  EXPECT_EQ(r.status, ImplicationResult::Status::kNotImplied);
  EXPECT_TRUE(smt::evaluate(le(0, 1), warp::testing::completed(r.witness, {})));
  EXPECT_FALSE(smt::evaluate(lt(0, 1), warp::testing::completed(r.witness, {})));
  r = implies_conjunctive(at(Cmp::kLe, smt::Term::mul(v(0), v(1)), k(1)), le(0, 1));
  EXPECT_EQ(r.status, ImplicationResult::Status::kUnsupported);
}

TEST(Properties, MutationCorpus) {
  std::mt19937_64 g(17);
  SolverConfig cfg = warp::testing::internal_only();
  for (int i = 0; i < 150; ++i) {
    auto atoms = warp::testing::random_base(g);
    Formula a = smt::left_fold(Formula::conj_of(atoms));
    Formula b = warp::testing::equivalent_variant(atoms, g);
    ASSERT_TRUE(is_equivalent(check_equivalence(a, b, cfg)))
        << smt::serialize_canonical(a) << " vs " << smt::serialize_canonical(b);
  }
  int admitted = 0;
  while (admitted < 150) {
    auto atoms = warp::testing::random_base(g);
    auto mutant = warp::testing::distinguishing_variant(atoms, g);
    if (!mutant) continue;
    ++admitted;
    Formula a = Formula::conj_of(atoms);
    expect_separating(check_equivalence(a, mutant->formula, cfg), a, mutant->formula);
  }
}

TEST(Properties, ReflexiveSymmetricTransitive) {
  std::mt19937_64 g(23);
  SolverConfig cfg = warp::testing::internal_only();
  for (int i = 0; i < 100; ++i) {
    int vars = warp::testing::uniform_int(g, 2, 3);
    Formula a = Formula::conj_of(warp::testing::random_dl_conjuncts(g, vars, 2, 1));
    Formula b = Formula::conj_of(warp::testing::random_dl_conjuncts(g, vars, 2, 1));
    Formula c = Formula::conj_of(warp::testing::random_dl_conjuncts(g, vars, 2, 1));
    EXPECT_TRUE(is_equivalent(check_equivalence(a, a, cfg)));
    bool ab = is_equivalent(check_equivalence(a, b, cfg));
    EXPECT_EQ(ab, is_equivalent(check_equivalence(b, a, cfg)));
    bool bc = is_equivalent(check_equivalence(b, c, cfg));
    if (ab && bc) {
      EXPECT_TRUE(is_equivalent(check_equivalence(a, c, cfg)));
    }
  }
}

TEST(Properties, PermutationAndReassociationInvariance) {
  std::mt19937_64 g(41);
  SolverConfig cfg = warp::testing::internal_only();
  for (int i = 0; i < 100; ++i) {
    auto a_atoms = warp::testing::random_dl_conjuncts(g, 3, 3, 2);
    auto b_atoms = warp::testing::random_dl_conjuncts(g, 3, 3, 2);
    Formula a = Formula::conj_of(a_atoms), b = Formula::conj_of(b_atoms);
    bool base = is_equivalent(check_equivalence(a, b, cfg));
    Formula a2 = warp::testing::equivalent_variant(a_atoms, g);
    Formula b2 = warp::testing::equivalent_variant(b_atoms, g);
    EXPECT_EQ(base, is_equivalent(check_equivalence(a2, b2, cfg)));
  }
}

TEST(Properties, DiffLogicAgreesWithBruteForce) {
  std::mt19937_64 g(57);
  int equal = 0;
  for (int i = 0; i < 500; ++i) {
    int vars = warp::testing::uniform_int(g, 1, 3);
    auto a_atoms = warp::testing::random_dl_conjuncts(g, vars, warp::testing::uniform_int(g, 1, 3), 2);
    Formula a = Formula::conj_of(a_atoms);
    Formula b = warp::testing::uniform_int(g, 0, 2) == 0
                    ? warp::testing::equivalent_variant(a_atoms, g)
                    : Formula::conj_of(warp::testing::random_dl_conjuncts(g, vars, warp::testing::uniform_int(g, 1, 3), 2));
    Verdict d = check_equivalence(a, b, only(Strategy::kDiffLogic));
    Verdict bf = check_equivalence(a, b, only(Strategy::kBruteForce));
    ASSERT_EQ(d.index(), bf.index()) << describe(d) << " / " << describe(bf) << " for "
                                     << smt::serialize_canonical(a) << " , " << smt::serialize_canonical(b);
    if (is_not_equivalent(d)) {
      expect_separating(d, a, b);
      expect_separating(bf, a, b);
    }
    equal += is_equivalent(d);
  }
  EXPECT_GT(equal, 100);
}

// ---------------------------------------------------------------------------
// Solver process plumbing.

TEST(BuildScript, DeclaresUnionAndChecks) {
  std::string s = build_script({le(0, 1), Formula::negate(lt(0, 1))}, {Var{0}, Var{1}});
  EXPECT_EQ(s,
            "(set-option :produce-models true)\n"
            "(set-logic QF_LIA)\n"
            "(declare-fun in0 () Int)\n"
            "(declare-fun in1 () Int)\n"
            "(assert (<= in0 in1))\n"
            "(assert (not (< in0 in1)))\n"
            "(check-sat)\n"
            "(get-value (in0 in1))\n"
            "(exit)\n");
}

TEST(Process, EchoesStdin) {
  ProcessOutput out = run_process({"cat"}, "hello\n", std::chrono::milliseconds(5000));
  EXPECT_EQ(out.stdout_text, "hello\n");
  EXPECT_FALSE(out.timed_out);
  EXPECT_EQ(out.exit_status, 0);
}

TEST(Process, TimeoutKillsChild) {
  auto start = std::chrono::steady_clock::now();
  ProcessOutput out = run_process({"sleep", "10"}, "", std::chrono::milliseconds(200));
  EXPECT_TRUE(out.timed_out);
  EXPECT_LT(std::chrono::steady_clock::now() - start, std::chrono::seconds(5));
}

TEST(Process, SpawnFailure) {
  EXPECT_THROW(run_process({"/nonexistent/warp-solver"}, "", std::chrono::milliseconds(1000)),
               SolverSpawnFailure);
}

TEST(Process, ChildSlotLimitsConcurrency) {
  std::atomic<std::size_t> peak{0};
  std::vector<std::thread> threads;
  for (int i = 0; i < 8; ++i) {
    threads.emplace_back([&] {
      ChildSlot slot(2);
      std::size_t now = ChildSlot::active();
      std::size_t prev = peak.load();
      while (now > prev && !peak.compare_exchange_weak(prev, now)) {
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(20));
    });
  }
  for (auto& t : threads) t.join();
  EXPECT_LE(peak.load(), 2u);
  EXPECT_EQ(ChildSlot::active(), 0u);
}

TEST(External, FakeSolverReplies) {
  SolverConfig cfg;
  cfg.external_solver_command = {fake_solver("unsat", "cat >/dev/null; echo unsat")};
  EXPECT_EQ(external_check_sat(build_script({le(0, 1)}, {Var{0}, Var{1}}), cfg), SatStatus::kUnsat);
  cfg.external_solver_command = {fake_solver("garbage", "cat >/dev/null; echo '(error \"boom\")'")};
  EXPECT_THROW(external_check_sat(build_script({le(0, 1)}, {Var{0}, Var{1}}), cfg), ProtocolError);
  cfg.external_solver_command = {fake_solver("slow", "sleep 10")};
  cfg.timeout_ms = 200;
  cfg.strategy_order = {Strategy::kExternal};
  Verdict vd = check_equivalence(le(0, 1), lt(0, 1), cfg);
  ASSERT_TRUE(std::holds_alternative<Unknown>(vd));
  EXPECT_EQ(std::get<Unknown>(vd).reason, Unknown::Reason::kTimeout);
  // A later strategy still decides after a timeout.
  cfg.strategy_order = {Strategy::kExternal, Strategy::kDiffLogic};
  expect_separating(check_equivalence(le(0, 1), lt(0, 1), cfg), le(0, 1), lt(0, 1));
}

class RealSolver : public ::testing::Test {
 protected:
  void SetUp() override {
    cfg_.external_solver_command = warp::testing::find_external_solver();
    if (cfg_.external_solver_command.empty()) GTEST_SKIP() << "no external solver on PATH";
    cfg_.strategy_order = {Strategy::kExternal};
  }
  SolverConfig cfg_;
};

TEST_F(RealSolver, ScriptExamples) {
  EXPECT_EQ(external_check_sat(build_script({Formula::conj({le(0, 1), lt(1, 0)})}, {Var{0}, Var{1}}), cfg_),
            SatStatus::kUnsat);
  EXPECT_EQ(external_check_sat(build_script({le(0, 1)}, {Var{0}, Var{1}}), cfg_), SatStatus::kSat);
  Formula phi = qs(4);
  EXPECT_EQ(external_check_sat(build_script({phi, Formula::negate(phi)}, {Var{0}, Var{1}, Var{2}, Var{3}}), cfg_),
            SatStatus::kUnsat);
}

TEST_F(RealSolver, ModelsAreParsed) {
  SatResult r = check_satisfiable(Formula::conj({at(Cmp::kLt, v(0), k(-5)), lt(0, 1)}), cfg_);
  ASSERT_EQ(r.status, SatStatus::kSat);
  EXPECT_LT(r.model.at(Var{0}), -5);
}

TEST_F(RealSolver, AgreesWithInternalStrategies) {
  std::mt19937_64 g(77);
  for (int i = 0; i < 60; ++i) {
    auto atoms = warp::testing::random_base(g);
    Formula a = Formula::conj_of(atoms);
    Formula b = warp::testing::uniform_int(g, 0, 1) ? warp::testing::equivalent_variant(atoms, g)
                                                    : Formula::conj_of(warp::testing::random_base(g));
    Verdict ext = check_equivalence(a, b, cfg_);
    Verdict internal = check_equivalence(a, b, warp::testing::internal_only());
    ASSERT_EQ(ext.index(), internal.index()) << describe(ext) << " / " << describe(internal);
    if (is_not_equivalent(ext)) expect_separating(ext, a, b);
  }
}

// ---------------------------------------------------------------------------
// Configuration.

TEST(Config, DefaultsAndValidation) {
  SolverConfig cfg = SolverConfig{};
  EXPECT_EQ(cfg.timeout_ms, 5000);
  EXPECT_NO_THROW(cfg.validate());
  cfg.timeout_ms = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = SolverConfig{};
  cfg.strategy_order.clear();
  EXPECT_THROW(cfg.validate(), ConfigError);
  EXPECT_EQ(strategy_from_string("brute_force"), Strategy::kBruteForce);
  EXPECT_THROW(strategy_from_string("magic"), ConfigError);
}

TEST(Config, LoadsJsonAndEnvironment) {
  auto path = std::filesystem::temp_directory_path() / ("warp-solver-" + std::to_string(::getpid()) + ".json");
  std::ofstream(path) << R"({"external_solver_command": "z3 -in -smt2", "timeout_ms": 750,
                              "strategy_order": ["external", "diff_logic"], "max_concurrent_solvers": 2})";
  SolverConfig cfg = load_solver_config(path);
  EXPECT_EQ(cfg.external_solver_command, (std::vector<std::string>{"z3", "-in", "-smt2"}));
  EXPECT_EQ(cfg.timeout_ms, 750);
  EXPECT_EQ(cfg.strategy_order, (std::vector<Strategy>{Strategy::kExternal, Strategy::kDiffLogic}));
  EXPECT_EQ(cfg.max_concurrent_solvers, 2u);

  std::ofstream(path) << R"({"external_solver_command": ["cvc5", "--lang", "smt2"]})";
  EXPECT_EQ(load_solver_config(path).external_solver_command,
            (std::vector<std::string>{"cvc5", "--lang", "smt2"}));

  std::ofstream(path) << R"({"timeout_ms": "soon"})";
  EXPECT_THROW(load_solver_config(path), ConfigError);
  std::filesystem::remove(path);
  EXPECT_THROW(load_solver_config(path), ConfigError);

  ScopedEnv cmd("WARP_SOLVER_CMD", "yices-smt2  --incremental");
  ScopedEnv timeout("WARP_SOLVER_TIMEOUT_MS", "1234");
  SolverConfig env;
  apply_env_overrides(env);
  EXPECT_EQ(env.external_solver_command, (std::vector<std::string>{"yices-smt2", "--incremental"}));
  EXPECT_EQ(env.timeout_ms, 1234);
}
