#include <benchmark/benchmark.h>

#include "warp/diff_logic.hpp"
#include "warp/equivalence.hpp"
#include "warp/explorer.hpp"
#include "warp/generators.hpp"
#include "warp/smtlib.hpp"

namespace {

using namespace warp;

void BM_ParseQuickSort(benchmark::State& state) {
  const std::string text =
      smt::serialize_canonical(gen::generate("QuickSort", static_cast<int>(state.range(0))));
  for (auto _ : state) benchmark::DoNotOptimize(smt::parse_formula(text));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * text.size()));
}
BENCHMARK(BM_ParseQuickSort)->Arg(8)->Arg(16)->Arg(30);

void BM_CheckFeasible(benchmark::State& state) {
  smt::Formula f = gen::generate("QuickSort", static_cast<int>(state.range(0)));
  std::vector<smt::Atom> atoms;
  for (const smt::Formula& leaf : smt::flatten_conjunction(f)) atoms.push_back(leaf.as_atom());
  auto cs = std::get<std::vector<dl::DiffConstraint>>(dl::normalize_atoms(atoms));
  for (auto _ : state) benchmark::DoNotOptimize(dl::check_feasible(cs));
}
BENCHMARK(BM_CheckFeasible)->Arg(8)->Arg(16)->Arg(30);

void BM_EquivalenceDiffLogic(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  smt::Formula a = gen::generate("QuickSort", n);
  std::vector<smt::Formula> parts = smt::flatten_conjunction(a);
  parts.pop_back();
  smt::Formula b = smt::Formula::conj_of(parts);
  equiv::SolverConfig cfg;
  cfg.strategy_order = {equiv::Strategy::kDiffLogic};
  for (auto _ : state) benchmark::DoNotOptimize(equiv::check_equivalence(a, b, cfg));
}
BENCHMARK(BM_EquivalenceDiffLogic)->Arg(8)->Arg(16)->Arg(30);

void BM_ExploreQuickSort(benchmark::State& state) {
  const wca::ToyProgram& p = wca::toy_program("QuickSort");
  for (auto _ : state) benchmark::DoNotOptimize(wca::worst_case(p, static_cast<int>(state.range(0))));
}
BENCHMARK(BM_ExploreQuickSort)->Arg(3)->Arg(4)->Arg(5)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
