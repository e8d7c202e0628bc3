// Command-line front end for the warp library.

#include <csignal>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>

#include "CLI11.hpp"
#include "warp/benchmark.hpp"
#include "warp/equivalence.hpp"
#include "warp/errors.hpp"
#include "warp/eval.hpp"
#include "warp/explorer.hpp"
#include "warp/generators.hpp"
#include "warp/sgf_service.hpp"
#include "warp/smtlib.hpp"

namespace {

using namespace warp;

equiv::SolverConfig solver_config(const std::string& path) {
  return path.empty() ? equiv::default_solver_config() : equiv::load_solver_config(path);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

sgf::HttpService* g_service = nullptr;

void on_signal(int) {
  if (g_service) g_service->stop();
}

int cmd_generate(const std::string& program, int n) {
  std::cout << smt::serialize_canonical(gen::generate(program, n)) << '\n';
  return 0;
}

int cmd_list() {
  for (const gen::ProgramSpec& p : gen::list_programs()) {
    std::cout << std::left << std::setw(22) << p.name << " min_n=" << p.min_n
              << "  max_n=" << p.max_supported_n << "  " << p.description << '\n';
  }
  return 0;
}

int cmd_explore(const std::string& program, int n, bool show_paths, int growth_from) {
  const wca::ToyProgram& toy = wca::toy_program(program);
  std::vector<wca::PathResult> paths = wca::enumerate_paths(toy, n);
  auto best = wca::worst_case(toy, n);
  std::cout << "worst-case cost: " << best.cost << '\n';
  std::cout << smt::serialize_canonical(best.condition) << '\n';
  if (show_paths) {
    std::cout << "\ncost  trace  condition\n";
    for (const wca::PathResult& p : paths) {
      std::string trace;
      for (bool b : p.trace) trace += b ? 'T' : 'F';
      std::cout << std::setw(4) << p.cost << "  " << (trace.empty() ? "-" : trace) << "  "
                << smt::serialize_canonical(p.condition) << '\n';
    }
  }
  std::cout << "\n   n  feasible paths\n";
  for (auto [k, count] : wca::path_growth(toy, std::min(growth_from, n), n)) {
    std::cout << std::setw(4) << k << "  " << count << '\n';
  }
  return 0;
}

int cmd_equiv(const std::string& a, const std::string& b, const std::string& solver) {
  auto v = equiv::check_equivalence(smt::parse_formula(a), smt::parse_formula(b),
                                    solver_config(solver));
  std::cout << equiv::describe(v) << '\n';
  return equiv::is_equivalent(v) ? 0 : 1;
}

int cmd_serve(const std::string& mode, const std::string& bind, const std::string& solver,
              bool strict) {
  sgf::ServiceConfig cfg{solver_config(solver), {strict}};
  if (mode == "stdio") {
    sgf::serve_stdio(std::cin, std::cout, cfg);
    return 0;
  }
  sgf::BindAddress addr = sgf::parse_bind(bind);
  sgf::HttpService service(cfg);
  int port = service.bind(addr.host, addr.port);
  std::cerr << "listening on " << addr.host << ':' << port << '\n';
  g_service = &service;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  service.run();
  g_service = nullptr;
  return 0;
}

int cmd_build(const std::string& config, const std::string& out, bool reference) {
  bench::BuildConfig cfg = config.empty() ? (reference ? bench::reference_preset() : bench::BuildConfig{})
                                          : bench::load_build_config(config);
  bench::BuildResult r = bench::build_benchmark(cfg);
  bench::write_benchmark(out, r.instances);
  std::cerr << "wrote " << r.report.written << " instances to " << out << " (";
  for (auto [tier, c] : r.report.per_tier) std::cerr << bench::to_string(tier) << '=' << c << ' ';
  std::cerr << "reduced=" << r.report.reduced << " excluded=" << r.report.excluded << ")\n";
  return 0;
}

int cmd_stats(const std::string& in, bool as_json) {
  bench::Stats s = bench::profile(std::filesystem::path(in));
  std::cout << (as_json ? bench::stats_to_json(s) + "\n" : bench::format_stats(s));
  return s.malformed_lines.empty() ? 0 : 2;
}

int cmd_eval(const std::string& bench_path, const std::string& completions,
             const std::string& endpoint, const std::string& stub, int trials,
             const std::string& report, const std::string& solver, std::size_t workers) {
  auto instances = bench::read_benchmark(bench_path);
  std::unique_ptr<eval::CompletionSource> source;
  if (!completions.empty()) {
    source = std::make_unique<eval::RecordedCompletions>(
        eval::RecordedCompletions::from_file(completions));
  } else if (!endpoint.empty()) {
    source = std::make_unique<eval::EndpointSource>(eval::load_endpoint_config(endpoint));
  } else if (stub == "oracle") {
    source = std::make_unique<eval::OracleSource>();
  } else if (stub == "delete-atom") {
    source = std::make_unique<eval::AtomDeletionAdversary>();
  } else {
    throw ConfigError("eval needs --completions, --endpoint-config or --stub");
  }
  eval::EvalReport r =
      eval::run_eval(instances, *source, solver_config(solver), {trials, workers});
  std::cout << eval::format_report(r);
  if (!report.empty()) {
    std::ofstream out(report);
    if (!out) throw ConfigError("cannot write " + report);
    out << eval::report_to_json(r) << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Worst-case path-constraint workbench"};
  app.require_subcommand(1);

  std::string program, solver;
  int n = 0;

  auto* generate = app.add_subcommand("generate", "Print the worst-case constraint of a program");
  generate->add_option("--program", program)->required();
  generate->add_option("--n", n)->required();

  auto* list = app.add_subcommand("list", "List registered programs");

  bool show_paths = false;
  int growth_from = 1;
  auto* explore = app.add_subcommand("explore", "Symbolically explore a toy program");
  explore->add_option("--program", program)->required();
  explore->add_option("--n", n)->required()->check(CLI::PositiveNumber);
  explore->add_flag("--show-paths", show_paths);
  explore->add_option("--growth-from", growth_from, "Smallest n in the path-count table")
      ->check(CLI::PositiveNumber);

  std::string lhs, rhs;
  auto* equiv_cmd = app.add_subcommand("equiv", "Check two constraints for equivalence");
  equiv_cmd->add_option("a", lhs)->required();
  equiv_cmd->add_option("b", rhs)->required();
  equiv_cmd->add_option("--solver-config", solver);

  std::string mode = "stdio", bind = "127.0.0.1:8841";
  bool strict = false;
  auto* serve = app.add_subcommand("serve", "Run the reward service");
  serve->add_option("--mode", mode)->check(CLI::IsMember({"stdio", "http"}));
  serve->add_option("--bind", bind);
  serve->add_option("--solver-config", solver);
  serve->add_flag("--strict-semantic", strict,
                  "Grant semantic credit only inside a valid template");

  std::string config, out;
  bool reference = false;
  auto* build = app.add_subcommand("build-bench", "Build a benchmark file");
  build->add_option("--config", config);
  build->add_flag("--reference-preset", reference);
  build->add_option("--out", out)->required();

  std::string in;
  bool as_json = false;
  auto* stats = app.add_subcommand("stats", "Profile a benchmark file");
  stats->add_option("--in", in)->required();
  stats->add_flag("--json", as_json);

  std::string bench_path, completions, endpoint, stub, report;
  int trials = 3;
  std::size_t workers = 4;
  auto* ev = app.add_subcommand("eval", "Evaluate completions against a benchmark");
  ev->add_option("--bench", bench_path)->required();
  auto* c_opt = ev->add_option("--completions", completions);
  auto* e_opt = ev->add_option("--endpoint-config", endpoint);
  auto* s_opt = ev->add_option("--stub", stub)->check(CLI::IsMember({"oracle", "delete-atom"}));
  c_opt->excludes(e_opt)->excludes(s_opt);
  e_opt->excludes(s_opt);
  ev->add_option("--trials", trials)->check(CLI::PositiveNumber);
  ev->add_option("--report", report);
  ev->add_option("--solver-config", solver);
  ev->add_option("--workers", workers)->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*generate) return cmd_generate(program, n);
    if (*list) return cmd_list();
    if (*explore) return cmd_explore(program, n, show_paths, growth_from);
    if (*equiv_cmd) return cmd_equiv(lhs, rhs, solver);
    if (*serve) return cmd_serve(mode, bind, solver, strict);
    if (*build) return cmd_build(config, out, reference);
    if (*stats) return cmd_stats(in, as_json);
    if (*ev) return cmd_eval(bench_path, completions, endpoint, stub, trials, report, solver, workers);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
