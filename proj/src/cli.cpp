#include "wracma/cli.hpp"

#include <CLI11.hpp>
#include <cstdio>
#include <iomanip>
#include <optional>
#include <random>

#include "wracma/bench.hpp"

namespace wracma {

namespace {

constexpr int kOk = 0;
constexpr int kInternal = 1;
constexpr int kUsage = 2;

void print_registry(std::ostream& out) {
  out << std::left << std::setw(4) << "id" << std::setw(16) << "x" << std::setw(16) << "y"
      << "f(x, y)\n";
  for (const auto& info : problem_registry()) {
    out << std::setw(4) << info.id << std::setw(16) << info.x_character << std::setw(16)
        << info.y_character << info.formula << '\n';
  }
  out << std::right;
}

struct SolveOptions {
  std::string problem;
  std::optional<double> b;
  std::string algo = "wra-cmaes";
  int m = 5;
  int n = 5;
  std::uint64_t seed = 0;
  std::int64_t budget = 5'000'000;
  double target = 1e-6;
};

int do_solve(const SolveOptions& o, std::ostream& out) {
  std::unique_ptr<BenchmarkProblem> problem;
  Algorithm algorithm{};
  try {
    algorithm = algorithm_from_string(o.algo);
    problem = make_problem(o.problem, o.m, o.n, o.b);
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  SolverConfig config;
  config.m = o.m;
  config.n = o.n;
  config.budget = o.budget;
  config.target_gap = o.target;
  if (o.budget < 0 || !(o.target >= 0.0)) throw ConfigError("budget and target must be >= 0");
  const RunRecord rec = solve(algorithm, *problem, config, o.seed);
  out << to_json(rec).dump(2) << '\n';
  return kOk;
}

int do_run(const std::string& path, int workers, std::ostream& out) {
  ExperimentConfig config = load_config(path);
  if (workers > 0) config.workers = workers;
  const ExperimentResult result = run_experiment(config);
  emit_results(config, result);
  for (const auto& s : result.summaries) {
    out << s.problem << " b=" << s.b << ' ' << s.algorithm << ": " << s.successes << '/'
        << s.trials << " succeeded";
    if (s.mean_fcalls) out << ", mean f-calls " << *s.mean_fcalls << " (sd " << *s.std_fcalls << ')';
    out << '\n';
  }
  if (config.output.csv.empty() && config.output.json.empty() && config.output.scaling.empty()) {
    out << records_csv(result.records);
  }
  return kOk;
}

struct VerifyOptions {
  int samples = 100;
  int resolution = 601;
  int max_dim = 3;
  std::uint64_t seed = 1;
};

int do_verify(const VerifyOptions& o, std::ostream& out) {
  if (o.samples < 1 || o.resolution < 2 || o.max_dim < 1 || o.max_dim > 3) {
    throw ConfigError("verify: need samples >= 1, resolution >= 2 and 1 <= max-dim <= 3");
  }
  Rng rng(o.seed);
  long failures = 0;
  for (const auto& info : problem_registry()) {
    for (int n = 1; n <= o.max_dim; ++n) {
      const auto problem = make_problem(info.id, n, n);
      int failed = 0;
      for (int s = 0; s < o.samples; ++s) {
        const Vector x = problem->design_box().sample_uniform(rng);
        if (!verify_worst_scenario(*problem, x, o.resolution).passed) ++failed;
      }
      failures += failed;
      out << info.id << " n=" << n << ": " << (o.samples - failed) << '/' << o.samples
          << " passed\n";
    }
  }
  if (failures == 0) {
    out << "all oracle checks passed\n";
  } else {
    out << failures << " oracle checks failed\n";
  }
  return failures == 0 ? kOk : kInternal;
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Black-box min-max optimization benchmarks", "wracma"};
  app.require_subcommand(1);

  auto* list = app.add_subcommand("list", "List the benchmark problems");

  SolveOptions solve_opts;
  auto* solve_cmd = app.add_subcommand("solve", "Run one solver on one problem");
  solve_cmd->add_option("--problem", solve_opts.problem, "Problem id (f1..f8)")->required();
  solve_cmd->add_option("--b", solve_opts.b, "Interaction coefficient (f5..f8)");
  solve_cmd->add_option("--algo", solve_opts.algo, "wra-cmaes or zo-pgda")
      ->check(CLI::IsMember({"wra-cmaes", "zo-pgda"}));
  solve_cmd->add_option("--m", solve_opts.m, "Design dimension");
  solve_cmd->add_option("--n", solve_opts.n, "Scenario dimension");
  solve_cmd->add_option("--seed", solve_opts.seed, "Random seed");
  solve_cmd->add_option("--budget", solve_opts.budget, "Maximum number of f-calls");
  solve_cmd->add_option("--target", solve_opts.target, "Target gap |F(x) - F(x*)|");

  std::string config_path;
  int workers = 0;
  auto* run_cmd = app.add_subcommand("run", "Run an experiment battery from a JSON config");
  run_cmd->add_option("--config", config_path, "Experiment config file")->required();
  run_cmd->add_option("--workers", workers, "Worker threads (overrides WRACMA_WORKERS)");

  VerifyOptions verify_opts;
  auto* verify_cmd = app.add_subcommand("verify", "Check the worst-case oracles against a grid");
  verify_cmd->add_option("--samples", verify_opts.samples, "Random x per problem and dimension");
  verify_cmd->add_option("--resolution", verify_opts.resolution, "Grid points per axis");
  verify_cmd->add_option("--max-dim", verify_opts.max_dim, "Largest n to check (<= 3)");
  verify_cmd->add_option("--seed", verify_opts.seed, "Random seed");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kUsage;
  }

  try {
    if (*list) {
      print_registry(out);
      return kOk;
    }
    if (*solve_cmd) return do_solve(solve_opts, out);
    if (*run_cmd) return do_run(config_path, workers, out);
    if (*verify_cmd) return do_verify(verify_opts, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kInternal;
  }
  return kInternal;
}

int cli_main(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return cli_main(args, std::cout, std::cerr);
}

}  // namespace wracma
