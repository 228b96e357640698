#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "wracma/solvers.hpp"

namespace wracma {

/// Invalid or unreadable experiment configuration (CLI exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Result files could not be written.
class OutputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ProblemEntry {
  std::string id;
  std::vector<double> b;  // empty: the problem's fixed coefficient
};

struct OutputPaths {
  std::string csv;
  std::string json;
  std::string scaling;
};

struct ExperimentConfig {
  std::vector<ProblemEntry> problems;
  int m = 5;
  int n = 5;
  std::vector<Algorithm> algorithms{Algorithm::wra_cmaes};
  int trials = 20;
  std::int64_t budget = 5'000'000;
  double target_gap = 1e-6;
  std::uint64_t seed_base = 0;
  OutputPaths output;
  int outer_pop_size = 0;
  WraParams wra;
  ZoPgdaParams zo;
  /// Wall time is the only non-reproducible field; when false it is written as 0.
  bool record_wall_time = true;
  int workers = 0;  // 0: WRACMA_WORKERS or the hardware concurrency

  void validate() const;  // throws ConfigError
  SolverConfig solver_config() const;
};

ExperimentConfig config_from_json(const nlohmann::json& j);  // throws ConfigError
nlohmann::json to_json(const ExperimentConfig& c);
ExperimentConfig load_config(const std::string& path);  // throws ConfigError

/// One cell of the battery: (problem, b, algorithm, trial).
struct Cell {
  std::string problem;
  std::optional<double> b;
  Algorithm algorithm;
  int trial;
  std::uint64_t seed;
};

std::uint64_t cell_seed(std::uint64_t seed_base, const std::string& problem, double b,
                        Algorithm algorithm, int trial);

std::vector<Cell> expand_cells(const ExperimentConfig& config);

struct CurvePoint {
  std::int64_t fcalls = 0;
  double median = 0.0;
  double q25 = 0.0;
  double q75 = 0.0;
  friend bool operator==(const CurvePoint&, const CurvePoint&) = default;
};

/// Aggregate over the trials of one (problem, b, algorithm).
struct CellSummary {
  std::string problem;
  double b = 1.0;
  std::string algorithm;
  int trials = 0;
  int successes = 0;
  double success_rate = 0.0;
  std::optional<double> mean_fcalls;  // over successful trials
  std::optional<double> std_fcalls;
  std::vector<CurvePoint> curve;  // gap quantiles on a log-spaced f-call grid
  friend bool operator==(const CellSummary&, const CellSummary&) = default;
};

nlohmann::json to_json(const CellSummary& s);
CellSummary summary_from_json(const nlohmann::json& j);

struct ExperimentResult {
  std::vector<RunRecord> records;  // in cell order
  std::vector<CellSummary> summaries;
};

/// Number of worker threads: explicit setting, else WRACMA_WORKERS, else
/// the hardware concurrency.
int worker_count(int requested);

/// Runs every cell. A cell that throws is recorded as aborted.
ExperimentResult run_experiment(const ExperimentConfig& config);

RunRecord run_cell(const ExperimentConfig& config, const Cell& cell);

std::vector<CellSummary> summarize(const std::vector<RunRecord>& records, std::int64_t budget);

/// Sample mean and standard deviation (n - 1 denominator; 0 for one sample).
std::pair<double, double> mean_and_std(const std::vector<double>& values);

/// Linear-interpolation quantile of unsorted values, q in [0, 1].
double quantile(std::vector<double> values, double q);

inline constexpr const char* kCsvHeader = "problem,b,algorithm,seed,verdict,fcalls,final_gap,wall_ms";

std::string records_csv(const std::vector<RunRecord>& records);
std::string scaling_csv(const std::vector<CellSummary>& summaries);
nlohmann::json results_json(const ExperimentConfig& config, const ExperimentResult& result);
nlohmann::json to_json(const RunRecord& r);

/// Writes whichever of csv / json / scaling paths are set. Throws OutputError.
void emit_results(const ExperimentConfig& config, const ExperimentResult& result);

/// Least-squares residual of fitting y ~ a + c * g(x) for feature values g.
double linear_fit_residual(const std::vector<double>& feature, const std::vector<double>& y);

}  // namespace wracma
