#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "wracma/problems.hpp"
#include "wracma/wra.hpp"

namespace wracma {

enum class Verdict { success, budget_exhausted, aborted };

std::string_view to_string(Verdict v);
Verdict verdict_from_string(std::string_view s);  // throws std::invalid_argument

enum class Algorithm { wra_cmaes, zo_pgda };

std::string_view to_string(Algorithm a);
Algorithm algorithm_from_string(std::string_view s);  // "wra-cmaes" | "zo-pgda"

struct ZoPgdaParams {
  double eta_x = 0.02;
  double eta_y = 0.05;
  int directions = 5;           // q
  double smoothing = 1e-3;      // mu

  void validate() const;
};

/// One point of a gap-versus-f-calls curve.
struct HistoryPoint {
  std::int64_t fcalls = 0;
  double gap = 0.0;       // |F(x_t) - F(x*)| of the current solution
  double best_gap = 0.0;  // best gap seen so far
};

/// Per-iteration information handed to SolverConfig::observer.
struct IterationInfo {
  std::int64_t iteration = 0;
  std::int64_t fcalls = 0;
  double gap = 0.0;
  const Vector* solution = nullptr;
  const Cmaes* outer = nullptr;       // WRA-CMA-ES only
  const WraOutcome* ranking = nullptr;  // WRA-CMA-ES only
};

struct SolverConfig {
  int m = 0;  // 0 = take from the problem; otherwise must match
  int n = 0;
  std::int64_t budget = 5'000'000;
  double target_gap = 1e-6;
  /// When false the analytic oracle never terminates the run; the search
  /// trajectory is the same either way.
  bool use_oracle = true;
  int outer_pop_size = 0;  // 0 = CMA-ES default for m
  WraParams wra;
  ZoPgdaParams zo;
  int max_history_points = 200;
  std::function<void(const IterationInfo&)> observer;
};

/// Trace of one solver run.
struct RunRecord {
  std::string problem;
  double b = 1.0;
  std::string algorithm;
  std::uint64_t seed = 0;
  Verdict verdict = Verdict::aborted;
  std::int64_t fcalls = 0;  // at success, else at termination
  double final_gap = 0.0;
  double initial_gap = 0.0;
  double wall_ms = 0.0;
  std::int64_t iterations = 0;
  std::string hyperparameters_hash;
  std::string message;  // diagnostics for aborted runs
  std::vector<HistoryPoint> history;  // log-spaced in f-calls
};

struct SuccessCheck {
  double gap = 0.0;
  bool success = false;
};

/// |F(x) - F(x*)| against the target (inclusive). Never charges a budget.
SuccessCheck success_check(const Vector& x, const Problem& problem, double target_gap);

/// Stable hex digest of the hyperparameters that influence a run.
std::string hyperparameters_hash(const SolverConfig& config, Algorithm algorithm);

/// Minimizes F(x) = max_y f(x, y) by CMA-ES on candidate rankings supplied by
/// the worst-case ranking approximation.
RunRecord solve_wra_cmaes(const Problem& problem, const SolverConfig& config, std::uint64_t seed);

/// Zeroth-order projected gradient descent-ascent with simultaneous x / y
/// updates from random-direction finite differences.
RunRecord solve_zopgda(const Problem& problem, const SolverConfig& config, std::uint64_t seed);

RunRecord solve(Algorithm algorithm, const Problem& problem, const SolverConfig& config,
                std::uint64_t seed);

/// Keeps the first sample past each of a fixed set of log-spaced f-call
/// checkpoints, plus the first and the last sample.
class HistoryRecorder {
 public:
  HistoryRecorder(std::int64_t budget, int max_points);

  void record(std::int64_t fcalls, double gap);
  /// Appends the final sample if it was not kept already.
  std::vector<HistoryPoint> finish();

  double best_gap() const { return best_gap_; }

 private:
  std::vector<double> checkpoints_;
  std::size_t next_ = 0;
  double best_gap_;
  std::vector<HistoryPoint> points_;
  HistoryPoint last_;
  bool have_last_ = false;
};

}  // namespace wracma
