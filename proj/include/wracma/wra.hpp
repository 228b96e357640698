#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "wracma/box.hpp"
#include "wracma/budget.hpp"
#include "wracma/cmaes.hpp"
#include "wracma/problems.hpp"
#include "wracma/rankstats.hpp"

namespace wracma {

/// When an inner scenario search ends its round. t counts the iterations of
/// the instance within the current ranking call.
enum class RoundStopRule {
  /// Stop once t >= t_min and either c_max strict improvements were seen in
  /// this round or the search has contracted below v_min in every coordinate.
  min_iterations_then_either,
  /// Stop on c_max improvements, or on contraction once t >= t_min.
  either_condition,
  /// Keep iterating while fewer than c_max improvements were seen or the
  /// search has not yet contracted. Only the budget bounds it.
  both_conditions,
};

struct WraParams {
  double tau_threshold = 0.7;
  int c_max = 2;
  double v_min = 1e-4;
  int t_min = 10;
  int max_rounds = 100;
  int inner_pop_size = 0;  // 0 selects the CMA-ES default for dim(Y)
  RoundStopRule stop_rule = RoundStopRule::min_iterations_then_either;

  void validate() const;  // throws std::invalid_argument
};

/// Distribution parameters and last worst scenario kept by one archived
/// scenario-search instance between calls.
struct ArchivedSearch {
  Vector mean;
  Matrix covariance;
  Vector scenario;
};

/// The archive of scenario searches carried from one outer iteration to the
/// next, plus the random stream used for resets and inner sampling.
class WraState {
 public:
  /// `count` freshly initialized instances: mean ~ U(Y),
  /// covariance = diag((width / 4)^2), scenario ~ N(mean, covariance)
  /// mirrored into Y.
  WraState(Box scenario_box, int count, WraParams params, std::uint64_t seed);

  const Box& scenario_box() const { return box_; }
  const WraParams& params() const { return params_; }
  int size() const { return static_cast<int>(archive_.size()); }

  const std::vector<ArchivedSearch>& archive() const { return archive_; }
  std::vector<ArchivedSearch>& archive() { return archive_; }

  Rng& rng() { return rng_; }

  /// Re-draws instance k from the initial distribution.
  void reset(int k);

 private:
  Box box_;
  WraParams params_;
  Rng rng_;
  std::vector<ArchivedSearch> archive_;
};

/// Per-candidate inner maximizer for one call.
struct ScenarioSearch {
  Cmaes es;
  Vector worst;        // best scenario found for the candidate so far
  double estimate;     // f(x_i, worst), the running estimate of F(x_i)
  long iterations = 0; // inner iterations within the current call
  bool contracted = false;
  int source = -1;     // archive index it was cloned from
};

/// Raised when the budget runs out before all warm-start pairs are evaluated.
class WarmStartTruncated : public BudgetExhausted {
 public:
  explicit WarmStartTruncated(std::int64_t pairs) : evaluated_pairs(pairs) {}
  std::int64_t evaluated_pairs;
};

/// Raised when f returns NaN or infinity.
class NonFiniteValue : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Evaluates f(x_i, y_k) for every candidate and archived scenario (lambda^2
/// charged calls) and clones, for each candidate, the archived search whose
/// scenario is worst for it. Adaptation state other than mean and covariance
/// starts fresh.
std::vector<ScenarioSearch> warm_start(const WraState& state, std::span<const Vector> candidates,
                                       const Problem& problem, EvalBudget& budget);

struct AdvanceResult {
  int improvements = 0;
  int iterations = 0;
  bool budget_exhausted = false;
};

/// Runs one round of inner maximization for candidate x.
AdvanceResult advance_instance(const Vector& x, ScenarioSearch& search, const Problem& problem,
                               const Box& scenario_box, const WraParams& params, Rng& rng,
                               EvalBudget& budget);

struct WraOutcome {
  RankVector ranking;  // rank 1 = smallest estimated F
  std::vector<double> estimates;
  std::vector<Vector> worst_scenarios;
  std::int64_t fcalls_used = 0;
  std::int64_t warm_start_fcalls = 0;
  int rounds = 0;
  double tau = -1.0;
  int undefined_tau_rounds = 0;  // rounds where a constant estimate vector made tau undefined
  bool truncated = false;        // budget ran out; ranking is best effort
  std::vector<std::vector<double>> round_estimates;  // F^0, F^1, ..., F^j
};

/// Repeats rounds until Kendall's tau between consecutive estimate vectors
/// exceeds the threshold, max_rounds is reached or the budget runs out.
WraOutcome approximate_ranking(WraState& state, std::vector<ScenarioSearch>& searches,
                               std::span<const Vector> candidates, const Problem& problem,
                               EvalBudget& budget);

/// Stores the searches back into the archive, inflates every coordinate-wise
/// standard deviation to at least v_min and resets later instances whose
/// scenario lies within v_min * sqrt(n) of an earlier one.
void post_process(WraState& state, const std::vector<ScenarioSearch>& searches);

/// warm_start + approximate_ranking + post_process.
WraOutcome rank_candidates(WraState& state, std::span<const Vector> candidates,
                           const Problem& problem, EvalBudget& budget);

}  // namespace wracma
