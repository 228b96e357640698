#include "wracma/wra.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace wracma {

void WraParams::validate() const {
  if (!(tau_threshold > 0.0 && tau_threshold <= 1.0)) {
    throw std::invalid_argument("WraParams: tau_threshold must lie in (0, 1]");
  }
  if (c_max < 1) throw std::invalid_argument("WraParams: c_max must be >= 1");
  if (!(v_min >= 0.0)) throw std::invalid_argument("WraParams: v_min must be >= 0");
  if (t_min < 0) throw std::invalid_argument("WraParams: t_min must be >= 0");
  if (max_rounds < 1) throw std::invalid_argument("WraParams: max_rounds must be >= 1");
}

namespace {

Matrix initial_covariance(const Box& box) {
  const Vector quarter = box.width() / 4.0;
  return quarter.cwiseProduct(quarter).asDiagonal();
}

Vector sample_gaussian(const Vector& mean, const Matrix& covariance, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector z(mean.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = normal(rng);
  Eigen::LLT<Matrix> llt(covariance);
  if (llt.info() != Eigen::Success) {
    throw CovarianceError("scenario archive: covariance is not positive definite");
  }
  return mean + llt.matrixL() * z;
}

double checked(double v) {
  if (!std::isfinite(v)) throw NonFiniteValue("objective returned a non-finite value");
  return v;
}

}  // namespace

WraState::WraState(Box scenario_box, int count, WraParams params, std::uint64_t seed)
    : box_(std::move(scenario_box)), params_(params), rng_(seed) {
  params_.validate();
  if (count < 1) throw std::invalid_argument("WraState: need at least one instance");
  archive_.resize(count);
  for (int k = 0; k < count; ++k) reset(k);
}

void WraState::reset(int k) {
  ArchivedSearch& inst = archive_.at(k);
  inst.mean = box_.sample_uniform(rng_);
  inst.covariance = initial_covariance(box_);
  inst.scenario = mirror(sample_gaussian(inst.mean, inst.covariance, rng_), box_);
}

std::vector<ScenarioSearch> warm_start(const WraState& state, std::span<const Vector> candidates,
                                       const Problem& problem, EvalBudget& budget) {
  const auto& archive = state.archive();
  std::vector<ScenarioSearch> searches;
  searches.reserve(candidates.size());
  std::int64_t pairs = 0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    int worst = -1;
    double worst_value = 0.0;
    for (int k = 0; k < static_cast<int>(archive.size()); ++k) {
      double v = 0.0;
      try {
        v = checked(problem.evaluate(candidates[i], archive[k].scenario, budget));
      } catch (const BudgetExhausted&) {
        throw WarmStartTruncated(pairs);
      }
      ++pairs;
      if (worst < 0 || v > worst_value) {
        worst = k;
        worst_value = v;
      }
    }
    const ArchivedSearch& src = archive[worst];
    searches.push_back(ScenarioSearch{
        Cmaes(src.mean, src.covariance, "scenario-search-" + std::to_string(i),
              state.params().inner_pop_size),
        src.scenario, worst_value, 0, false, worst});
  }
  return searches;
}

AdvanceResult advance_instance(const Vector& x, ScenarioSearch& search, const Problem& problem,
                               const Box& scenario_box, const WraParams& params, Rng& rng,
                               EvalBudget& budget) {
  AdvanceResult result;
  const auto update_contracted = [&] {
    if (search.iterations >= params.t_min &&
        search.es.coordinate_std().maxCoeff() < params.v_min) {
      search.contracted = true;
    }
  };
  const auto done = [&] {
    const bool enough = result.improvements >= params.c_max;
    switch (params.stop_rule) {
      case RoundStopRule::min_iterations_then_either:
        return search.iterations >= params.t_min && (enough || search.contracted);
      case RoundStopRule::either_condition:
        return enough || search.contracted;
      case RoundStopRule::both_conditions:
        return enough && search.contracted;
    }
    return true;
  };

  std::vector<double> values;
  update_contracted();
  while (!done()) {
    const auto& ys = search.es.ask(scenario_box, rng);
    values.assign(ys.size(), 0.0);
    try {
      for (std::size_t k = 0; k < ys.size(); ++k) {
        values[k] = checked(problem.evaluate(x, ys[k], budget));
      }
    } catch (const BudgetExhausted&) {
      result.budget_exhausted = true;
      return result;
    }
    const auto best = std::max_element(values.begin(), values.end()) - values.begin();
    const Vector best_y = ys[best];

    std::vector<double> negated(values.size());
    std::transform(values.begin(), values.end(), negated.begin(), [](double v) { return -v; });
    search.es.tell(ranking_of(negated), scenario_box);
    ++search.iterations;
    ++result.iterations;

    if (values[best] > search.estimate) {
      search.estimate = values[best];
      search.worst = best_y;
      ++result.improvements;
    }
    update_contracted();
  }
  return result;
}

WraOutcome approximate_ranking(WraState& state, std::vector<ScenarioSearch>& searches,
                               std::span<const Vector> candidates, const Problem& problem,
                               EvalBudget& budget) {
  const WraParams& params = state.params();
  const std::size_t count = searches.size();
  WraOutcome out;

  std::vector<double> previous(count);
  for (std::size_t i = 0; i < count; ++i) previous[i] = searches[i].estimate;
  out.round_estimates.push_back(previous);

  std::vector<double> current(count);
  while (true) {
    ++out.rounds;
    for (std::size_t i = 0; i < count && !out.truncated; ++i) {
      const auto r = advance_instance(candidates[i], searches[i], problem, state.scenario_box(),
                                      params, state.rng(), budget);
      out.truncated = r.budget_exhausted;
    }
    for (std::size_t i = 0; i < count; ++i) current[i] = searches[i].estimate;
    out.round_estimates.push_back(current);
    if (out.truncated) break;

    if (count < 2) {
      out.tau = 1.0;
    } else {
      try {
        out.tau = kendall_tau(previous, current);
      } catch (const UndefinedCorrelation& e) {
        // all comparisons vacuously stable only when both sides are fully tied
        out.tau = e.both_constant() ? 1.0 : 0.0;
        ++out.undefined_tau_rounds;
      }
    }
    previous = current;
    if (count < 2 || out.tau > params.tau_threshold || out.rounds >= params.max_rounds) break;
  }

  out.estimates = current;
  out.ranking = ranking_of(current);
  out.worst_scenarios.reserve(count);
  for (const auto& s : searches) out.worst_scenarios.push_back(s.worst);
  return out;
}

void post_process(WraState& state, const std::vector<ScenarioSearch>& searches) {
  auto& archive = state.archive();
  if (searches.size() != archive.size()) {
    throw std::invalid_argument("post_process: search count does not match the archive");
  }
  const double v_min = state.params().v_min;
  for (std::size_t i = 0; i < searches.size(); ++i) {
    ArchivedSearch& inst = archive[i];
    inst.mean = searches[i].es.mean();
    inst.scenario = searches[i].worst;
    Matrix cov = searches[i].es.covariance();
    const Vector stds = cov.diagonal().cwiseSqrt();
    const Vector inflate = (v_min / stds.array()).max(1.0).matrix();
    inst.covariance = inflate.asDiagonal() * cov * inflate.asDiagonal();
  }
  const double min_dist = v_min * std::sqrt(static_cast<double>(state.scenario_box().dim()));
  for (int i = 0; i < state.size(); ++i) {
    for (int k = i + 1; k < state.size(); ++k) {
      if ((archive[i].scenario - archive[k].scenario).norm() < min_dist) state.reset(k);
    }
  }
}

WraOutcome rank_candidates(WraState& state, std::span<const Vector> candidates,
                           const Problem& problem, EvalBudget& budget) {
  if (static_cast<int>(candidates.size()) != state.size()) {
    throw std::invalid_argument("rank_candidates: candidate count must equal the archive size");
  }
  const std::int64_t before = budget.used();
  auto searches = warm_start(state, candidates, problem, budget);
  const std::int64_t warm = budget.used() - before;
  WraOutcome out = approximate_ranking(state, searches, candidates, problem, budget);
  out.warm_start_fcalls = warm;
  out.fcalls_used = budget.used() - before;
  post_process(state, searches);
  return out;
}

}  // namespace wracma
