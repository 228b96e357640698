#include "wracma/solvers.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace wracma {

std::string_view to_string(Verdict v) {
  switch (v) {
    case Verdict::success:
      return "success";
    case Verdict::budget_exhausted:
      return "budget_exhausted";
    case Verdict::aborted:
      return "aborted";
  }
  return "aborted";
}

Verdict verdict_from_string(std::string_view s) {
  if (s == "success") return Verdict::success;
  if (s == "budget_exhausted") return Verdict::budget_exhausted;
  if (s == "aborted") return Verdict::aborted;
  throw std::invalid_argument("unknown verdict '" + std::string(s) + "'");
}

std::string_view to_string(Algorithm a) {
  return a == Algorithm::wra_cmaes ? "wra-cmaes" : "zo-pgda";
}

Algorithm algorithm_from_string(std::string_view s) {
  if (s == "wra-cmaes") return Algorithm::wra_cmaes;
  if (s == "zo-pgda") return Algorithm::zo_pgda;
  throw std::invalid_argument("unknown algorithm '" + std::string(s) + "'");
}

void ZoPgdaParams::validate() const {
  if (!(eta_x > 0.0) || !(eta_y > 0.0)) {
    throw std::invalid_argument("ZoPgdaParams: learning rates must be positive");
  }
  if (directions < 1) throw std::invalid_argument("ZoPgdaParams: directions must be >= 1");
  if (!(smoothing > 0.0)) throw std::invalid_argument("ZoPgdaParams: smoothing must be positive");
}

SuccessCheck success_check(const Vector& x, const Problem& problem, double target_gap) {
  const double gap = std::abs(problem.worst_case_value(x) - problem.optimal_value());
  return {gap, gap <= target_gap};
}

std::string hyperparameters_hash(const SolverConfig& c, Algorithm algorithm) {
  std::ostringstream os;
  os.precision(17);
  os << to_string(algorithm) << '|' << c.budget << '|' << c.target_gap << '|' << c.use_oracle;
  if (algorithm == Algorithm::wra_cmaes) {
    os << '|' << c.outer_pop_size << '|' << c.wra.tau_threshold << '|' << c.wra.c_max << '|'
       << c.wra.v_min << '|' << c.wra.t_min << '|' << c.wra.max_rounds << '|'
       << c.wra.inner_pop_size << '|' << static_cast<int>(c.wra.stop_rule);
  } else {
    os << '|' << c.zo.eta_x << '|' << c.zo.eta_y << '|' << c.zo.directions << '|'
       << c.zo.smoothing;
  }
  // FNV-1a, 64 bit
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : os.str()) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

HistoryRecorder::HistoryRecorder(std::int64_t budget, int max_points)
    : best_gap_(std::numeric_limits<double>::infinity()) {
  const int interior = std::max(max_points - 2, 1);
  const double top = std::log(static_cast<double>(std::max<std::int64_t>(budget, 2)));
  for (int k = 0; k < interior; ++k) {
    checkpoints_.push_back(std::exp(top * (k + 1) / interior));
  }
}

void HistoryRecorder::record(std::int64_t fcalls, double gap) {
  best_gap_ = std::min(best_gap_, gap);
  last_ = {fcalls, gap, best_gap_};
  have_last_ = true;
  bool keep = points_.empty();
  while (next_ < checkpoints_.size() && static_cast<double>(fcalls) >= checkpoints_[next_]) {
    keep = true;
    ++next_;
  }
  if (keep && (points_.empty() || fcalls > points_.back().fcalls)) points_.push_back(last_);
}

std::vector<HistoryPoint> HistoryRecorder::finish() {
  if (have_last_ && (points_.empty() || last_.fcalls > points_.back().fcalls)) {
    points_.push_back(last_);
  }
  return std::move(points_);
}

namespace {

void check_dimensions(const Problem& problem, const SolverConfig& config) {
  if ((config.m != 0 && config.m != problem.design_dim()) ||
      (config.n != 0 && config.n != problem.scenario_dim())) {
    throw std::invalid_argument("solver: configured dimensions do not match problem " +
                                problem.id());
  }
  if (config.budget < 0) throw std::invalid_argument("solver: budget must be non-negative");
}

RunRecord start_record(const Problem& problem, const SolverConfig& config, Algorithm algorithm,
                       std::uint64_t seed) {
  RunRecord rec;
  rec.problem = problem.id();
  rec.b = problem.interaction();
  rec.algorithm = std::string(to_string(algorithm));
  rec.seed = seed;
  rec.hyperparameters_hash = hyperparameters_hash(config, algorithm);
  return rec;
}

Matrix initial_covariance(const Box& box) {
  const Vector quarter = box.width() / 4.0;
  return quarter.cwiseProduct(quarter).asDiagonal();
}

Vector random_unit_vector(int dim, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector u(dim);
  double norm = 0.0;
  do {
    for (int i = 0; i < dim; ++i) u[i] = normal(rng);
    norm = u.norm();
  } while (norm == 0.0);
  return u / norm;
}

double finite(double v) {
  if (!std::isfinite(v)) throw NonFiniteValue("objective returned a non-finite value");
  return v;
}

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

}  // namespace

RunRecord solve_wra_cmaes(const Problem& problem, const SolverConfig& config, std::uint64_t seed) {
  check_dimensions(problem, config);
  config.wra.validate();
  const auto started = Clock::now();
  RunRecord rec = start_record(problem, config, Algorithm::wra_cmaes, seed);

  const Box& X = problem.design_box();
  const Box& Y = problem.scenario_box();
  Rng rng(seed);
  Cmaes outer(X.sample_uniform(rng), initial_covariance(X), "outer", config.outer_pop_size);
  WraState wra(Y, outer.pop_size(), config.wra, rng());
  EvalBudget budget(config.budget);
  HistoryRecorder history(config.budget, config.max_history_points);

  Vector solution = mirror(outer.mean(), X);
  SuccessCheck check = success_check(solution, problem, config.target_gap);
  rec.initial_gap = check.gap;
  history.record(0, check.gap);
  rec.verdict = Verdict::budget_exhausted;

  try {
    while (!(config.use_oracle && check.success) && !budget.exhausted()) {
      const std::vector<Vector> candidates = outer.ask(X, rng);
      WraOutcome outcome;
      try {
        outcome = rank_candidates(wra, candidates, problem, budget);
      } catch (const WarmStartTruncated&) {
        break;
      }
      if (outcome.truncated) break;
      outer.tell(outcome.ranking, X);
      ++rec.iterations;

      solution = mirror(outer.mean(), X);
      check = success_check(solution, problem, config.target_gap);
      history.record(budget.used(), check.gap);
      if (config.observer) {
        config.observer({rec.iterations, budget.used(), check.gap, &solution, &outer, &outcome});
      }
    }
    if (config.use_oracle && check.success) rec.verdict = Verdict::success;
  } catch (const NonFiniteValue& e) {
    rec.verdict = Verdict::aborted;
    rec.message = e.what();
  } catch (const CovarianceError& e) {
    rec.verdict = Verdict::aborted;
    rec.message = e.what();
  }

  rec.fcalls = budget.used();
  rec.final_gap = check.gap;
  rec.history = history.finish();
  rec.wall_ms = elapsed_ms(started);
  return rec;
}

RunRecord solve_zopgda(const Problem& problem, const SolverConfig& config, std::uint64_t seed) {
  check_dimensions(problem, config);
  config.zo.validate();
  const auto started = Clock::now();
  RunRecord rec = start_record(problem, config, Algorithm::zo_pgda, seed);

  const Box& X = problem.design_box();
  const Box& Y = problem.scenario_box();
  const auto& p = config.zo;
  Rng rng(seed);
  Vector x = X.sample_uniform(rng);
  Vector y = Y.sample_uniform(rng);
  EvalBudget budget(config.budget);
  HistoryRecorder history(config.budget, config.max_history_points);

  SuccessCheck check = success_check(x, problem, config.target_gap);
  rec.initial_gap = check.gap;
  history.record(0, check.gap);
  rec.verdict = Verdict::budget_exhausted;

  // (dim / (q mu)) sum_j [f(z + mu u_j) - f(z)] u_j, perturbed points clamped into the box
  const auto estimate = [&](const Vector& z, const Box& box, auto&& f_at) {
    Vector g = Vector::Zero(z.size());
    for (int j = 0; j < p.directions; ++j) {
      const Vector u = random_unit_vector(static_cast<int>(z.size()), rng);
      const double shifted = finite(f_at(project(z + p.smoothing * u, box)));
      const double base = finite(f_at(z));
      g += (shifted - base) * u;
    }
    return Vector(g * (static_cast<double>(z.size()) / (p.directions * p.smoothing)));
  };

  try {
    while (!(config.use_oracle && check.success) && !budget.exhausted()) {
      Vector grad_x, grad_y;
      try {
        grad_x = estimate(x, X, [&](const Vector& v) { return problem.evaluate(v, y, budget); });
        grad_y = estimate(y, Y, [&](const Vector& v) { return problem.evaluate(x, v, budget); });
      } catch (const BudgetExhausted&) {
        break;
      }
      x = project(x - p.eta_x * grad_x, X);
      y = project(y + p.eta_y * grad_y, Y);
      ++rec.iterations;

      check = success_check(x, problem, config.target_gap);
      history.record(budget.used(), check.gap);
      if (config.observer) {
        config.observer({rec.iterations, budget.used(), check.gap, &x, nullptr, nullptr});
      }
    }
    if (config.use_oracle && check.success) rec.verdict = Verdict::success;
  } catch (const NonFiniteValue& e) {
    rec.verdict = Verdict::aborted;
    rec.message = e.what();
  }

  rec.fcalls = budget.used();
  rec.final_gap = check.gap;
  rec.history = history.finish();
  rec.wall_ms = elapsed_ms(started);
  return rec;
}

RunRecord solve(Algorithm algorithm, const Problem& problem, const SolverConfig& config,
                std::uint64_t seed) {
  return algorithm == Algorithm::wra_cmaes ? solve_wra_cmaes(problem, config, seed)
                                           : solve_zopgda(problem, config, seed);
}

}  // namespace wracma
