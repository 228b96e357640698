#pragma once

#include <atomic>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "wracma/box.hpp"
#include "wracma/budget.hpp"

namespace wracma {

/// Black-box min-max objective f(x, y) on design box X and scenario box Y.
///
/// value() is the raw formula; evaluate() is the charged path that every
/// solver goes through. Benchmark problems additionally provide analytic
/// worst-case oracles that are never charged.
class Problem {
 public:
  virtual ~Problem() = default;

  virtual std::string id() const = 0;
  virtual double interaction() const = 0;
  virtual const Box& design_box() const = 0;
  virtual const Box& scenario_box() const = 0;

  virtual double value(const Vector& x, const Vector& y) const = 0;

  /// argmax_y f(x, y) over the scenario box.
  virtual Vector worst_scenario(const Vector& x) const = 0;

  /// F(x) = max_y f(x, y), without charging the budget.
  virtual double worst_case_value(const Vector& x) const = 0;

  virtual Vector optimum() const = 0;
  virtual double optimal_value() const = 0;

  /// Upper bound on ||grad_y f(x, y)|| for y inside `region` (a sub-box of Y).
  virtual double scenario_lipschitz(const Vector& x, const Box& region) const = 0;

  int design_dim() const { return design_box().dim(); }
  int scenario_dim() const { return scenario_box().dim(); }

  /// Charged evaluation. Throws std::invalid_argument when x or y lies outside
  /// its box and BudgetExhausted when the budget is spent.
  double evaluate(const Vector& x, const Vector& y, EvalBudget& budget) const;
};

enum class ProblemKind { f1, f2, f3, f4, f5, f6, f7, f8 };

/// Static description of one benchmark function.
struct ProblemInfo {
  ProblemKind kind;
  std::string_view id;
  std::string_view formula;
  std::string_view x_character;
  std::string_view y_character;
  bool takes_interaction;  // b is a free parameter
};

const std::vector<ProblemInfo>& problem_registry();
const ProblemInfo& problem_info(std::string_view id);  // throws std::out_of_range

/// One of the eight benchmark functions on X = [-3, 3]^m, Y = [-3, 3]^n.
class BenchmarkProblem final : public Problem {
 public:
  BenchmarkProblem(ProblemKind kind, int m, int n, std::optional<double> b = std::nullopt);

  std::string id() const override;
  double interaction() const override { return b_; }
  const Box& design_box() const override { return design_; }
  const Box& scenario_box() const override { return scenario_; }
  ProblemKind kind() const { return kind_; }

  double value(const Vector& x, const Vector& y) const override { return formula(x, y); }
  Vector worst_scenario(const Vector& x) const override;
  double worst_case_value(const Vector& x) const override;
  Vector optimum() const override;
  double optimal_value() const override;
  double scenario_lipschitz(const Vector& x, const Box& region) const override;

 private:
  double formula(const Vector& x, const Vector& y) const;

  ProblemKind kind_;
  double b_;
  Box design_;
  Box scenario_;
};

/// Looks up id ("f1".."f8") in the registry. b may only be given for f5-f8.
std::unique_ptr<BenchmarkProblem> make_problem(std::string_view id, int m, int n,
                                               std::optional<double> b = std::nullopt);

/// Forwards to another problem and tallies raw value() calls independently of
/// any EvalBudget. Oracle queries are forwarded without being counted.
class CountingProblem final : public Problem {
 public:
  explicit CountingProblem(const Problem& inner) : inner_(inner) {}

  std::string id() const override { return inner_.id(); }
  double interaction() const override { return inner_.interaction(); }
  const Box& design_box() const override { return inner_.design_box(); }
  const Box& scenario_box() const override { return inner_.scenario_box(); }
  double value(const Vector& x, const Vector& y) const override {
    calls_.fetch_add(1, std::memory_order_relaxed);
    return inner_.value(x, y);
  }
  Vector worst_scenario(const Vector& x) const override { return inner_.worst_scenario(x); }
  double worst_case_value(const Vector& x) const override { return inner_.worst_case_value(x); }
  Vector optimum() const override { return inner_.optimum(); }
  double optimal_value() const override { return inner_.optimal_value(); }
  double scenario_lipschitz(const Vector& x, const Box& region) const override {
    return inner_.scenario_lipschitz(x, region);
  }

  std::int64_t calls() const { return calls_.load(); }

 private:
  const Problem& inner_;
  mutable std::atomic<std::int64_t> calls_{0};
};

/// Result of a brute-force grid maximization of f(x, .) over Y.
struct GridCheck {
  double grid_max = 0.0;
  Vector grid_argmax;
  double claimed = 0.0;        // F(x) from the analytic oracle
  double resolution_slack = 0.0;  // Lipschitz * half grid diagonal
  bool scenario_in_box = false;
  bool passed = false;
  std::int64_t evaluations = 0;
};

/// Exact maximum of f(x, .) over the r-per-axis grid on Y, computed by
/// Lipschitz branch-and-bound (grid points are only skipped when the bound
/// proves they cannot beat the incumbent).
double grid_maximum(const Problem& problem, const Vector& x, int resolution, Vector* argmax = nullptr,
                    std::int64_t* evaluations = nullptr);

/// Checks the analytic worst-case oracle against the grid: the claimed
/// scenario must lie in Y, its value must dominate every grid point up to
/// rounding, and it may exceed the grid maximum by at most the resolution
/// slack.
GridCheck verify_worst_scenario(const Problem& problem, const Vector& x, int resolution);

}  // namespace wracma
