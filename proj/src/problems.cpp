#include "wracma/problems.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace wracma {

namespace {

constexpr double kBound = 3.0;

double sign(double v) { return static_cast<double>((v > 0.0) - (v < 0.0)); }

// Largest |y_i| per coordinate over a box, as a vector norm.
double max_abs_norm(const Box& region) {
  return region.lower().cwiseAbs().cwiseMax(region.upper().cwiseAbs()).norm();
}

}  // namespace

double Problem::evaluate(const Vector& x, const Vector& y, EvalBudget& budget) const {
  if (!design_box().contains(x)) {
    throw std::invalid_argument(id() + ": design vector outside X");
  }
  if (!scenario_box().contains(y)) {
    throw std::invalid_argument(id() + ": scenario vector outside Y");
  }
  budget.charge();
  return value(x, y);
}

const std::vector<ProblemInfo>& problem_registry() {
  static const std::vector<ProblemInfo> registry = {
      {ProblemKind::f1, "f1", "x^T y", "linear", "linear", false},
      {ProblemKind::f2, "f2", "1/2 |x|_2^2 + x^T y", "sm st-cv", "linear", false},
      {ProblemKind::f3, "f3", "1/2 |x+1|_2^2 + 1/10 x^T y", "sm st-cv", "linear", false},
      {ProblemKind::f4, "f4", "1/2 |x|_2^2 + x^T y + 1/2 |y|_2^2", "sm st-cv", "sm st-cv", false},
      {ProblemKind::f5, "f5", "1/2 |x|_2^2 + b x^T y - 1/2 |y|_2^2", "sm st-cv", "sm st-cc", true},
      {ProblemKind::f6, "f6", "1/2 |x|_2^2 + |x|_1 + b x^T y - |y|_1 - 1/2 |y|_2^2",
       "non-sm st-cv", "non-sm st-cc", true},
      {ProblemKind::f7, "f7", "1/4 |x|_2^4 + b x^T y - 1/4 |y|_2^4", "cv", "cc", true},
      {ProblemKind::f8, "f8", "|x|_1 + b x^T y - |y|_1", "non-sm cv", "non-sm cc", true},
  };
  return registry;
}

const ProblemInfo& problem_info(std::string_view id) {
  for (const auto& info : problem_registry()) {
    if (info.id == id) return info;
  }
  throw std::out_of_range("unknown problem id '" + std::string(id) + "'");
}

std::unique_ptr<BenchmarkProblem> make_problem(std::string_view id, int m, int n,
                                               std::optional<double> b) {
  return std::make_unique<BenchmarkProblem>(problem_info(id).kind, m, n, b);
}

BenchmarkProblem::BenchmarkProblem(ProblemKind kind, int m, int n, std::optional<double> b)
    : kind_(kind),
      b_(1.0),
      design_(Box::cube(std::max(m, 1), -kBound, kBound)),
      scenario_(Box::cube(std::max(n, 1), -kBound, kBound)) {
  const auto& info = problem_registry()[static_cast<std::size_t>(kind)];
  if (m < 1 || n < 1) throw std::invalid_argument(std::string(info.id) + ": m and n must be >= 1");
  if (m != n) {
    throw std::invalid_argument(std::string(info.id) + ": x^T y requires m == n");
  }
  if (b.has_value()) {
    if (!info.takes_interaction) {
      throw std::invalid_argument(std::string(info.id) + " has a fixed interaction coefficient");
    }
    if (!(*b > 0.0) || !std::isfinite(*b)) {
      throw std::invalid_argument(std::string(info.id) + ": b must be positive");
    }
    b_ = *b;
  }
  if (kind_ == ProblemKind::f3) b_ = 0.1;
}

std::string BenchmarkProblem::id() const {
  return std::string(problem_registry()[static_cast<std::size_t>(kind_)].id);
}

double BenchmarkProblem::formula(const Vector& x, const Vector& y) const {
  const double xy = x.dot(y);
  switch (kind_) {
    case ProblemKind::f1:
      return xy;
    case ProblemKind::f2:
      return 0.5 * x.squaredNorm() + xy;
    case ProblemKind::f3:
      return 0.5 * (x.array() + 1.0).matrix().squaredNorm() + 0.1 * xy;
    case ProblemKind::f4:
      return 0.5 * x.squaredNorm() + xy + 0.5 * y.squaredNorm();
    case ProblemKind::f5:
      return 0.5 * x.squaredNorm() + b_ * xy - 0.5 * y.squaredNorm();
    case ProblemKind::f6:
      return 0.5 * x.squaredNorm() + x.lpNorm<1>() + b_ * xy - y.lpNorm<1>() -
             0.5 * y.squaredNorm();
    case ProblemKind::f7: {
      const double x2 = x.squaredNorm();
      const double y2 = y.squaredNorm();
      return 0.25 * x2 * x2 + b_ * xy - 0.25 * y2 * y2;
    }
    case ProblemKind::f8:
      return x.lpNorm<1>() + b_ * xy - y.lpNorm<1>();
  }
  throw std::logic_error("unreachable problem kind");
}

Vector BenchmarkProblem::worst_scenario(const Vector& x) const {
  const auto n = x.size();
  Vector y(n);
  switch (kind_) {
    case ProblemKind::f1:
    case ProblemKind::f2:
    case ProblemKind::f3:
      for (Eigen::Index i = 0; i < n; ++i) y[i] = kBound * sign(x[i]);
      return y;
    case ProblemKind::f4:
      // x_i = 0 ties between +3 and -3; +3 is returned
      for (Eigen::Index i = 0; i < n; ++i) y[i] = x[i] < 0.0 ? -kBound : kBound;
      return y;
    case ProblemKind::f5:
      for (Eigen::Index i = 0; i < n; ++i) {
        y[i] = std::abs(x[i]) <= kBound / b_ ? b_ * x[i] : kBound * sign(x[i]);
      }
      return y;
    case ProblemKind::f6:
      for (Eigen::Index i = 0; i < n; ++i) {
        const double a = std::abs(x[i]);
        if (a <= 1.0 / b_) {
          y[i] = 0.0;
        } else if (a <= (kBound + 1.0) / b_) {
          y[i] = b_ * x[i] - sign(x[i]);
        } else {
          y[i] = kBound * sign(x[i]);
        }
      }
      return y;
    case ProblemKind::f7: {
      // Concave in y: the maximizer solves y_i = clip(b x_i / |y|^2, -3, 3).
      const double xnorm = x.norm();
      if (xnorm == 0.0) return Vector::Zero(n);
      const auto at = [&](double r2) {
        Vector v(n);
        for (Eigen::Index i = 0; i < n; ++i) v[i] = std::clamp(b_ * x[i] / r2, -kBound, kBound);
        return v;
      };
      const double r2_free = std::pow(b_ * xnorm, 2.0 / 3.0);
      if ((b_ / r2_free) * x.cwiseAbs().maxCoeff() <= kBound) {
        // no coordinate hits the bound: closed form (b / |x|^2)^{1/3} x
        return std::cbrt(b_ / (xnorm * xnorm)) * x;
      }
      // g(r2) = |y(r2)|^2 - r2 is strictly decreasing; bisect for its root
      double lo = 0.0;
      double hi = kBound * kBound * static_cast<double>(n);
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        if (at(mid).squaredNorm() > mid) {
          lo = mid;
        } else {
          hi = mid;
        }
      }
      return at(0.5 * (lo + hi));
    }
    case ProblemKind::f8:
      for (Eigen::Index i = 0; i < n; ++i) {
        y[i] = std::abs(x[i]) <= 1.0 / b_ ? 0.0 : kBound * sign(x[i]);
      }
      return y;
  }
  throw std::logic_error("unreachable problem kind");
}

double BenchmarkProblem::worst_case_value(const Vector& x) const {
  return formula(x, worst_scenario(x));
}

Vector BenchmarkProblem::optimum() const {
  const int m = design_.dim();
  return kind_ == ProblemKind::f3 ? Vector::Constant(m, -0.7) : Vector::Zero(m);
}

double BenchmarkProblem::optimal_value() const {
  const double m = design_.dim();
  const double n = scenario_.dim();
  switch (kind_) {
    case ProblemKind::f3:
      // per coordinate (x + 1)^2 / 2 + 0.3 |x| at x = -0.7
      return m * (0.5 * 0.3 * 0.3 + 0.3 * 0.7);
    case ProblemKind::f4:
      // y = +-3 in every coordinate at x = 0
      return n * 0.5 * kBound * kBound;
    default:
      return 0.0;
  }
}

double BenchmarkProblem::scenario_lipschitz(const Vector& x, const Box& region) const {
  const double xn = x.norm();
  const double r = max_abs_norm(region);
  const double sqrt_n = std::sqrt(static_cast<double>(region.dim()));
  switch (kind_) {
    case ProblemKind::f1:
    case ProblemKind::f2:
      return xn;
    case ProblemKind::f3:
      return 0.1 * xn;
    case ProblemKind::f4:
      return xn + r;
    case ProblemKind::f5:
      return b_ * xn + r;
    case ProblemKind::f6:
      return b_ * xn + sqrt_n + r;
    case ProblemKind::f7:
      return b_ * xn + r * r * r;
    case ProblemKind::f8:
      return b_ * xn + sqrt_n;
  }
  throw std::logic_error("unreachable problem kind");
}

namespace {

struct GridSearch {
  const Problem& problem;
  const Vector& x;
  Vector lo;
  double step;
  int dim;
  double best = -std::numeric_limits<double>::infinity();
  Vector best_y;
  std::int64_t evaluations = 0;

  double eval(const Vector& y) {
    ++evaluations;
    return problem.value(x, y);
  }

  void enumerate(const std::vector<int>& first, const std::vector<int>& last) {
    std::vector<int> idx = first;
    while (true) {
      Vector y(dim);
      for (int j = 0; j < dim; ++j) y[j] = lo[j] + idx[j] * step;
      const double v = eval(y);
      if (v > best) {
        best = v;
        best_y = y;
      }
      int j = 0;
      while (j < dim && idx[j] == last[j]) {
        idx[j] = first[j];
        ++j;
      }
      if (j == dim) return;
      ++idx[j];
    }
  }

  // Block of grid indices [first, last] (inclusive per axis).
  void search(const std::vector<int>& first, const std::vector<int>& last, double center_value) {
    std::int64_t count = 1;
    double diag2 = 0.0;
    for (int j = 0; j < dim; ++j) {
      count *= last[j] - first[j] + 1;
      const double ext = (last[j] - first[j]) * step;
      diag2 += ext * ext;
    }
    Vector blo(dim), bhi(dim);
    for (int j = 0; j < dim; ++j) {
      blo[j] = lo[j] + first[j] * step;
      bhi[j] = lo[j] + last[j] * step;
    }
    if (count > 1) {
      for (int j = 0; j < dim; ++j) {
        if (bhi[j] <= blo[j]) bhi[j] = blo[j] + step;  // Box needs lower < upper
      }
      const double lip = problem.scenario_lipschitz(x, Box(blo, bhi));
      const double bound = center_value + lip * 0.5 * std::sqrt(diag2) +
                           1e-12 * (1.0 + std::abs(center_value));
      if (bound <= best) return;
    }
    if (count <= 64) {
      enumerate(first, last);
      return;
    }
    // split every axis that has more than one index
    std::vector<std::pair<std::vector<int>, std::vector<int>>> children{{first, last}};
    for (int j = 0; j < dim; ++j) {
      if (last[j] == first[j]) continue;
      const int mid = (first[j] + last[j]) / 2;
      std::vector<std::pair<std::vector<int>, std::vector<int>>> next;
      for (auto& [f, l] : children) {
        auto l1 = l;
        l1[j] = mid;
        auto f2 = f;
        f2[j] = mid + 1;
        next.emplace_back(f, l1);
        next.emplace_back(f2, l);
      }
      children = std::move(next);
    }
    struct Child {
      std::vector<int> first, last;
      double value;
    };
    std::vector<Child> ordered;
    ordered.reserve(children.size());
    for (auto& [f, l] : children) {
      Vector c(dim);
      for (int j = 0; j < dim; ++j) c[j] = lo[j] + 0.5 * (f[j] + l[j]) * step;
      const double v = eval(c);
      ordered.push_back({f, l, v});
    }
    std::sort(ordered.begin(), ordered.end(),
              [](const Child& a, const Child& b) { return a.value > b.value; });
    for (const auto& child : ordered) search(child.first, child.last, child.value);
  }
};

}  // namespace

double grid_maximum(const Problem& problem, const Vector& x, int resolution, Vector* argmax,
                    std::int64_t* evaluations) {
  if (resolution < 2) throw std::invalid_argument("grid_maximum: resolution must be >= 2");
  const Box& box = problem.scenario_box();
  // the step is shared by all axes, so only cubes are supported
  const Vector w = box.width();
  if ((w.array() != w[0]).any()) {
    throw std::invalid_argument("grid_maximum: scenario box must be a cube");
  }
  GridSearch gs{problem, x, box.lower(), w[0] / (resolution - 1), box.dim(),
                -std::numeric_limits<double>::infinity(), Vector(), 0};
  std::vector<int> first(box.dim(), 0);
  std::vector<int> last(box.dim(), resolution - 1);
  const double cv = gs.eval(box.lower() + 0.5 * w);
  gs.search(first, last, cv);
  if (argmax != nullptr) *argmax = gs.best_y;
  if (evaluations != nullptr) *evaluations = gs.evaluations;
  return gs.best;
}

GridCheck verify_worst_scenario(const Problem& problem, const Vector& x, int resolution) {
  GridCheck check;
  check.grid_max = grid_maximum(problem, x, resolution, &check.grid_argmax, &check.evaluations);
  const Vector y_hat = problem.worst_scenario(x);
  check.scenario_in_box = problem.scenario_box().contains(y_hat);
  check.claimed = problem.worst_case_value(x);
  const Box& box = problem.scenario_box();
  const double step = box.width()[0] / (resolution - 1);
  check.resolution_slack = problem.scenario_lipschitz(x, box) * 0.5 * step *
                           std::sqrt(static_cast<double>(box.dim()));
  const double rounding = 1e-9 * (1.0 + std::abs(check.grid_max));
  check.passed = check.scenario_in_box && check.claimed >= check.grid_max - rounding &&
                 check.claimed <= check.grid_max + check.resolution_slack + rounding;
  return check;
}

}  // namespace wracma
