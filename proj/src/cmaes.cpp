#include "wracma/cmaes.hpp"

#include <algorithm>
#include <cmath>

#include "wracma/rankstats.hpp"

namespace wracma {

namespace {
constexpr double kMaxCondition = 1e14;
}

int CmaesParams::default_pop_size(int dim) {
  return 4 + static_cast<int>(std::floor(3.0 * std::log(static_cast<double>(dim))));
}

CmaesParams CmaesParams::defaults(int dim, int pop_size) {
  if (dim < 1) throw std::invalid_argument("CmaesParams: dim must be >= 1");
  CmaesParams p;
  const double n = dim;
  p.lambda = pop_size > 0 ? pop_size : default_pop_size(dim);
  if (p.lambda < 2) throw std::invalid_argument("CmaesParams: pop_size must be >= 2");
  p.mu = p.lambda / 2;

  p.weights.resize(p.mu);
  for (int i = 0; i < p.mu; ++i) {
    p.weights[i] = std::log((p.lambda + 1.0) / 2.0) - std::log(i + 1.0);
  }
  p.weights /= p.weights.sum();
  p.mueff = 1.0 / p.weights.squaredNorm();

  p.c_sigma = (p.mueff + 2.0) / (n + p.mueff + 5.0);
  p.d_sigma = 1.0 + 2.0 * std::max(0.0, std::sqrt((p.mueff - 1.0) / (n + 1.0)) - 1.0) + p.c_sigma;
  p.c_c = (4.0 + p.mueff / n) / (n + 4.0 + 2.0 * p.mueff / n);
  p.c_1 = 2.0 / ((n + 1.3) * (n + 1.3) + p.mueff);
  p.c_mu = std::min(1.0 - p.c_1,
                    2.0 * (p.mueff - 2.0 + 1.0 / p.mueff) / ((n + 2.0) * (n + 2.0) + p.mueff));
  p.chi_n = std::sqrt(n) * (1.0 - 1.0 / (4.0 * n) + 1.0 / (21.0 * n * n));
  return p;
}

Cmaes::Cmaes(Vector mean, const Matrix& covariance, std::string label, int pop_size)
    : label_(std::move(label)),
      params_(CmaesParams::defaults(static_cast<int>(mean.size()), pop_size)),
      mean_(std::move(mean)) {
  const auto n = mean_.size();
  if (covariance.rows() != n || covariance.cols() != n) {
    throw std::invalid_argument("Cmaes[" + label_ + "]: covariance shape does not match mean");
  }
  const double avg_var = covariance.diagonal().mean();
  if (!(avg_var > 0.0) || !std::isfinite(avg_var)) {
    throw CovarianceError("Cmaes[" + label_ + "]: covariance diagonal must be positive");
  }
  if (!covariance.isApprox(covariance.transpose()) ||
      Eigen::LLT<Matrix>(covariance).info() != Eigen::Success) {
    throw CovarianceError("Cmaes[" + label_ + "]: covariance is not symmetric positive definite");
  }
  sigma_ = std::sqrt(avg_var);
  shape_ = covariance / avg_var;
  path_sigma_ = Vector::Zero(n);
  path_c_ = Vector::Zero(n);
  decompose();
}

Cmaes Cmaes::isotropic(Vector mean, double stddev, std::string label, int pop_size) {
  const auto n = mean.size();
  return Cmaes(std::move(mean), Matrix::Identity(n, n) * (stddev * stddev), std::move(label),
               pop_size);
}

void Cmaes::decompose() {
  shape_ = 0.5 * (shape_ + shape_.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(shape_);
  if (es.info() != Eigen::Success || !es.eigenvalues().allFinite() ||
      !(es.eigenvalues().maxCoeff() > 0.0)) {
    throw CovarianceError("Cmaes[" + label_ + "]: covariance is not positive definite");
  }
  eig_basis_ = es.eigenvectors();
  Vector eigenvalues = es.eigenvalues();
  // condition number cap; also repairs round-off that pushes eigenvalues to <= 0
  const double floor = eigenvalues.maxCoeff() / kMaxCondition;
  if (eigenvalues.minCoeff() < floor) {
    eigenvalues = eigenvalues.cwiseMax(floor);
    shape_ = eig_basis_ * eigenvalues.asDiagonal() * eig_basis_.transpose();
  }
  eig_scale_ = eigenvalues.cwiseSqrt();
  eig_stale_ = false;
}

const std::vector<Vector>& Cmaes::ask(const Box& box, Rng& rng) {
  if (box.dim() != dim()) {
    throw std::invalid_argument("Cmaes[" + label_ + "]: box dimension does not match");
  }
  if (eig_stale_) decompose();
  std::normal_distribution<double> normal(0.0, 1.0);
  const int lambda = params_.lambda;
  z_.resize(lambda);
  raw_.resize(lambda);
  mapped_.resize(lambda);
  for (int k = 0; k < lambda; ++k) {
    Vector z(dim());
    for (int i = 0; i < dim(); ++i) z[i] = normal(rng);
    raw_[k] = mean_ + sigma_ * (eig_basis_ * eig_scale_.cwiseProduct(z));
    mapped_[k] = mirror(raw_[k], box);
    z_[k] = std::move(z);
  }
  pending_ = true;
  return mapped_;
}

void Cmaes::tell(std::span<const int> ranks, const Box& box) {
  if (!pending_) {
    throw std::logic_error("Cmaes[" + label_ + "]: tell without a preceding ask");
  }
  if (static_cast<int>(ranks.size()) != params_.lambda || !is_permutation_of_ranks(ranks)) {
    throw std::invalid_argument("Cmaes[" + label_ + "]: ranks must be a permutation of 1..lambda");
  }
  const auto n = dim();
  const auto& p = params_;

  std::vector<int> by_rank(p.lambda);
  for (int k = 0; k < p.lambda; ++k) by_rank[ranks[k] - 1] = k;

  std::vector<Vector> steps(p.mu);
  Vector y_w = Vector::Zero(n);
  Vector z_w = Vector::Zero(n);
  for (int r = 0; r < p.mu; ++r) {
    const int k = by_rank[r];
    steps[r] = (raw_[k] - mean_) / sigma_;
    y_w += p.weights[r] * steps[r];
    z_w += p.weights[r] * z_[k];
  }

  mean_ += sigma_ * y_w;

  // C^{-1/2} y_w = B z_w
  path_sigma_ = (1.0 - p.c_sigma) * path_sigma_ +
                std::sqrt(p.c_sigma * (2.0 - p.c_sigma) * p.mueff) * (eig_basis_ * z_w);

  const double ps_norm = path_sigma_.norm();
  const double t = static_cast<double>(iteration_ + 1);
  const bool h_sigma =
      ps_norm / std::sqrt(1.0 - std::pow(1.0 - p.c_sigma, 2.0 * t)) <
      (1.4 + 2.0 / (n + 1.0)) * p.chi_n;

  path_c_ = (1.0 - p.c_c) * path_c_;
  if (h_sigma) path_c_ += std::sqrt(p.c_c * (2.0 - p.c_c) * p.mueff) * y_w;

  Matrix rank_mu = Matrix::Zero(n, n);
  for (int r = 0; r < p.mu; ++r) {
    rank_mu.noalias() += p.weights[r] * steps[r] * steps[r].transpose();
  }
  const double delta_h = h_sigma ? 0.0 : p.c_c * (2.0 - p.c_c);
  shape_ = (1.0 - p.c_1 - p.c_mu + p.c_1 * delta_h) * shape_ +
           p.c_1 * path_c_ * path_c_.transpose() + p.c_mu * rank_mu;

  sigma_ *= std::exp((p.c_sigma / p.d_sigma) * (ps_norm / p.chi_n - 1.0));

  ++iteration_;
  pending_ = false;
  eig_stale_ = true;
  cap_std(box);
  decompose();
}

Vector Cmaes::coordinate_std() const { return sigma_ * shape_.diagonal().cwiseSqrt(); }

void Cmaes::cap_std(const Box& box) {
  if (box.dim() != dim()) {
    throw std::invalid_argument("Cmaes[" + label_ + "]: box dimension does not match");
  }
  const Vector stds = coordinate_std();
  Vector factors = Vector::Ones(dim());
  bool any = false;
  for (int i = 0; i < dim(); ++i) {
    const double bound = 0.5 * (box.upper()[i] - box.lower()[i]);
    if (stds[i] > bound) {
      factors[i] = bound / stds[i];
      any = true;
    }
  }
  if (any) scale_coordinates(factors);
}

void Cmaes::scale_coordinates(const Vector& factors) {
  if (factors.size() != dim()) {
    throw std::invalid_argument("Cmaes[" + label_ + "]: scale factor length mismatch");
  }
  shape_ = factors.asDiagonal() * shape_ * factors.asDiagonal();
  eig_stale_ = true;
}

bool Cmaes::same_state(const Cmaes& other) const {
  return iteration_ == other.iteration_ && sigma_ == other.sigma_ && mean_ == other.mean_ &&
         shape_ == other.shape_ && path_sigma_ == other.path_sigma_ && path_c_ == other.path_c_;
}

}  // namespace wracma
