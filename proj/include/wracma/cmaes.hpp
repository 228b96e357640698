#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "wracma/box.hpp"

namespace wracma {

/// Raised when the covariance matrix of a named instance cannot be factorized.
class CovarianceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Strategy parameters of a (mu/mu_w, lambda) CMA-ES. Fixed after construction.
struct CmaesParams {
  int lambda = 0;
  int mu = 0;
  Vector weights;  // mu positive weights, sum to one
  double mueff = 0.0;
  double c_sigma = 0.0;
  double d_sigma = 0.0;
  double c_c = 0.0;
  double c_1 = 0.0;
  double c_mu = 0.0;
  double chi_n = 0.0;  // E||N(0, I)||

  /// Default settings for the given dimension; pop_size <= 0 selects
  /// lambda = 4 + floor(3 ln dim).
  static CmaesParams defaults(int dim, int pop_size = 0);

  static int default_pop_size(int dim);
};

/// One CMA-ES search distribution N(mean, Sigma) with ask/tell interface and
/// box handling by mirroring plus an upper bound on coordinate-wise
/// standard deviations.
///
/// Sigma is stored internally as sigma^2 * C; the split is not observable.
/// ask() returns mirrored candidates and keeps the raw Gaussian samples for the
/// following tell().
class Cmaes {
 public:
  Cmaes(Vector mean, const Matrix& covariance, std::string label = "cmaes", int pop_size = 0);

  static Cmaes isotropic(Vector mean, double stddev, std::string label = "cmaes",
                         int pop_size = 0);

  /// Samples pop_size candidates and maps them into the box.
  const std::vector<Vector>& ask(const Box& box, Rng& rng);

  /// ranks[i] is the rank of the i-th candidate of the last ask (1 = best).
  /// Updates mean, covariance and evolution paths, then caps the
  /// coordinate-wise standard deviation to half the box width.
  void tell(std::span<const int> ranks, const Box& box);

  /// Rescales Sigma by a diagonal similarity so that no coordinate-wise
  /// standard deviation exceeds half the box width.
  void cap_std(const Box& box);

  /// Multiplies Sigma from both sides by diag(factors).
  void scale_coordinates(const Vector& factors);

  int dim() const { return static_cast<int>(mean_.size()); }
  int pop_size() const { return params_.lambda; }
  long iteration() const { return iteration_; }
  const CmaesParams& params() const { return params_; }
  const std::string& label() const { return label_; }

  const Vector& mean() const { return mean_; }
  Matrix covariance() const { return sigma_ * sigma_ * shape_; }
  Vector coordinate_std() const;
  const Vector& path_sigma() const { return path_sigma_; }
  const Vector& path_c() const { return path_c_; }

  /// Raw (pre-mirror) samples of the last ask.
  const std::vector<Vector>& raw_samples() const { return raw_; }

  /// Bit-exact comparison of the full dynamic state.
  bool same_state(const Cmaes& other) const;

 private:
  void decompose();

  std::string label_;
  CmaesParams params_;
  Vector mean_;
  double sigma_ = 1.0;
  Matrix shape_;  // C
  Vector path_sigma_;
  Vector path_c_;
  long iteration_ = 0;

  Matrix eig_basis_;   // B
  Vector eig_scale_;   // sqrt of eigenvalues of C
  bool eig_stale_ = true;

  std::vector<Vector> z_;      // standard normal draws of the last ask
  std::vector<Vector> raw_;    // mean + sigma * B D z
  std::vector<Vector> mapped_; // mirror(raw)
  bool pending_ = false;
};

}  // namespace wracma
