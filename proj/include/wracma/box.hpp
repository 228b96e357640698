#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>

namespace wracma {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Rng = std::mt19937_64;

/// Axis-aligned box [lower, upper] with lower_i < upper_i for every coordinate.
class Box {
 public:
  Box(Vector lower, Vector upper);

  /// [lo, hi]^dim
  static Box cube(int dim, double lo, double hi);

  int dim() const { return static_cast<int>(lower_.size()); }
  const Vector& lower() const { return lower_; }
  const Vector& upper() const { return upper_; }
  Vector width() const { return upper_ - lower_; }

  bool contains(const Vector& v) const;

  /// Uniform sample from the box.
  Vector sample_uniform(Rng& rng) const;

 private:
  Vector lower_;
  Vector upper_;
};

/// Coordinate-wise triangle-wave reflection into the box (period 2 * width).
/// Points inside the box are returned unchanged.
Vector mirror(const Vector& v, const Box& box);

/// Coordinate-wise clamp into the box.
Vector project(const Vector& v, const Box& box);

}  // namespace wracma
