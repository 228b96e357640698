#include "wracma/box.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace wracma {

Box::Box(Vector lower, Vector upper) : lower_(std::move(lower)), upper_(std::move(upper)) {
  if (lower_.size() != upper_.size() || lower_.size() == 0) {
    throw std::invalid_argument("Box: lower and upper must have the same non-zero length");
  }
  for (Eigen::Index i = 0; i < lower_.size(); ++i) {
    if (!(lower_[i] < upper_[i])) {
      throw std::invalid_argument("Box: lower[" + std::to_string(i) + "] must be < upper[" +
                                  std::to_string(i) + "]");
    }
  }
}

Box Box::cube(int dim, double lo, double hi) {
  return Box(Vector::Constant(dim, lo), Vector::Constant(dim, hi));
}

bool Box::contains(const Vector& v) const {
  if (v.size() != lower_.size()) return false;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!(v[i] >= lower_[i] && v[i] <= upper_[i])) return false;
  }
  return true;
}

Vector Box::sample_uniform(Rng& rng) const {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Vector v(dim());
  for (int i = 0; i < dim(); ++i) v[i] = lower_[i] + (upper_[i] - lower_[i]) * unif(rng);
  return v;
}

Vector mirror(const Vector& v, const Box& box) {
  Vector out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double lo = box.lower()[i];
    const double hi = box.upper()[i];
    const double x = v[i];
    if (x >= lo && x <= hi) {
      out[i] = x;
      continue;
    }
    const double w = hi - lo;
    double r = std::fmod(x - lo, 2.0 * w);
    if (r < 0.0) r += 2.0 * w;
    const double folded = r <= w ? lo + r : hi - (r - w);
    // fmod rounding can land a hair outside the interval
    out[i] = std::clamp(folded, lo, hi);
  }
  return out;
}

Vector project(const Vector& v, const Box& box) {
  return v.cwiseMax(box.lower()).cwiseMin(box.upper());
}

}  // namespace wracma
