#pragma once

#include <span>
#include <stdexcept>
#include <vector>

namespace wracma {

/// ranks[i] is the rank of element i; a permutation of 1..k with 1 = smallest.
using RankVector = std::vector<int>;

/// Raised when Kendall's tau is undefined because one of the inputs has no
/// untied pair (for example, a constant vector).
class UndefinedCorrelation : public std::domain_error {
 public:
  UndefinedCorrelation(bool a_constant, bool b_constant);

  bool a_constant() const { return a_constant_; }
  bool b_constant() const { return b_constant_; }
  bool both_constant() const { return a_constant_ && b_constant_; }

 private:
  bool a_constant_;
  bool b_constant_;
};

/// Tie-corrected Kendall rank correlation (tau-b). O(k^2) pair count.
/// Throws std::invalid_argument on length mismatch or k < 2, and
/// UndefinedCorrelation when either side has only tied pairs.
double kendall_tau(std::span<const double> a, std::span<const double> b);

/// Rank 1 goes to the smallest value; ties are broken by index.
RankVector ranking_of(std::span<const double> values);

/// True iff ranks is a permutation of 1..ranks.size().
bool is_permutation_of_ranks(std::span<const int> ranks);

}  // namespace wracma
