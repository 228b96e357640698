#include "wracma/rankstats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>

namespace wracma {

UndefinedCorrelation::UndefinedCorrelation(bool a_constant, bool b_constant)
    : std::domain_error(a_constant && b_constant
                            ? "kendall_tau: both inputs are constant"
                            : "kendall_tau: one input is constant"),
      a_constant_(a_constant),
      b_constant_(b_constant) {}

double kendall_tau(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("kendall_tau: inputs differ in length");
  }
  if (a.size() < 2) {
    throw std::invalid_argument("kendall_tau: need at least two observations");
  }
  const std::size_t k = a.size();
  std::int64_t concordant_minus_discordant = 0;
  std::int64_t untied_a = 0;
  std::int64_t untied_b = 0;
  for (std::size_t i = 0; i + 1 < k; ++i) {
    for (std::size_t j = i + 1; j < k; ++j) {
      const int sa = (a[i] < a[j]) - (a[j] < a[i]);
      const int sb = (b[i] < b[j]) - (b[j] < b[i]);
      concordant_minus_discordant += sa * sb;
      untied_a += sa != 0;
      untied_b += sb != 0;
    }
  }
  if (untied_a == 0 || untied_b == 0) {
    throw UndefinedCorrelation(untied_a == 0, untied_b == 0);
  }
  return static_cast<double>(concordant_minus_discordant) /
         std::sqrt(static_cast<double>(untied_a) * static_cast<double>(untied_b));
}

RankVector ranking_of(std::span<const double> values) {
  std::vector<int> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int l, int r) { return values[l] < values[r]; });
  RankVector ranks(values.size());
  for (std::size_t pos = 0; pos < order.size(); ++pos) ranks[order[pos]] = static_cast<int>(pos) + 1;
  return ranks;
}

bool is_permutation_of_ranks(std::span<const int> ranks) {
  std::vector<bool> seen(ranks.size(), false);
  for (int r : ranks) {
    if (r < 1 || r > static_cast<int>(ranks.size()) || seen[r - 1]) return false;
    seen[r - 1] = true;
  }
  return true;
}

}  // namespace wracma
