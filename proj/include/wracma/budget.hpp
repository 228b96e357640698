#pragma once

#include <cstdint>
#include <stdexcept>

namespace wracma {

class BudgetExhausted : public std::runtime_error {
 public:
  BudgetExhausted() : std::runtime_error("evaluation budget exhausted") {}
};

/// Monotone f-call counter shared by every evaluation path of one run.
class EvalBudget {
 public:
  explicit EvalBudget(std::int64_t limit) : limit_(limit) {
    if (limit < 0) throw std::invalid_argument("EvalBudget: limit must be non-negative");
  }

  /// Accounts for one f-call; throws BudgetExhausted when none is left.
  void charge() {
    if (used_ >= limit_) throw BudgetExhausted();
    ++used_;
  }

  std::int64_t used() const { return used_; }
  std::int64_t limit() const { return limit_; }
  std::int64_t remaining() const { return limit_ - used_; }
  bool exhausted() const { return used_ >= limit_; }

 private:
  std::int64_t limit_;
  std::int64_t used_ = 0;
};

}  // namespace wracma
