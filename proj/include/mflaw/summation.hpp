#pragma once

#include <cmath>
#include <ranges>

namespace mflaw {

// Neumaier's variant of Kahan summation. Keeps the running error term even
// when an addend is larger in magnitude than the partial sum.
class CompensatedSum {
 public:
  void add(double x) noexcept {
    const double t = sum_ + x;
    if (std::fabs(sum_) >= std::fabs(x)) {
      compensation_ += (sum_ - t) + x;
    } else {
      compensation_ += (x - t) + sum_;
    }
    sum_ = t;
  }

  CompensatedSum& operator+=(double x) noexcept {
    add(x);
    return *this;
  }

  double value() const noexcept { return sum_ + compensation_; }

 private:
  double sum_ = 0.0;
  double compensation_ = 0.0;
};

template <std::ranges::input_range R>
double compensated_sum(const R& values) {
  CompensatedSum acc;
  for (const auto& v : values) acc.add(static_cast<double>(v));
  return acc.value();
}

}  // namespace mflaw
