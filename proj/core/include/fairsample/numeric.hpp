#pragma once

#include <cmath>
#include <span>

namespace fairsample {

/// Neumaier-compensated accumulator. Adding a negative term is how running
/// group sums are maintained when identities leave a group.
class CompensatedSum {
 public:
  CompensatedSum() = default;
  explicit CompensatedSum(double initial) : sum_(initial) {}

  void add(double x) {
    const double t = sum_ + x;
    if (std::fabs(sum_) >= std::fabs(x)) {
      compensation_ += (sum_ - t) + x;
    } else {
      compensation_ += (x - t) + sum_;
    }
    sum_ = t;
  }

  CompensatedSum& operator+=(double x) {
    add(x);
    return *this;
  }
  CompensatedSum& operator-=(double x) {
    add(-x);
    return *this;
  }

  double value() const { return sum_ + compensation_; }

 private:
  double sum_ = 0.0;
  double compensation_ = 0.0;
};

inline double compensated_sum(std::span<const double> xs) {
  CompensatedSum acc;
  for (double x : xs) acc.add(x);
  return acc.value();
}

}  // namespace fairsample
