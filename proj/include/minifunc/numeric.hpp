#pragma once

#include <cstddef>
#include <span>

namespace minifunc {

// Neumaier-compensated accumulator.
class CompensatedSum {
 public:
  void add(double x) noexcept;
  CompensatedSum& operator+=(double x) noexcept {
    add(x);
    return *this;
  }
  double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

double compensated_sum(std::span<const double> xs) noexcept;

/// Least-squares slope of log(y) against log(x). Entries with non-positive
/// x or y are skipped; fewer than two usable points gives NaN.
double loglog_slope(std::span<const double> xs, std::span<const double> ys);

/// Least-squares slope of y against x.
double linear_slope(std::span<const double> xs, std::span<const double> ys);

/// Golden-section maximization of f on [lo, hi]; returns the argmax.
template <class F>
double golden_section_max(F&& f, double lo, double hi, int max_iter = 200) {
  constexpr double kInvPhi = 0.6180339887498949;
  double a = lo, b = hi;
  double c = b - kInvPhi * (b - a);
  double d = a + kInvPhi * (b - a);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < max_iter && (b - a) > 1e-15 * (1.0 + (a < 0 ? -a : a)); ++it) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = f(d);
    }
  }
  return fc >= fd ? c : d;
}

}  // namespace minifunc
