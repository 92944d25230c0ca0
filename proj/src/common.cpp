#include "latroute/common.hpp"

#include <fmt/format.h>

#include <cmath>

namespace latroute {

DimensionError::DimensionError(const std::string& what, std::size_t expected, std::size_t actual)
    : Error(fmt::format("{}: dimension mismatch (expected {}, got {})", what, expected, actual)),
      expected_(expected),
      actual_(actual) {}

double sigmoid(double x) noexcept {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double softplus(double x) noexcept {
  if (x > 30.0) return x;
  return std::log1p(std::exp(x));
}

double softplus_inverse(double x) noexcept {
  if (x > 30.0) return x;
  return std::log(std::expm1(x));
}

TrainingCounters& training_counters() {
  static TrainingCounters counters;
  return counters;
}

}  // namespace latroute
