#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>

namespace latroute {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Every failure surfaced by the library derives from Error.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  DimensionError(const std::string& what, std::size_t expected, std::size_t actual);

  std::size_t expected() const noexcept { return expected_; }
  std::size_t actual() const noexcept { return actual_; }

 private:
  std::size_t expected_;
  std::size_t actual_;
};

inline void require_same_dim(const char* what, std::size_t expected, std::size_t actual) {
  if (expected != actual) throw DimensionError(what, expected, actual);
}

double sigmoid(double x) noexcept;
double softplus(double x) noexcept;
// Inverse of softplus for x > 0.
double softplus_inverse(double x) noexcept;

}  // namespace latroute

#include <atomic>
#include <cstdint>

namespace latroute {

// Process-wide counts of the expensive fitting routines. The simulation uses
// these to show that onboarding never re-enters them.
struct TrainingCounters {
  std::atomic<std::uint64_t> calibrations{0};
  std::atomic<std::uint64_t> predictor_trainings{0};
};

TrainingCounters& training_counters();

}  // namespace latroute
