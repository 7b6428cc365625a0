#ifndef ANTISPOOF_GRAD_CHECK_H_
#define ANTISPOOF_GRAD_CHECK_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>

namespace antispoof {

struct GradCheckOptions {
  double step = 1e-5;
  // 0 checks every coordinate; otherwise a seeded random subset of this size.
  std::size_t max_coordinates = 0;
  std::uint64_t seed = 0;
};

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t worst_coordinate = 0;
  std::size_t coordinates_checked = 0;
};

// |a - n| / max(|a|, |n|, 1e-8)
double relative_error(double analytic, double numeric);

// Compares `analytic` against central differences of `loss` around `point`.
GradCheckResult grad_check(const std::function<double(std::span<const double>)>& loss,
                           std::span<const double> point, std::span<const double> analytic,
                           const GradCheckOptions& options = {});

}  // namespace antispoof

#endif  // ANTISPOOF_GRAD_CHECK_H_
