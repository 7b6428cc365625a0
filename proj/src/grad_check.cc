#include "antispoof/grad_check.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "antispoof/random.h"

namespace antispoof {

double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
  return std::abs(analytic - numeric) / denom;
}

GradCheckResult grad_check(const std::function<double(std::span<const double>)>& loss,
                           std::span<const double> point, std::span<const double> analytic,
                           const GradCheckOptions& options) {
  if (point.size() != analytic.size()) throw std::invalid_argument("grad_check: gradient size mismatch");
  std::vector<std::size_t> coords(point.size());
  std::iota(coords.begin(), coords.end(), std::size_t{0});
  if (options.max_coordinates > 0 && options.max_coordinates < coords.size()) {
    Rng rng(options.seed);
    // Partial Fisher-Yates.
    for (std::size_t i = 0; i < options.max_coordinates; ++i)
      std::swap(coords[i], coords[i + rng.below(coords.size() - i)]);
    coords.resize(options.max_coordinates);
  }

  std::vector<double> x(point.begin(), point.end());
  GradCheckResult result;
  for (std::size_t c : coords) {
    const double saved = x[c];
    x[c] = saved + options.step;
    const double up = loss(x);
    x[c] = saved - options.step;
    const double down = loss(x);
    x[c] = saved;
    const double numeric = (up - down) / (2.0 * options.step);
    const double err = relative_error(analytic[c], numeric);
    if (result.coordinates_checked == 0 || err > result.max_relative_error) {
      result.max_relative_error = err;
      result.worst_coordinate = c;
    }
    ++result.coordinates_checked;
  }
  return result;
}

}  // namespace antispoof
