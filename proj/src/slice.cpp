#include "kolchin/slice.hpp"

#include <cmath>
#include <stdexcept>

namespace kolchin {

double slice_sample(const LogDensity& log_density, double current,
                    const SliceOptions& options, Rng& rng) {
  const double fx = log_density(current);
  if (!std::isfinite(fx)) {
    throw std::domain_error("slice_sample: log density not finite at current point");
  }
  const double level = fx + std::log(uniform_open01(rng));
  const double w = options.width;

  double left = current - w * uniform01(rng);
  double right = left + w;
  int j = static_cast<int>(std::floor(options.max_step_out * uniform01(rng)));
  int k = options.max_step_out - 1 - j;
  while (j-- > 0 && left > options.lower && log_density(left) > level) left -= w;
  while (k-- > 0 && right < options.upper && log_density(right) > level) right += w;
  if (left < options.lower) left = options.lower;
  if (right > options.upper) right = options.upper;

  for (int iter = 0; iter < 10000; ++iter) {
    const double x = left + (right - left) * uniform01(rng);
    const double fy = log_density(x);
    if (fy > level) return x;
    if (x < current) {
      left = x;
    } else {
      right = x;
    }
  }
  // Shrinkage collapsed onto the current point.
  return current;
}

double slice_sample_positive(const LogDensity& log_density, double current,
                             const SliceOptions& options, Rng& rng) {
  if (!(current > 0.0)) throw std::domain_error("slice_sample_positive: x <= 0");
  auto transformed = [&](double y) {
    const double x = std::exp(y);
    if (!(x > 0.0) || !std::isfinite(x)) return -std::numeric_limits<double>::infinity();
    return log_density(x) + y;
  };
  SliceOptions opts = options;
  opts.lower = -std::numeric_limits<double>::infinity();
  opts.upper = std::numeric_limits<double>::infinity();
  return std::exp(slice_sample(transformed, std::log(current), opts, rng));
}

double slice_sample_unit(const LogDensity& log_density, double current,
                         const SliceOptions& options, Rng& rng) {
  if (!(current > 0.0 && current < 1.0)) {
    throw std::domain_error("slice_sample_unit: x outside (0, 1)");
  }
  auto inv_logit = [](double y) { return 1.0 / (1.0 + std::exp(-y)); };
  auto transformed = [&](double y) {
    const double x = inv_logit(y);
    if (!(x > 0.0 && x < 1.0)) return -std::numeric_limits<double>::infinity();
    // dx/dy = x (1 - x)
    return log_density(x) + std::log(x) + std::log1p(-x);
  };
  SliceOptions opts = options;
  opts.lower = -std::numeric_limits<double>::infinity();
  opts.upper = std::numeric_limits<double>::infinity();
  const double y = std::log(current) - std::log1p(-current);
  return inv_logit(slice_sample(transformed, y, opts, rng));
}

}  // namespace kolchin
