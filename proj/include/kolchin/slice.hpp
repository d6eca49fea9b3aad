#pragma once

#include <functional>
#include <limits>

#include "kolchin/rng.hpp"

namespace kolchin {

using LogDensity = std::function<double(double)>;

struct SliceOptions {
  double width = 1.0;
  int max_step_out = 50;
  double lower = -std::numeric_limits<double>::infinity();
  double upper = std::numeric_limits<double>::infinity();
};

/// One univariate slice-sampling update with stepping out and shrinkage.
/// The stepping-out budget is split at random between the two ends so the
/// update leaves the target invariant. Throws std::domain_error if the log
/// density is not finite at `current`.
double slice_sample(const LogDensity& log_density, double current,
                    const SliceOptions& options, Rng& rng);

/// Slice update of a positive variable, run on log(x) with the Jacobian term.
double slice_sample_positive(const LogDensity& log_density, double current,
                             const SliceOptions& options, Rng& rng);

/// Slice update of a variable in (0, 1), run on logit(x) with the Jacobian.
double slice_sample_unit(const LogDensity& log_density, double current,
                         const SliceOptions& options, Rng& rng);

}  // namespace kolchin
