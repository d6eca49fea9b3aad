#pragma once

#include <iosfwd>
#include <vector>

#include "kolchin/inference.hpp"

namespace kolchin {

/// One JSON object per line: iteration, assignments (CSV string),
/// hyperparameters, delta, mu, log_joint.
void write_sample_jsonl(std::ostream& out, const Sample& s);
std::vector<Sample> read_samples_jsonl(std::istream& in);

}  // namespace kolchin
