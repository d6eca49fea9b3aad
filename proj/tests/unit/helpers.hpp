#pragma once

#include <cstdint>
#include <vector>

#include "kolchin/partition.hpp"

namespace kolchin::test {

inline Partition labels(std::vector<std::int64_t> l) { return Partition::from_assignments(l); }

inline std::vector<Index> sorted_sizes(const Partition& p) {
  auto s = p.cluster_sizes();
  std::sort(s.begin(), s.end());
  return s;
}

}  // namespace kolchin::test
