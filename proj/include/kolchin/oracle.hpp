#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <unordered_map>
#include <vector>

#include "kolchin/kp_priors.hpp"
#include "kolchin/partition.hpp"

namespace kolchin {

/// Exhaustive enumeration is capped here: B_12 = 4,213,597 partitions.
inline constexpr Index kOracleMaxN = 12;

/// Unnormalized log-probability of a partition of [N].
using PartitionLogWeight = std::function<double(const Partition&)>;

/// Every set partition of [N], each as a restricted growth string (labels in
/// first-occurrence order), in lexicographic order.
std::vector<std::vector<std::uint8_t>> enumerate_partitions(Index n);

/// Calls `visit` on each restricted growth string of length n.
void for_each_partition(Index n,
                        const std::function<void(const std::vector<std::uint8_t>&)>& visit);

/// Bell numbers B_0..B_n.
std::vector<std::uint64_t> bell_numbers(Index n);

/// Exact distribution over all partitions of [N].
struct PartitionTable {
  Index n = 0;
  std::vector<std::vector<std::uint8_t>> partitions;
  std::vector<double> log_weights;
  std::vector<double> probabilities;
  double log_normalizer = 0.0;

  /// Position of a partition given by its canonical labels.
  Index index_of(std::span<const Index> canonical_labels) const;
  Index index_of(const Partition& p) const { return index_of(p.canonical_labels()); }
  Partition partition(Index i) const;

  std::unordered_map<std::uint64_t, Index> lookup;
};

/// Key of a restricted growth string, usable as a hash.
std::uint64_t rgs_key(std::span<const Index> labels);

/// Normalizes `model` over all partitions of [N]. Throws std::domain_error
/// when every weight is zero, std::length_error when N exceeds the cap.
PartitionTable exact_conditional_pmf(const PartitionLogWeight& model, Index n);

/// P(placement of n | rest) obtained by evaluating the model at every
/// completion: one entry per live cluster of `p` with n removed (in the order
/// of Partition::clusters() after detaching n), then the new-cluster option.
ReseatWeights exact_site_conditional(const PartitionLogWeight& model, const Partition& p,
                                     Index n);

/// `partition,probability,log_weight` rows; partitions as dash-joined labels.
void write_partition_table_csv(std::ostream& out, const PartitionTable& table);

/// Total variation distance between an empirical count vector and a table.
double total_variation(std::span<const std::uint64_t> counts,
                       std::span<const double> probabilities);

}  // namespace kolchin
