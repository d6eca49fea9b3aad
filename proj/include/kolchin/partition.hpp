#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace kolchin {

using Index = std::size_t;

/// Sentinel target for move_element / attach: open a fresh cluster.
inline constexpr Index kNewCluster = std::numeric_limits<Index>::max();
inline constexpr Index kUnassigned = kNewCluster - 1;

struct ClusterSizeStats {
  Index n_singletons = 0;
  Index max_size = 0;
  double mean_size = 0.0;
  Index p90_size = 0;
  Index num_clusters = 0;

  bool operator==(const ClusterSizeStats&) const = default;
};

/// A partition of {0, ..., N-1} into unlabeled, non-empty clusters.
///
/// Cluster ids are internal slot numbers in [0, N). They are recycled when a
/// cluster empties and carry no meaning outside one Partition object; compare
/// partitions through equivalent() or canonical_labels().
///
/// The class keeps the size histogram L_m (number of clusters of size m) and
/// the largest cluster size up to date in O(1) amortized per mutation.
///
/// An element may be temporarily detached (kUnassigned) so reseating weights can
/// be evaluated on the partition with that element removed. While any element
/// is detached, sizes and counts describe the remaining elements only.
class Partition {
 public:
  Partition() = default;

  static Partition singletons(Index n);
  static Partition one_cluster(Index n);
  /// Groups equal labels; throws std::invalid_argument on empty input.
  static Partition from_assignments(std::span<const std::int64_t> labels);
  /// Builds a partition whose clusters have the given sizes, elements laid out
  /// consecutively (cluster 0 takes the first sizes[0] elements, ...).
  static Partition from_sizes(std::span<const Index> sizes);

  /// N, counting detached elements.
  Index size() const { return assignment_.size(); }
  Index num_assigned() const { return assignment_.size() - detached_; }
  Index num_clusters() const { return live_.size(); }

  /// Cluster id of element n, or kUnassigned.
  Index cluster_of(Index n) const { return assignment_.at(n); }
  Index cluster_size(Index c) const;
  bool is_live(Index c) const {
    return c < members_.size() && !members_[c].empty();
  }
  std::span<const Index> members(Index c) const;
  /// Ids of the live clusters, in internal order.
  std::span<const Index> clusters() const { return live_; }

  /// L_m; zero for m outside [1, N].
  Index size_count(Index m) const {
    return m < size_counts_.size() ? size_counts_[m] : 0;
  }
  /// Histogram indexed by size, length N + 1 (entry 0 unused).
  std::span<const Index> size_counts() const { return size_counts_; }
  Index max_cluster_size() const { return max_size_; }

  /// Removes n from its cluster, deleting the cluster if it empties.
  void detach(Index n);
  /// Places a detached element in a live cluster or kNewCluster; returns the
  /// cluster id it now belongs to. Throws std::out_of_range on a stale id.
  Index attach(Index n, Index target);
  /// detach + attach.
  Index move_element(Index n, Index target);

  /// Labels relabeled to first-occurrence order: 0, 1, ... (a restricted
  /// growth string). Requires every element to be assigned.
  std::vector<Index> canonical_labels() const;
  std::vector<Index> cluster_sizes() const;

  /// Recomputes all bookkeeping from scratch and throws std::logic_error on
  /// any mismatch.
  void check_invariants() const;

 private:
  explicit Partition(Index n);
  Index open_cluster();
  void bump_size(Index old_size, Index new_size);

  std::vector<Index> assignment_;
  std::vector<Index> member_pos_;
  std::vector<std::vector<Index>> members_;
  std::vector<Index> live_;
  std::vector<Index> live_pos_;
  std::vector<Index> free_;
  std::vector<Index> size_counts_;
  Index max_size_ = 0;
  Index detached_ = 0;
};

/// True iff both partitions induce the same co-clustering relation.
bool equivalent(const Partition& a, const Partition& b);

/// Singletons, largest size, mean size N/K and the nearest-rank 90th
/// percentile of the cluster sizes.
ClusterSizeStats statistics(const Partition& p);

/// One CSV row of canonical labels.
std::string assignments_to_csv_row(const Partition& p);
Partition partition_from_csv_row(const std::string& row);

/// `record_id,cluster_id` with header.
void write_partition_csv(std::ostream& out, const Partition& p,
                         std::span<const std::string> record_ids = {});
Partition read_partition_csv(std::istream& in);

}  // namespace kolchin
