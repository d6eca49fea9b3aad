#include "kolchin/partition.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace kolchin {

Partition::Partition(Index n)
    : assignment_(n, kUnassigned),
      member_pos_(n, 0),
      members_(n),
      live_pos_(n, kUnassigned),
      size_counts_(n + 1, 0),
      detached_(n) {
  free_.reserve(n);
  for (Index c = n; c-- > 0;) free_.push_back(c);
}

Partition Partition::singletons(Index n) {
  Partition p(n);
  for (Index i = 0; i < n; ++i) p.attach(i, kNewCluster);
  return p;
}

Partition Partition::one_cluster(Index n) {
  Partition p(n);
  if (n == 0) return p;
  Index c = p.attach(0, kNewCluster);
  for (Index i = 1; i < n; ++i) p.attach(i, c);
  return p;
}

Partition Partition::from_assignments(std::span<const std::int64_t> labels) {
  if (labels.empty()) {
    throw std::invalid_argument("from_assignments: empty label vector");
  }
  Partition p(labels.size());
  std::unordered_map<std::int64_t, Index> slot_of;
  slot_of.reserve(labels.size());
  for (Index i = 0; i < labels.size(); ++i) {
    auto it = slot_of.find(labels[i]);
    if (it == slot_of.end()) {
      slot_of.emplace(labels[i], p.attach(i, kNewCluster));
    } else {
      p.attach(i, it->second);
    }
  }
  return p;
}

Partition Partition::from_sizes(std::span<const Index> sizes) {
  Index n = 0;
  for (Index s : sizes) {
    if (s == 0) throw std::invalid_argument("from_sizes: zero cluster size");
    n += s;
  }
  Partition p(n);
  Index next = 0;
  for (Index s : sizes) {
    Index c = p.attach(next++, kNewCluster);
    for (Index k = 1; k < s; ++k) p.attach(next++, c);
  }
  return p;
}

Index Partition::cluster_size(Index c) const {
  if (!is_live(c)) throw std::out_of_range("cluster_size: stale cluster id");
  return members_[c].size();
}

std::span<const Index> Partition::members(Index c) const {
  if (!is_live(c)) throw std::out_of_range("members: stale cluster id");
  return members_[c];
}

void Partition::bump_size(Index old_size, Index new_size) {
  if (old_size > 0) --size_counts_[old_size];
  if (new_size > 0) ++size_counts_[new_size];
  if (new_size > max_size_) {
    max_size_ = new_size;
  } else {
    while (max_size_ > 0 && size_counts_[max_size_] == 0) --max_size_;
  }
}

Index Partition::open_cluster() {
  Index c = free_.back();
  free_.pop_back();
  live_pos_[c] = live_.size();
  live_.push_back(c);
  return c;
}

void Partition::detach(Index n) {
  Index c = assignment_.at(n);
  if (c == kUnassigned) throw std::logic_error("detach: element already detached");
  auto& block = members_[c];
  Index pos = member_pos_[n];
  Index last = block.back();
  block[pos] = last;
  member_pos_[last] = pos;
  block.pop_back();
  assignment_[n] = kUnassigned;
  ++detached_;
  bump_size(block.size() + 1, block.size());
  if (block.empty()) {
    Index lp = live_pos_[c];
    Index moved = live_.back();
    live_[lp] = moved;
    live_pos_[moved] = lp;
    live_.pop_back();
    live_pos_[c] = kUnassigned;
    free_.push_back(c);
  }
}

Index Partition::attach(Index n, Index target) {
  if (assignment_.at(n) != kUnassigned) {
    throw std::logic_error("attach: element is still assigned");
  }
  Index c = target;
  if (target == kNewCluster) {
    c = open_cluster();
  } else if (!is_live(target)) {
    throw std::out_of_range("attach: stale cluster id");
  }
  auto& block = members_[c];
  member_pos_[n] = block.size();
  block.push_back(n);
  assignment_[n] = c;
  --detached_;
  bump_size(block.size() - 1, block.size());
  return c;
}

Index Partition::move_element(Index n, Index target) {
  if (target != kNewCluster && !is_live(target)) {
    throw std::out_of_range("move_element: stale cluster id");
  }
  detach(n);
  Index c = attach(n, target);
#ifdef KOLCHIN_DEBUG_CHECKS
  check_invariants();
#endif
  return c;
}

std::vector<Index> Partition::canonical_labels() const {
  if (detached_ != 0) {
    throw std::logic_error("canonical_labels: partition has detached elements");
  }
  std::vector<Index> relabel(members_.size(), kUnassigned);
  std::vector<Index> out(assignment_.size());
  Index next = 0;
  for (Index i = 0; i < assignment_.size(); ++i) {
    Index& r = relabel[assignment_[i]];
    if (r == kUnassigned) r = next++;
    out[i] = r;
  }
  return out;
}

std::vector<Index> Partition::cluster_sizes() const {
  std::vector<Index> sizes;
  sizes.reserve(live_.size());
  for (Index c : live_) sizes.push_back(members_[c].size());
  return sizes;
}

void Partition::check_invariants() const {
  auto fail = [](const char* what) { throw std::logic_error(what); };
  std::vector<Index> hist(size_counts_.size(), 0);
  Index assigned = 0;
  Index live_count = 0;
  Index max_size = 0;
  for (Index c = 0; c < members_.size(); ++c) {
    const auto& block = members_[c];
    if (block.empty()) {
      if (live_pos_[c] != kUnassigned) fail("empty cluster marked live");
      continue;
    }
    ++live_count;
    if (live_pos_[c] >= live_.size() || live_[live_pos_[c]] != c) {
      fail("live index out of sync");
    }
    for (Index k = 0; k < block.size(); ++k) {
      Index n = block[k];
      if (assignment_[n] != c || member_pos_[n] != k) fail("member index out of sync");
    }
    assigned += block.size();
    ++hist[block.size()];
    max_size = std::max(max_size, block.size());
  }
  if (live_count != live_.size()) fail("live list size mismatch");
  if (assigned + detached_ != assignment_.size()) fail("element count mismatch");
  if (hist != size_counts_) fail("size histogram mismatch");
  if (max_size != max_size_) fail("max size mismatch");
  Index weighted = 0;
  Index total = 0;
  for (Index m = 1; m < hist.size(); ++m) {
    weighted += m * hist[m];
    total += hist[m];
  }
  if (weighted != assigned || total != live_.size()) fail("histogram sums mismatch");
}

bool equivalent(const Partition& a, const Partition& b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("equivalent: partitions have different N");
  }
  return a.canonical_labels() == b.canonical_labels();
}

ClusterSizeStats statistics(const Partition& p) {
  ClusterSizeStats s;
  std::vector<Index> sizes = p.cluster_sizes();
  if (sizes.empty()) return s;
  std::sort(sizes.begin(), sizes.end());
  const Index k = sizes.size();
  s.num_clusters = k;
  s.n_singletons = p.size_count(1);
  s.max_size = sizes.back();
  s.mean_size = static_cast<double>(p.num_assigned()) / static_cast<double>(k);
  // nearest rank: the ceil(0.9 K)-th smallest value
  Index rank = (9 * k + 9) / 10;
  s.p90_size = sizes[std::max<Index>(rank, 1) - 1];
  return s;
}

std::string assignments_to_csv_row(const Partition& p) {
  std::string row;
  auto labels = p.canonical_labels();
  for (Index i = 0; i < labels.size(); ++i) {
    if (i) row.push_back(',');
    row += std::to_string(labels[i]);
  }
  return row;
}

Partition partition_from_csv_row(const std::string& row) {
  std::vector<std::int64_t> labels;
  std::stringstream ss(row);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    if (cell.empty()) continue;
    labels.push_back(std::stoll(cell));
  }
  return Partition::from_assignments(labels);
}

void write_partition_csv(std::ostream& out, const Partition& p,
                         std::span<const std::string> record_ids) {
  auto labels = p.canonical_labels();
  out << "record_id,cluster_id\n";
  for (Index i = 0; i < labels.size(); ++i) {
    if (record_ids.empty()) {
      out << i;
    } else {
      out << record_ids[i];
    }
    out << ',' << labels[i] << '\n';
  }
}

Partition read_partition_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) {
    throw std::invalid_argument("partition csv: missing header");
  }
  std::vector<std::int64_t> labels;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto comma = line.rfind(',');
    if (comma == std::string::npos) {
      throw std::invalid_argument("partition csv: malformed row '" + line + "'");
    }
    labels.push_back(std::stoll(line.substr(comma + 1)));
  }
  return Partition::from_assignments(labels);
}

}  // namespace kolchin
