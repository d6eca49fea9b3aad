#include "kolchin/oracle.hpp"

#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace kolchin {

void for_each_partition(Index n,
                        const std::function<void(const std::vector<std::uint8_t>&)>& visit) {
  if (n > kOracleMaxN) {
    throw std::length_error("enumerate_partitions: N exceeds the oracle cap of 12");
  }
  if (n == 0) return;
  // a[i] <= max(a[0..i-1]) + 1; prefix_max[i] = max(a[0..i]).
  std::vector<std::uint8_t> a(n, 0);
  std::vector<std::uint8_t> prefix_max(n, 0);
  while (true) {
    visit(a);
    Index i = n - 1;
    while (i > 0 && a[i] == prefix_max[i - 1] + 1) --i;
    if (i == 0) return;
    ++a[i];
    prefix_max[i] = std::max(prefix_max[i - 1], a[i]);
    for (Index k = i + 1; k < n; ++k) {
      a[k] = 0;
      prefix_max[k] = prefix_max[i];
    }
  }
}

std::vector<std::vector<std::uint8_t>> enumerate_partitions(Index n) {
  std::vector<std::vector<std::uint8_t>> out;
  for_each_partition(n, [&](const std::vector<std::uint8_t>& a) { out.push_back(a); });
  return out;
}

std::vector<std::uint64_t> bell_numbers(Index n) {
  // Bell triangle.
  std::vector<std::uint64_t> bell{1};
  std::vector<std::uint64_t> row{1};
  for (Index i = 1; i <= n; ++i) {
    std::vector<std::uint64_t> next{row.back()};
    for (std::uint64_t x : row) next.push_back(next.back() + x);
    bell.push_back(next.front());
    row = std::move(next);
  }
  return bell;
}

std::uint64_t rgs_key(std::span<const Index> labels) {
  std::uint64_t key = 0;
  for (Index x : labels) key = key * 13 + x;
  return key;
}

Index PartitionTable::index_of(std::span<const Index> canonical_labels) const {
  auto it = lookup.find(rgs_key(canonical_labels));
  if (it == lookup.end()) throw std::out_of_range("PartitionTable: unknown partition");
  return it->second;
}

Partition PartitionTable::partition(Index i) const {
  const auto& a = partitions.at(i);
  std::vector<std::int64_t> labels(a.begin(), a.end());
  return Partition::from_assignments(labels);
}

PartitionTable exact_conditional_pmf(const PartitionLogWeight& model, Index n) {
  PartitionTable t;
  t.n = n;
  std::vector<Index> labels(n);
  for_each_partition(n, [&](const std::vector<std::uint8_t>& a) {
    std::vector<std::int64_t> l(a.begin(), a.end());
    for (Index i = 0; i < n; ++i) labels[i] = a[i];
    t.lookup.emplace(rgs_key(labels), t.partitions.size());
    t.partitions.push_back(a);
    t.log_weights.push_back(model(Partition::from_assignments(l)));
  });
  double mx = -std::numeric_limits<double>::infinity();
  for (double w : t.log_weights) {
    if (std::isnan(w)) throw std::domain_error("exact_conditional_pmf: NaN weight");
    mx = std::max(mx, w);
  }
  if (mx == -std::numeric_limits<double>::infinity()) {
    throw std::domain_error("exact_conditional_pmf: all weights are zero");
  }
  double total = 0.0;
  for (double w : t.log_weights) total += std::exp(w - mx);
  t.log_normalizer = mx + std::log(total);
  t.probabilities.reserve(t.log_weights.size());
  for (double w : t.log_weights) t.probabilities.push_back(std::exp(w - t.log_normalizer));
  return t;
}

ReseatWeights exact_site_conditional(const PartitionLogWeight& model, const Partition& p,
                                     Index n) {
  if (p.size() > kOracleMaxN) {
    throw std::length_error("exact_site_conditional: N exceeds the oracle cap");
  }
  Partition rest = p;
  rest.detach(n);
  ReseatWeights out;
  auto clusters = rest.clusters();
  out.clusters.assign(clusters.begin(), clusters.end());
  std::vector<double> logs;
  for (Index c : out.clusters) {
    Partition q = rest;
    q.attach(n, c);
    logs.push_back(model(q));
  }
  {
    Partition q = rest;
    q.attach(n, kNewCluster);
    logs.push_back(model(q));
  }
  const double lse = log_sum_exp(logs);
  for (double l : logs) out.weights.push_back(std::exp(l - lse));
  return out;
}

void write_partition_table_csv(std::ostream& out, const PartitionTable& table) {
  out << "partition,probability,log_weight\n";
  out.precision(17);
  for (Index i = 0; i < table.partitions.size(); ++i) {
    const auto& a = table.partitions[i];
    for (Index k = 0; k < a.size(); ++k) {
      if (k) out << '-';
      out << static_cast<int>(a[k]);
    }
    out << ',' << table.probabilities[i] << ',' << table.log_weights[i] << '\n';
  }
}

double total_variation(std::span<const std::uint64_t> counts,
                       std::span<const double> probabilities) {
  if (counts.size() != probabilities.size()) {
    throw std::invalid_argument("total_variation: length mismatch");
  }
  double total = 0.0;
  for (auto c : counts) total += static_cast<double>(c);
  double tv = 0.0;
  for (Index i = 0; i < counts.size(); ++i) {
    tv += std::abs(static_cast<double>(counts[i]) / total - probabilities[i]);
  }
  return 0.5 * tv;
}

}  // namespace kolchin
