#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "kolchin/partition.hpp"

namespace kolchin {

using Category = std::uint32_t;

struct FieldSpec {
  std::string name;
  std::vector<std::string> categories;

  Index num_categories() const { return categories.size(); }
};

/// N records, each with F categorical fields stored as category indices.
class RecordTable {
 public:
  RecordTable() = default;
  RecordTable(std::vector<FieldSpec> fields, std::vector<Category> values,
              std::vector<std::string> record_ids,
              std::optional<std::vector<std::int64_t>> truth = std::nullopt);

  Index num_records() const { return record_ids_.size(); }
  Index num_fields() const { return fields_.size(); }
  const std::vector<FieldSpec>& fields() const { return fields_; }
  Category value(Index record, Index field) const {
    return values_[record * fields_.size() + field];
  }
  std::span<const Category> row(Index record) const {
    return {values_.data() + record * fields_.size(), fields_.size()};
  }
  const std::vector<std::string>& record_ids() const { return record_ids_; }
  bool has_truth() const { return truth_.has_value(); }
  const std::vector<std::int64_t>& truth() const { return truth_.value(); }
  Partition truth_partition() const { return Partition::from_assignments(truth()); }

  /// Empirical category frequencies of one field.
  std::vector<double> empirical_distribution(Index field) const;
  /// Number of fields on which two records agree.
  Index agreements(Index i, Index j) const;

 private:
  std::vector<FieldSpec> fields_;
  std::vector<Category> values_;
  std::vector<std::string> record_ids_;
  std::optional<std::vector<std::int64_t>> truth_;
};

/// Reads the records CSV: header `record_id[,entity_id],field...`, category
/// strings in the field columns. Vocabularies are built in first-seen order.
/// Empty cells are rejected (missing values are unsupported).
RecordTable read_records_csv(std::istream& in);
void write_records_csv(std::ostream& out, const RecordTable& table);

/// Per-field Dirichlet base measures and concentrations.
struct FieldPrior {
  /// One entry per field, or a single shared entry when tied.
  std::vector<double> delta;
  std::vector<std::vector<double>> gamma;
  bool tied = true;

  double delta_for(Index field) const { return tied ? delta.front() : delta[field]; }

  /// gamma_f = empirical category distribution of each field.
  static FieldPrior empirical(const RecordTable& table, double delta0, bool tied);
};

/// log[ Gamma(delta) / Gamma(delta + n) prod_v Gamma(delta gamma_v + n_v) / Gamma(delta gamma_v) ]
/// with n = sum of counts. Throws std::domain_error when a category with zero
/// base mass is observed.
double cluster_field_log_ml(std::span<const std::uint32_t> counts, double delta,
                            std::span<const double> gamma);

/// Per-cluster, per-field category counts for the clusters of one partition.
/// Keyed by the partition's cluster ids; counts are stored sparsely.
class SufficientStats {
 public:
  struct Entry {
    Category category;
    std::uint32_t count;
  };

  SufficientStats() = default;
  SufficientStats(const RecordTable& table, const Partition& p);

  void add(Index record, Index cluster);
  void remove(Index record, Index cluster);
  std::span<const Entry> counts(Index cluster, Index field) const {
    return cells_[cluster * num_fields_ + field];
  }
  std::uint32_t count(Index cluster, Index field, Category v) const;
  std::uint32_t size(Index cluster) const { return sizes_[cluster]; }

  bool operator==(const SufficientStats& other) const;

 private:
  const RecordTable* table_ = nullptr;
  Index num_fields_ = 0;
  std::vector<std::vector<Entry>> cells_;
  std::vector<std::uint32_t> sizes_;
};

/// The collapsed Dirichlet-categorical entity-resolution likelihood.
class CollapsedCategorical {
 public:
  CollapsedCategorical(const RecordTable& table, FieldPrior prior);

  const RecordTable& table() const { return *table_; }
  const FieldPrior& prior() const { return prior_; }
  FieldPrior& prior() { return prior_; }
  void set_delta(Index slot, double delta);

  /// sum_f log[(delta_f gamma_{f,x} + n_{c,f,x}) / (delta_f + |c|)] for record n
  /// not currently counted in `cluster`.
  double predictive_log_weight(const SufficientStats& stats, Index record,
                               Index cluster) const;
  /// Same factor for a new, empty cluster: sum_f log gamma_{f,x}.
  double new_cluster_log_weight(Index record) const;

  /// Log marginal likelihood of one cluster on one field.
  double cluster_log_ml(const SufficientStats& stats, Index cluster, Index field,
                        double delta) const;
  /// Sum over clusters and fields (or one field when `field` is given).
  double log_likelihood(const Partition& p, const SufficientStats& stats,
                        std::optional<Index> field = std::nullopt) const;
  double log_likelihood_with_delta(const Partition& p, const SufficientStats& stats,
                                   double delta,
                                   std::optional<Index> field = std::nullopt) const;

 private:
  const RecordTable* table_;
  FieldPrior prior_;
  std::vector<std::vector<double>> log_gamma_;
};

/// Unnormalized log conditional density of delta: Gam(1,1) log prior plus the
/// collapsed likelihood of the fields it governs (all fields when tied,
/// otherwise only `field`). Recomputes counts from scratch.
double delta_log_cond(double delta, const Partition& p, const RecordTable& records,
                      std::span<const std::vector<double>> gamma, bool tied,
                      Index field = 0);

/// Analytic d/d delta of delta_log_cond.
double delta_log_cond_derivative(double delta, const Partition& p,
                                 const RecordTable& records,
                                 std::span<const std::vector<double>> gamma, bool tied,
                                 Index field = 0);

}  // namespace kolchin
