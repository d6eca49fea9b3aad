#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kolchin/inference.hpp"
#include "kolchin/partition.hpp"

namespace kolchin {

struct PairwiseErrors {
  double fnr = 0.0;
  double fdr = 0.0;
  /// Links present in both partitions.
  std::uint64_t true_links = 0;
  std::uint64_t false_negatives = 0;
  std::uint64_t false_positives = 0;
};

/// Pairwise false negative / false discovery rates of `pred` against `truth`.
/// FNR is 0 when truth has no links; FDR is 0 when pred has none.
PairwiseErrors pairwise_errors(const Partition& pred, const Partition& truth);
PairwiseErrors pairwise_errors(std::span<const Index> pred, std::span<const Index> truth);

/// Order statistics with linear interpolation between ranks.
struct Quantiles {
  double min = 0.0;
  double q25 = 0.0;
  double median = 0.0;
  double q75 = 0.0;
  double max = 0.0;
};
Quantiles quantiles(std::vector<double> xs);

inline constexpr std::array<const char*, 4> kStatNames = {"n_singletons", "max_size",
                                                          "mean_size", "p90_size"};

struct StatPosterior {
  std::string name;
  std::vector<double> samples;
  std::optional<double> truth;
};

struct EvalReport {
  std::string dataset;
  std::string variant;
  std::string model;
  Index n_samples = 0;
  double expected_k = 0.0;
  /// Posterior standard deviation of K (n - 1 denominator).
  double k_spread = 0.0;
  /// Posterior means of per-sample rates; NaN without a truth.
  double fnr = 0.0;
  double fdr = 0.0;
  /// Posterior mean of delta (averaged over fields when untied); NaN without one.
  double expected_delta = 0.0;
  std::optional<Index> true_k;
  std::vector<StatPosterior> stat_posteriors;
};

/// Throws std::invalid_argument for an empty stream or mismatched N.
EvalReport posterior_report(std::span<const Sample> samples,
                            const std::optional<Partition>& truth);

/// `dataset,variant,model,expected_K,K_spread,FNR,FDR,expected_delta`.
void write_report_table(std::ostream& out, std::span<const EvalReport> reports);
/// `dataset,variant,model,statistic,min,q25,median,q75,max,true_value`.
void write_stat_quantiles(std::ostream& out, std::span<const EvalReport> reports);

}  // namespace kolchin
