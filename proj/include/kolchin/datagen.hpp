#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "kolchin/config.hpp"
#include "kolchin/distributions.hpp"
#include "kolchin/likelihood.hpp"
#include "kolchin/partition.hpp"
#include "kolchin/rng.hpp"

namespace kolchin {

/// K ~ kappa, sizes iid ~ mu, labels assigned by a uniform permutation.
Partition sample_partition_forward(const CountDistribution& kappa,
                                   const CountDistribution& mu, Rng& rng);

/// Cluster sizes only, in draw order.
std::vector<Index> sample_sizes_forward(const CountDistribution& kappa,
                                        const CountDistribution& mu, Rng& rng);

/// Thrown when the rejection sampler's acceptance rate falls below its floor.
class AcceptanceFloorError : public std::runtime_error {
 public:
  AcceptanceFloorError(double rate, Index n);
  double rate() const { return rate_; }

 private:
  double rate_;
};

struct RejectionOptions {
  /// Give up once at least `min_trials` proposals were made and the running
  /// acceptance rate is below `min_acceptance`.
  double min_acceptance = 1e-4;
  std::uint64_t min_trials = 100000;
};

/// Exact draws from P(C_N | N) by proposing forward draws until the sizes sum
/// to N. A draw of mu, when the model has one, is part of each proposal.
class RejectionSampler {
 public:
  using SizeProposal = std::function<bool(Rng&, Index n, std::vector<Index>& sizes)>;

  RejectionSampler(const CountDistribution& kappa, const CountDistribution& mu, Index n,
                   RejectionOptions options = {});
  /// `propose` fills `sizes` and returns false on early rejection.
  RejectionSampler(SizeProposal propose, Index n, RejectionOptions options = {});

  Partition sample(Rng& rng);
  /// Accepted size vector, without label permutation.
  std::vector<Index> sample_sizes(Rng& rng);

  std::uint64_t trials() const { return trials_; }
  std::uint64_t accepted() const { return accepted_; }
  double acceptance_rate() const;

 private:
  SizeProposal propose_;
  Index n_;
  RejectionOptions options_;
  std::uint64_t trials_ = 0;
  std::uint64_t accepted_ = 0;
};

Partition sample_partition_given_n_rejection(const CountDistribution& kappa,
                                             const CountDistribution& mu, Index n, Rng& rng,
                                             RejectionOptions options = {});

/// size -> number of clusters of that size.
using SizeHistogram = std::map<Index, Index>;

/// Exact draws of the cluster-size histogram under the NBD model given N, with
/// mu integrated out. Requires a == alpha, where
///   P(L | N) is proportional to prod_m q^{L_m} (alpha mu0_m)^(L_m) / L_m!
/// so the histogram can be sampled by dynamic programming over (size, total).
/// Rows of the table are recomputed from checkpoints, so memory is
/// O(N^1.5) and time O(N^2 log N) per batch of draws.
class NbdExactSampler {
 public:
  /// Throws std::invalid_argument when a != alpha.
  NbdExactSampler(double a, double q, double alpha,
                  std::shared_ptr<const CountDistribution> base, Index n);

  std::vector<SizeHistogram> sample(Index count, Rng& rng) const;

 private:
  using Row = std::vector<double>;
  Row next_row(Index m, const Row& above) const;
  double log_term(Index m, Index l) const;

  double log_q_;
  double log_alpha_;
  std::shared_ptr<const CountDistribution> base_;
  Index n_;
  Index block_;
  std::map<Index, Row> checkpoints_;
};

/// Partition of the given cluster sizes with labels assigned by a uniform
/// permutation.
Partition permuted_partition(std::span<const Index> sizes, Rng& rng);

/// One categorical field and its base distribution gamma.
struct FieldModel {
  FieldSpec spec;
  std::vector<double> gamma;
};

/// theta_{fk} ~ Dir(delta_f gamma_f) per cluster and field, then each
/// record's value ~ Cat(theta_{f z_n}). `delta` holds one value per field or a
/// single shared value. Ground truth = canonical labels of `p`.
RecordTable generate_records(const Partition& p, const std::vector<FieldModel>& fields,
                             std::span<const double> delta, Rng& rng);

enum class DownsampleMode { kProportional, kKeepLarge };
DownsampleMode parse_downsample_mode(const std::string& s);
std::string to_string(DownsampleMode m);

/// Selects whole clusters from `histogram` so that the total is exactly
/// `target_n`, keeping per-size proportions by largest-remainder rounding.
/// kProportional keeps at least one cluster of the maximum size; kKeepLarge
/// first retains `keep` and allocates the rest proportionally. Throws
/// std::invalid_argument when the target cannot be met.
SizeHistogram downsample_preserving_sizes(const SizeHistogram& histogram, Index target_n,
                                          DownsampleMode mode,
                                          const SizeHistogram& keep = {});

Index histogram_records(const SizeHistogram& h);
Index histogram_clusters(const SizeHistogram& h);
/// Sizes in ascending order, one entry per cluster.
std::vector<Index> histogram_sizes(const SizeHistogram& h);
SizeHistogram parse_histogram(const std::string& s);
std::string format_histogram(const SizeHistogram& h);

/// A synthetic data-set recipe.
struct DatasetConfig {
  std::string name = "dataset";
  std::uint64_t seed = 1;
  std::vector<FieldModel> fields;
  SizeHistogram sizes;
  std::optional<Index> target_n;
  DownsampleMode downsample = DownsampleMode::kProportional;
  SizeHistogram keep_large;
  std::vector<double> deltas;

  /// Keys: name, seed, fields, gamma.<field>, sizes, target_n, downsample,
  /// keep_large, deltas. `gamma.<field>` is `label:weight,...` or `uniform:D`.
  static DatasetConfig from_config(const Config& c);
  /// Cluster sizes after any down-sampling.
  SizeHistogram effective_sizes() const;
};

struct GeneratedVariant {
  double delta = 0.0;
  RecordTable records;
};

/// One record table per delta; all variants share one partition.
std::vector<GeneratedVariant> generate_dataset(const DatasetConfig& config);

}  // namespace kolchin
