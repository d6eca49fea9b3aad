#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "kolchin/kp_priors.hpp"
#include "kolchin/likelihood.hpp"
#include "kolchin/partition.hpp"
#include "kolchin/rng.hpp"
#include "kolchin/slice.hpp"

namespace kolchin {

enum class Kernel { kChaperones, kGibbs };
enum class ChaperoneMode { kUniform, kSimilarity };

Kernel parse_kernel(const std::string& s);
ChaperoneMode parse_chaperone_mode(const std::string& s);
std::string to_string(Kernel k);
std::string to_string(ChaperoneMode m);

struct McmcConfig {
  Index n_iterations = 1000;
  Index burn_in = 0;
  Index thinning = 1;
  std::uint64_t seed = 1;
  Kernel kernel = Kernel::kChaperones;
  ChaperoneMode chaperone_mode = ChaperoneMode::kSimilarity;
  /// Chaperone pairs per iteration; 0 means ceil(N / 2).
  Index pairs_per_iteration = 0;
  /// Gibbs scan order: sequential 0..N-1 unless set.
  bool random_scan = false;
  SliceOptions slice;
  bool update_partition = true;
  bool update_hyperparameters = true;
  bool update_delta = true;

  /// Throws std::invalid_argument on inconsistent settings.
  void validate() const;
};

/// Draws chaperone pairs from a distribution that depends on the records but
/// never on the chain state.
///
/// kUniform: uniform over unordered pairs.
/// kSimilarity: with probability 0.9, i uniform and j proportional to
/// 1 + (number of fields on which x_i and x_j agree); otherwise a uniform pair.
/// The uniform component keeps every pair's probability positive.
class ChaperonePairSampler {
 public:
  static constexpr double kSimilarityShare = 0.9;

  ChaperonePairSampler(Index n, ChaperoneMode mode, const RecordTable* records = nullptr);

  std::pair<Index, Index> sample(Rng& rng) const;
  /// Exact probability of the unordered pair {i, j}; O(N F).
  double pair_probability(Index i, Index j) const;
  ChaperoneMode mode() const { return mode_; }

 private:
  std::pair<Index, Index> uniform_pair(Rng& rng) const;

  Index n_;
  ChaperoneMode mode_;
  const RecordTable* records_;
};

/// Everything one Markov chain owns: the partition, the prior with its
/// hyperparameters, the likelihood with its sufficient statistics and the RNG.
class ChainState {
 public:
  /// Prior-only chain over partitions of `initial.size()` elements.
  ChainState(std::unique_ptr<PartitionPrior> prior, Partition initial, std::uint64_t seed);
  /// Chain with the collapsed categorical likelihood of `records`.
  ChainState(std::unique_ptr<PartitionPrior> prior, Partition initial,
             const RecordTable& records, FieldPrior field_prior, std::uint64_t seed);

  ChainState(const ChainState&) = delete;
  ChainState& operator=(const ChainState&) = delete;

  const Partition& partition() const { return partition_; }
  PartitionPrior& prior() { return *prior_; }
  const PartitionPrior& prior() const { return *prior_; }
  bool has_likelihood() const { return likelihood_.has_value(); }
  const CollapsedCategorical& likelihood() const { return *likelihood_; }
  CollapsedCategorical& likelihood() { return *likelihood_; }
  const SufficientStats& stats() const { return stats_; }
  Rng& rng() { return rng_; }
  Index iteration() const { return iteration_; }
  void set_iteration(Index it) { iteration_ = it; }

  /// Detach / attach with the sufficient statistics kept in sync.
  void detach(Index n);
  Index attach(Index n, Index target);

  /// log prior weight x predictive likelihood for placing detached n into
  /// `cluster` (or kNewCluster).
  double placement_log_weight(Index n, Index cluster) const;

  double log_joint() const;
  /// Throws std::logic_error if the statistics or partition bookkeeping drift.
  void check_consistency() const;

 private:
  std::unique_ptr<PartitionPrior> prior_;
  Partition partition_;
  std::optional<CollapsedCategorical> likelihood_;
  SufficientStats stats_;
  Rng rng_;
  Index iteration_ = 0;
};

/// Reassigns every element once from its full conditional (prior reseating
/// weight x predictive likelihood).
void gibbs_sweep(ChainState& state, bool random_scan = false);

/// Restricted Gibbs pass over S = c_i ∪ c_j (snapshot taken on entry). Each
/// element of S is reassigned so that afterwards it shares a cluster with a
/// chaperone; a chaperone may split off or merge only when no child is left
/// without a chaperone. Returns the number of elements that changed cluster.
Index chaperones_step(ChainState& state, Index i, Index j);

/// Slice update of delta (shared, or one per field).
void update_delta(ChainState& state, const SliceOptions& options);

/// One retained posterior draw.
struct Sample {
  Index iteration = 0;
  std::vector<Index> assignments;
  HyperValues hyper;
  std::vector<double> delta;
  std::vector<double> mu;
  double log_joint = 0.0;
};

Sample snapshot(const ChainState& state, Index mu_len = 32);

struct ChainResult {
  std::vector<Sample> samples;
  std::vector<double> log_joint_trace;
};

using SampleSink = std::function<void(const Sample&)>;

/// Alternates partition updates (chaperone pairs or Gibbs sweeps) with
/// hyperparameter and delta updates; hands each thinned post-burn-in sample to
/// `sink` if given, otherwise keeps it in the result.
ChainResult run_chain(ChainState& state, const McmcConfig& config,
                      const SampleSink& sink = {});

}  // namespace kolchin
