#include "kolchin/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "kolchin/distributions.hpp"

namespace kolchin {

namespace {
constexpr double kNegInf = -std::numeric_limits<double>::infinity();
}

Kernel parse_kernel(const std::string& s) {
  if (s == "chaperones") return Kernel::kChaperones;
  if (s == "gibbs") return Kernel::kGibbs;
  throw std::invalid_argument("unknown kernel '" + s + "' (chaperones|gibbs)");
}

ChaperoneMode parse_chaperone_mode(const std::string& s) {
  if (s == "uniform") return ChaperoneMode::kUniform;
  if (s == "similarity") return ChaperoneMode::kSimilarity;
  throw std::invalid_argument("unknown chaperone mode '" + s + "' (uniform|similarity)");
}

std::string to_string(Kernel k) { return k == Kernel::kGibbs ? "gibbs" : "chaperones"; }
std::string to_string(ChaperoneMode m) {
  return m == ChaperoneMode::kUniform ? "uniform" : "similarity";
}

void McmcConfig::validate() const {
  if (n_iterations == 0) throw std::invalid_argument("mcmc: iterations must be positive");
  if (burn_in >= n_iterations) {
    throw std::invalid_argument("mcmc: burn-in must be smaller than the iteration count");
  }
  if (thinning == 0) throw std::invalid_argument("mcmc: thinning must be at least 1");
  if (!(slice.width > 0.0)) throw std::invalid_argument("mcmc: slice width must be positive");
  if (slice.max_step_out < 1) throw std::invalid_argument("mcmc: max step-out must be >= 1");
}

// --- chaperone pairs -----------------------------------------------------------

ChaperonePairSampler::ChaperonePairSampler(Index n, ChaperoneMode mode,
                                           const RecordTable* records)
    : n_(n), mode_(mode), records_(records) {
  if (n < 2) throw std::invalid_argument("chaperones: need at least two elements");
  if (mode_ == ChaperoneMode::kSimilarity && records_ == nullptr) {
    mode_ = ChaperoneMode::kUniform;
  }
  if (records_ && records_->num_records() != n) {
    throw std::invalid_argument("chaperones: record count does not match N");
  }
}

std::pair<Index, Index> ChaperonePairSampler::uniform_pair(Rng& rng) const {
  Index i = uniform_index(rng, n_);
  Index j = uniform_index(rng, n_ - 1);
  if (j >= i) ++j;
  return {i, j};
}

std::pair<Index, Index> ChaperonePairSampler::sample(Rng& rng) const {
  if (mode_ == ChaperoneMode::kUniform || uniform01(rng) >= kSimilarityShare) {
    return uniform_pair(rng);
  }
  const Index i = uniform_index(rng, n_);
  const double max_weight = 1.0 + static_cast<double>(records_->num_fields());
  // j proportional to 1 + agreements, by rejection from the uniform proposal.
  while (true) {
    Index j = uniform_index(rng, n_ - 1);
    if (j >= i) ++j;
    const double w = 1.0 + static_cast<double>(records_->agreements(i, j));
    if (uniform01(rng) * max_weight < w) return {i, j};
  }
}

double ChaperonePairSampler::pair_probability(Index i, Index j) const {
  if (i == j || i >= n_ || j >= n_) return 0.0;
  const double nd = static_cast<double>(n_);
  const double uniform = 2.0 / (nd * (nd - 1.0));
  if (mode_ == ChaperoneMode::kUniform) return uniform;
  auto directed = [&](Index a, Index b) {
    double total = 0.0;
    for (Index k = 0; k < n_; ++k) {
      if (k != a) total += 1.0 + static_cast<double>(records_->agreements(a, k));
    }
    return (1.0 / nd) * (1.0 + static_cast<double>(records_->agreements(a, b))) / total;
  };
  return (1.0 - kSimilarityShare) * uniform +
         kSimilarityShare * (directed(i, j) + directed(j, i));
}

// --- chain state -----------------------------------------------------------------

ChainState::ChainState(std::unique_ptr<PartitionPrior> prior, Partition initial,
                       std::uint64_t seed)
    : prior_(std::move(prior)), partition_(std::move(initial)), rng_(seed) {
  if (!prior_) throw std::invalid_argument("ChainState: null prior");
  prior_->initialize(partition_, rng_);
}

ChainState::ChainState(std::unique_ptr<PartitionPrior> prior, Partition initial,
                       const RecordTable& records, FieldPrior field_prior,
                       std::uint64_t seed)
    : prior_(std::move(prior)), partition_(std::move(initial)), rng_(seed) {
  if (!prior_) throw std::invalid_argument("ChainState: null prior");
  if (partition_.size() != records.num_records()) {
    throw std::invalid_argument("ChainState: partition and records differ in N");
  }
  likelihood_.emplace(records, std::move(field_prior));
  stats_ = SufficientStats(records, partition_);
  prior_->initialize(partition_, rng_);
}

void ChainState::detach(Index n) {
  const Index c = partition_.cluster_of(n);
  if (likelihood_) stats_.remove(n, c);
  partition_.detach(n);
}

Index ChainState::attach(Index n, Index target) {
  const Index c = partition_.attach(n, target);
  if (likelihood_) stats_.add(n, c);
  return c;
}

double ChainState::placement_log_weight(Index n, Index cluster) const {
  if (cluster == kNewCluster) {
    double lw = prior_->log_new_weight_given(partition_);
    if (likelihood_ && lw != kNegInf) lw += likelihood_->new_cluster_log_weight(n);
    return lw;
  }
  double lw = prior_->log_join_weight_given(partition_, partition_.cluster_size(cluster));
  if (likelihood_ && lw != kNegInf) {
    lw += likelihood_->predictive_log_weight(stats_, n, cluster);
  }
  return lw;
}

double ChainState::log_joint() const {
  double lj = prior_->log_joint(partition_);
  if (likelihood_) {
    lj += likelihood_->log_likelihood(partition_, stats_);
    for (double d : likelihood_->prior().delta) lj -= d;  // Gam(1, 1)
  }
  return lj;
}

void ChainState::check_consistency() const {
  partition_.check_invariants();
  if (likelihood_) {
    SufficientStats fresh(likelihood_->table(), partition_);
    if (!(fresh == stats_)) {
      throw std::logic_error("ChainState: sufficient statistics out of sync");
    }
  }
}

// --- kernels -----------------------------------------------------------------------

void gibbs_sweep(ChainState& state, bool random_scan) {
  const Index n_total = state.partition().size();
  std::vector<Index> order(n_total);
  std::iota(order.begin(), order.end(), Index{0});
  if (random_scan) std::shuffle(order.begin(), order.end(), state.rng());

  std::vector<Index> candidates;
  std::vector<double> log_w;
  for (Index n : order) {
    state.detach(n);
    const auto& p = state.partition();
    candidates.assign(p.clusters().begin(), p.clusters().end());
    candidates.push_back(kNewCluster);
    log_w.resize(candidates.size());
    for (Index k = 0; k < candidates.size(); ++k) {
      log_w[k] = state.placement_log_weight(n, candidates[k]);
    }
    state.attach(n, candidates[sample_log_weights(log_w, state.rng())]);
  }
}

Index chaperones_step(ChainState& state, Index i, Index j) {
  if (i == j) throw std::invalid_argument("chaperones_step: chaperones must differ");
  const auto& p = state.partition();
  const Index ci = p.cluster_of(i);
  const Index cj = p.cluster_of(j);
  std::vector<Index> s(p.members(ci).begin(), p.members(ci).end());
  if (cj != ci) s.insert(s.end(), p.members(cj).begin(), p.members(cj).end());
  // The scan order must be a function of S alone. Member order inside a
  // cluster reflects the move history and would bias the kernel.
  std::sort(s.begin(), s.end());

  Index moved = 0;
  Index candidates[2];
  double log_w[2];
  for (Index n : s) {
    const Index old = p.cluster_of(n);
    const Index old_size = p.cluster_size(old);
    state.detach(n);
    Index count = 0;
    if (n != i && n != j) {
      // A child goes with one of the chaperones.
      candidates[count++] = p.cluster_of(i);
      if (p.cluster_of(j) != p.cluster_of(i)) candidates[count++] = p.cluster_of(j);
    } else {
      const Index other = p.cluster_of(n == i ? j : i);
      if (old_size == 1) {
        // Singleton chaperone: stay alone or merge into the other's cluster.
        candidates[count++] = other;
        candidates[count++] = kNewCluster;
      } else if (old == other) {
        // Sharing a cluster with the other chaperone: stay or split off.
        candidates[count++] = other;
        candidates[count++] = kNewCluster;
      } else {
        // Leaving would strand its children.
        candidates[count++] = old;
      }
    }
    Index choice = 0;
    if (count == 2) {
      log_w[0] = state.placement_log_weight(n, candidates[0]);
      log_w[1] = state.placement_log_weight(n, candidates[1]);
      choice = sample_log_weights(std::span<const double>(log_w, 2), state.rng());
    }
    const bool stays_alone = old_size == 1 && candidates[choice] == kNewCluster;
    const Index now = state.attach(n, candidates[choice]);
    if (now != old && !stays_alone) ++moved;
  }
  return moved;
}

void update_delta(ChainState& state, const SliceOptions& options) {
  if (!state.has_likelihood()) return;
  auto& lik = state.likelihood();
  const auto& p = state.partition();
  const auto& stats = state.stats();
  if (lik.prior().tied) {
    auto density = [&](double d) {
      if (!(d > 0.0) || !std::isfinite(d)) return kNegInf;
      return -d + lik.log_likelihood_with_delta(p, stats, d);
    };
    lik.set_delta(0, slice_sample_positive(density, lik.prior().delta[0], options,
                                           state.rng()));
    return;
  }
  for (Index f = 0; f < lik.table().num_fields(); ++f) {
    auto density = [&](double d) {
      if (!(d > 0.0) || !std::isfinite(d)) return kNegInf;
      return -d + lik.log_likelihood_with_delta(p, stats, d, f);
    };
    lik.set_delta(f, slice_sample_positive(density, lik.prior().delta[f], options,
                                           state.rng()));
  }
}

Sample snapshot(const ChainState& state, Index mu_len) {
  Sample s;
  s.iteration = state.iteration();
  s.assignments = state.partition().canonical_labels();
  s.hyper = state.prior().hyperparameters();
  if (state.has_likelihood()) s.delta = state.likelihood().prior().delta;
  s.mu = state.prior().mu_snapshot(mu_len);
  s.log_joint = state.log_joint();
  return s;
}

ChainResult run_chain(ChainState& state, const McmcConfig& config, const SampleSink& sink) {
  config.validate();
  const Index n = state.partition().size();
  ChainResult result;
  result.log_joint_trace.reserve(config.n_iterations);

  std::optional<ChaperonePairSampler> pairs;
  Index pairs_per_iteration = config.pairs_per_iteration;
  if (config.kernel == Kernel::kChaperones && n >= 2) {
    pairs.emplace(n, config.chaperone_mode,
                  state.has_likelihood() ? &state.likelihood().table() : nullptr);
    if (pairs_per_iteration == 0) pairs_per_iteration = (n + 1) / 2;
  }

  for (Index it = 1; it <= config.n_iterations; ++it) {
    state.set_iteration(it);
    if (config.update_partition && n >= 2) {
      if (pairs) {
        for (Index k = 0; k < pairs_per_iteration; ++k) {
          auto [i, j] = pairs->sample(state.rng());
          chaperones_step(state, i, j);
        }
      } else {
        gibbs_sweep(state, config.random_scan);
      }
    }
    if (config.update_hyperparameters) {
      state.prior().update_hyperparameters(state.partition(), state.rng(), config.slice);
    }
    if (config.update_delta) update_delta(state, config.slice);

    const double lj = state.log_joint();
    if (!std::isfinite(lj)) throw std::runtime_error("run_chain: non-finite log joint");
    result.log_joint_trace.push_back(lj);
#ifdef KOLCHIN_DEBUG_CHECKS
    if (it % 1000 == 0) state.check_consistency();
#endif
    if (it > config.burn_in && (it - config.burn_in) % config.thinning == 0) {
      Sample s = snapshot(state);
      if (sink) {
        sink(s);
      } else {
        result.samples.push_back(std::move(s));
      }
    }
  }
  return result;
}

}  // namespace kolchin
