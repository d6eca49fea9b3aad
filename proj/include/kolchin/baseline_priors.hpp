#pragma once

#include <memory>

#include "kolchin/kp_priors.hpp"

namespace kolchin {

struct DpParams {
  double theta = 1.0;
};

struct PypParams {
  double theta = 1.0;
  double d = 0.5;
};

/// Chinese restaurant process: existing cluster ~ |c|, new ~ theta.
ReseatWeights crp_weights(const Partition& p_minus_n, double theta);

/// Pitman-Yor: existing cluster ~ |c| - d, new ~ theta + d K.
ReseatWeights pyp_weights(const Partition& p_minus_n, double theta, double d);

/// E[K_N] = sum_{n=0}^{N-1} theta / (theta + n).
double dp_expected_clusters(double theta, Index n);

/// E[K_N] under PYP(theta, d) via E[K_{n+1}] = E[K_n] + (theta + d E[K_n]) / (theta + n).
double pyp_expected_clusters(double theta, double d, Index n);

/// theta such that the prior expected number of clusters equals `target`
/// (default N/2), found by bisection well past 1e-9 relative accuracy.
/// Requires 1 < target < N; throws std::domain_error otherwise.
double calibrate_dp(Index n, double target = 0.0);
double calibrate_pyp(Index n, double d, double target = 0.0);

class DpPrior final : public PartitionPrior {
 public:
  explicit DpPrior(DpParams params);
  std::string name() const override { return "dp"; }
  double log_join_weight(Index size) const override;
  double log_new_weight(Index num_clusters) const override;
  /// theta^K prod_c (|c| - 1)!
  double log_conditional(const Partition& p) const override;
  HyperValues hyperparameters() const override { return {{"theta", params_.theta}}; }
  std::unique_ptr<PartitionPrior> clone() const override;

 private:
  DpParams params_;
  double log_theta_;
};

class PypPrior final : public PartitionPrior {
 public:
  explicit PypPrior(PypParams params);
  std::string name() const override { return "pyp"; }
  double log_join_weight(Index size) const override;
  double log_new_weight(Index num_clusters) const override;
  /// prod_{k=1}^{K-1} (theta + k d) prod_c Gamma(|c| - d) / Gamma(1 - d)
  double log_conditional(const Partition& p) const override;
  HyperValues hyperparameters() const override {
    return {{"theta", params_.theta}, {"d", params_.d}};
  }
  std::unique_ptr<PartitionPrior> clone() const override;

 private:
  PypParams params_;
};

}  // namespace kolchin
