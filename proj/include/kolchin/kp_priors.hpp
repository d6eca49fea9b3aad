#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "kolchin/distributions.hpp"
#include "kolchin/partition.hpp"
#include "kolchin/rng.hpp"
#include "kolchin/slice.hpp"

namespace kolchin {

/// Reseating weights on a partition with one element removed. `clusters`
/// lists the live clusters; `weights` has one entry per cluster followed by
/// the weight of opening a new cluster (unnormalized, linear scale).
struct ReseatWeights {
  std::vector<Index> clusters;
  std::vector<double> weights;

  double new_cluster_weight() const { return weights.back(); }
  std::vector<double> probabilities() const;
};

using HyperValues = std::vector<std::pair<std::string, double>>;

/// A prior over partitions of a fixed N that can drive reseating moves.
///
/// Most priors have product-form reseating weights: joining an existing
/// cluster depends only on that cluster's size, and opening a new cluster
/// depends only on the number of clusters left after removal. Priors whose
/// weights also depend on the size histogram override the `*_given` forms.
class PartitionPrior {
 public:
  virtual ~PartitionPrior() = default;

  virtual std::string name() const = 0;
  /// log weight for joining a cluster of `size` (size measured without the
  /// element being placed). -inf when the move has zero probability.
  virtual double log_join_weight(Index size) const = 0;
  /// log weight for opening a new cluster next to `num_clusters` others.
  virtual double log_new_weight(Index num_clusters) const = 0;
  /// Same weights evaluated on the partition with the element removed.
  virtual double log_join_weight_given(const Partition& /*p_minus_n*/, Index size) const {
    return log_join_weight(size);
  }
  virtual double log_new_weight_given(const Partition& p_minus_n) const {
    return log_new_weight(p_minus_n.num_clusters());
  }
  /// Unnormalized log P(C_N | N, current hyperparameters).
  virtual double log_conditional(const Partition& p) const = 0;
  /// Log density of the hyperparameter prior at the current values (zero for
  /// fixed hyperparameters).
  virtual double log_hyperprior() const { return 0.0; }
  /// Log joint of the partition and free hyperparameters, up to constants.
  virtual double log_joint(const Partition& p) const {
    return log_conditional(p) + log_hyperprior();
  }
  /// Resample hyperparameters from their conditional given the partition.
  virtual void update_hyperparameters(const Partition& /*p*/, Rng& /*rng*/,
                                      const SliceOptions& /*opts*/) {}
  /// Called once when a chain starts from partition `p`.
  virtual void initialize(const Partition& /*p*/, Rng& /*rng*/) {}
  /// Current size distribution mu_1..mu_T (empty when mu is not a free
  /// parameter of the model).
  virtual std::vector<double> mu_snapshot(Index /*max_len*/) const { return {}; }
  virtual HyperValues hyperparameters() const = 0;
  virtual std::unique_ptr<PartitionPrior> clone() const = 0;
};

/// Candidate weights from a prior's per-size rules.
ReseatWeights reseat_weights(const PartitionPrior& prior, const Partition& p_minus_n);

// ---------------------------------------------------------------------------
// Generic Kolchin partition model

double trunc_negbin_log_pmf(const TruncNegBin& d, Index k);

/// log[ K! kappa_K / N! * prod_c |c|! mu_|c| ].
double kp_log_pmf(const Partition& p, const CountDistribution& kappa,
                  const CountDistribution& mu);

/// Existing cluster c: (|c|+1) mu_{|c|+1} / mu_{|c|};
/// new cluster: (K+1) kappa_{K+1} / kappa_K * mu_1, with K = |C \ n|.
/// Throws std::domain_error if an occupied size has zero mass under mu.
ReseatWeights reseat_weights_generic(const Partition& p_minus_n,
                                     const CountDistribution& kappa,
                                     const CountDistribution& mu);

/// The KP model with arbitrary kappa and mu held fixed.
class KolchinPrior final : public PartitionPrior {
 public:
  KolchinPrior(std::shared_ptr<const CountDistribution> kappa,
               std::shared_ptr<const CountDistribution> mu);

  std::string name() const override { return "kp"; }
  double log_join_weight(Index size) const override;
  double log_new_weight(Index num_clusters) const override;
  double log_conditional(const Partition& p) const override;
  HyperValues hyperparameters() const override { return {}; }
  std::unique_ptr<PartitionPrior> clone() const override;

  const CountDistribution& kappa() const { return *kappa_; }
  const CountDistribution& mu() const { return *mu_; }

 private:
  std::shared_ptr<const CountDistribution> kappa_;
  std::shared_ptr<const CountDistribution> mu_;
};

// ---------------------------------------------------------------------------
// NBNB: kappa = NegBin(a, q), mu = NegBin(r, p), both truncated to {1, 2, ...}

struct NbnbHyper {
  double a = 1.0;
  double q = 0.5;
  double r = 1.0;
  double p = 0.5;
  // r ~ Gam(eta_r, s_r), p ~ Beta(u_p, v_p)
  double eta_r = 1.0;
  double s_r = 1.0;
  double u_p = 2.0;
  double v_p = 2.0;
};

/// log beta with beta = q (1-p)^r / (1 - (1-p)^r).
double nbnb_log_beta(double q, double r, double p);

/// log[ Gamma(K + a) beta^K prod_c Gamma(|c| + r) / Gamma(r) ].
double nbnb_cond_log_pmf_unnorm(const Partition& p, double a, double q, double r,
                                double pp);

/// Existing cluster: |c| + r. New cluster: (K + a) beta r.
///
/// The trailing factor r = Gamma(1 + r) / Gamma(r) is the new singleton's
/// contribution to the product in the conditional pmf above; it is what makes
/// these weights agree with reseat_weights_generic for every r.
ReseatWeights reseat_weights_nbnb(const Partition& p_minus_n, double a, double q,
                                  double r, double pp);

enum class RConditionalForm {
  /// Gamma(|c| + r) / Gamma(r) per cluster: the r-dependent part of the joint
  /// density. This is the form the sampler uses.
  kFromJoint,
  /// Gamma(|c| - 1 + r) / Gamma(r) per cluster, the shifted variant of the
  /// same expression. Not proportional to the joint in r; never used for
  /// inference.
  kShiftedGamma,
};

/// Unnormalized log conditional density of r given the partition and p:
///   (eta_r - 1) log r - r / s_r + r K log(1-p) - K log(1 - (1-p)^r)
///   + sum_c [log Gamma(|c| + r) - log Gamma(r)]           (kFromJoint)
/// Throws std::domain_error for r <= 0 or p outside (0, 1).
double r_log_cond(double r, const Partition& p, double pp, double eta_r, double s_r,
                  RConditionalForm form = RConditionalForm::kFromJoint);

/// Unnormalized log conditional density of p given the partition and r:
///   (N + u_p - 1) log p + (r K + v_p - 1) log(1-p) - K log(1 - (1-p)^r)
double p_log_cond(double pp, const Partition& p, double r, double u_p, double v_p);

/// Full log joint of (C_N, r, p) up to terms free of all three.
double nbnb_log_joint(const Partition& p, const NbnbHyper& h);

class NbnbPrior final : public PartitionPrior {
 public:
  explicit NbnbPrior(NbnbHyper hyper, bool learn_r_p = true);

  std::string name() const override { return "nbnb"; }
  double log_join_weight(Index size) const override;
  double log_new_weight(Index num_clusters) const override;
  double log_conditional(const Partition& p) const override;
  double log_hyperprior() const override;
  double log_joint(const Partition& p) const override;
  void update_hyperparameters(const Partition& p, Rng& rng,
                              const SliceOptions& opts) override;
  HyperValues hyperparameters() const override;
  std::unique_ptr<PartitionPrior> clone() const override;

  const NbnbHyper& hyper() const { return h_; }
  void set_r_p(double r, double p);

 private:
  NbnbHyper h_;
  bool learn_;
  double log_beta_;
};

// ---------------------------------------------------------------------------
// NBD: kappa = NegBin(a, q), mu ~ Dir(alpha, mu0) over {1, 2, ...}

/// Dirichlet parameters for (mu_1, ..., mu_N, remainder):
///   (alpha mu0_1 + L_1, ..., alpha mu0_N + L_N, alpha (1 - sum_{m<=N} mu0_m)).
std::vector<double> nbd_mu_posterior(const Partition& p, double alpha,
                                     const CountDistribution& base);

/// log[ Gamma(K + a) q^K prod_c |c|! mu_|c| ], with log_mu[m] = log mu_m.
/// Throws std::out_of_range if a cluster is larger than the truncation.
double nbd_cond_log_pmf_unnorm(const Partition& p, double a, double q,
                               std::span<const double> log_mu);

/// Same with mu integrated out:
///   log[ Gamma(K + a) q^K prod_c |c|! prod_m (alpha mu0_m)^(L_m) / alpha^(K) ]
/// where x^(L) is the rising factorial.
double nbd_collapsed_log_pmf_unnorm(const Partition& p, double a, double q, double alpha,
                                    const CountDistribution& base);

/// Reseating weights with mu integrated out, on a partition with L_m clusters
/// of size m and K clusters:
///   join size m: (m + 1) (alpha mu0_{m+1} + L_{m+1}) / (alpha mu0_m + L_m - 1)
///   new:         (K + a) q (alpha mu0_1 + L_1) / (alpha + K)
ReseatWeights reseat_weights_nbd_collapsed(const Partition& p_minus_n, double a, double q,
                                           double alpha, const CountDistribution& base);

/// Truncated draw of mu and the data that produced it.
struct SizeDirichlet {
  double alpha = 1.0;
  std::shared_ptr<const CountDistribution> base;
  /// log mu_m for m = 1..N (index 0 unused).
  std::vector<double> log_mu;
  /// log of the discarded mass 1 - sum_{m<=N} mu_m.
  double log_remainder = -std::numeric_limits<double>::infinity();

  /// Draws mu from its conditional given the partition.
  void resample(const Partition& p, Rng& rng);
  /// Draws (mu_1, ..., mu_n, remainder) from the prior.
  void resample_prior(Index n, Rng& rng);
};

/// With `learn_mu`, partition moves use the collapsed weights and mu is drawn
/// from its conditional after each sweep; otherwise mu is held fixed.
class NbdPrior final : public PartitionPrior {
 public:
  NbdPrior(double a, double q, double alpha,
           std::shared_ptr<const CountDistribution> base, bool learn_mu = true);

  std::string name() const override { return "nbd"; }
  double log_join_weight(Index size) const override;
  double log_new_weight(Index num_clusters) const override;
  double log_join_weight_given(const Partition& p_minus_n, Index size) const override;
  double log_new_weight_given(const Partition& p_minus_n) const override;
  /// Collapsed over mu when mu is learned.
  double log_conditional(const Partition& p) const override;
  void update_hyperparameters(const Partition& p, Rng& rng,
                              const SliceOptions& opts) override;
  void initialize(const Partition& p, Rng& rng) override;
  bool learns_mu() const { return learn_; }
  std::vector<double> mu_snapshot(Index max_len) const override;
  HyperValues hyperparameters() const override;
  std::unique_ptr<PartitionPrior> clone() const override;

  double a() const { return a_; }
  double q() const { return q_; }
  const SizeDirichlet& mu() const { return mu_; }
  /// Installs a fixed mu (log scale, index 0 unused).
  void set_log_mu(std::vector<double> log_mu);
  /// Draws mu from its conditional given `p`.
  void draw_mu(const Partition& p, Rng& rng);
  void draw_mu_prior(Index n, Rng& rng);

 private:
  double a_;
  double q_;
  bool learn_;
  SizeDirichlet mu_;
};

/// (a, q) such that the untruncated NegBin(a, q) has mean N/2 and variance N^2/4:
/// q = 1 - 2/N, a = N / (N - 2). Throws std::domain_error for N < 3.
std::pair<double, double> calibrate_kappa(Index n);

}  // namespace kolchin
