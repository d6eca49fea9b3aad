#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "kolchin/partition.hpp"
#include "kolchin/rng.hpp"

namespace kolchin {

/// A probability distribution over the positive integers {1, 2, ...}.
class CountDistribution {
 public:
  virtual ~CountDistribution() = default;
  /// -inf outside the support; throws std::domain_error for k == 0.
  virtual double log_pmf(Index k) const = 0;
  /// log P(X > k).
  virtual double log_survival(Index k) const;
  virtual Index sample(Rng& rng) const;
  virtual std::string describe() const = 0;
};

/// Negative binomial truncated to {1, 2, ...}:
///   P(k) = Gamma(k + shape) prob^k (1 - prob)^shape
///          / ((1 - (1 - prob)^shape) Gamma(shape) k!)
class TruncNegBin final : public CountDistribution {
 public:
  TruncNegBin(double shape, double prob);

  double shape() const { return shape_; }
  double prob() const { return prob_; }

  double log_pmf(Index k) const override;
  Index sample(Rng& rng) const override;
  std::string describe() const override;

  /// Upper bound on P(X > k) from the geometric decay of consecutive pmf
  /// ratios. Infinite when the ratio bound is not below one.
  double tail_bound(Index k) const;

  double untruncated_mean() const { return shape_ * prob_ / (1.0 - prob_); }
  double untruncated_variance() const {
    return shape_ * prob_ / ((1.0 - prob_) * (1.0 - prob_));
  }

 private:
  double shape_;
  double prob_;
  double log_norm_;  // log((1-prob)^shape / ((1-(1-prob)^shape) Gamma(shape)))
};

/// P(k) = prob (1 - prob)^(k-1); mean 1 / prob.
class Geometric final : public CountDistribution {
 public:
  explicit Geometric(double prob);
  double prob() const { return prob_; }
  double log_pmf(Index k) const override;
  double log_survival(Index k) const override;
  Index sample(Rng& rng) const override;
  std::string describe() const override;

 private:
  double prob_;
};

/// Explicit log-probabilities for sizes 1..T; zero mass beyond T.
class TabulatedCounts final : public CountDistribution {
 public:
  /// log_probs[m] is log P(m); entry 0 is ignored.
  explicit TabulatedCounts(std::vector<double> log_probs);
  double log_pmf(Index k) const override;
  Index sample(Rng& rng) const override;
  std::string describe() const override;
  Index max_value() const { return log_probs_.size() - 1; }
  std::span<const double> log_probs() const { return log_probs_; }

 private:
  std::vector<double> log_probs_;
};

/// Gamma(shape, 1) draw returned on the log scale. Stays finite for shapes far
/// below one, where the draw itself would underflow.
double sample_log_gamma(double shape, Rng& rng);

/// Finite Dirichlet draw via gamma normalization, on the log scale.
/// Zero parameters give -inf components.
std::vector<double> sample_log_dirichlet(std::span<const double> params, Rng& rng);

double log_sum_exp(std::span<const double> xs);

/// Samples an index with probability proportional to exp(log_weights[i]).
/// Entries equal to -inf are never selected.
Index sample_log_weights(std::span<const double> log_weights, Rng& rng);

}  // namespace kolchin
