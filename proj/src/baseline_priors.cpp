#include "kolchin/baseline_priors.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

namespace kolchin {

ReseatWeights crp_weights(const Partition& p_minus_n, double theta) {
  ReseatWeights w;
  auto clusters = p_minus_n.clusters();
  w.clusters.assign(clusters.begin(), clusters.end());
  for (Index c : clusters) {
    w.weights.push_back(static_cast<double>(p_minus_n.cluster_size(c)));
  }
  w.weights.push_back(theta);
  return w;
}

ReseatWeights pyp_weights(const Partition& p_minus_n, double theta, double d) {
  ReseatWeights w;
  auto clusters = p_minus_n.clusters();
  w.clusters.assign(clusters.begin(), clusters.end());
  for (Index c : clusters) {
    w.weights.push_back(static_cast<double>(p_minus_n.cluster_size(c)) - d);
  }
  w.weights.push_back(theta + d * static_cast<double>(clusters.size()));
  return w;
}

double dp_expected_clusters(double theta, Index n) {
  double ek = 0.0;
  for (Index i = 0; i < n; ++i) ek += theta / (theta + static_cast<double>(i));
  return ek;
}

double pyp_expected_clusters(double theta, double d, Index n) {
  if (n == 0) return 0.0;
  double ek = 1.0;
  for (Index i = 1; i < n; ++i) {
    ek += (theta + d * ek) / (theta + static_cast<double>(i));
  }
  return ek;
}

namespace {

// Solves f(theta) = target for increasing f on (lo, hi) by bisection.
double bisect_theta(const std::function<double(double)>& f, double target, double lo,
                    double hi) {
  if (!(f(lo) < target && f(hi) > target)) {
    throw std::domain_error("calibration: no root in bracket");
  }
  for (int it = 0; it < 400; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (f(mid) < target) {
      lo = mid;
    } else {
      hi = mid;
    }
    if (hi - lo <= 1e-12 * std::abs(hi)) break;
  }
  return 0.5 * (lo + hi);
}

double resolve_target(Index n, double target) {
  const double nd = static_cast<double>(n);
  if (target == 0.0) target = nd / 2.0;
  if (!(target > 1.0 && target < nd)) {
    throw std::domain_error("calibration: target E[K] must lie in (1, N)");
  }
  return target;
}

}  // namespace

double calibrate_dp(Index n, double target) {
  target = resolve_target(n, target);
  auto f = [n](double log_theta) { return dp_expected_clusters(std::exp(log_theta), n); };
  return std::exp(bisect_theta(f, target, -50.0, 50.0));
}

double calibrate_pyp(Index n, double d, double target) {
  if (!(d >= 0.0 && d < 1.0)) throw std::domain_error("calibrate_pyp: d outside [0,1)");
  if (d == 0.0) return calibrate_dp(n, target);
  target = resolve_target(n, target);
  // theta ranges over (-d, inf); parameterize theta = -d + exp(t).
  auto f = [n, d](double t) { return pyp_expected_clusters(-d + std::exp(t), d, n); };
  return -d + std::exp(bisect_theta(f, target, -60.0, 50.0));
}

DpPrior::DpPrior(DpParams params) : params_(params) {
  if (!(params.theta > 0.0)) throw std::domain_error("DpPrior: theta must be positive");
  log_theta_ = std::log(params.theta);
}

double DpPrior::log_join_weight(Index size) const {
  return std::log(static_cast<double>(size));
}

double DpPrior::log_new_weight(Index /*num_clusters*/) const { return log_theta_; }

double DpPrior::log_conditional(const Partition& p) const {
  double lp = static_cast<double>(p.num_clusters()) * log_theta_;
  auto hist = p.size_counts();
  for (Index m = 1; m < hist.size(); ++m) {
    if (hist[m]) lp += static_cast<double>(hist[m]) * std::lgamma(static_cast<double>(m));
  }
  return lp;
}

std::unique_ptr<PartitionPrior> DpPrior::clone() const {
  return std::make_unique<DpPrior>(*this);
}

PypPrior::PypPrior(PypParams params) : params_(params) {
  if (!(params.d >= 0.0 && params.d < 1.0)) {
    throw std::domain_error("PypPrior: discount outside [0, 1)");
  }
  if (!(params.theta + params.d > 0.0)) {
    throw std::domain_error("PypPrior: need theta + d > 0");
  }
}

double PypPrior::log_join_weight(Index size) const {
  return std::log(static_cast<double>(size) - params_.d);
}

double PypPrior::log_new_weight(Index num_clusters) const {
  return std::log(params_.theta + params_.d * static_cast<double>(num_clusters));
}

double PypPrior::log_conditional(const Partition& p) const {
  const Index k = p.num_clusters();
  double lp = 0.0;
  for (Index i = 1; i < k; ++i) {
    lp += std::log(params_.theta + static_cast<double>(i) * params_.d);
  }
  const double base = std::lgamma(1.0 - params_.d);
  auto hist = p.size_counts();
  for (Index m = 1; m < hist.size(); ++m) {
    if (hist[m] == 0) continue;
    lp += static_cast<double>(hist[m]) * (std::lgamma(static_cast<double>(m) - params_.d) - base);
  }
  return lp;
}

std::unique_ptr<PartitionPrior> PypPrior::clone() const {
  return std::make_unique<PypPrior>(*this);
}

}  // namespace kolchin
