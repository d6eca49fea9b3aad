#include "kolchin/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace kolchin {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void require_positive_support(Index k) {
  if (k == 0) throw std::domain_error("count distribution: support starts at 1");
}

// log(1 - (1 - prob)^shape), stable for small prob and large shape.
double log_one_minus_pow(double prob, double shape) {
  return std::log(-std::expm1(shape * std::log1p(-prob)));
}

// Inversion by walking the pmf; the walk terminates once the remaining mass is
// negligible even if rounding keeps the running sum below u.
Index invert_by_walk(const CountDistribution& d, double u, Index cap) {
  double cum = 0.0;
  for (Index k = 1; k < cap; ++k) {
    double pk = std::exp(d.log_pmf(k));
    cum += pk;
    if (u <= cum) return k;
    if (cum > 0.5 && pk < 1e-17 * cum) return k;
  }
  return cap;
}

}  // namespace

double CountDistribution::log_survival(Index k) const {
  double cum = 0.0;
  for (Index m = 1; m <= k; ++m) cum += std::exp(log_pmf(m));
  return cum >= 1.0 ? kNegInf : std::log1p(-cum);
}

Index CountDistribution::sample(Rng& rng) const {
  return invert_by_walk(*this, uniform01(rng), Index{1} << 40);
}

TruncNegBin::TruncNegBin(double shape, double prob) : shape_(shape), prob_(prob) {
  if (!(shape > 0.0) || !std::isfinite(shape)) {
    throw std::domain_error("TruncNegBin: shape must be positive");
  }
  if (!(prob > 0.0 && prob < 1.0)) {
    throw std::domain_error("TruncNegBin: prob must lie in (0, 1)");
  }
  log_norm_ = shape_ * std::log1p(-prob_) - log_one_minus_pow(prob_, shape_) -
              std::lgamma(shape_);
}

double TruncNegBin::log_pmf(Index k) const {
  require_positive_support(k);
  const double kd = static_cast<double>(k);
  return std::lgamma(kd + shape_) + kd * std::log(prob_) - std::lgamma(kd + 1.0) +
         log_norm_;
}

Index TruncNegBin::sample(Rng& rng) const {
  // Walk the pmf using the ratio P(k+1)/P(k) = (k + shape) prob / (k + 1).
  const double u = uniform01(rng);
  double pk = std::exp(log_pmf(1));
  double cum = pk;
  Index k = 1;
  while (u > cum) {
    pk *= (static_cast<double>(k) + shape_) * prob_ / static_cast<double>(k + 1);
    ++k;
    cum += pk;
    if (cum > 0.5 && pk < 1e-17 * cum) break;
  }
  return k;
}

double TruncNegBin::tail_bound(Index k) const {
  const double kd = static_cast<double>(k);
  const double ratio = prob_ * std::max(1.0, (kd + 1.0 + shape_) / (kd + 2.0));
  if (ratio >= 1.0) return std::numeric_limits<double>::infinity();
  return std::exp(log_pmf(k + 1)) / (1.0 - ratio);
}

std::string TruncNegBin::describe() const {
  std::ostringstream os;
  os.precision(17);
  os << "negbin(" << shape_ << "," << prob_ << ")";
  return os.str();
}

Geometric::Geometric(double prob) : prob_(prob) {
  if (!(prob > 0.0 && prob <= 1.0)) {
    throw std::domain_error("Geometric: prob must lie in (0, 1]");
  }
}

double Geometric::log_pmf(Index k) const {
  require_positive_support(k);
  if (prob_ == 1.0) return k == 1 ? 0.0 : kNegInf;
  return std::log(prob_) + static_cast<double>(k - 1) * std::log1p(-prob_);
}

double Geometric::log_survival(Index k) const {
  if (prob_ == 1.0) return k == 0 ? 0.0 : kNegInf;
  return static_cast<double>(k) * std::log1p(-prob_);
}

Index Geometric::sample(Rng& rng) const {
  if (prob_ == 1.0) return 1;
  double u = uniform_open01(rng);
  return 1 + static_cast<Index>(std::floor(std::log(u) / std::log1p(-prob_)));
}

std::string Geometric::describe() const {
  std::ostringstream os;
  os.precision(17);
  os << "geometric(" << prob_ << ")";
  return os.str();
}

TabulatedCounts::TabulatedCounts(std::vector<double> log_probs)
    : log_probs_(std::move(log_probs)) {
  if (log_probs_.size() < 2) {
    throw std::invalid_argument("TabulatedCounts: need at least one size");
  }
  log_probs_[0] = kNegInf;
}

double TabulatedCounts::log_pmf(Index k) const {
  require_positive_support(k);
  return k < log_probs_.size() ? log_probs_[k] : kNegInf;
}

Index TabulatedCounts::sample(Rng& rng) const {
  return sample_log_weights(log_probs_, rng);
}

std::string TabulatedCounts::describe() const {
  return "tabulated(" + std::to_string(max_value()) + ")";
}

double sample_log_gamma(double shape, Rng& rng) {
  if (!(shape > 0.0)) {
    if (shape == 0.0) return kNegInf;
    throw std::domain_error("sample_log_gamma: negative shape");
  }
  if (shape >= 1.0) {
    return std::log(std::gamma_distribution<double>(shape, 1.0)(rng));
  }
  // G(a) = G(a + 1) * U^(1/a)
  double g = std::gamma_distribution<double>(shape + 1.0, 1.0)(rng);
  return std::log(g) + std::log(uniform_open01(rng)) / shape;
}

std::vector<double> sample_log_dirichlet(std::span<const double> params, Rng& rng) {
  std::vector<double> out(params.size());
  for (Index i = 0; i < params.size(); ++i) out[i] = sample_log_gamma(params[i], rng);
  const double lse = log_sum_exp(out);
  for (double& x : out) x -= lse;
  return out;
}

double log_sum_exp(std::span<const double> xs) {
  double mx = kNegInf;
  for (double x : xs) mx = std::max(mx, x);
  if (mx == kNegInf) return kNegInf;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - mx);
  return mx + std::log(s);
}

Index sample_log_weights(std::span<const double> log_weights, Rng& rng) {
  if (log_weights.empty()) throw std::invalid_argument("sample_log_weights: empty");
  double mx = kNegInf;
  for (double x : log_weights) mx = std::max(mx, x);
  if (mx == kNegInf) {
    throw std::domain_error("sample_log_weights: all candidates have zero weight");
  }
  double total = 0.0;
  for (double x : log_weights) total += std::exp(x - mx);
  double u = uniform01(rng) * total;
  Index last_positive = 0;
  for (Index i = 0; i < log_weights.size(); ++i) {
    if (log_weights[i] == kNegInf) continue;
    last_positive = i;
    u -= std::exp(log_weights[i] - mx);
    if (u < 0.0) return i;
  }
  return last_positive;
}

}  // namespace kolchin
