#include "kolchin/kp_priors.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace kolchin {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double lfact(Index n) { return std::lgamma(static_cast<double>(n) + 1.0); }

// log(1 - (1-p)^r)
double log_one_minus_pow(double p, double r) {
  return std::log(-std::expm1(r * std::log1p(-p)));
}

void check_r_p(double r, double p) {
  if (!(r > 0.0) || !std::isfinite(r)) throw std::domain_error("r must be positive");
  if (!(p > 0.0 && p < 1.0)) throw std::domain_error("p must lie in (0, 1)");
}

}  // namespace

std::vector<double> ReseatWeights::probabilities() const {
  double total = 0.0;
  for (double w : weights) total += w;
  std::vector<double> out(weights.size());
  for (Index i = 0; i < weights.size(); ++i) out[i] = weights[i] / total;
  return out;
}

ReseatWeights reseat_weights(const PartitionPrior& prior, const Partition& p_minus_n) {
  ReseatWeights w;
  auto clusters = p_minus_n.clusters();
  w.clusters.assign(clusters.begin(), clusters.end());
  w.weights.reserve(clusters.size() + 1);
  for (Index c : clusters) {
    w.weights.push_back(
        std::exp(prior.log_join_weight_given(p_minus_n, p_minus_n.cluster_size(c))));
  }
  w.weights.push_back(std::exp(prior.log_new_weight_given(p_minus_n)));
  return w;
}

// --- generic KP -------------------------------------------------------------

double trunc_negbin_log_pmf(const TruncNegBin& d, Index k) { return d.log_pmf(k); }

double kp_log_pmf(const Partition& p, const CountDistribution& kappa,
                  const CountDistribution& mu) {
  const Index k = p.num_clusters();
  double lp = lfact(k) + kappa.log_pmf(k) - lfact(p.num_assigned());
  auto hist = p.size_counts();
  for (Index m = 1; m < hist.size(); ++m) {
    if (hist[m] == 0) continue;
    lp += static_cast<double>(hist[m]) * (lfact(m) + mu.log_pmf(m));
  }
  return lp;
}

ReseatWeights reseat_weights_generic(const Partition& p_minus_n,
                                     const CountDistribution& kappa,
                                     const CountDistribution& mu) {
  ReseatWeights w;
  auto clusters = p_minus_n.clusters();
  w.clusters.assign(clusters.begin(), clusters.end());
  for (Index c : clusters) {
    const Index m = p_minus_n.cluster_size(c);
    const double lm = mu.log_pmf(m);
    if (lm == kNegInf) {
      throw std::domain_error("reseat_weights_generic: occupied size has zero mass");
    }
    w.weights.push_back(static_cast<double>(m + 1) * std::exp(mu.log_pmf(m + 1) - lm));
  }
  const Index k = clusters.size();
  double log_new = std::log(static_cast<double>(k + 1)) + kappa.log_pmf(k + 1) +
                   mu.log_pmf(1);
  if (k > 0) log_new -= kappa.log_pmf(k);
  w.weights.push_back(std::exp(log_new));
  return w;
}

KolchinPrior::KolchinPrior(std::shared_ptr<const CountDistribution> kappa,
                           std::shared_ptr<const CountDistribution> mu)
    : kappa_(std::move(kappa)), mu_(std::move(mu)) {
  if (!kappa_ || !mu_) throw std::invalid_argument("KolchinPrior: null distribution");
}

double KolchinPrior::log_join_weight(Index size) const {
  const double lm = mu_->log_pmf(size);
  if (lm == kNegInf) {
    throw std::domain_error("KolchinPrior: occupied size has zero mass");
  }
  return std::log(static_cast<double>(size + 1)) + mu_->log_pmf(size + 1) - lm;
}

double KolchinPrior::log_new_weight(Index num_clusters) const {
  double lw = std::log(static_cast<double>(num_clusters + 1)) +
              kappa_->log_pmf(num_clusters + 1) + mu_->log_pmf(1);
  if (num_clusters > 0) lw -= kappa_->log_pmf(num_clusters);
  return lw;
}

double KolchinPrior::log_conditional(const Partition& p) const {
  return kp_log_pmf(p, *kappa_, *mu_);
}

std::unique_ptr<PartitionPrior> KolchinPrior::clone() const {
  return std::make_unique<KolchinPrior>(*this);
}

// --- NBNB -------------------------------------------------------------------

double nbnb_log_beta(double q, double r, double p) {
  return std::log(q) + r * std::log1p(-p) - log_one_minus_pow(p, r);
}

double nbnb_cond_log_pmf_unnorm(const Partition& p, double a, double q, double r,
                                double pp) {
  check_r_p(r, pp);
  const double k = static_cast<double>(p.num_clusters());
  double lp = std::lgamma(k + a) + k * nbnb_log_beta(q, r, pp);
  const double lg_r = std::lgamma(r);
  auto hist = p.size_counts();
  for (Index m = 1; m < hist.size(); ++m) {
    if (hist[m] == 0) continue;
    lp += static_cast<double>(hist[m]) * (std::lgamma(static_cast<double>(m) + r) - lg_r);
  }
  return lp;
}

ReseatWeights reseat_weights_nbnb(const Partition& p_minus_n, double a, double q,
                                  double r, double pp) {
  check_r_p(r, pp);
  ReseatWeights w;
  auto clusters = p_minus_n.clusters();
  w.clusters.assign(clusters.begin(), clusters.end());
  for (Index c : clusters) {
    w.weights.push_back(static_cast<double>(p_minus_n.cluster_size(c)) + r);
  }
  const double k = static_cast<double>(clusters.size());
  w.weights.push_back((k + a) * std::exp(nbnb_log_beta(q, r, pp)) * r);
  return w;
}

double r_log_cond(double r, const Partition& p, double pp, double eta_r, double s_r,
                  RConditionalForm form) {
  check_r_p(r, pp);
  const double k = static_cast<double>(p.num_clusters());
  double lp = (eta_r - 1.0) * std::log(r) - r / s_r + r * k * std::log1p(-pp) -
              k * log_one_minus_pow(pp, r);
  const double shift = form == RConditionalForm::kFromJoint ? 0.0 : -1.0;
  const double lg_r = std::lgamma(r);
  auto hist = p.size_counts();
  for (Index m = 1; m < hist.size(); ++m) {
    if (hist[m] == 0) continue;
    lp += static_cast<double>(hist[m]) *
          (std::lgamma(static_cast<double>(m) + shift + r) - lg_r);
  }
  return lp;
}

double p_log_cond(double pp, const Partition& p, double r, double u_p, double v_p) {
  check_r_p(r, pp);
  const double k = static_cast<double>(p.num_clusters());
  const double n = static_cast<double>(p.num_assigned());
  return (n + u_p - 1.0) * std::log(pp) + (r * k + v_p - 1.0) * std::log1p(-pp) -
         k * log_one_minus_pow(pp, r);
}

double nbnb_log_joint(const Partition& p, const NbnbHyper& h) {
  check_r_p(h.r, h.p);
  const double log_r_prior = (h.eta_r - 1.0) * std::log(h.r) - h.r / h.s_r -
                             std::lgamma(h.eta_r) - h.eta_r * std::log(h.s_r);
  const double log_p_prior = (h.u_p - 1.0) * std::log(h.p) +
                             (h.v_p - 1.0) * std::log1p(-h.p) -
                             (std::lgamma(h.u_p) + std::lgamma(h.v_p) -
                              std::lgamma(h.u_p + h.v_p));
  return log_r_prior + log_p_prior +
         kp_log_pmf(p, TruncNegBin(h.a, h.q), TruncNegBin(h.r, h.p));
}

NbnbPrior::NbnbPrior(NbnbHyper hyper, bool learn_r_p) : h_(hyper), learn_(learn_r_p) {
  if (!(h_.a > 0.0)) throw std::domain_error("NbnbPrior: a must be positive");
  if (!(h_.q > 0.0 && h_.q < 1.0)) throw std::domain_error("NbnbPrior: q outside (0,1)");
  set_r_p(h_.r, h_.p);
}

void NbnbPrior::set_r_p(double r, double p) {
  check_r_p(r, p);
  h_.r = r;
  h_.p = p;
  log_beta_ = nbnb_log_beta(h_.q, h_.r, h_.p);
}

double NbnbPrior::log_join_weight(Index size) const {
  return std::log(static_cast<double>(size) + h_.r);
}

double NbnbPrior::log_new_weight(Index num_clusters) const {
  return std::log(static_cast<double>(num_clusters) + h_.a) + log_beta_ + std::log(h_.r);
}

double NbnbPrior::log_conditional(const Partition& p) const {
  return nbnb_cond_log_pmf_unnorm(p, h_.a, h_.q, h_.r, h_.p);
}

double NbnbPrior::log_hyperprior() const {
  if (!learn_) return 0.0;
  return (h_.eta_r - 1.0) * std::log(h_.r) - h_.r / h_.s_r +
         (h_.u_p - 1.0) * std::log(h_.p) + (h_.v_p - 1.0) * std::log1p(-h_.p);
}

double NbnbPrior::log_joint(const Partition& p) const {
  return learn_ ? nbnb_log_joint(p, h_) : log_conditional(p);
}

void NbnbPrior::update_hyperparameters(const Partition& p, Rng& rng,
                                       const SliceOptions& opts) {
  if (!learn_) return;
  auto r_density = [&](double r) {
    if (!(r > 0.0) || !std::isfinite(r)) return kNegInf;
    return r_log_cond(r, p, h_.p, h_.eta_r, h_.s_r);
  };
  const double r = slice_sample_positive(r_density, h_.r, opts, rng);
  auto p_density = [&](double x) {
    if (!(x > 0.0 && x < 1.0)) return kNegInf;
    return p_log_cond(x, p, r, h_.u_p, h_.v_p);
  };
  const double pp = slice_sample_unit(p_density, h_.p, opts, rng);
  set_r_p(r, pp);
}

HyperValues NbnbPrior::hyperparameters() const {
  return {{"a", h_.a}, {"q", h_.q}, {"r", h_.r}, {"p", h_.p}};
}

std::unique_ptr<PartitionPrior> NbnbPrior::clone() const {
  return std::make_unique<NbnbPrior>(*this);
}

// --- NBD --------------------------------------------------------------------

std::vector<double> nbd_mu_posterior(const Partition& p, double alpha,
                                     const CountDistribution& base) {
  const Index n = p.size();
  std::vector<double> params(n + 1);
  for (Index m = 1; m <= n; ++m) {
    params[m - 1] = alpha * std::exp(base.log_pmf(m)) + static_cast<double>(p.size_count(m));
  }
  params[n] = alpha * std::exp(base.log_survival(n));
  return params;
}

double nbd_cond_log_pmf_unnorm(const Partition& p, double a, double q,
                               std::span<const double> log_mu) {
  const double k = static_cast<double>(p.num_clusters());
  double lp = std::lgamma(k + a) + k * std::log(q);
  auto hist = p.size_counts();
  for (Index m = 1; m < hist.size(); ++m) {
    if (hist[m] == 0) continue;
    if (m >= log_mu.size()) {
      throw std::out_of_range("nbd_cond_log_pmf_unnorm: cluster exceeds mu truncation");
    }
    lp += static_cast<double>(hist[m]) * (lfact(m) + log_mu[m]);
  }
  return lp;
}

namespace {

double log_base_mass(double alpha, const CountDistribution& base, Index m) {
  return std::log(alpha) + base.log_pmf(m);
}

// log(alpha mu0_m + count)
double log_polya(double alpha, const CountDistribution& base, Index m, double count) {
  const double lb = log_base_mass(alpha, base, m);
  if (count <= 0.0) return lb;
  return lb == kNegInf ? std::log(count) : std::log(std::exp(lb) + count);
}

double collapsed_join(const Partition& p, double alpha, const CountDistribution& base,
                      Index size) {
  const double up = log_polya(alpha, base, size + 1, static_cast<double>(p.size_count(size + 1)));
  const double down = log_polya(alpha, base, size, static_cast<double>(p.size_count(size)) - 1.0);
  if (down == kNegInf) throw std::domain_error("NbdPrior: occupied size has zero mass");
  return std::log(static_cast<double>(size + 1)) + up - down;
}

double collapsed_new(const Partition& p, double a, double q, double alpha,
                     const CountDistribution& base) {
  const double k = static_cast<double>(p.num_clusters());
  return std::log(k + a) + std::log(q) +
         log_polya(alpha, base, 1, static_cast<double>(p.size_count(1))) - std::log(alpha + k);
}

}  // namespace

double nbd_collapsed_log_pmf_unnorm(const Partition& p, double a, double q, double alpha,
                                    const CountDistribution& base) {
  const double k = static_cast<double>(p.num_clusters());
  double lp = std::lgamma(k + a) + k * std::log(q) - (std::lgamma(alpha + k) - std::lgamma(alpha));
  auto hist = p.size_counts();
  for (Index m = 1; m < hist.size(); ++m) {
    if (hist[m] == 0) continue;
    const double l = static_cast<double>(hist[m]);
    const double b = std::exp(log_base_mass(alpha, base, m));
    if (b == 0.0) return kNegInf;
    lp += l * lfact(m) + std::lgamma(b + l) - std::lgamma(b);
  }
  return lp;
}

ReseatWeights reseat_weights_nbd_collapsed(const Partition& p_minus_n, double a, double q,
                                           double alpha, const CountDistribution& base) {
  ReseatWeights w;
  auto clusters = p_minus_n.clusters();
  w.clusters.assign(clusters.begin(), clusters.end());
  for (Index c : clusters) {
    w.weights.push_back(
        std::exp(collapsed_join(p_minus_n, alpha, base, p_minus_n.cluster_size(c))));
  }
  w.weights.push_back(std::exp(collapsed_new(p_minus_n, a, q, alpha, base)));
  return w;
}

void SizeDirichlet::resample(const Partition& p, Rng& rng) {
  auto params = nbd_mu_posterior(p, alpha, *base);
  auto draw = sample_log_dirichlet(params, rng);
  const Index n = p.size();
  log_mu.assign(n + 1, kNegInf);
  for (Index m = 1; m <= n; ++m) log_mu[m] = draw[m - 1];
  log_remainder = draw[n];
}

NbdPrior::NbdPrior(double a, double q, double alpha,
                   std::shared_ptr<const CountDistribution> base, bool learn_mu)
    : a_(a), q_(q), learn_(learn_mu) {
  if (!(a > 0.0)) throw std::domain_error("NbdPrior: a must be positive");
  if (!(q > 0.0 && q < 1.0)) throw std::domain_error("NbdPrior: q outside (0,1)");
  if (!(alpha > 0.0)) throw std::domain_error("NbdPrior: alpha must be positive");
  if (!base) throw std::invalid_argument("NbdPrior: null base measure");
  mu_.alpha = alpha;
  mu_.base = std::move(base);
}

double NbdPrior::log_join_weight(Index size) const {
  if (size + 1 >= mu_.log_mu.size()) return kNegInf;
  const double lm = mu_.log_mu[size];
  if (lm == kNegInf) throw std::domain_error("NbdPrior: occupied size has zero mass");
  return std::log(static_cast<double>(size + 1)) + mu_.log_mu[size + 1] - lm;
}

double NbdPrior::log_new_weight(Index num_clusters) const {
  return std::log(static_cast<double>(num_clusters) + a_) + std::log(q_) + mu_.log_mu.at(1);
}

double NbdPrior::log_join_weight_given(const Partition& p_minus_n, Index size) const {
  if (!learn_) return log_join_weight(size);
  return collapsed_join(p_minus_n, mu_.alpha, *mu_.base, size);
}

double NbdPrior::log_new_weight_given(const Partition& p_minus_n) const {
  if (!learn_) return log_new_weight(p_minus_n.num_clusters());
  return collapsed_new(p_minus_n, a_, q_, mu_.alpha, *mu_.base);
}

double NbdPrior::log_conditional(const Partition& p) const {
  if (learn_) return nbd_collapsed_log_pmf_unnorm(p, a_, q_, mu_.alpha, *mu_.base);
  return nbd_cond_log_pmf_unnorm(p, a_, q_, mu_.log_mu);
}

void NbdPrior::update_hyperparameters(const Partition& p, Rng& rng,
                                      const SliceOptions& /*opts*/) {
  if (learn_) mu_.resample(p, rng);
}

void NbdPrior::initialize(const Partition& p, Rng& rng) {
  if (learn_ || mu_.log_mu.size() < p.size() + 1) draw_mu(p, rng);
}

void SizeDirichlet::resample_prior(Index n, Rng& rng) {
  std::vector<double> params(n + 1);
  for (Index m = 1; m <= n; ++m) params[m - 1] = alpha * std::exp(base->log_pmf(m));
  params[n] = alpha * std::exp(base->log_survival(n));
  auto draw = sample_log_dirichlet(params, rng);
  log_mu.assign(n + 1, kNegInf);
  for (Index m = 1; m <= n; ++m) log_mu[m] = draw[m - 1];
  log_remainder = draw[n];
}

void NbdPrior::draw_mu(const Partition& p, Rng& rng) { mu_.resample(p, rng); }

void NbdPrior::draw_mu_prior(Index n, Rng& rng) { mu_.resample_prior(n, rng); }

void NbdPrior::set_log_mu(std::vector<double> log_mu) {
  if (log_mu.size() < 2) throw std::invalid_argument("set_log_mu: empty mu");
  log_mu[0] = kNegInf;
  mu_.log_mu = std::move(log_mu);
  mu_.log_remainder = kNegInf;
}

std::vector<double> NbdPrior::mu_snapshot(Index max_len) const {
  std::vector<double> out;
  for (Index m = 1; m < mu_.log_mu.size() && m <= max_len; ++m) {
    out.push_back(std::exp(mu_.log_mu[m]));
  }
  return out;
}

HyperValues NbdPrior::hyperparameters() const {
  return {{"a", a_}, {"q", q_}, {"alpha", mu_.alpha}};
}

std::unique_ptr<PartitionPrior> NbdPrior::clone() const {
  return std::make_unique<NbdPrior>(*this);
}

std::pair<double, double> calibrate_kappa(Index n) {
  if (n < 3) throw std::domain_error("calibrate_kappa: need N >= 3");
  const double nd = static_cast<double>(n);
  return {nd / (nd - 2.0), 1.0 - 2.0 / nd};
}

}  // namespace kolchin
