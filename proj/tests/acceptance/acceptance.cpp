// Acceptance checks. Each check prints one "[PASS]" or "[FAIL]" line and the
// process exits non-zero if any selected check failed.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <iostream>
#include <map>
#include <memory>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "kolchin/baseline_priors.hpp"
#include "kolchin/datagen.hpp"
#include "kolchin/evalmetrics.hpp"
#include "kolchin/inference.hpp"
#include "kolchin/kp_priors.hpp"
#include "kolchin/likelihood.hpp"
#include "kolchin/micro_experiment.hpp"
#include "kolchin/model.hpp"
#include "kolchin/oracle.hpp"

namespace fs = std::filesystem;
using namespace kolchin;

namespace {

struct Paths {
  std::string cli;
  std::string configs;
  std::string work;
};

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " FAILED(" << what << ")";
    }
  }
};

std::string fmt(double x, int digits = 4) {
  std::ostringstream s;
  s.precision(digits);
  s << x;
  return s.str();
}

// ---------------------------------------------------------------------------
// 1. Samplers against the exact distribution

std::unique_ptr<PartitionPrior> nbnb_reference() {
  return std::make_unique<NbnbPrior>(NbnbHyper{1.0, 0.5, 1.0, 0.5}, false);
}

std::unique_ptr<PartitionPrior> nbd_reference(Index n) {
  auto prior =
      std::make_unique<NbdPrior>(1.0, 0.5, 1.0, std::make_shared<Geometric>(0.5), false);
  Rng rng = make_rng(20240601, "acceptance.nbd_mu", n);
  prior->draw_mu_prior(n, rng);
  return prior;
}

double empirical_tv(std::unique_ptr<PartitionPrior> prior, Index n, Kernel kernel,
                    std::uint64_t seed) {
  const PartitionPrior& ref = *prior;
  auto table = exact_conditional_pmf([&](const Partition& p) { return ref.log_conditional(p); },
                                     n);
  auto owned = prior->clone();
  ChainState state(std::move(owned), Partition::singletons(n), seed);
  McmcConfig cfg;
  cfg.kernel = kernel;
  cfg.chaperone_mode = ChaperoneMode::kUniform;
  cfg.burn_in = 1000;
  cfg.n_iterations = cfg.burn_in + 100000;
  cfg.update_hyperparameters = false;
  cfg.update_delta = false;
  cfg.seed = seed;
  std::vector<std::uint64_t> counts(table.partitions.size(), 0);
  run_chain(state, cfg, [&](const Sample& s) { ++counts[table.index_of(s.assignments)]; });
  return total_variation(counts, table.probabilities);
}

Outcome oracle_equivalence() {
  Outcome o;
  for (Index n : {5, 6}) {
    for (const char* model : {"nbnb", "nbd"}) {
      for (Kernel k : {Kernel::kGibbs, Kernel::kChaperones}) {
        auto prior = std::string(model) == "nbnb" ? nbnb_reference() : nbd_reference(n);
        const double tv = empirical_tv(std::move(prior), n, k, derive_seed(7, model, n));
        o.detail << ' ' << model << '/' << to_string(k) << "/N=" << n << " TV=" << fmt(tv, 3);
        o.require(tv < 0.02, "TV < 0.02");
      }
    }
  }
  return o;
}

// ---------------------------------------------------------------------------
// 2. NBNB reseating weights against the generic rule

Outcome weight_crosscheck() {
  Outcome o;
  Rng rng(20240602);
  double worst = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const double a = 0.1 + 5.0 * uniform01(rng);
    const double q = 0.02 + 0.96 * uniform01(rng);
    const double r = 0.05 + 10.0 * uniform01(rng);
    const double p = 0.02 + 0.96 * uniform01(rng);
    const Index n = 2 + uniform_index(rng, 60);
    const Index k = 1 + uniform_index(rng, n);
    std::vector<std::int64_t> labels(n);
    for (auto& l : labels) l = static_cast<std::int64_t>(uniform_index(rng, k));
    auto part = Partition::from_assignments(labels);
    part.detach(uniform_index(rng, n));
    auto nbnb = reseat_weights_nbnb(part, a, q, r, p);
    auto generic = reseat_weights_generic(part, TruncNegBin(a, q), TruncNegBin(r, p));
    const double base = nbnb.weights[0] / generic.weights[0];
    for (Index c = 0; c < nbnb.weights.size(); ++c) {
      worst = std::max(worst, std::abs(nbnb.weights[c] / generic.weights[c] / base - 1.0));
    }
  }
  o.detail << " max ratio deviation=" << fmt(worst, 3) << " over 1000 states";
  o.require(worst < 1e-10, "deviation < 1e-10");
  return o;
}

// ---------------------------------------------------------------------------
// 3. Dirichlet conjugacy for mu

Outcome conjugacy() {
  Outcome o;
  Geometric base(0.5);
  const std::vector<std::vector<Index>> cases = {
      {1, 1, 2}, {1}, {3}, {1, 2, 3, 4}, {2, 2, 2, 5, 1, 1, 1, 1}};
  double worst = 0.0;
  for (double alpha : {0.3, 1.0, 4.0}) {
    for (const auto& sizes : cases) {
      auto part = Partition::from_sizes(sizes);
      const Index n = part.size();
      auto params = nbd_mu_posterior(part, alpha, base);
      o.require(params.size() == n + 1, "parameter count");
      double tail = 1.0;
      for (Index m = 1; m <= n; ++m) {
        const double mu0 = std::pow(0.5, static_cast<double>(m));
        tail -= mu0;
        const double l = static_cast<double>(std::count(sizes.begin(), sizes.end(), m));
        worst = std::max(worst, std::abs(params[m - 1] - (alpha * mu0 + l)));
      }
      worst = std::max(worst, std::abs(params[n] - alpha * tail));
    }
  }
  o.detail << " max parameter error=" << fmt(worst, 3);
  o.require(worst < 1e-14, "parameters");

  // Fixed partition {1,1,2,3,3}, alpha = 1: mu_1 ~ Beta(a1, A - a1).
  auto part = Partition::from_sizes(std::vector<Index>{1, 1, 2, 3, 3});
  NbdPrior prior(1.0, 0.5, 1.0, std::make_shared<Geometric>(0.5), true);
  Rng rng(20240603);
  SliceOptions slice;
  const int draws = 200000;
  double sum = 0.0;
  for (int t = 0; t < draws; ++t) {
    prior.update_hyperparameters(part, rng, slice);
    sum += std::exp(prior.mu().log_mu[1]);
  }
  const double a1 = 0.5 + 2.0, total = 1.0 + 5.0;
  const double mean = a1 / total;
  const double sd = std::sqrt(a1 * (total - a1) / (total * total * (total + 1.0)));
  const double se = sd / std::sqrt(static_cast<double>(draws));
  const double z = (sum / draws - mean) / se;
  o.detail << "; E[mu_1]=" << fmt(sum / draws, 6) << " vs " << fmt(mean, 6)
           << " (z=" << fmt(z, 3) << ")";
  o.require(std::abs(z) < 3.0, "within 3 s.e.");
  return o;
}

// ---------------------------------------------------------------------------
// 4. r and p conditionals

struct Binned {
  double lo, hi;
  std::vector<double> mass;
  void add(double x, double w = 1.0) {
    const double u = (x - lo) / (hi - lo) * static_cast<double>(mass.size());
    const auto b = static_cast<Index>(std::clamp(u, 0.0, static_cast<double>(mass.size() - 1)));
    mass[b] += w;
  }
  void normalize() {
    const double t = std::accumulate(mass.begin(), mass.end(), 0.0);
    for (auto& m : mass) m /= t;
  }
};

double tv(const Binned& a, const Binned& b) {
  double d = 0.0;
  for (Index i = 0; i < a.mass.size(); ++i) d += std::abs(a.mass[i] - b.mass[i]);
  return 0.5 * d;
}

// Log joint density of (r, p) given the partition, written out from the
// truncated negative binomial pmf.
double nbnb_rp_log_density(double r, double p, const Partition& part, const NbnbHyper& h) {
  const double k = static_cast<double>(part.num_clusters());
  const double n = static_cast<double>(part.size());
  double v = (h.eta_r - 1.0) * std::log(r) - r / h.s_r + (h.u_p - 1.0) * std::log(p) +
             (h.v_p - 1.0) * std::log1p(-p);
  v += n * std::log(p) + r * k * std::log1p(-p) - k * std::log1p(-std::pow(1.0 - p, r));
  for (Index m = 1; m <= part.max_cluster_size(); ++m) {
    const double l = static_cast<double>(part.size_count(m));
    if (l > 0) v += l * (std::lgamma(m + r) - std::lgamma(r));
  }
  return v;
}

// Grid marginal of a 1-d log density, used to pick a plotting range and as
// the reference histogram.
Binned grid_histogram(const std::function<double(double)>& logf, double lo, double hi,
                      Index bins, Index sub = 200) {
  Binned h{lo, hi, std::vector<double>(bins, 0.0)};
  const Index steps = bins * sub;
  std::vector<double> lv(steps);
  double top = -INFINITY;
  for (Index i = 0; i < steps; ++i) {
    lv[i] = logf(lo + (hi - lo) * (i + 0.5) / steps);
    top = std::max(top, lv[i]);
  }
  for (Index i = 0; i < steps; ++i) h.mass[i / sub] += std::exp(lv[i] - top);
  h.normalize();
  return h;
}

Outcome hyper_conditionals() {
  Outcome o;
  auto part = Partition::from_sizes(std::vector<Index>{
      1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 2, 2, 2, 2, 2, 2, 2, 2,
      2, 2, 3, 3, 3, 3, 4, 4, 6});
  NbnbHyper h;
  h.r = 1.0;
  h.p = 0.5;
  const Index bins = 100;
  const int draws = 200000;
  SliceOptions slice;

  // (a) joint sampler through NbnbPrior; reference marginals from a 2-d grid.
  {
    const double rlo = 1e-4, rhi = 12.0, plo = 1e-4, phi = 1 - 1e-4;
    const Index gr = 1200, gp = 1200;
    std::vector<double> lv(gr * gp);
    double top = -INFINITY;
    for (Index i = 0; i < gr; ++i) {
      const double r = rlo + (rhi - rlo) * (i + 0.5) / gr;
      for (Index j = 0; j < gp; ++j) {
        const double p = plo + (phi - plo) * (j + 0.5) / gp;
        lv[i * gp + j] = nbnb_rp_log_density(r, p, part, h);
        top = std::max(top, lv[i * gp + j]);
      }
    }
    Binned ref_r{rlo, rhi, std::vector<double>(bins, 0.0)};
    Binned ref_p{plo, phi, std::vector<double>(bins, 0.0)};
    for (Index i = 0; i < gr; ++i) {
      for (Index j = 0; j < gp; ++j) {
        const double w = std::exp(lv[i * gp + j] - top);
        ref_r.mass[i * bins / gr] += w;
        ref_p.mass[j * bins / gp] += w;
      }
    }
    ref_r.normalize();
    ref_p.normalize();

    NbnbPrior prior(h, true);
    Rng rng(20240604);
    Binned got_r{rlo, rhi, std::vector<double>(bins, 0.0)};
    Binned got_p{plo, phi, std::vector<double>(bins, 0.0)};
    for (int t = 0; t < 1000; ++t) prior.update_hyperparameters(part, rng, slice);
    for (int t = 0; t < draws; ++t) {
      prior.update_hyperparameters(part, rng, slice);
      got_r.add(prior.hyper().r);
      got_p.add(prior.hyper().p);
    }
    got_r.normalize();
    got_p.normalize();
    const double tr = tv(got_r, ref_r), tp = tv(got_p, ref_p);
    o.detail << " joint: TV(r)=" << fmt(tr, 3) << " TV(p)=" << fmt(tp, 3);
    o.require(tr < 0.05 && tp < 0.05, "joint marginals TV < 0.05");
  }

  // (b) each conditional on its own, the other parameter held fixed.
  {
    const double p_fixed = 0.45, r_fixed = 1.3;
    auto logr = [&](double r) { return r_log_cond(r, part, p_fixed, h.eta_r, h.s_r); };
    auto logp = [&](double p) { return p_log_cond(p, part, r_fixed, h.u_p, h.v_p); };
    auto ref_r = grid_histogram(logr, 1e-4, 12.0, bins);
    auto ref_p = grid_histogram(logp, 1e-4, 1 - 1e-4, bins);
    Rng rng(20240605);
    Binned got_r{ref_r.lo, ref_r.hi, std::vector<double>(bins, 0.0)};
    Binned got_p{ref_p.lo, ref_p.hi, std::vector<double>(bins, 0.0)};
    double r = 1.0, p = 0.5;
    for (int t = 0; t < draws; ++t) {
      r = slice_sample_positive(logr, r, slice, rng);
      p = slice_sample_unit(logp, p, slice, rng);
      got_r.add(r);
      got_p.add(p);
    }
    got_r.normalize();
    got_p.normalize();
    const double tr = tv(got_r, ref_r), tp = tv(got_p, ref_p);
    o.detail << "; conditional: TV(r|p)=" << fmt(tr, 3) << " TV(p|r)=" << fmt(tp, 3);
    o.require(tr < 0.05 && tp < 0.05, "conditional TV < 0.05");
  }
  return o;
}

// ---------------------------------------------------------------------------
// 5. Collapsed likelihood against Monte Carlo over theta

Outcome likelihood_marginal() {
  Outcome o;
  struct Case {
    std::vector<double> gamma;
    double delta;
    std::vector<Category> values;
  };
  const std::vector<Case> cases = {
      {{0.5, 0.5}, 1.0, {0}},
      {{0.5, 0.5}, 1.0, {0, 0}},
      {{0.2, 0.3, 0.5}, 0.7, {0, 1}},
      {{0.2, 0.3, 0.5}, 0.05, {2, 2, 2}},
      {{0.6, 0.4}, 3.0, {0, 1, 1}},
      {{0.1, 0.1, 0.8}, 2.0, {0, 1, 2}},
  };
  Rng rng(20240606);
  const int draws = 1000000;
  double worst_z = 0.0;
  for (const auto& c : cases) {
    std::vector<std::uint32_t> counts(c.gamma.size(), 0);
    for (Category v : c.values) ++counts[v];
    const double exact = std::exp(cluster_field_log_ml(counts, c.delta, c.gamma));
    std::vector<double> params(c.gamma.size());
    for (Index v = 0; v < params.size(); ++v) params[v] = c.delta * c.gamma[v];
    double sum = 0.0, sq = 0.0;
    for (int t = 0; t < draws; ++t) {
      auto theta = sample_log_dirichlet(params, rng);
      double lp = 0.0;
      for (Category v : c.values) lp += theta[v];
      const double x = std::exp(lp);
      sum += x;
      sq += x * x;
    }
    const double mean = sum / draws;
    const double se = std::sqrt((sq / draws - mean * mean) / draws);
    const double z = (mean - exact) / se;
    worst_z = std::max(worst_z, std::abs(z));
  }
  o.detail << " max |z| over " << cases.size() << " clusters=" << fmt(worst_z, 3);
  o.require(worst_z < 3.0, "within 3 s.e.");

  // Predictive weight = log ML(cluster + n) - log ML(cluster), all fields.
  std::vector<FieldSpec> fields{{"a", {"x", "y"}}, {"b", {"x", "y", "z"}}, {"c", {"u", "v", "w"}}};
  const Index n = 40;
  std::vector<Category> values;
  std::vector<std::string> ids;
  for (Index i = 0; i < n; ++i) {
    for (const auto& f : fields) values.push_back(uniform_index(rng, f.num_categories()));
    ids.push_back("r" + std::to_string(i));
  }
  RecordTable table(fields, values, ids);
  double worst = 0.0;
  for (int t = 0; t < 200; ++t) {
    auto prior = FieldPrior::empirical(table, 0.01 + 5.0 * uniform01(rng), t % 2 == 0);
    if (!prior.tied) {
      for (auto& d : prior.delta) d = 0.01 + 5.0 * uniform01(rng);
    }
    CollapsedCategorical lik(table, prior);
    std::vector<std::int64_t> labels(n);
    for (auto& l : labels) l = static_cast<std::int64_t>(uniform_index(rng, 8));
    auto part = Partition::from_assignments(labels);
    SufficientStats stats(table, part);
    const Index e = uniform_index(rng, n);
    const Index c = part.cluster_of(e);
    const double with = lik.log_likelihood(part, stats);
    stats.remove(e, c);
    part.detach(e);
    const double without = lik.log_likelihood(part, stats);
    double pred = 0.0;
    if (part.is_live(c)) {
      pred = lik.predictive_log_weight(stats, e, c);
    } else {
      pred = lik.new_cluster_log_weight(e);
    }
    worst = std::max(worst, std::abs((with - without) - pred));
  }
  o.detail << "; predictive identity max error=" << fmt(worst, 3);
  o.require(worst < 1e-10, "identity to 1e-10");
  return o;
}

// ---------------------------------------------------------------------------
// 6. Largest-cluster fraction across N

Outcome micro_trend() {
  Outcome o;
  MicroSettings settings;
  const std::vector<Index> grid = {100, 1000, 10000};
  const Index samples = 500;
  std::map<std::string, std::vector<double>> medians;
  for (MicroModel m : {MicroModel::kNbnb, MicroModel::kNbd, MicroModel::kCrp}) {
    std::vector<MaxFractionSamples> cells;
    for (Index n : grid) {
      const auto seed = derive_seed(20240607, "micro." + to_string(m), n);
      cells.push_back(sample_max_fraction(m, n, samples, SampleMethod::kAuto, seed, settings));
    }
    auto report = trend_report(cells);
    auto& med = medians[to_string(m)];
    o.detail << ' ' << to_string(m) << " medians";
    for (const auto& row : report.rows) {
      med.push_back(row.q.median);
      o.detail << ' ' << fmt(row.q.median, 3) << '(' << row.method << ')';
    }
    if (m != MicroModel::kCrp) {
      o.require(report.declining_median, to_string(m) + " strictly declining");
      o.require(med.back() < 0.5 * med.front(), to_string(m) + " halves");
    }
  }
  const double ratio = medians["crp"].back() / medians["nbnb"].back();
  o.detail << "; crp/nbnb at N=10000: " << fmt(ratio, 3);
  o.require(ratio >= 5.0, "crp contrast >= 5x");
  return o;
}

// ---------------------------------------------------------------------------
// 7. Calibration

Outcome calibration() {
  Outcome o;
  double worst_dp = 0.0;
  for (Index n : {789, 2000, 5000}) {
    const double theta = calibrate_dp(n);
    long double sum = 0.0L;
    for (Index i = 0; i < n; ++i) sum += theta / (theta + static_cast<long double>(i));
    worst_dp = std::max(worst_dp, static_cast<double>(std::abs(sum / (n / 2.0L) - 1.0L)));
  }
  // Storing q = 1 - 2/N rounds it by up to half an ulp, which perturbs
  // 1 - q, and so both moments, by a relative N * eps / 4.
  double worst_k = 0.0;
  bool closed_form = true;
  for (Index n : {3, 4, 10, 789, 2000, 5000, 100000}) {
    const auto [a, q] = calibrate_kappa(n);
    const double nn = static_cast<double>(n);
    closed_form = closed_form && a == nn / (nn - 2.0) && q == 1.0 - 2.0 / nn;
    const long double lq = q, la = a;
    const long double mean = la * lq / (1.0L - lq);
    const long double var = la * lq / ((1.0L - lq) * (1.0L - lq));
    const double bound = 4.0 * nn * std::numeric_limits<double>::epsilon();
    worst_k = std::max(worst_k, static_cast<double>(std::abs(mean / (nn / 2.0L) - 1.0L)) / bound);
    worst_k = std::max(worst_k,
                       static_cast<double>(std::abs(var / (nn * nn / 4.0L) - 1.0L)) / bound);
  }
  o.detail << " dp max rel error=" << fmt(worst_dp, 3)
           << "; kappa moment error / representation bound=" << fmt(worst_k, 3);
  o.require(worst_dp < 1e-6, "dp within 1e-6");
  o.require(closed_form, "kappa closed form");
  o.require(worst_k <= 1.0, "kappa moments");
  return o;
}

// ---------------------------------------------------------------------------
// 8. Italy-like data set end to end

Outcome end_to_end(const Paths& paths) {
  Outcome o;
  auto config = DatasetConfig::from_config(Config::load(paths.configs + "/italy.cfg"));
  auto variants = generate_dataset(config);
  const GeneratedVariant* v = nullptr;
  for (const auto& x : variants) {
    if (std::abs(x.delta - 0.02) < 1e-12) v = &x;
  }
  if (v == nullptr) {
    o.require(false, "no delta = 0.02 variant");
    return o;
  }
  const auto& table = v->records;
  const auto truth = table.truth_partition();
  o.detail << " N=" << table.num_records() << " K=" << truth.num_clusters()
           << " max=" << truth.max_cluster_size() << " F=" << table.num_fields() << ';';
  o.require(table.num_records() == 789 && truth.num_clusters() == 587 &&
                truth.max_cluster_size() == 2 && table.num_fields() == 9,
            "data set shape");

  McmcConfig cfg;
  cfg.n_iterations = 10000;
  cfg.burn_in = 5000;
  cfg.thinning = 5;
  for (ModelKind kind : {ModelKind::kNbnb, ModelKind::kNbd, ModelKind::kDp, ModelKind::kPyp}) {
    ModelSpec spec;
    spec.kind = kind;
    auto prior = make_prior(spec, table.num_records());
    ChainState state(std::move(prior), Partition::singletons(table.num_records()), table,
                     FieldPrior::empirical(table, 1.0, true),
                     derive_seed(config.seed, "acceptance.fit." + to_string(kind)));
    auto result = run_chain(state, cfg);
    auto r = posterior_report(result.samples, truth);
    o.detail << ' ' << to_string(kind) << ": E[K]=" << fmt(r.expected_k, 5)
             << " FNR=" << fmt(r.fnr, 2) << " FDR=" << fmt(r.fdr, 2)
             << " E[delta]=" << fmt(r.expected_delta, 3) << ';';
    if (kind == ModelKind::kNbd) {
      o.require(r.expected_k >= 560 && r.expected_k <= 620, "NBD E[K] in [560, 620]");
      o.require(r.fnr <= 0.10, "NBD FNR <= 0.10");
      o.require(r.fdr <= 0.05, "NBD FDR <= 0.05");
      o.require(std::abs(r.expected_delta - 0.02) <= 0.02, "NBD |E[delta] - 0.02| <= 0.02");
    }
  }
  return o;
}

// ---------------------------------------------------------------------------
// 9. Chaperones constraint audit and reachability

Outcome chaperones_validity() {
  Outcome o;
  // Audit run with the likelihood attached.
  std::vector<FieldSpec> fields{{"a", {"x", "y"}}, {"b", {"x", "y", "z"}}};
  const Index n = 12;
  Rng gen(20240609);
  std::vector<Category> values;
  std::vector<std::string> ids;
  for (Index i = 0; i < n; ++i) {
    values.push_back(uniform_index(gen, 2));
    values.push_back(uniform_index(gen, 3));
    ids.push_back("r" + std::to_string(i));
  }
  RecordTable table(fields, values, ids);
  ChainState state(std::make_unique<NbnbPrior>(NbnbHyper{}, false), Partition::singletons(n),
                   table, FieldPrior::empirical(table, 1.0, true), 20240609);
  ChaperonePairSampler pairs(n, ChaperoneMode::kSimilarity, &table);
  Index violations = 0, moved = 0;
  const int steps = 100000;
  for (int t = 0; t < steps; ++t) {
    auto [i, j] = pairs.sample(state.rng());
    const Partition before = state.partition();
    std::set<Index> s;
    for (Index m : before.members(before.cluster_of(i))) s.insert(m);
    for (Index m : before.members(before.cluster_of(j))) s.insert(m);
    moved += chaperones_step(state, i, j);
    const Partition& after = state.partition();
    bool ok = true;
    for (Index m : s) {
      ok = ok && (after.cluster_of(m) == after.cluster_of(i) ||
                  after.cluster_of(m) == after.cluster_of(j));
    }
    for (Index a = 0; a < n; ++a) {
      if (s.count(a)) continue;
      for (Index b = 0; b < n; ++b) {
        const bool was = before.cluster_of(a) == before.cluster_of(b);
        ok = ok && was == (after.cluster_of(a) == after.cluster_of(b));
      }
    }
    try {
      state.check_consistency();
    } catch (const std::exception&) {
      ok = false;
    }
    violations += !ok;
  }
  o.detail << " audit: " << steps << " steps, " << moved << " moves, " << violations
           << " violations;";
  o.require(violations == 0, "constraints hold on every step");

  // Reachability of every partition of [5].
  NbnbPrior reference(NbnbHyper{}, false);
  auto exact = exact_conditional_pmf(
      [&](const Partition& p) { return reference.log_conditional(p); }, 5);
  ChainState walk(reference.clone(), Partition::singletons(5), 20240610);
  ChaperonePairSampler uniform(5, ChaperoneMode::kUniform);
  std::vector<bool> seen(exact.partitions.size(), false);
  seen[exact.index_of(walk.partition())] = true;
  Index distinct = 1;
  int last = 0;
  for (int t = 1; t <= 100000 && distinct < seen.size(); ++t) {
    auto [i, j] = uniform.sample(walk.rng());
    chaperones_step(walk, i, j);
    const Index k = exact.index_of(walk.partition());
    if (!seen[k]) {
      seen[k] = true;
      ++distinct;
      last = t;
    }
  }
  o.detail << " reached " << distinct << '/' << seen.size() << " partitions of [5] by step "
           << last;
  o.require(distinct == seen.size(), "all partitions reached");
  return o;
}

// ---------------------------------------------------------------------------
// 10. CLI manifest replay

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int run(const std::string& cmd) {
  const int status = std::system((cmd + " > /dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome determinism(const Paths& paths) {
  Outcome o;
  if (paths.cli.empty()) {
    o.require(false, "--cli not given");
    return o;
  }
  const fs::path root = fs::path(paths.work) / "determinism";
  fs::remove_all(root);
  fs::create_directories(root);
  const std::string cli = "'" + paths.cli + "'";
  const auto first = root / "first";
  const auto gen = first / "generate";
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"generate", "generate --config '" + paths.configs + "/italy.cfg'"},
      {"fit", "fit --records '" + (gen / "italy_delta0.05.csv").string() +
                  "' --model nbd --iterations 300 --thin 3 --seed 5"},
      {"evaluate", "evaluate --samples '" + (first / "fit" / "samples.jsonl").string() +
                       "' --truth '" + (gen / "italy_delta0.05_truth.csv").string() + "'"},
      {"microcheck",
       "microcheck --model nbnb,nbd,crp --grid 20,40,80 --samples 25 --burn-in 200 --seed 3"},
      {"oracle", "oracle --model nbnb --n 5"},
  };
  for (const auto& [name, args] : commands) {
    const auto out = first / name;
    const int rc = run(cli + " " + args + " --out-dir '" + out.string() + "'");
    o.require(rc == 0, name + " exit code " + std::to_string(rc));
  }
  Index files = 0, mismatches = 0;
  for (const auto& [name, args] : commands) {
    const auto out = first / name;
    const auto again = root / "replay" / name;
    const int rc = run(cli + " " + name + " --manifest '" + (out / "manifest.json").string() +
                       "' --out-dir '" + again.string() + "'");
    o.require(rc == 0, name + " replay exit code " + std::to_string(rc));
    if (!fs::exists(out)) continue;
    for (const auto& entry : fs::directory_iterator(out)) {
      ++files;
      const auto twin = again / entry.path().filename();
      if (!fs::exists(twin) || slurp(entry.path()) != slurp(twin)) {
        ++mismatches;
        o.detail << " differs: " << name << '/' << entry.path().filename().string();
      }
    }
  }
  o.detail << ' ' << commands.size() << " commands, " << files << " files compared, "
           << mismatches << " differ";
  o.require(files > commands.size() && mismatches == 0, "bit-identical replay");
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks"};
  std::vector<std::string> selected;
  Paths paths;
  paths.work = (fs::temp_directory_path() / "kolchin_acceptance").string();
  paths.configs = "configs";
  app.add_option("checks", selected, "Checks to run (default: all)");
  app.add_option("--cli", paths.cli, "Path to the kolchin executable");
  app.add_option("--configs", paths.configs, "Directory holding italy.cfg");
  app.add_option("--work", paths.work, "Scratch directory");
  CLI11_PARSE(app, argc, argv);

  struct Check {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Check> checks = {
      {1, "oracle-equivalence", oracle_equivalence},
      {2, "weight-crosscheck", weight_crosscheck},
      {3, "conjugacy", conjugacy},
      {4, "hyper-conditionals", hyper_conditionals},
      {5, "likelihood-marginal", likelihood_marginal},
      {6, "micro-trend", micro_trend},
      {7, "calibration", calibration},
      {8, "end-to-end", [&] { return end_to_end(paths); }},
      {9, "chaperones-validity", chaperones_validity},
      {10, "determinism", [&] { return determinism(paths); }},
  };
  std::set<std::string> known;
  for (const auto& c : checks) known.insert(c.name);
  for (const auto& s : selected) {
    if (!known.count(s)) {
      std::cerr << "unknown check '" << s << "'\n";
      return 2;
    }
  }

  int failed = 0;
  for (const auto& c : checks) {
    if (!selected.empty() &&
        std::find(selected.begin(), selected.end(), c.name) == selected.end()) {
      continue;
    }
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = c.run();
    } catch (const std::exception& e) {
      out.pass = false;
      out.detail << " threw: " << e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cout << (out.pass ? "[PASS] " : "[FAIL] ") << c.id << ' ' << c.name << ':'
              << out.detail.str() << " (" << fmt(secs, 3) << " s)" << std::endl;
    failed += !out.pass;
  }
  return failed == 0 ? 0 : 1;
}
