#include "kolchin/micro_experiment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "kolchin/baseline_priors.hpp"
#include "kolchin/datagen.hpp"
#include "kolchin/inference.hpp"
#include "kolchin/kp_priors.hpp"

namespace kolchin {

MicroModel parse_micro_model(const std::string& s) {
  if (s == "nbnb") return MicroModel::kNbnb;
  if (s == "nbd") return MicroModel::kNbd;
  if (s == "crp" || s == "dp") return MicroModel::kCrp;
  throw std::invalid_argument("unknown microcheck model '" + s + "' (nbnb|nbd|crp)");
}

std::string to_string(MicroModel m) {
  switch (m) {
    case MicroModel::kNbnb: return "nbnb";
    case MicroModel::kNbd: return "nbd";
    case MicroModel::kCrp: return "crp";
  }
  return "?";
}

SampleMethod parse_sample_method(const std::string& s) {
  if (s == "auto") return SampleMethod::kAuto;
  if (s == "exact") return SampleMethod::kExact;
  if (s == "rejection") return SampleMethod::kRejection;
  if (s == "mcmc") return SampleMethod::kMcmc;
  throw std::invalid_argument("unknown method '" + s + "' (auto|exact|rejection|mcmc)");
}

std::string to_string(SampleMethod m) {
  switch (m) {
    case SampleMethod::kAuto: return "auto";
    case SampleMethod::kExact: return "exact";
    case SampleMethod::kRejection: return "rejection";
    case SampleMethod::kMcmc: return "mcmc";
  }
  return "?";
}

double crp_theta(const MicroSettings& settings) {
  return settings.crp_theta ? *settings.crp_theta : calibrate_dp(settings.crp_reference_n);
}

namespace {

Index max_of(std::span<const Index> sizes) {
  return sizes.empty() ? 0 : *std::max_element(sizes.begin(), sizes.end());
}

// Sizes for the NBD proposal with mu integrated out: the sizes are a Polya
// urn draw from Dir(alpha, mu0).
RejectionSampler::SizeProposal nbd_proposal(std::shared_ptr<const CountDistribution> kappa,
                                            std::shared_ptr<const CountDistribution> base,
                                            double alpha) {
  return [kappa, base, alpha](Rng& rng, Index target, std::vector<Index>& sizes) {
    const Index k = kappa->sample(rng);
    if (k > target) return false;
    sizes.clear();
    Index total = 0;
    for (Index c = 0; c < k; ++c) {
      const double fresh = alpha / (alpha + static_cast<double>(c));
      const Index s = uniform01(rng) < fresh ? base->sample(rng) : sizes[uniform_index(rng, c)];
      total += s;
      if (total + (k - c - 1) > target) return false;
      sizes.push_back(s);
    }
    return total == target;
  };
}

std::vector<Index> crp_sequential(Index n, Index n_samples, double theta, Rng& rng) {
  std::vector<Index> out;
  std::vector<Index> table_of(n);
  std::vector<Index> counts;
  for (Index s = 0; s < n_samples; ++s) {
    counts.clear();
    Index best = 0;
    for (Index i = 0; i < n; ++i) {
      Index t;
      if (uniform01(rng) * (theta + static_cast<double>(i)) < theta) {
        t = counts.size();
        counts.push_back(0);
      } else {
        t = table_of[uniform_index(rng, i)];
      }
      table_of[i] = t;
      best = std::max(best, ++counts[t]);
    }
    out.push_back(best);
  }
  return out;
}

std::vector<Index> mcmc_max_sizes(std::unique_ptr<PartitionPrior> prior, Index n,
                                  Index n_samples, const MicroSettings& settings,
                                  std::uint64_t seed) {
  McmcConfig cfg;
  cfg.burn_in = settings.burn_in;
  cfg.thinning = settings.thinning;
  cfg.n_iterations = settings.burn_in + n_samples * settings.thinning;
  cfg.seed = seed;
  cfg.kernel = Kernel::kChaperones;
  cfg.chaperone_mode = ChaperoneMode::kUniform;
  cfg.update_delta = false;
  ChainState state(std::move(prior), Partition::singletons(n), seed);
  std::vector<Index> out;
  out.reserve(n_samples);
  run_chain(state, cfg, [&](const Sample&) {
    out.push_back(state.partition().max_cluster_size());
  });
  return out;
}

}  // namespace

std::vector<Index> sample_max_sizes(MicroModel model, Index n, Index n_samples,
                                    SampleMethod method, std::uint64_t seed,
                                    const MicroSettings& settings, std::string* method_used,
                                    double* acceptance_rate) {
  if (n == 0) throw std::invalid_argument("sample_max_fraction: N must be positive");
  if (n_samples == 0) throw std::invalid_argument("sample_max_fraction: need samples");
  const double nan = std::numeric_limits<double>::quiet_NaN();
  auto report = [&](const char* used, double rate) {
    if (method_used) *method_used = used;
    if (acceptance_rate) *acceptance_rate = rate;
  };

  auto kappa = std::make_shared<TruncNegBin>(settings.a, settings.q);
  if (model == MicroModel::kCrp) {
    const double theta = crp_theta(settings);
    if (method == SampleMethod::kMcmc) {
      report("mcmc", nan);
      return mcmc_max_sizes(std::make_unique<DpPrior>(DpParams{theta}), n, n_samples,
                            settings, seed);
    }
    if (method == SampleMethod::kRejection) {
      throw std::invalid_argument("crp: use the exact (sequential) or mcmc method");
    }
    Rng rng(seed);
    report("sequential", nan);
    return crp_sequential(n, n_samples, theta, rng);
  }

  std::unique_ptr<PartitionPrior> prior;
  RejectionSampler::SizeProposal proposal;
  if (model == MicroModel::kNbnb) {
    NbnbHyper h;
    h.a = settings.a;
    h.q = settings.q;
    h.r = settings.r;
    h.p = settings.p;
    prior = std::make_unique<NbnbPrior>(h, false);
    auto mu = std::make_shared<TruncNegBin>(settings.r, settings.p);
    proposal = [kappa, mu](Rng& rng, Index target, std::vector<Index>& sizes) {
      const Index k = kappa->sample(rng);
      if (k > target) return false;
      sizes.clear();
      Index total = 0;
      for (Index c = 0; c < k; ++c) {
        const Index s = mu->sample(rng);
        total += s;
        if (total + (k - c - 1) > target) return false;
        sizes.push_back(s);
      }
      return total == target;
    };
  } else {
    auto base = std::make_shared<Geometric>(settings.base_prob);
    const bool exact_applies = settings.a == settings.alpha;
    if (method == SampleMethod::kExact || (method == SampleMethod::kAuto && exact_applies)) {
      NbdExactSampler sampler(settings.a, settings.q, settings.alpha, base, n);
      Rng rng(seed);
      std::vector<Index> out;
      for (const auto& h : sampler.sample(n_samples, rng)) out.push_back(h.rbegin()->first);
      report("exact", nan);
      return out;
    }
    prior = std::make_unique<NbdPrior>(settings.a, settings.q, settings.alpha, base, true);
    proposal = nbd_proposal(kappa, base, settings.alpha);
  }
  if (method == SampleMethod::kExact) {
    throw std::invalid_argument(to_string(model) +
                                ": no exact sampler; use auto, rejection or mcmc");
  }

  if (method != SampleMethod::kMcmc) {
    RejectionOptions opts = settings.rejection;
    if (method == SampleMethod::kAuto) opts.min_trials = settings.pilot_trials;
    RejectionSampler sampler(proposal, n, opts);
    Rng rng(seed);
    std::vector<Index> out;
    try {
      for (Index s = 0; s < n_samples; ++s) out.push_back(max_of(sampler.sample_sizes(rng)));
      report("rejection", sampler.acceptance_rate());
      return out;
    } catch (const AcceptanceFloorError&) {
      if (method == SampleMethod::kRejection) throw;
    }
  }
  report("mcmc", nan);
  return mcmc_max_sizes(std::move(prior), n, n_samples, settings, seed);
}

MaxFractionSamples sample_max_fraction(MicroModel model, Index n, Index n_samples,
                                       SampleMethod method, std::uint64_t seed,
                                       const MicroSettings& settings) {
  MaxFractionSamples out;
  out.model = model;
  out.n = n;
  const auto sizes = sample_max_sizes(model, n, n_samples, method, seed, settings,
                                      &out.method, &out.acceptance_rate);
  out.values.reserve(sizes.size());
  for (Index m : sizes) out.values.push_back(static_cast<double>(m) / static_cast<double>(n));
  return out;
}

TrendReport trend_report(std::span<const MaxFractionSamples> grid) {
  std::vector<const MaxFractionSamples*> cells;
  for (const auto& g : grid) cells.push_back(&g);
  std::sort(cells.begin(), cells.end(), [](auto* x, auto* y) { return x->n < y->n; });
  for (Index i = 1; i < cells.size(); ++i) {
    if (cells[i]->n == cells[i - 1]->n) {
      throw std::invalid_argument("trend_report: duplicate N in the grid");
    }
    if (cells[i]->model != cells[0]->model) {
      throw std::invalid_argument("trend_report: grid mixes models");
    }
  }
  if (cells.size() < 3) throw std::invalid_argument("trend_report: need at least three N");
  TrendReport r;
  r.model = to_string(cells[0]->model);
  r.declining_median = true;
  for (const auto* c : cells) {
    r.rows.push_back({c->n, c->method, quantiles(c->values)});
    if (r.rows.size() > 1 &&
        !(r.rows.back().q.median < r.rows[r.rows.size() - 2].q.median)) {
      r.declining_median = false;
    }
  }
  return r;
}

void write_max_fraction_csv(std::ostream& out, std::span<const MaxFractionSamples> grid) {
  out.precision(17);
  out << "model,N,sample_index,max_fraction\n";
  for (const auto& g : grid) {
    for (Index i = 0; i < g.values.size(); ++i) {
      out << to_string(g.model) << ',' << g.n << ',' << i << ',' << g.values[i] << '\n';
    }
  }
}

void write_trend_csv(std::ostream& out, std::span<const TrendReport> reports) {
  out.precision(10);
  out << "model,N,method,min,q25,median,q75,max,declining_median\n";
  for (const auto& r : reports) {
    for (const auto& row : r.rows) {
      out << r.model << ',' << row.n << ',' << row.method << ',' << row.q.min << ','
          << row.q.q25 << ',' << row.q.median << ',' << row.q.q75 << ',' << row.q.max << ','
          << (r.declining_median ? "true" : "false") << '\n';
    }
  }
}

}  // namespace kolchin
