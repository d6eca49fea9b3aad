#include "kolchin/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace kolchin {

std::vector<Index> sample_sizes_forward(const CountDistribution& kappa,
                                        const CountDistribution& mu, Rng& rng) {
  const Index k = kappa.sample(rng);
  std::vector<Index> sizes(k);
  for (auto& s : sizes) s = mu.sample(rng);
  return sizes;
}

Partition permuted_partition(std::span<const Index> sizes, Rng& rng) {
  std::vector<std::int64_t> labels;
  for (Index c = 0; c < sizes.size(); ++c) {
    labels.insert(labels.end(), sizes[c], static_cast<std::int64_t>(c));
  }
  std::shuffle(labels.begin(), labels.end(), rng);
  return Partition::from_assignments(labels);
}

Partition sample_partition_forward(const CountDistribution& kappa,
                                   const CountDistribution& mu, Rng& rng) {
  const auto sizes = sample_sizes_forward(kappa, mu, rng);
  return permuted_partition(sizes, rng);
}

AcceptanceFloorError::AcceptanceFloorError(double rate, Index n)
    : std::runtime_error("rejection sampling at N=" + std::to_string(n) +
                         ": acceptance rate " + std::to_string(rate) +
                         " is below the floor; use the mcmc method"),
      rate_(rate) {}

RejectionSampler::RejectionSampler(const CountDistribution& kappa,
                                   const CountDistribution& mu, Index n,
                                   RejectionOptions options)
    : RejectionSampler(
          [&kappa, &mu](Rng& rng, Index target, std::vector<Index>& sizes) {
            const Index k = kappa.sample(rng);
            if (k > target) return false;
            sizes.clear();
            Index total = 0;
            for (Index c = 0; c < k; ++c) {
              const Index s = mu.sample(rng);
              total += s;
              // The remaining draws cannot bring the sum back to N.
              if (total + (k - c - 1) > target) return false;
              sizes.push_back(s);
            }
            return total == target;
          },
          n, options) {}

RejectionSampler::RejectionSampler(SizeProposal propose, Index n, RejectionOptions options)
    : propose_(std::move(propose)), n_(n), options_(options) {
  if (n == 0) throw std::invalid_argument("rejection sampler: N must be positive");
}

double RejectionSampler::acceptance_rate() const {
  return trials_ == 0 ? 0.0 : static_cast<double>(accepted_) / static_cast<double>(trials_);
}

std::vector<Index> RejectionSampler::sample_sizes(Rng& rng) {
  std::vector<Index> sizes;
  while (true) {
    ++trials_;
    if (propose_(rng, n_, sizes)) {
      ++accepted_;
      return sizes;
    }
    if (trials_ >= options_.min_trials && acceptance_rate() < options_.min_acceptance) {
      throw AcceptanceFloorError(acceptance_rate(), n_);
    }
  }
}

Partition RejectionSampler::sample(Rng& rng) {
  const auto sizes = sample_sizes(rng);
  return permuted_partition(sizes, rng);
}

Partition sample_partition_given_n_rejection(const CountDistribution& kappa,
                                             const CountDistribution& mu, Index n, Rng& rng,
                                             RejectionOptions options) {
  RejectionSampler sampler(kappa, mu, n, options);
  return sampler.sample(rng);
}

NbdExactSampler::NbdExactSampler(double a, double q, double alpha,
                                 std::shared_ptr<const CountDistribution> base, Index n)
    : log_q_(std::log(q)), log_alpha_(std::log(alpha)), base_(std::move(base)), n_(n) {
  if (n == 0) throw std::invalid_argument("NbdExactSampler: N must be positive");
  if (!(q > 0.0 && q < 1.0)) throw std::domain_error("NbdExactSampler: q outside (0,1)");
  if (!(alpha > 0.0)) throw std::domain_error("NbdExactSampler: alpha must be positive");
  if (!base_) throw std::invalid_argument("NbdExactSampler: null base measure");
  if (std::abs(a - alpha) > 1e-12 * std::max(1.0, alpha)) {
    throw std::invalid_argument("NbdExactSampler: requires a == alpha");
  }
  block_ = std::max<Index>(1, static_cast<Index>(std::ceil(std::sqrt(static_cast<double>(n)))));
  Row row(n + 1, -std::numeric_limits<double>::infinity());
  row[0] = 0.0;
  checkpoints_[n + 1] = row;
  for (Index m = n; m >= 1; --m) {
    row = next_row(m, row);
    if ((m - 1) % block_ == 0) checkpoints_[m] = row;
  }
}

// log[ q^l (b)^(l) / l! ] with b = alpha mu0_m, kept finite when b underflows.
double NbdExactSampler::log_term(Index m, Index l) const {
  if (l == 0) return 0.0;
  const double log_b = log_alpha_ + base_->log_pmf(m);
  if (log_b == -std::numeric_limits<double>::infinity()) return log_b;
  const double b = std::exp(log_b);
  const double ld = static_cast<double>(l);
  return ld * log_q_ + log_b + std::lgamma(b + ld) - std::lgamma(b + 1.0) -
         std::lgamma(ld + 1.0);
}

// Z(m, t) = log sum_l term(m, l) exp Z(m + 1, t - m l).
NbdExactSampler::Row NbdExactSampler::next_row(Index m, const Row& above) const {
  const Index max_l = n_ / m;
  std::vector<double> terms(max_l + 1);
  for (Index l = 0; l <= max_l; ++l) terms[l] = log_term(m, l);
  Row row(n_ + 1);
  for (Index t = 0; t <= n_; ++t) {
    const Index top = t / m;
    double best = -std::numeric_limits<double>::infinity();
    for (Index l = 0; l <= top; ++l) best = std::max(best, terms[l] + above[t - m * l]);
    if (best == -std::numeric_limits<double>::infinity()) {
      row[t] = best;
      continue;
    }
    double sum = 0.0;
    for (Index l = 0; l <= top; ++l) sum += std::exp(terms[l] + above[t - m * l] - best);
    row[t] = best + std::log(sum);
  }
  return row;
}

std::vector<SizeHistogram> NbdExactSampler::sample(Index count, Rng& rng) const {
  std::vector<SizeHistogram> out(count);
  std::vector<Index> left(count, n_);
  std::vector<double> w;
  for (Index start = 1; start <= n_; start += block_) {
    const Index end = std::min(start + block_ - 1, n_);
    // rows[k] = Z(start + 1 + k, .), recomputed down from the checkpoint.
    std::vector<Row> rows(end - start + 1);
    rows.back() = checkpoints_.at(end + 1);
    for (Index m = end; m > start; --m) rows[m - start - 1] = next_row(m, rows[m - start]);
    for (Index m = start; m <= end; ++m) {
      const Row& above = rows[m - start];
      for (Index d = 0; d < count; ++d) {
        if (left[d] == 0) continue;
        const Index top = left[d] / m;
        w.assign(top + 1, 0.0);
        for (Index l = 0; l <= top; ++l) w[l] = log_term(m, l) + above[left[d] - m * l];
        const Index l = sample_log_weights(w, rng);
        if (l > 0) out[d][m] = l;
        left[d] -= m * l;
      }
    }
  }
  return out;
}

RecordTable generate_records(const Partition& p, const std::vector<FieldModel>& fields,
                             std::span<const double> delta, Rng& rng) {
  const Index f_count = fields.size();
  if (f_count == 0) throw std::invalid_argument("generate_records: no fields");
  if (delta.size() != 1 && delta.size() != f_count) {
    throw std::invalid_argument("generate_records: need one delta or one per field");
  }
  for (const auto& f : fields) {
    if (f.gamma.size() != f.spec.num_categories() || f.gamma.empty()) {
      throw std::invalid_argument("generate_records: gamma of field '" + f.spec.name +
                                  "' does not match its categories");
    }
    const double total = std::accumulate(f.gamma.begin(), f.gamma.end(), 0.0);
    if (std::abs(total - 1.0) > 1e-9) {
      throw std::invalid_argument("generate_records: gamma of field '" + f.spec.name +
                                  "' is not normalized");
    }
  }
  for (double d : delta) {
    if (!(d > 0.0)) throw std::invalid_argument("generate_records: delta must be positive");
  }

  const Index n = p.size();
  const auto labels = p.canonical_labels();
  const Index k = p.num_clusters();
  std::vector<std::vector<Index>> by_cluster(k);
  for (Index i = 0; i < n; ++i) by_cluster[labels[i]].push_back(i);
  std::vector<Category> values(n * f_count);
  std::vector<double> params;
  for (Index f = 0; f < f_count; ++f) {
    const double d = delta.size() == 1 ? delta[0] : delta[f];
    params.resize(fields[f].gamma.size());
    for (Index v = 0; v < params.size(); ++v) params[v] = d * fields[f].gamma[v];
    for (Index c = 0; c < k; ++c) {
      const auto log_theta = sample_log_dirichlet(params, rng);
      for (Index i : by_cluster[c]) {
        values[i * f_count + f] = static_cast<Category>(sample_log_weights(log_theta, rng));
      }
    }
  }

  std::vector<FieldSpec> specs;
  for (const auto& f : fields) specs.push_back(f.spec);
  std::vector<std::string> ids(n);
  for (Index i = 0; i < n; ++i) ids[i] = "r" + std::to_string(i + 1);
  std::vector<std::int64_t> truth(labels.begin(), labels.end());
  return RecordTable(std::move(specs), std::move(values), std::move(ids), std::move(truth));
}

DownsampleMode parse_downsample_mode(const std::string& s) {
  if (s == "proportional") return DownsampleMode::kProportional;
  if (s == "keep-large") return DownsampleMode::kKeepLarge;
  throw std::invalid_argument("unknown downsample mode '" + s + "' (proportional|keep-large)");
}

std::string to_string(DownsampleMode m) {
  return m == DownsampleMode::kKeepLarge ? "keep-large" : "proportional";
}

Index histogram_records(const SizeHistogram& h) {
  Index total = 0;
  for (auto [m, count] : h) total += m * count;
  return total;
}

Index histogram_clusters(const SizeHistogram& h) {
  Index total = 0;
  for (auto [m, count] : h) total += count;
  return total;
}

std::vector<Index> histogram_sizes(const SizeHistogram& h) {
  std::vector<Index> out;
  for (auto [m, count] : h) out.insert(out.end(), count, m);
  return out;
}

SizeHistogram parse_histogram(const std::string& s) {
  SizeHistogram h;
  if (trim(s).empty()) return h;
  for (const auto& item : split(s, ',')) {
    const auto parts = split(item, ':');
    if (parts.size() != 2) {
      throw std::invalid_argument("histogram: expected size:count, got '" + item + "'");
    }
    const auto m = parse_int(parts[0], "histogram size");
    const auto count = parse_int(parts[1], "histogram count");
    if (m < 1 || count < 0) {
      throw std::invalid_argument("histogram: sizes must be >= 1 and counts >= 0");
    }
    if (count > 0) h[static_cast<Index>(m)] += static_cast<Index>(count);
  }
  return h;
}

std::string format_histogram(const SizeHistogram& h) {
  std::string s;
  for (auto [m, count] : h) {
    if (!s.empty()) s += ',';
    s += std::to_string(m) + ":" + std::to_string(count);
  }
  return s;
}

namespace {

// Largest-remainder allocation of `target` records over `available`, with
// the clusters in `committed` already chosen.
SizeHistogram allocate(const SizeHistogram& available, Index target,
                       SizeHistogram committed) {
  const Index total = histogram_records(available);
  Index used = histogram_records(committed);
  if (total == 0 || used > target) {
    if (used == target) return committed;
    throw std::invalid_argument("downsample: target cannot be met");
  }
  const double scale = static_cast<double>(target) / static_cast<double>(total);

  struct Share {
    Index size;
    double remainder;
  };
  std::vector<Share> shares;
  for (auto [m, count] : available) {
    const double ideal = static_cast<double>(count) * scale;
    const Index base = std::min<Index>(static_cast<Index>(std::floor(ideal)), count);
    Index& c = committed[m];
    if (c < base) {
      used += (base - c) * m;
      c = base;
    }
    shares.push_back({m, ideal - std::floor(ideal)});
  }
  // Forced clusters can overshoot; singletons absorb the difference.
  if (used > target) {
    const Index excess = used - target;
    if (committed[1] < excess) throw std::invalid_argument("downsample: target cannot be met");
    committed[1] -= excess;
    used = target;
  }
  std::stable_sort(shares.begin(), shares.end(),
                   [](const Share& x, const Share& y) { return x.remainder > y.remainder; });
  for (const auto& s : shares) {
    if (used == target) break;
    if (s.remainder > 0.0 && s.size <= target - used &&
        committed[s.size] < available.at(s.size)) {
      ++committed[s.size];
      used += s.size;
    }
  }
  // Whatever is left goes to the largest sizes that still fit.
  for (auto it = available.rbegin(); it != available.rend() && used < target; ++it) {
    const auto [m, count] = *it;
    while (used < target && m <= target - used && committed[m] < count) {
      ++committed[m];
      used += m;
    }
  }
  if (used != target) throw std::invalid_argument("downsample: target cannot be met exactly");
  for (auto it = committed.begin(); it != committed.end();) {
    it = it->second == 0 ? committed.erase(it) : std::next(it);
  }
  return committed;
}

}  // namespace

SizeHistogram downsample_preserving_sizes(const SizeHistogram& histogram, Index target_n,
                                          DownsampleMode mode, const SizeHistogram& keep) {
  const Index total = histogram_records(histogram);
  if (histogram_clusters(histogram) == 0) {
    throw std::invalid_argument("downsample: empty histogram");
  }
  if (target_n == 0 || target_n > total) {
    throw std::invalid_argument("downsample: target " + std::to_string(target_n) +
                                " outside [1, " + std::to_string(total) + "]");
  }
  if (target_n == total) return histogram;

  if (mode == DownsampleMode::kProportional) {
    SizeHistogram committed;
    const Index max_size = histogram.rbegin()->first;
    if (max_size <= target_n) committed[max_size] = 1;
    return allocate(histogram, target_n, committed);
  }

  SizeHistogram rest = histogram;
  Index kept_records = 0;
  for (auto [m, count] : keep) {
    auto it = rest.find(m);
    if (it == rest.end() || it->second < count) {
      throw std::invalid_argument("downsample: keep_large asks for more clusters of size " +
                                  std::to_string(m) + " than exist");
    }
    it->second -= count;
    kept_records += m * count;
  }
  if (kept_records > target_n) {
    throw std::invalid_argument("downsample: kept clusters exceed the target");
  }
  for (auto it = rest.begin(); it != rest.end();) {
    it = it->second == 0 ? rest.erase(it) : std::next(it);
  }
  SizeHistogram out = allocate(rest, target_n - kept_records, {});
  for (auto [m, count] : keep) {
    if (count > 0) out[m] += count;
  }
  return out;
}

namespace {

FieldModel parse_field(const std::string& name, const std::string& spec) {
  FieldModel f;
  f.spec.name = name;
  const auto items = split(spec, ',');
  if (items.size() == 1 && items[0].rfind("uniform:", 0) == 0) {
    const auto d = parse_int(items[0].substr(8), "gamma." + name);
    if (d < 1) throw std::invalid_argument("gamma." + name + ": need at least one category");
    for (std::int64_t v = 1; v <= d; ++v) f.spec.categories.push_back(std::to_string(v));
    f.gamma.assign(static_cast<Index>(d), 1.0 / static_cast<double>(d));
    return f;
  }
  for (const auto& item : items) {
    const auto colon = item.rfind(':');
    if (colon == std::string::npos || colon == 0) {
      throw std::invalid_argument("gamma." + name + ": expected label:weight, got '" +
                                  item + "'");
    }
    const double w = parse_double(item.substr(colon + 1), "gamma." + name);
    if (!(w > 0.0)) throw std::invalid_argument("gamma." + name + ": weights must be positive");
    f.spec.categories.push_back(trim(item.substr(0, colon)));
    f.gamma.push_back(w);
  }
  const double total = std::accumulate(f.gamma.begin(), f.gamma.end(), 0.0);
  for (double& g : f.gamma) g /= total;
  return f;
}

}  // namespace

DatasetConfig DatasetConfig::from_config(const Config& c) {
  DatasetConfig d;
  d.name = c.get_or("name", "dataset");
  d.seed = c.get_uint("seed");
  for (const auto& field : split(c.get("fields"), ',')) {
    if (field.empty()) throw std::invalid_argument("fields: empty field name");
    d.fields.push_back(parse_field(field, c.get("gamma." + field)));
  }
  d.sizes = parse_histogram(c.get("sizes"));
  if (histogram_clusters(d.sizes) == 0) {
    throw std::invalid_argument("sizes: the histogram has no clusters");
  }
  if (c.has("target_n")) {
    const auto t = c.get_int("target_n");
    if (t < 1) throw std::invalid_argument("target_n must be positive");
    d.target_n = static_cast<Index>(t);
  }
  d.downsample = parse_downsample_mode(c.get_or("downsample", "proportional"));
  d.keep_large = parse_histogram(c.get_or("keep_large", ""));
  d.deltas = parse_double_list(c.get("deltas"), "deltas");
  for (double x : d.deltas) {
    if (!(x > 0.0)) throw std::invalid_argument("deltas must be positive");
  }
  // Surface down-sampling problems before anything is written.
  d.effective_sizes();
  return d;
}

SizeHistogram DatasetConfig::effective_sizes() const {
  if (!target_n) return sizes;
  return downsample_preserving_sizes(sizes, *target_n, downsample, keep_large);
}

std::vector<GeneratedVariant> generate_dataset(const DatasetConfig& config) {
  const auto sizes = histogram_sizes(config.effective_sizes());
  Rng partition_rng = make_rng(config.seed, "datagen.partition");
  const Partition truth = permuted_partition(sizes, partition_rng);
  std::vector<GeneratedVariant> out;
  for (Index v = 0; v < config.deltas.size(); ++v) {
    Rng rng = make_rng(config.seed, "datagen.records", v);
    const double delta[] = {config.deltas[v]};
    out.push_back({config.deltas[v], generate_records(truth, config.fields, delta, rng)});
  }
  return out;
}

}  // namespace kolchin
