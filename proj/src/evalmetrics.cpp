#include "kolchin/evalmetrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <unordered_map>

namespace kolchin {

namespace {

std::uint64_t pairs(std::uint64_t m) { return m < 2 ? 0 : m * (m - 1) / 2; }

void write_number(std::ostream& out, double x) {
  if (std::isnan(x)) {
    out << "NA";
  } else {
    out << x;
  }
}

}  // namespace

PairwiseErrors pairwise_errors(std::span<const Index> pred, std::span<const Index> truth) {
  if (pred.size() != truth.size()) {
    throw std::invalid_argument("pairwise_errors: partitions differ in N");
  }
  std::unordered_map<Index, std::uint64_t> pred_sizes, truth_sizes;
  std::unordered_map<std::uint64_t, std::uint64_t> joint;
  for (Index i = 0; i < pred.size(); ++i) {
    ++pred_sizes[pred[i]];
    ++truth_sizes[truth[i]];
    ++joint[(static_cast<std::uint64_t>(pred[i]) << 32) | truth[i]];
  }
  std::uint64_t tp = 0, pred_links = 0, truth_links = 0;
  for (auto [_, m] : joint) tp += pairs(m);
  for (auto [_, m] : pred_sizes) pred_links += pairs(m);
  for (auto [_, m] : truth_sizes) truth_links += pairs(m);

  PairwiseErrors e;
  e.true_links = tp;
  e.false_negatives = truth_links - tp;
  e.false_positives = pred_links - tp;
  e.fnr = truth_links == 0 ? 0.0
                           : static_cast<double>(e.false_negatives) /
                                 static_cast<double>(truth_links);
  e.fdr = pred_links == 0 ? 0.0
                          : static_cast<double>(e.false_positives) /
                                static_cast<double>(pred_links);
  return e;
}

PairwiseErrors pairwise_errors(const Partition& pred, const Partition& truth) {
  if (pred.size() != truth.size()) {
    throw std::invalid_argument("pairwise_errors: partitions differ in N");
  }
  const auto a = pred.canonical_labels();
  const auto b = truth.canonical_labels();
  return pairwise_errors(a, b);
}

Quantiles quantiles(std::vector<double> xs) {
  if (xs.empty()) throw std::invalid_argument("quantiles: no values");
  std::sort(xs.begin(), xs.end());
  auto at = [&](double prob) {
    const double pos = prob * static_cast<double>(xs.size() - 1);
    const auto lo = static_cast<Index>(std::floor(pos));
    const Index hi = std::min(lo + 1, xs.size() - 1);
    return xs[lo] + (pos - static_cast<double>(lo)) * (xs[hi] - xs[lo]);
  };
  return {xs.front(), at(0.25), at(0.5), at(0.75), xs.back()};
}

EvalReport posterior_report(std::span<const Sample> samples,
                            const std::optional<Partition>& truth) {
  if (samples.empty()) throw std::invalid_argument("posterior_report: no samples");
  const double nan = std::numeric_limits<double>::quiet_NaN();
  EvalReport r;
  r.n_samples = samples.size();
  r.stat_posteriors.resize(kStatNames.size());
  for (Index s = 0; s < kStatNames.size(); ++s) r.stat_posteriors[s].name = kStatNames[s];

  std::vector<Index> truth_labels;
  if (truth) {
    truth_labels = truth->canonical_labels();
    const auto ts = statistics(*truth);
    r.true_k = ts.num_clusters;
    r.stat_posteriors[0].truth = static_cast<double>(ts.n_singletons);
    r.stat_posteriors[1].truth = static_cast<double>(ts.max_size);
    r.stat_posteriors[2].truth = ts.mean_size;
    r.stat_posteriors[3].truth = static_cast<double>(ts.p90_size);
  }

  double sum_k = 0.0, sum_fnr = 0.0, sum_fdr = 0.0, sum_delta = 0.0;
  Index with_delta = 0;
  std::vector<double> ks;
  ks.reserve(samples.size());
  for (const auto& s : samples) {
    if (truth && s.assignments.size() != truth_labels.size()) {
      throw std::invalid_argument("posterior_report: sample and truth differ in N");
    }
    std::vector<std::int64_t> labels(s.assignments.begin(), s.assignments.end());
    const Partition p = Partition::from_assignments(labels);
    const auto st = statistics(p);
    ks.push_back(static_cast<double>(st.num_clusters));
    sum_k += ks.back();
    r.stat_posteriors[0].samples.push_back(static_cast<double>(st.n_singletons));
    r.stat_posteriors[1].samples.push_back(static_cast<double>(st.max_size));
    r.stat_posteriors[2].samples.push_back(st.mean_size);
    r.stat_posteriors[3].samples.push_back(static_cast<double>(st.p90_size));
    if (truth) {
      const auto e = pairwise_errors(s.assignments, truth_labels);
      sum_fnr += e.fnr;
      sum_fdr += e.fdr;
    }
    if (!s.delta.empty()) {
      double d = 0.0;
      for (double x : s.delta) d += x;
      sum_delta += d / static_cast<double>(s.delta.size());
      ++with_delta;
    }
  }
  const double n = static_cast<double>(samples.size());
  r.expected_k = sum_k / n;
  double ss = 0.0;
  for (double k : ks) ss += (k - r.expected_k) * (k - r.expected_k);
  r.k_spread = samples.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  r.fnr = truth ? sum_fnr / n : nan;
  r.fdr = truth ? sum_fdr / n : nan;
  r.expected_delta = with_delta ? sum_delta / static_cast<double>(with_delta) : nan;
  return r;
}

void write_report_table(std::ostream& out, std::span<const EvalReport> reports) {
  if (reports.empty()) throw std::invalid_argument("write_report_table: no reports");
  out.precision(10);
  out << "dataset,variant,model,expected_K,K_spread,FNR,FDR,expected_delta\n";
  for (const auto& r : reports) {
    out << r.dataset << ',' << r.variant << ',' << r.model << ',';
    write_number(out, r.expected_k);
    out << ',';
    write_number(out, r.k_spread);
    out << ',';
    write_number(out, r.fnr);
    out << ',';
    write_number(out, r.fdr);
    out << ',';
    write_number(out, r.expected_delta);
    out << '\n';
  }
}

void write_stat_quantiles(std::ostream& out, std::span<const EvalReport> reports) {
  if (reports.empty()) throw std::invalid_argument("write_stat_quantiles: no reports");
  out.precision(10);
  out << "dataset,variant,model,statistic,min,q25,median,q75,max,true_value\n";
  for (const auto& r : reports) {
    for (const auto& s : r.stat_posteriors) {
      const auto q = quantiles(s.samples);
      out << r.dataset << ',' << r.variant << ',' << r.model << ',' << s.name << ','
          << q.min << ',' << q.q25 << ',' << q.median << ',' << q.q75 << ',' << q.max << ',';
      write_number(out, s.truth.value_or(std::numeric_limits<double>::quiet_NaN()));
      out << '\n';
    }
  }
}

}  // namespace kolchin
