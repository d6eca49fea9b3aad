#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kolchin/datagen.hpp"
#include "kolchin/evalmetrics.hpp"

namespace kolchin {

enum class MicroModel { kNbnb, kNbd, kCrp };
/// kAuto: an exact method when one applies (sequential seating for the CRP,
/// the dynamic-programming sampler for NBD with a == alpha, rejection when a
/// pilot run shows a viable acceptance rate), MCMC otherwise.
enum class SampleMethod { kAuto, kExact, kRejection, kMcmc };

MicroModel parse_micro_model(const std::string& s);
std::string to_string(MicroModel m);
SampleMethod parse_sample_method(const std::string& s);
std::string to_string(SampleMethod m);

inline const std::vector<Index> kDefaultMicroGrid = {100, 316, 1000, 3162, 10000};

struct MicroSettings {
  // nbnb: kappa = NegBin(a, q), mu = NegBin(r, p), all fixed.
  double a = 1.0;
  double q = 0.5;
  double r = 1.0;
  double p = 0.5;
  // nbd: same kappa, mu ~ Dir(alpha, Geometric(base_prob)).
  double alpha = 1.0;
  double base_prob = 0.5;
  // crp: theta calibrated to E[K] = n/2 at this N unless given.
  std::optional<double> crp_theta;
  Index crp_reference_n = 100;

  Index burn_in = 10000;
  Index thinning = 10;
  RejectionOptions rejection;
  /// Proposals in the kAuto pilot run.
  std::uint64_t pilot_trials = 200000;
};

struct MaxFractionSamples {
  MicroModel model = MicroModel::kNbnb;
  Index n = 0;
  /// "exact", "rejection", "sequential" or "mcmc".
  std::string method;
  std::vector<double> values;
  /// Rejection acceptance rate; NaN for other methods.
  double acceptance_rate = 0.0;
};

/// Draws of M_N / N from P(C_N | N).
MaxFractionSamples sample_max_fraction(MicroModel model, Index n, Index n_samples,
                                       SampleMethod method, std::uint64_t seed,
                                       const MicroSettings& settings = {});

/// Same, returning the sampled partitions' largest cluster sizes (M_N).
std::vector<Index> sample_max_sizes(MicroModel model, Index n, Index n_samples,
                                    SampleMethod method, std::uint64_t seed,
                                    const MicroSettings& settings, std::string* method_used,
                                    double* acceptance_rate);

double crp_theta(const MicroSettings& settings);

struct TrendRow {
  Index n = 0;
  std::string method;
  Quantiles q;
};

struct TrendReport {
  std::string model;
  std::vector<TrendRow> rows;
  /// Median strictly decreasing across the grid.
  bool declining_median = false;
};

/// Needs at least three distinct N; rows are sorted by N.
TrendReport trend_report(std::span<const MaxFractionSamples> grid);

/// `model,N,sample_index,max_fraction`.
void write_max_fraction_csv(std::ostream& out, std::span<const MaxFractionSamples> grid);
/// `model,N,method,min,q25,median,q75,max,declining_median`.
void write_trend_csv(std::ostream& out, std::span<const TrendReport> reports);

}  // namespace kolchin
