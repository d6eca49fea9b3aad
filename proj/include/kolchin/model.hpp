#pragma once

#include <memory>
#include <optional>
#include <string>

#include "kolchin/baseline_priors.hpp"
#include "kolchin/kp_priors.hpp"

namespace kolchin {

enum class ModelKind { kNbnb, kNbd, kDp, kPyp };

ModelKind parse_model(const std::string& name);
std::string to_string(ModelKind kind);

/// Prior configuration. Unset optionals are calibrated from N when the
/// prior is built.
struct ModelSpec {
  ModelKind kind = ModelKind::kNbd;

  // kappa = NegBin(a, q) for nbnb and nbd; default E[K] = sd[K] = N/2.
  std::optional<double> a;
  std::optional<double> q;

  // nbnb: starting r, p and their hyperpriors.
  double r = 1.0;
  double p = 0.5;
  double eta_r = 1.0;
  double s_r = 1.0;
  double u_p = 2.0;
  double v_p = 2.0;

  // nbd: mu ~ Dir(alpha, Geometric(base_prob)).
  double alpha = 1.0;
  double base_prob = 0.5;

  // dp / pyp; default theta gives E[K] = N/2.
  std::optional<double> theta;
  double discount = 0.5;

  /// Learn r, p (nbnb) or mu (nbd) during inference.
  bool learn_hyperparameters = true;
};

/// Builds the prior for partitions of n elements.
std::unique_ptr<PartitionPrior> make_prior(const ModelSpec& spec, Index n);

}  // namespace kolchin
