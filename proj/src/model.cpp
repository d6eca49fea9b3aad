#include "kolchin/model.hpp"

#include <stdexcept>
#include <tuple>

#include "kolchin/distributions.hpp"

namespace kolchin {

ModelKind parse_model(const std::string& name) {
  if (name == "nbnb") return ModelKind::kNbnb;
  if (name == "nbd") return ModelKind::kNbd;
  if (name == "dp") return ModelKind::kDp;
  if (name == "pyp") return ModelKind::kPyp;
  throw std::invalid_argument("unknown model '" + name + "' (nbnb|nbd|dp|pyp)");
}

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::kNbnb: return "nbnb";
    case ModelKind::kNbd: return "nbd";
    case ModelKind::kDp: return "dp";
    case ModelKind::kPyp: return "pyp";
  }
  return "?";
}

namespace {

std::pair<double, double> kappa_params(const ModelSpec& spec, Index n) {
  if (spec.a && spec.q) return {*spec.a, *spec.q};
  const auto [a, q] = calibrate_kappa(n);
  return {spec.a.value_or(a), spec.q.value_or(q)};
}

}  // namespace

std::unique_ptr<PartitionPrior> make_prior(const ModelSpec& spec, Index n) {
  switch (spec.kind) {
    case ModelKind::kNbnb: {
      NbnbHyper h;
      std::tie(h.a, h.q) = kappa_params(spec, n);
      h.r = spec.r;
      h.p = spec.p;
      h.eta_r = spec.eta_r;
      h.s_r = spec.s_r;
      h.u_p = spec.u_p;
      h.v_p = spec.v_p;
      return std::make_unique<NbnbPrior>(h, spec.learn_hyperparameters);
    }
    case ModelKind::kNbd: {
      const auto [a, q] = kappa_params(spec, n);
      return std::make_unique<NbdPrior>(a, q, spec.alpha,
                                        std::make_shared<Geometric>(spec.base_prob),
                                        spec.learn_hyperparameters);
    }
    case ModelKind::kDp:
      return std::make_unique<DpPrior>(DpParams{spec.theta ? *spec.theta : calibrate_dp(n)});
    case ModelKind::kPyp: {
      const double theta = spec.theta ? *spec.theta : calibrate_pyp(n, spec.discount);
      return std::make_unique<PypPrior>(PypParams{theta, spec.discount});
    }
  }
  throw std::invalid_argument("make_prior: unknown model");
}

}  // namespace kolchin
