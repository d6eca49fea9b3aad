#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "kolchin/baseline_priors.hpp"
#include "kolchin/evalmetrics.hpp"
#include "kolchin/inference.hpp"
#include "kolchin/kp_priors.hpp"
#include "kolchin/likelihood.hpp"
#include "kolchin/micro_experiment.hpp"
#include "kolchin/model.hpp"
#include "kolchin/oracle.hpp"
#include "kolchin/rng.hpp"

namespace py = pybind11;
using namespace kolchin;

namespace {

ModelSpec spec_from(const std::string& model, const py::kwargs& kw) {
  ModelSpec s;
  s.kind = parse_model(model);
  for (auto [key, value] : kw) {
    const auto k = key.cast<std::string>();
    if (k == "a") s.a = value.cast<double>();
    else if (k == "q") s.q = value.cast<double>();
    else if (k == "r") s.r = value.cast<double>();
    else if (k == "p") s.p = value.cast<double>();
    else if (k == "alpha") s.alpha = value.cast<double>();
    else if (k == "base_prob") s.base_prob = value.cast<double>();
    else if (k == "theta") s.theta = value.cast<double>();
    else if (k == "discount") s.discount = value.cast<double>();
    else if (k == "learn") s.learn_hyperparameters = value.cast<bool>();
    else throw py::key_error("unknown model parameter '" + k + "'");
  }
  return s;
}

Partition to_partition(const std::vector<std::int64_t>& labels) {
  return Partition::from_assignments(labels);
}

py::dict errors_dict(const PairwiseErrors& e) {
  py::dict d;
  d["fnr"] = e.fnr;
  d["fdr"] = e.fdr;
  d["true_links"] = e.true_links;
  d["false_negatives"] = e.false_negatives;
  d["false_positives"] = e.false_positives;
  return d;
}

}  // namespace

PYBIND11_MODULE(_kolchin, m) {
  m.doc() = "Kolchin partition models for microclustering";

  py::register_exception<std::domain_error>(m, "DomainError", PyExc_ValueError);

  m.def("calibrate_kappa", &calibrate_kappa, py::arg("n"),
        "(a, q) of NegBin(a, q) with mean N/2 and variance N^2/4.");
  m.def("calibrate_dp", &calibrate_dp, py::arg("n"), py::arg("target") = 0.0);
  m.def("calibrate_pyp", &calibrate_pyp, py::arg("n"), py::arg("discount"),
        py::arg("target") = 0.0);

  m.def(
      "log_prior",
      [](const std::string& model, const std::vector<std::int64_t>& labels, py::kwargs kw) {
        const auto p = to_partition(labels);
        return make_prior(spec_from(model, kw), p.size())->log_conditional(p);
      },
      py::arg("model"), py::arg("labels"),
      "Unnormalized log prior of a partition given its size.");

  m.def(
      "reseat_probabilities",
      [](const std::string& model, const std::vector<std::int64_t>& labels, Index element,
         py::kwargs kw) {
        auto p = to_partition(labels);
        if (element >= p.size()) throw py::index_error("element out of range");
        auto prior = make_prior(spec_from(model, kw), p.size());
        p.detach(element);
        auto w = reseat_weights(*prior, p);
        return py::make_tuple(w.clusters, w.probabilities());
      },
      py::arg("model"), py::arg("labels"), py::arg("element"),
      "Cluster ids of the partition with `element` removed and the probability of\n"
      "joining each; the last probability is for a new cluster.");

  m.def(
      "oracle",
      [](const std::string& model, Index n, py::kwargs kw) {
        auto prior = make_prior(spec_from(model, kw), n);
        auto table = exact_conditional_pmf(
            [&](const Partition& p) { return prior->log_conditional(p); }, n);
        std::vector<std::vector<int>> parts;
        parts.reserve(table.partitions.size());
        for (const auto& rgs : table.partitions) parts.emplace_back(rgs.begin(), rgs.end());
        return py::make_tuple(parts, table.probabilities);
      },
      py::arg("model"), py::arg("n"),
      "Every partition of n elements as labels in first-occurrence order, with its\n"
      "exact prior probability.");

  m.def(
      "pairwise_errors",
      [](const std::vector<std::int64_t>& pred, const std::vector<std::int64_t>& truth) {
        return errors_dict(pairwise_errors(to_partition(pred), to_partition(truth)));
      },
      py::arg("pred"), py::arg("truth"));

  m.def(
      "max_fraction",
      [](const std::string& model, Index n, Index samples, const std::string& method,
         std::uint64_t seed) {
        py::gil_scoped_release release;
        auto r = sample_max_fraction(parse_micro_model(model), n, samples,
                                     parse_sample_method(method), seed);
        py::gil_scoped_acquire acquire;
        py::dict d;
        d["method"] = r.method;
        d["values"] = r.values;
        d["acceptance_rate"] = r.acceptance_rate;
        return d;
      },
      py::arg("model"), py::arg("n"), py::arg("samples"), py::arg("method") = "auto",
      py::arg("seed") = 1, "Samples of M_N / N under the prior (nbnb, nbd or crp).");

  m.def(
      "fit",
      [](const std::string& records_csv, const std::string& model, Index iterations,
         Index burn_in, Index thin, std::uint64_t seed, const std::string& kernel,
         double delta0, py::kwargs kw) {
        std::istringstream in(records_csv);
        const RecordTable table = read_records_csv(in);
        McmcConfig config;
        config.n_iterations = iterations;
        config.burn_in = burn_in;
        config.thinning = thin;
        config.kernel = parse_kernel(kernel);
        config.validate();
        auto prior = make_prior(spec_from(model, kw), table.num_records());
        ChainState state(std::move(prior), Partition::singletons(table.num_records()), table,
                         FieldPrior::empirical(table, delta0, true),
                         derive_seed(seed, "fit.chain"));
        ChainResult result;
        {
          py::gil_scoped_release release;
          result = run_chain(state, config);
        }
        py::list out;
        for (const auto& s : result.samples) {
          py::dict d;
          d["iteration"] = s.iteration;
          d["assignments"] = s.assignments;
          d["delta"] = s.delta;
          d["log_joint"] = s.log_joint;
          py::dict hyper;
          for (const auto& [k, v] : s.hyper) hyper[py::str(k)] = v;
          d["hyper"] = hyper;
          out.append(d);
        }
        return out;
      },
      py::arg("records_csv"), py::arg("model"), py::arg("iterations"), py::arg("burn_in") = 0,
      py::arg("thin") = 1, py::arg("seed") = 1, py::arg("kernel") = "chaperones",
      py::arg("delta0") = 1.0,
      "Runs MCMC on records given as CSV text (record_id[,entity_id],field...) and\n"
      "returns the retained samples.");
}
