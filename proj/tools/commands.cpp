#include "commands.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>
#include <utility>

#include <json.hpp>

#include "kolchin/datagen.hpp"
#include "kolchin/evalmetrics.hpp"
#include "kolchin/inference.hpp"
#include "kolchin/micro_experiment.hpp"
#include "kolchin/model.hpp"
#include "kolchin/oracle.hpp"
#include "kolchin/sample_io.hpp"

#ifndef KOLCHIN_VERSION
#define KOLCHIN_VERSION "0.0.0"
#endif

namespace kolchin::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

std::string version() { return KOLCHIN_VERSION; }

namespace {

// Runs `f`, reporting any failure as a validation error.
template <class F>
auto validated(F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ValidationError&) {
    throw;
  } catch (const std::exception& e) {
    throw ValidationError(e.what());
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string content_hash(const std::string& bytes) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(bytes)));
  return buf;
}

void check_keys(const Config& o, const std::set<std::string>& allowed,
                const std::string& prefix_allowed = "") {
  for (const auto& [k, _] : o.values()) {
    if (allowed.count(k)) continue;
    if (!prefix_allowed.empty() && k.rfind(prefix_allowed, 0) == 0) continue;
    throw ValidationError("unknown option '" + k + "'");
  }
}

std::uint64_t seed_of(const Config& o) { return o.has("seed") ? o.get_uint("seed") : 1; }

Index positive_index(const Config& o, const std::string& key, std::int64_t fallback) {
  const auto v = o.get_int_or(key, fallback);
  if (v < 1) throw ValidationError(key + " must be positive");
  return static_cast<Index>(v);
}

// Files of one command run, written together once everything succeeded.
class Outputs {
 public:
  void add(const std::string& name, std::string content) {
    files_.emplace_back(name, std::move(content));
  }

  void commit(const std::string& command, const Config& options,
              const std::vector<std::string>& input_keys, const std::string& out_dir) {
    json m;
    m["tool"] = "kolchin";
    m["version"] = version();
    m["command"] = command;
    m["seed"] = seed_of(options);
    m["config_hash"] = options.hash();
    json opts = json::object();
    for (const auto& [k, v] : options.values()) opts[k] = v;
    m["options"] = opts;
    json inputs = json::object();
    for (const auto& key : input_keys) {
      if (!options.has(key)) continue;
      json files = json::array();
      for (const auto& path : split(options.get(key), ',')) {
        files.push_back({{"path", path}, {"hash", content_hash(read_file(path))}});
      }
      inputs[key] = files;
    }
    m["inputs"] = inputs;
    json outputs = json::array();
    for (const auto& [name, content] : files_) {
      outputs.push_back({{"file", name}, {"hash", content_hash(content)}});
    }
    m["outputs"] = outputs;
    add("manifest.json", m.dump(2) + "\n");

    fs::create_directories(out_dir);
    for (const auto& [name, content] : files_) {
      const fs::path target = fs::path(out_dir) / name;
      const fs::path tmp = fs::path(out_dir) / ("." + name + ".tmp");
      {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
        out << content;
        if (!out) throw std::runtime_error("write failed for '" + tmp.string() + "'");
      }
      fs::rename(tmp, target);
    }
  }

 private:
  std::vector<std::pair<std::string, std::string>> files_;
};

std::string format_double(double x) {
  std::ostringstream s;
  s.precision(17);
  s << x;
  return s.str();
}

std::string variant_name(double delta) {
  std::ostringstream s;
  s << "delta" << delta;
  return s.str();
}

}  // namespace

// --- generate ------------------------------------------------------------------

void cmd_generate(const Config& options, const std::string& out_dir) {
  const auto config = validated([&] {
    check_keys(options, {"name", "seed", "fields", "sizes", "target_n", "downsample",
                         "keep_large", "deltas"},
               "gamma.");
    if (!options.has("seed")) throw ValidationError("seed is required");
    return DatasetConfig::from_config(options);
  });
  const auto variants = generate_dataset(config);
  Outputs out;
  for (const auto& v : variants) {
    const std::string stem = config.name + "_" + variant_name(v.delta);
    std::ostringstream records, truth;
    write_records_csv(records, v.records);
    write_partition_csv(truth, v.records.truth_partition(), v.records.record_ids());
    out.add(stem + ".csv", records.str());
    out.add(stem + "_truth.csv", truth.str());
  }
  out.commit("generate", options, {}, out_dir);
}

// --- fit -----------------------------------------------------------------------

namespace {

const std::set<std::string> kModelKeys = {"model", "a",     "q",     "r",        "p",
                                          "eta_r", "s_r",   "u_p",   "v_p",      "alpha",
                                          "base_prob", "theta", "discount",
                                          "learn_hyperparameters"};

ModelSpec model_spec(const Config& o) {
  ModelSpec s;
  s.kind = parse_model(o.get_or("model", "nbd"));
  if (o.has("a")) s.a = o.get_double("a");
  if (o.has("q")) s.q = o.get_double("q");
  s.r = o.get_double_or("r", s.r);
  s.p = o.get_double_or("p", s.p);
  s.eta_r = o.get_double_or("eta_r", s.eta_r);
  s.s_r = o.get_double_or("s_r", s.s_r);
  s.u_p = o.get_double_or("u_p", s.u_p);
  s.v_p = o.get_double_or("v_p", s.v_p);
  s.alpha = o.get_double_or("alpha", s.alpha);
  s.base_prob = o.get_double_or("base_prob", s.base_prob);
  if (o.has("theta")) s.theta = o.get_double("theta");
  s.discount = o.get_double_or("discount", s.discount);
  if (s.kind == ModelKind::kPyp && !(s.discount >= 0.0 && s.discount < 1.0)) {
    throw ValidationError("discount must lie in [0, 1)");
  }
  s.learn_hyperparameters = o.get_bool_or("learn_hyperparameters", true);
  return s;
}

McmcConfig mcmc_config(const Config& o) {
  McmcConfig c;
  c.n_iterations = positive_index(o, "iterations", 1000);
  const auto burn_in = o.get_int_or("burn_in", static_cast<std::int64_t>(c.n_iterations / 2));
  if (burn_in < 0) throw ValidationError("burn_in must be >= 0");
  c.burn_in = static_cast<Index>(burn_in);
  c.thinning = positive_index(o, "thin", 1);
  c.seed = seed_of(o);
  c.kernel = parse_kernel(o.get_or("kernel", "chaperones"));
  c.chaperone_mode = parse_chaperone_mode(o.get_or("chaperone_mode", "similarity"));
  c.pairs_per_iteration = static_cast<Index>(o.get_int_or("pairs_per_iteration", 0));
  c.random_scan = o.get_bool_or("random_scan", false);
  c.slice.width = o.get_double_or("slice_width", c.slice.width);
  c.slice.max_step_out = static_cast<int>(o.get_int_or("slice_max_steps", c.slice.max_step_out));
  c.update_delta = o.get_bool_or("update_delta", true);
  c.validate();
  return c;
}

}  // namespace

void cmd_fit(const Config& options, const std::string& out_dir) {
  struct Setup {
    RecordTable table;
    ModelSpec spec;
    McmcConfig mcmc;
    FieldPrior field_prior;
    std::unique_ptr<PartitionPrior> prior;
    Index mu_len;
  };
  auto setup = validated([&] {
    std::set<std::string> keys = kModelKeys;
    keys.insert({"records", "seed", "iterations", "burn_in", "thin", "kernel",
                 "chaperone_mode", "pairs_per_iteration", "random_scan", "slice_width",
                 "slice_max_steps", "update_delta", "delta0", "tied_delta", "mu_snapshot"});
    check_keys(options, keys);
    Setup s;
    std::istringstream in(read_file(options.get("records")));
    s.table = read_records_csv(in);
    if (s.table.num_records() < 2) throw ValidationError("need at least two records");
    s.spec = model_spec(options);
    s.mcmc = mcmc_config(options);
    const double delta0 = options.get_double_or("delta0", 1.0);
    if (!(delta0 > 0.0)) throw ValidationError("delta0 must be positive");
    s.field_prior =
        FieldPrior::empirical(s.table, delta0, options.get_bool_or("tied_delta", true));
    s.prior = make_prior(s.spec, s.table.num_records());
    s.mu_len = positive_index(options, "mu_snapshot", 32);
    return s;
  });

  const std::uint64_t seed = seed_of(options);
  ChainState state(std::move(setup.prior), Partition::singletons(setup.table.num_records()),
                   setup.table, setup.field_prior, derive_seed(seed, "fit.chain"));
  std::ostringstream samples;
  auto result = run_chain(state, setup.mcmc, [&](const Sample& s) {
    Sample copy = s;
    copy.mu = state.prior().mu_snapshot(setup.mu_len);
    write_sample_jsonl(samples, copy);
  });
  std::ostringstream trace;
  trace << "iteration,log_joint\n";
  for (Index i = 0; i < result.log_joint_trace.size(); ++i) {
    trace << (i + 1) << ',' << format_double(result.log_joint_trace[i]) << '\n';
  }
  Outputs out;
  out.add("samples.jsonl", samples.str());
  out.add("trace.csv", trace.str());
  out.commit("fit", options, {"records"}, out_dir);
}

// --- evaluate ------------------------------------------------------------------

namespace {

Partition load_truth(const std::string& path, Index expected_n) {
  std::istringstream in(read_file(path));
  std::string header;
  std::getline(in, header);
  if (!header.empty() && header.back() == '\r') header.pop_back();
  in.clear();
  in.seekg(0);
  Partition truth = [&] {
    if (header == "record_id,cluster_id") return read_partition_csv(in);
    RecordTable t = read_records_csv(in);
    if (!t.has_truth()) {
      throw ValidationError("'" + path + "' has no entity_id column");
    }
    return t.truth_partition();
  }();
  if (truth.size() != expected_n) {
    throw ValidationError("truth has " + std::to_string(truth.size()) +
                          " records but the samples have " + std::to_string(expected_n));
  }
  return truth;
}

}  // namespace

void cmd_evaluate(const Config& options, const std::string& out_dir) {
  auto reports = validated([&] {
    check_keys(options, {"samples", "truth", "dataset", "variant", "labels", "seed"});
    const auto paths = split(options.get("samples"), ',');
    std::vector<std::string> labels;
    if (options.has("labels")) {
      labels = split(options.get("labels"), ',');
      if (labels.size() != paths.size()) {
        throw ValidationError("labels must match the number of sample files");
      }
    }
    std::vector<std::vector<Sample>> streams;
    for (const auto& path : paths) {
      std::istringstream in(read_file(path));
      streams.push_back(read_samples_jsonl(in));
      if (streams.back().empty()) throw ValidationError("'" + path + "' has no samples");
    }
    const Index n = streams.front().front().assignments.size();
    for (const auto& st : streams) {
      for (const auto& s : st) {
        if (s.assignments.size() != n) {
          throw ValidationError("sample files disagree on the number of records");
        }
      }
    }
    std::optional<Partition> truth;
    if (options.has("truth")) truth = load_truth(options.get("truth"), n);
    std::vector<EvalReport> out;
    for (Index i = 0; i < streams.size(); ++i) {
      EvalReport r = posterior_report(streams[i], truth);
      r.dataset = options.get_or("dataset", "dataset");
      r.variant = options.get_or("variant", "");
      r.model = labels.empty() ? fs::path(paths[i]).parent_path().filename().string()
                               : labels[i];
      if (r.model.empty()) r.model = fs::path(paths[i]).stem().string();
      out.push_back(std::move(r));
    }
    return out;
  });
  std::ostringstream table, quant;
  write_report_table(table, reports);
  write_stat_quantiles(quant, reports);
  Outputs out;
  out.add("report.csv", table.str());
  out.add("stat_quantiles.csv", quant.str());
  out.commit("evaluate", options, {"samples", "truth"}, out_dir);
}

// --- microcheck ----------------------------------------------------------------

void cmd_microcheck(const Config& options, const std::string& out_dir) {
  struct Setup {
    std::vector<MicroModel> models;
    std::vector<Index> grid;
    Index n_samples;
    SampleMethod method;
    MicroSettings settings;
  };
  const auto setup = validated([&] {
    check_keys(options, {"model", "grid", "samples", "burn_in", "thin", "method", "seed", "a",
                         "q", "r", "p", "alpha", "base_prob", "crp_theta", "crp_reference_n",
                         "min_acceptance", "pilot_trials"});
    Setup s;
    for (const auto& m : split(options.get_or("model", "nbnb"), ',')) {
      s.models.push_back(parse_micro_model(m));
    }
    if (options.has("grid")) {
      for (const auto& g : split(options.get("grid"), ',')) {
        const auto v = parse_int(g, "grid");
        if (v < 1) throw ValidationError("grid values must be positive");
        s.grid.push_back(static_cast<Index>(v));
      }
    } else {
      s.grid = kDefaultMicroGrid;
    }
    s.n_samples = positive_index(options, "samples", 500);
    s.method = parse_sample_method(options.get_or("method", "auto"));
    auto& st = s.settings;
    st.burn_in = static_cast<Index>(options.get_int_or("burn_in", 10000));
    st.thinning = positive_index(options, "thin", 10);
    st.a = options.get_double_or("a", st.a);
    st.q = options.get_double_or("q", st.q);
    st.r = options.get_double_or("r", st.r);
    st.p = options.get_double_or("p", st.p);
    st.alpha = options.get_double_or("alpha", st.alpha);
    st.base_prob = options.get_double_or("base_prob", st.base_prob);
    if (options.has("crp_theta")) st.crp_theta = options.get_double("crp_theta");
    st.crp_reference_n = positive_index(options, "crp_reference_n", 100);
    st.rejection.min_acceptance =
        options.get_double_or("min_acceptance", st.rejection.min_acceptance);
    st.pilot_trials = positive_index(options, "pilot_trials", 200000);
    // Parameter checks happen in the distribution constructors.
    TruncNegBin(st.a, st.q);
    TruncNegBin(st.r, st.p);
    Geometric(st.base_prob);
    if (!(st.alpha > 0.0)) throw ValidationError("alpha must be positive");
    crp_theta(st);
    return s;
  });

  const std::uint64_t seed = seed_of(options);
  std::vector<MaxFractionSamples> all;
  std::vector<TrendReport> trends;
  for (MicroModel m : setup.models) {
    std::vector<MaxFractionSamples> cells;
    for (Index n : setup.grid) {
      cells.push_back(sample_max_fraction(m, n, setup.n_samples, setup.method,
                                          derive_seed(seed, "micro." + to_string(m), n),
                                          setup.settings));
    }
    if (cells.size() >= 3) trends.push_back(trend_report(cells));
    all.insert(all.end(), cells.begin(), cells.end());
  }
  std::ostringstream samples, trend;
  write_max_fraction_csv(samples, all);
  write_trend_csv(trend, trends);
  Outputs out;
  out.add("max_fraction.csv", samples.str());
  out.add("trend.csv", trend.str());
  out.commit("microcheck", options, {}, out_dir);
}

// --- oracle --------------------------------------------------------------------

void cmd_oracle(const Config& options, const std::string& out_dir) {
  struct Setup {
    Index n;
    std::unique_ptr<PartitionPrior> prior;
  };
  auto setup = validated([&] {
    check_keys(options, {"model", "n", "seed", "a", "q", "r", "p", "alpha", "base_prob",
                         "theta", "discount"});
    Setup s;
    s.n = positive_index(options, "n", 0);
    if (s.n > kOracleMaxN) {
      throw ValidationError("oracle: n must be at most " + std::to_string(kOracleMaxN));
    }
    ModelSpec spec = model_spec(options);
    spec.a = options.get_double_or("a", 1.0);
    spec.q = options.get_double_or("q", 0.5);
    if (!spec.theta) spec.theta = 1.0;
    spec.learn_hyperparameters = false;
    s.prior = make_prior(spec, s.n);
    if (auto* nbd = dynamic_cast<NbdPrior*>(s.prior.get())) {
      Rng rng = make_rng(seed_of(options), "oracle.mu");
      nbd->draw_mu_prior(s.n, rng);
    }
    return s;
  });
  const PartitionPrior& prior = *setup.prior;
  const auto table =
      exact_conditional_pmf([&](const Partition& p) { return prior.log_conditional(p); },
                            setup.n);
  std::ostringstream csv;
  write_partition_table_csv(csv, table);
  Outputs out;
  out.add("oracle_" + prior.name() + "_N" + std::to_string(setup.n) + ".csv", csv.str());
  out.commit("oracle", options, {}, out_dir);
}

void run_command(const std::string& command, const Config& options,
                 const std::string& out_dir) {
  if (command == "generate") return cmd_generate(options, out_dir);
  if (command == "fit") return cmd_fit(options, out_dir);
  if (command == "evaluate") return cmd_evaluate(options, out_dir);
  if (command == "microcheck") return cmd_microcheck(options, out_dir);
  if (command == "oracle") return cmd_oracle(options, out_dir);
  throw ValidationError("unknown command '" + command + "'");
}

std::string load_manifest(const std::string& path, Config& options) {
  return validated([&] {
    const auto m = nlohmann::json::parse(read_file(path));
    if (m.value("tool", "") != "kolchin") throw ValidationError("not a kolchin manifest");
    options = Config();
    for (const auto& [k, v] : m.at("options").items()) options.set(k, v.get<std::string>());
    for (const auto& [key, files] : m.at("inputs").items()) {
      for (const auto& f : files) {
        const auto p = f.at("path").get<std::string>();
        if (content_hash(read_file(p)) != f.at("hash").get<std::string>()) {
          throw ValidationError("input '" + p + "' changed since the manifest was written");
        }
      }
    }
    return m.at("command").get<std::string>();
  });
}

}  // namespace kolchin::cli
