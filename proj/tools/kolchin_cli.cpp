#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "commands.hpp"

namespace {

namespace fs = std::filesystem;
using kolchin::Config;
using namespace kolchin::cli;

struct CommonFlags {
  std::string config;
  std::string manifest;
  std::string out_dir = ".";
  std::vector<std::string> sets;
  std::vector<std::pair<std::string, std::string>> given;
};

// Binds --flag to option `key`; only flags that appear on the command line
// override the config file.
void bind(CLI::App* app, CommonFlags& flags, const std::string& flag, const std::string& key,
          const std::string& help) {
  app->add_option_function<std::string>(
      flag, [&flags, key](const std::string& v) { flags.given.emplace_back(key, v); }, help);
}

void bind_list(CLI::App* app, CommonFlags& flags, const std::string& flag,
               const std::string& key, const std::string& help) {
  app->add_option_function<std::vector<std::string>>(
         flag,
         [&flags, key](const std::vector<std::string>& v) {
           std::string joined;
           for (const auto& x : v) joined += (joined.empty() ? "" : ",") + x;
           flags.given.emplace_back(key, joined);
         },
         help)
      ->expected(1, -1);
}

Config resolve(const std::string& command, const CommonFlags& flags) {
  Config options;
  if (!flags.manifest.empty()) {
    if (!flags.config.empty() || !flags.given.empty() || !flags.sets.empty()) {
      throw ValidationError("--manifest cannot be combined with other options");
    }
    const std::string recorded = load_manifest(flags.manifest, options);
    if (recorded != command) {
      throw ValidationError("manifest was written by '" + recorded + "', not '" + command +
                            "'");
    }
    return options;
  }
  if (!flags.config.empty()) {
    try {
      options = Config::load(flags.config);
    } catch (const std::exception& e) {
      throw ValidationError(e.what());
    }
  }
  for (const auto& [k, v] : flags.given) options.set(k, v);
  for (const auto& kv : flags.sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) throw ValidationError("--set expects key=value");
    options.set(kolchin::trim(kv.substr(0, eq)), kolchin::trim(kv.substr(eq + 1)));
  }
  const std::map<std::string, std::vector<std::string>> path_keys = {
      {"fit", {"records"}}, {"evaluate", {"samples", "truth"}}};
  const auto paths = path_keys.find(command);
  if (paths == path_keys.end()) return options;
  for (const auto& key : paths->second) {
    if (!options.has(key)) continue;
    std::string joined;
    for (const auto& p : kolchin::split(options.get(key), ',')) {
      joined += (joined.empty() ? "" : ",") + fs::absolute(p).lexically_normal().string();
    }
    options.set(key, joined);
  }
  return options;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Kolchin partition models for microclustering and entity resolution"};
  app.set_version_flag("--version", version());
  app.require_subcommand(1);

  struct Sub {
    const char* name;
    const char* help;
  };
  const Sub subs[] = {
      {"generate", "Generate synthetic record sets from a data-set config"},
      {"fit", "Run MCMC for a partition model on a records CSV"},
      {"evaluate", "Summarize posterior samples against the true partition"},
      {"microcheck", "Sample M_N / N over a grid of N"},
      {"oracle", "Exact distribution over all partitions of a small N"},
  };
  std::map<std::string, CommonFlags> flags;
  std::map<std::string, CLI::App*> apps;
  for (const auto& s : subs) {
    auto* sub = app.add_subcommand(s.name, s.help);
    auto& f = flags[s.name];
    apps[s.name] = sub;
    sub->add_option("--config", f.config, "key=value configuration file");
    sub->add_option("--manifest", f.manifest, "Replay the run recorded in a manifest");
    sub->add_option("--out-dir", f.out_dir, "Output directory")->capture_default_str();
    sub->add_option("--set", f.sets, "Extra key=value option (repeatable)");
    bind(sub, f, "--seed", "seed", "Root random seed");
  }
  auto* fit = apps["fit"];
  auto& ff = flags["fit"];
  bind(fit, ff, "--records", "records", "Records CSV");
  bind(fit, ff, "--model", "model", "nbnb, nbd, dp or pyp");
  bind(fit, ff, "--iterations", "iterations", "MCMC iterations");
  bind(fit, ff, "--burn-in", "burn_in", "Iterations discarded before sampling");
  bind(fit, ff, "--thin", "thin", "Keep every k-th post-burn-in iteration");
  bind(fit, ff, "--discount", "discount", "Pitman-Yor discount");
  bind(fit, ff, "--kernel", "kernel", "chaperones or gibbs");
  bind(fit, ff, "--chaperones", "chaperone_mode", "uniform or similarity");

  auto* ev = apps["evaluate"];
  auto& ef = flags["evaluate"];
  bind_list(ev, ef, "--samples", "samples", "Posterior sample files (JSON lines)");
  bind(ev, ef, "--truth", "truth", "True partition CSV or records CSV with entity_id");
  bind_list(ev, ef, "--labels", "labels", "Model label per sample file");
  bind(ev, ef, "--dataset", "dataset", "Data-set name for the report");
  bind(ev, ef, "--variant", "variant", "Variant name for the report");

  auto* mc = apps["microcheck"];
  auto& mf = flags["microcheck"];
  bind_list(mc, mf, "--model", "model", "nbnb, nbd and/or crp");
  bind_list(mc, mf, "--grid", "grid", "Values of N");
  bind(mc, mf, "--samples", "samples", "Samples per N");
  bind(mc, mf, "--method", "method", "auto, exact, rejection or mcmc");
  bind(mc, mf, "--burn-in", "burn_in", "MCMC burn-in iterations");
  bind(mc, mf, "--thin", "thin", "MCMC thinning");

  auto* orc = apps["oracle"];
  auto& of = flags["oracle"];
  bind(orc, of, "--model", "model", "nbnb, nbd, dp or pyp");
  bind(orc, of, "--n", "n", "Number of elements (at most 12)");
  bind(orc, of, "--discount", "discount", "Pitman-Yor discount");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  for (const auto& [name, sub] : apps) {
    if (!sub->parsed()) continue;
    const auto& f = flags[name];
    try {
      const Config options = resolve(name, f);
      run_command(name, options, f.out_dir);
      return kExitOk;
    } catch (const ValidationError& e) {
      std::cerr << "kolchin " << name << ": " << e.what() << '\n';
      return kExitValidation;
    } catch (const std::exception& e) {
      std::cerr << "kolchin " << name << ": " << e.what() << '\n';
      return kExitRuntime;
    }
  }
  return kExitValidation;
}
