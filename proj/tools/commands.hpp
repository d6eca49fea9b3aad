#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "kolchin/config.hpp"

namespace kolchin::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitRuntime = 3;

/// Bad input detected before any output is written.
struct ValidationError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Each command takes its fully resolved options (config file merged with
/// command-line flags) and an output directory.
void cmd_generate(const Config& options, const std::string& out_dir);
void cmd_fit(const Config& options, const std::string& out_dir);
void cmd_evaluate(const Config& options, const std::string& out_dir);
void cmd_microcheck(const Config& options, const std::string& out_dir);
void cmd_oracle(const Config& options, const std::string& out_dir);

void run_command(const std::string& command, const Config& options,
                 const std::string& out_dir);

/// Reads a manifest written by a previous run; returns the command name and
/// fills `options`. Input files whose contents changed since are rejected.
std::string load_manifest(const std::string& path, Config& options);

std::string version();

}  // namespace kolchin::cli
