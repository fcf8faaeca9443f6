#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <set>
#include <string>

#include "bnu/io.hpp"
#include "bnu/model.hpp"
#include "bnu/simkit.hpp"

namespace bnu {

/// Every recognised key with its default value.
const KeyValues& default_settings();

/// Defaults, then the config file, then command-line flags, converted to typed
/// fields. Unknown keys and unparsable values throw InputError.
struct RunConfig {
  std::string command;
  KeyValues values;             // fully resolved, echoed to config.resolved
  std::set<std::string> given;  // keys set by the file or by flags
  SceneSpec scene;
  HyperConfig hyper;
  std::uint64_t seed = 0;
  int monte_carlo_runs = 1;
  std::filesystem::path out;
};

RunConfig resolve_config(const std::string& command, const KeyValues& file, const KeyValues& flags);

/// Caps hyper.threads (0 or above the cap) at `cap` when cap > 0.
void apply_thread_cap(RunConfig& cfg, int cap);

int cmd_simulate(const RunConfig& cfg, std::ostream& log);
int cmd_unmix(const RunConfig& cfg, std::ostream& log);
int cmd_evaluate(const RunConfig& cfg, std::ostream& log);
int cmd_pipeline(const RunConfig& cfg, std::ostream& log);

/// Resolves the configuration and runs one command. Returns 0 on success,
/// 1 for bad input or configuration, 2 for failures during the run.
int run_cli(const std::string& command, const std::filesystem::path& config_file,
            const KeyValues& flags, int thread_cap, std::ostream& log);

}  // namespace bnu
