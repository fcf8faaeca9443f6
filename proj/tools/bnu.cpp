#include <CLI11.hpp>
#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include "bnu/cli.hpp"

namespace {

// Turns the leftover "--key value" / "--key=value" arguments into settings.
bool collect_settings(const std::vector<std::string>& extras, bnu::KeyValues& out) {
  for (std::size_t i = 0; i < extras.size(); ++i) {
    const std::string& arg = extras[i];
    if (arg.rfind("--", 0) != 0 || arg.size() < 3) {
      std::cerr << "error: unexpected argument '" << arg << "'\n";
      return false;
    }
    const std::string body = arg.substr(2);
    if (const auto eq = body.find('='); eq != std::string::npos) {
      out[body.substr(0, eq)] = body.substr(eq + 1);
    } else if (i + 1 < extras.size()) {
      out[body] = extras[++i];
    } else {
      std::cerr << "error: missing value for --" << body << "\n";
      return false;
    }
  }
  return true;
}

int thread_cap_from_env() {
  const char* env = std::getenv("BNU_THREADS");
  if (env == nullptr || *env == '\0') return 0;
  try {
    return std::max(0, std::stoi(env));
  } catch (const std::exception&) {
    std::cerr << "warning: ignoring BNU_THREADS='" << env << "'\n";
    return 0;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian nonparametric unmixing of hyperspectral images"};
  app.allow_extras();
  app.footer(
      "Any setting can be given as --key value, e.g. --K 3 --snr_db 20 --n_iter 2000.\n"
      "Flags override the config file. BNU_THREADS caps worker threads.");

  std::string command;
  std::string config;
  std::string out;
  std::string seed;
  app.add_option("command", command, "simulate | unmix | evaluate | pipeline")
      ->required()
      ->check(CLI::IsMember({"simulate", "unmix", "evaluate", "pipeline"}));
  app.add_option("--config", config, "key=value settings file");
  app.add_option("--out", out, "output directory");
  app.add_option("--seed", seed, "random seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  bnu::KeyValues flags;
  if (!collect_settings(app.remaining(), flags)) return 1;
  if (!out.empty()) flags["out"] = out;
  if (!seed.empty()) flags["seed"] = seed;
  return bnu::run_cli(command, config, flags, thread_cap_from_env(), std::cerr);
}
