#include "bnu/cli.hpp"

#include <charconv>
#include <cmath>
#include <json.hpp>
#include <limits>
#include <ostream>
#include <vector>

#include "bnu/errors.hpp"
#include "bnu/metrics.hpp"
#include "bnu/sampler.hpp"

namespace bnu {

namespace {

const std::set<std::string> kCommands{"simulate", "unmix", "evaluate", "pipeline"};

double to_double(const KeyValues& kv, const std::string& key) {
  const std::string& text = kv.at(key);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
    throw InputError(key + ": expected a number, got '" + text + "'");
  }
  return v;
}

long to_long(const KeyValues& kv, const std::string& key) {
  const std::string& text = kv.at(key);
  long v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
    throw InputError(key + ": expected an integer, got '" + text + "'");
  }
  return v;
}

std::uint64_t to_u64(const KeyValues& kv, const std::string& key) {
  const std::string& text = kv.at(key);
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
    throw InputError(key + ": expected a non-negative integer, got '" + text + "'");
  }
  return v;
}

bool to_bool(const KeyValues& kv, const std::string& key) {
  const std::string& text = kv.at(key);
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw InputError(key + ": expected true or false, got '" + text + "'");
}

std::optional<double> to_optional(const KeyValues& kv, const std::string& key) {
  const std::string& text = kv.at(key);
  if (text == "none" || text.empty()) return std::nullopt;
  return to_double(kv, key);
}

const std::string& required_path(const RunConfig& cfg, const std::string& key) {
  const std::string& path = cfg.values.at(key);
  if (path.empty()) throw InputError(cfg.command + " needs --" + key);
  return path;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> items;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto pos = text.find(',', start);
    const std::string item = text.substr(start, pos == std::string::npos ? pos : pos - start);
    if (!item.empty()) items.push_back(item);
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return items;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

ObservedImage image_for(const RunConfig& cfg, Eigen::MatrixXd pixels) {
  if (cfg.given.count("width") && cfg.given.count("height")) {
    return ObservedImage(std::move(pixels), cfg.scene.width, cfg.scene.height);
  }
  return ObservedImage(std::move(pixels));
}

void write_resolved(const RunConfig& cfg) {
  ensure_directory(cfg.out);
  KeyValues echoed = cfg.values;
  echoed["command"] = cfg.command;
  write_text(cfg.out / "config.resolved", format_key_values(echoed));
}

struct RunSummary {
  Eigen::Index k_est = 0;
  std::optional<EvalReport> report;
};

RunSummary simulate_and_unmix(const RunConfig& cfg, int run_index, const std::filesystem::path& dir) {
  SceneSpec scene = cfg.scene;
  scene.seed = cfg.seed + static_cast<std::uint64_t>(run_index);
  const GroundTruth truth = compose_scene(scene);
  const ObservedImage image(truth.z_noisy, scene.width, scene.height);
  const UnmixingResult result = run(image, cfg.hyper, splitmix64(scene.seed));

  RunSummary summary;
  summary.k_est = result.estimated_k;
  if (result.estimated_k > 0) {
    summary.report = evaluate(result.endmembers(), result.map_state.s, truth.f_true, truth.s_true);
  }
  save_result(result, summary.report ? &*summary.report : nullptr, dir);
  return summary;
}

}  // namespace

const KeyValues& default_settings() {
  static const KeyValues defaults = [] {
    const HyperConfig h;
    KeyValues kv{
        // scene
        {"K", "3"},
        {"D", "224"},
        {"width", "40"},
        {"height", "40"},
        {"snr_db", "30"},
        {"beta_ip", "none"},
        {"dirichlet_alpha", "auto"},
        {"library", ""},
        // sampler
        {"gamma_w", format_double(h.gamma_w)},
        {"h1_alpha_sigma", format_double(h.alpha_sigma_shape)},
        {"h2_alpha_sigma", format_double(h.alpha_sigma_rate)},
        {"h1_beta_sigma", format_double(h.beta_sigma_shape)},
        {"h2_beta_sigma", format_double(h.beta_sigma_rate)},
        {"h1_alpha_a", format_double(h.alpha_a_shape)},
        {"h2_alpha_a", format_double(h.alpha_a_rate)},
        {"h1_beta_a", format_double(h.beta_a_shape)},
        {"h2_beta_a", format_double(h.beta_a_rate)},
        {"p_plus", format_double(h.p_plus)},
        {"t_corr", format_double(h.t_corr)},
        {"n_iter", std::to_string(h.n_iter)},
        {"n_chains", std::to_string(h.n_chains)},
        {"ladder_ratio", format_double(h.ladder_ratio)},
        {"cooling", format_double(h.cooling)},
        {"swap_period", std::to_string(h.swap_period)},
        {"burn_in", format_double(h.burn_in)},
        {"merge_period", std::to_string(h.merge_period)},
        {"new_weight_scans", std::to_string(h.new_weight_scans)},
        {"sample_ibp_hypers", h.sample_ibp_hypers ? "true" : "false"},
        {"block_activations", h.block_activations ? "true" : "false"},
        {"threads", std::to_string(h.threads)},
        // run
        {"seed", "0"},
        {"monte_carlo_runs", "1"},
        {"out", "bnu_out"},
        {"input", ""},
        {"endmembers", ""},
        {"abundances", ""},
        {"truth_endmembers", ""},
        {"truth_abundances", ""},
        {"sweep", ""},
        {"sweep_values", ""},
    };
    return kv;
  }();
  return defaults;
}

RunConfig resolve_config(const std::string& command, const KeyValues& file, const KeyValues& flags) {
  if (!kCommands.count(command)) throw InputError("unknown command '" + command + "'");
  RunConfig cfg;
  cfg.command = command;
  cfg.values = default_settings();
  for (const KeyValues* layer : {&file, &flags}) {
    for (const auto& [key, value] : *layer) {
      if (!cfg.values.count(key)) throw InputError("unknown setting '" + key + "'");
      cfg.values[key] = value;
      cfg.given.insert(key);
    }
  }
  const KeyValues& v = cfg.values;

  SceneSpec& s = cfg.scene;
  s.k = to_long(v, "K");
  s.bands = to_long(v, "D");
  s.width = to_long(v, "width");
  s.height = to_long(v, "height");
  s.snr_db = to_optional(v, "snr_db");
  s.beta_ip = to_optional(v, "beta_ip");
  if (v.at("dirichlet_alpha") != "auto") s.dirichlet_alpha = to_double(v, "dirichlet_alpha");
  s.library_path = v.at("library");

  HyperConfig& h = cfg.hyper;
  h.gamma_w = to_double(v, "gamma_w");
  h.alpha_sigma_shape = to_double(v, "h1_alpha_sigma");
  h.alpha_sigma_rate = to_double(v, "h2_alpha_sigma");
  h.beta_sigma_shape = to_double(v, "h1_beta_sigma");
  h.beta_sigma_rate = to_double(v, "h2_beta_sigma");
  h.alpha_a_shape = to_double(v, "h1_alpha_a");
  h.alpha_a_rate = to_double(v, "h2_alpha_a");
  h.beta_a_shape = to_double(v, "h1_beta_a");
  h.beta_a_rate = to_double(v, "h2_beta_a");
  h.p_plus = to_double(v, "p_plus");
  h.t_corr = to_double(v, "t_corr");
  h.n_iter = to_long(v, "n_iter");
  h.n_chains = static_cast<int>(to_long(v, "n_chains"));
  h.ladder_ratio = to_double(v, "ladder_ratio");
  h.cooling = to_double(v, "cooling");
  h.swap_period = to_long(v, "swap_period");
  h.burn_in = to_double(v, "burn_in");
  h.merge_period = to_long(v, "merge_period");
  h.new_weight_scans = static_cast<int>(to_long(v, "new_weight_scans"));
  h.sample_ibp_hypers = to_bool(v, "sample_ibp_hypers");
  h.block_activations = to_bool(v, "block_activations");
  h.threads = static_cast<int>(to_long(v, "threads"));

  cfg.seed = to_u64(v, "seed");
  cfg.monte_carlo_runs = static_cast<int>(to_long(v, "monte_carlo_runs"));
  cfg.out = v.at("out");
  if (cfg.monte_carlo_runs < 1) throw InputError("monte_carlo_runs must be at least 1");
  if (cfg.out.empty()) throw InputError("out must name a directory");
  h.validate();
  if (command == "simulate" || command == "pipeline") s.validate();
  return cfg;
}

void apply_thread_cap(RunConfig& cfg, int cap) {
  if (cap <= 0) return;
  int& t = cfg.hyper.threads;
  if (t == 0 || t > cap) t = cap;
  cfg.values["threads"] = std::to_string(t);
}

int cmd_simulate(const RunConfig& cfg, std::ostream& log) {
  SceneSpec scene = cfg.scene;
  scene.seed = cfg.seed;
  const GroundTruth g = compose_scene(scene);
  write_resolved(cfg);
  save_matrix(cfg.out / "image.csv", g.z_noisy);
  save_matrix(cfg.out / "image_clean.csv", g.z_clean);
  save_matrix(cfg.out / "endmembers_true.csv", g.f_true);
  save_matrix(cfg.out / "abundances_true.csv", g.s_true);
  log << "simulated " << g.z_noisy.rows() << " pixels x " << g.z_noisy.cols() << " bands, K="
      << g.f_true.rows() << " -> " << cfg.out.string() << "\n";
  return 0;
}

int cmd_unmix(const RunConfig& cfg, std::ostream& log) {
  const ObservedImage image = image_for(cfg, load_matrix(required_path(cfg, "input")));
  image.validate();
  std::optional<EvalReport> report;
  std::optional<Eigen::MatrixXd> f_true, s_true;
  if (!cfg.values.at("truth_endmembers").empty()) {
    f_true = load_matrix(cfg.values.at("truth_endmembers"));
    s_true = load_matrix(required_path(cfg, "truth_abundances"));
  }
  write_resolved(cfg);
  const UnmixingResult result = run(image, cfg.hyper, cfg.seed);
  if (f_true && result.estimated_k > 0) {
    report = evaluate(result.endmembers(), result.map_state.s, *f_true, *s_true);
  }
  save_result(result, report ? &*report : nullptr, cfg.out);
  log << "estimated K=" << result.estimated_k << ", MAP log posterior "
      << format_double(result.map_log_posterior) << " at sweep " << result.map_sweep << "\n";
  return 0;
}

int cmd_evaluate(const RunConfig& cfg, std::ostream& log) {
  const Eigen::MatrixXd f_est = load_matrix(required_path(cfg, "endmembers"));
  const Eigen::MatrixXd s_est = load_matrix(required_path(cfg, "abundances"));
  const Eigen::MatrixXd f_true = load_matrix(required_path(cfg, "truth_endmembers"));
  const Eigen::MatrixXd s_true = load_matrix(required_path(cfg, "truth_abundances"));
  if (f_est.cols() != f_true.cols()) throw InputError("estimated and true endmembers differ in band count");
  if (s_est.rows() != s_true.rows() || s_est.cols() != f_est.rows() || s_true.cols() != f_true.rows()) {
    throw InputError("abundance matrices do not match the endmember counts or each other");
  }
  const EvalReport r = evaluate(f_est, s_est, f_true, s_true);
  write_resolved(cfg);
  const nlohmann::json doc = {{"K_est", r.k_est},     {"K_true", r.k_true},
                               {"accuracy", r.k_est == r.k_true ? 1.0 : 0.0},
                               {"mean_sid", r.mean_sid}, {"theta_F", r.theta_f},
                               {"theta_S", r.theta_s}};
  write_text(cfg.out / "report.json", doc.dump(2) + "\n");
  log << "theta_F=" << format_double(r.theta_f) << " theta_S=" << format_double(r.theta_s)
      << " SID=" << format_double(r.mean_sid) << "\n";
  return 0;
}

int cmd_pipeline(const RunConfig& cfg, std::ostream& log) {
  const std::string sweep_key = cfg.values.at("sweep");
  std::vector<std::string> sweep_values{""};
  if (!sweep_key.empty()) {
    if (!default_settings().count(sweep_key)) throw InputError("unknown sweep key '" + sweep_key + "'");
    sweep_values = split_list(cfg.values.at("sweep_values"));
    if (sweep_values.empty()) throw InputError("sweep needs sweep_values");
  }
  write_resolved(cfg);

  std::string summary = "sweep,value,metric,result\n";
  for (const std::string& value : sweep_values) {
    RunConfig point = cfg;
    std::filesystem::path base = cfg.out;
    if (!sweep_key.empty()) {
      KeyValues flags;
      for (const std::string& key : cfg.given) flags[key] = cfg.values.at(key);
      flags[sweep_key] = value;
      point = resolve_config(cfg.command, {}, flags);
      point.hyper.threads = cfg.hyper.threads;
      base /= sweep_key + "=" + value;
    }

    std::vector<Eigen::Index> k_est;
    std::vector<double> theta_f, theta_s, sid;
    for (int r = 0; r < point.monte_carlo_runs; ++r) {
      const RunSummary s = simulate_and_unmix(point, r, base / ("run_" + std::to_string(r)));
      k_est.push_back(s.k_est);
      if (s.report) {
        theta_f.push_back(s.report->theta_f);
        theta_s.push_back(s.report->theta_s);
        sid.push_back(s.report->mean_sid);
      }
      log << (sweep_key.empty() ? "" : sweep_key + "=" + value + " ") << "run " << r
          << ": K=" << s.k_est << "\n";
    }

    const DimensionalityScores dim = dimensionality_scores(k_est, point.scene.k);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    const std::vector<std::pair<std::string, double>> rows{
        {"accuracy", dim.accuracy},
        {"rmse_K", dim.rmse_k},
        {"rmse_theta_F", theta_f.empty() ? nan : rmse_over_runs(theta_f)},
        {"rmse_theta_S", theta_s.empty() ? nan : rmse_over_runs(theta_s)},
        {"rmse_SID", sid.empty() ? nan : rmse_over_runs(sid)},
    };
    for (const auto& [metric, result] : rows) {
      summary += sweep_key + "," + value + "," + metric + "," + format_double(result) + "\n";
    }
  }
  write_text(cfg.out / "summary.csv", summary);
  log << "wrote " << (cfg.out / "summary.csv").string() << "\n";
  return 0;
}

int run_cli(const std::string& command, const std::filesystem::path& config_file,
            const KeyValues& flags, int thread_cap, std::ostream& log) {
  RunConfig cfg;
  try {
    const KeyValues file = config_file.empty() ? KeyValues{} : load_key_values(config_file);
    cfg = resolve_config(command, file, flags);
    apply_thread_cap(cfg, thread_cap);
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return 1;
  }
  try {
    if (command == "simulate") return cmd_simulate(cfg, log);
    if (command == "unmix") return cmd_unmix(cfg, log);
    if (command == "evaluate") return cmd_evaluate(cfg, log);
    return cmd_pipeline(cfg, log);
  } catch (const InputError& e) {
    log << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace bnu
