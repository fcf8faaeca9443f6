#include "bnu/io.hpp"

#include <charconv>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <vector>

#include "bnu/errors.hpp"
#include "bnu/metrics.hpp"
#include "bnu/sampler.hpp"

namespace bnu {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::optional<double> parse_number(std::string_view cell) {
  cell = trim(cell);
  if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (cell.empty() || ec != std::errc() || ptr != cell.data() + cell.size()) return std::nullopt;
  return value;
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(sep, start);
    cells.push_back(line.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return cells;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

Eigen::MatrixXd parse_matrix(std::string_view text, const std::string& source) {
  std::vector<std::vector<double>> rows;
  long line_no = 0;
  long last_content = 1;
  bool seen_content = false;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto end = text.find('\n', pos);
    const std::string_view line =
        trim(text.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos));
    pos = end == std::string_view::npos ? text.size() + 1 : end + 1;
    ++line_no;
    if (line.empty()) continue;
    last_content = line_no;

    const std::vector<std::string_view> cells = split(line, ',');
    if (!seen_content) {
      seen_content = true;
      if (!parse_number(cells.front())) continue;  // header
    }
    std::vector<double> row;
    row.reserve(cells.size());
    for (std::string_view cell : cells) {
      const auto v = parse_number(cell);
      if (!v) throw ParseError("non-numeric cell '" + std::string(trim(cell)) + "'", line_no, source);
      row.push_back(*v);
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw ParseError("expected " + std::to_string(rows.front().size()) + " columns, found " +
                           std::to_string(row.size()),
                       line_no, source);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError("no numeric rows", last_content, source);

  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(rows.front().size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      m(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
    }
  }
  return m;
}

Eigen::MatrixXd load_matrix(const std::filesystem::path& path) {
  return parse_matrix(read_file(path), path.string());
}

std::string format_double(double x) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

void ensure_directory(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) {
    throw InputError("cannot create directory " + dir.string() + ": " + ec.message());
  }
}

void write_text(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  out << text;
  if (!out) throw InputError("write failed for " + path.string());
}

void save_matrix(const std::filesystem::path& path, const Eigen::MatrixXd& m) {
  std::string text;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c > 0) text += ',';
      text += format_double(m(r, c));
    }
    text += '\n';
  }
  write_text(path, text);
}

KeyValues parse_key_values(std::string_view text, const std::string& source) {
  KeyValues kv;
  long line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto end = text.find('\n', pos);
    std::string_view line =
        text.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos);
    pos = end == std::string_view::npos ? text.size() + 1 : end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError("expected key=value", line_no, source);
    const std::string key(trim(line.substr(0, eq)));
    if (key.empty()) throw ParseError("empty key", line_no, source);
    kv[key] = std::string(trim(line.substr(eq + 1)));
  }
  return kv;
}

KeyValues load_key_values(const std::filesystem::path& path) {
  return parse_key_values(read_file(path), path.string());
}

std::string format_key_values(const KeyValues& kv) {
  std::string text;
  for (const auto& [k, v] : kv) text += k + "=" + v + "\n";
  return text;
}

void save_result(const UnmixingResult& result, const EvalReport* report,
                 const std::filesystem::path& out_dir) {
  ensure_directory(out_dir);
  ensure_directory(out_dir / "plotdata");
  save_matrix(out_dir / "endmembers.csv", result.endmembers());
  save_matrix(out_dir / "abundances.csv", result.map_state.s);

  std::string trace;
  std::string k_series = "x,y\n";
  std::string lp_series = "x,y\n";
  for (const SweepRecord& r : result.trace) {
    const nlohmann::json line = {{"sweep", r.sweep},
                                 {"K", r.k},
                                 {"sigma_z2", r.sigma2},
                                 {"log_posterior", r.log_posterior},
                                 {"map_log_posterior", r.map_log_posterior},
                                 {"births_accepted", r.births_accepted},
                                 {"merges_accepted", r.merges_accepted},
                                 {"swaps_accepted", r.swaps_accepted}};
    trace += line.dump() + "\n";
    k_series += std::to_string(r.sweep) + "," + std::to_string(r.k) + "\n";
    lp_series += std::to_string(r.sweep) + "," + format_double(r.log_posterior) + "\n";
  }
  write_text(out_dir / "trace.jsonl", trace);
  write_text(out_dir / "plotdata" / "k_vs_sweep.csv", k_series);
  write_text(out_dir / "plotdata" / "log_posterior_vs_sweep.csv", lp_series);

  nlohmann::json doc = {{"estimated_K", result.estimated_k},
                        {"map_log_posterior", result.map_log_posterior},
                        {"map_sweep", result.map_sweep}};
  if (report != nullptr) {
    nlohmann::json pairs = nlohmann::json::array();
    for (std::size_t i = 0; i < report->matching.size(); ++i) {
      pairs.push_back({report->matching.estimated[i], report->matching.truth[i]});
    }
    doc["K_true"] = report->k_true;
    doc["theta_F"] = report->theta_f;
    doc["theta_S"] = report->theta_s;
    doc["mean_sid"] = report->mean_sid;
    doc["accuracy"] = report->k_est == report->k_true ? 1.0 : 0.0;
    doc["matching"] = pairs;
    doc["unmatched_estimated"] = report->matching.unmatched_estimated;
  }
  write_text(out_dir / "report.json", doc.dump(2) + "\n");
}

}  // namespace bnu
