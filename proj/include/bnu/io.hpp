#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace bnu {

struct UnmixingResult;
struct EvalReport;

/// Comma-separated numbers, one row per line. A first line whose first cell is
/// not a number is taken as a header and skipped. Blank lines are ignored.
/// Throws ParseError naming the offending line.
Eigen::MatrixXd load_matrix(const std::filesystem::path& path);
Eigen::MatrixXd parse_matrix(std::string_view text, const std::string& source = {});

/// Shortest decimal that reads back to the same double.
std::string format_double(double x);

void save_matrix(const std::filesystem::path& path, const Eigen::MatrixXd& m);

/// Creates the directory (and parents); throws InputError when that fails.
void ensure_directory(const std::filesystem::path& dir);
void write_text(const std::filesystem::path& path, std::string_view text);

using KeyValues = std::map<std::string, std::string>;

/// Flat key=value text. '#' starts a comment; blank lines are skipped.
KeyValues parse_key_values(std::string_view text, const std::string& source = {});
KeyValues load_key_values(const std::filesystem::path& path);
std::string format_key_values(const KeyValues& kv);

/// Writes endmembers.csv, abundances.csv, trace.jsonl, report.json and
/// plotdata/. Metrics go into report.json when a report is supplied.
void save_result(const UnmixingResult& result, const EvalReport* report,
                 const std::filesystem::path& out_dir);

}  // namespace bnu
