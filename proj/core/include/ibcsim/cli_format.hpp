#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "ibcsim/experiments.hpp"

namespace ibcsim::cli {

/// %.9g: nine significant digits, enough to survive a parse/re-print cycle
/// byte-for-byte.
std::string format_double(double v);

/// Strict full-string numeric parsers; reject trailing junk.
double parse_double(const std::string& s);
long long parse_integer(const std::string& s);

/// "start:step:stop" in dB, step > 0, inclusive endpoints.
std::vector<double> parse_snr_grid(const std::string& s);
std::string snr_grid_to_string(std::span<const double> grid);

/// "fixed:N" | "powerlaw:a:b" | "exppower:a:b:c".
ScalingSchedule parse_schedule(const std::string& s, std::size_t cap);
std::string schedule_to_string(const ScalingSchedule& s);

/// "max-snr" | "min-inr" | "max-sinr" | "min-iam" | "two-stage:n1:n2" | "random".
SchemeId parse_scheme(const std::string& s);

/// A rate-curve run is either a selection scheme or one of the TDMA
/// baselines, which share the sweep machinery but not the scheme set.
struct RunMode {
  enum class Kind { scheme, tdma1, tdma2 };
  Kind kind = Kind::scheme;
  SchemeId scheme;
};

RunMode parse_run_mode(const std::string& s);

/// Comma-separated list of positive integers.
std::vector<std::size_t> parse_size_list(const std::string& s);

/// Flat key=value lines; blank lines and '#' comments ignored; later keys
/// override earlier ones.
std::map<std::string, std::string> parse_config_file(const std::string& text);

std::string version_string();

/// One-line resolved-config record embedded in every output header. Thread
/// count is deliberately absent: it can never change results, so it must
/// never change bytes.
std::string config_echo(const std::string& command, const ExperimentConfig& cfg,
                        const std::string& scheme_label, const std::string& extra);

std::string rate_curve_csv(const RateCurve& curve, const std::string& command);
std::string bound_report_csv(const BoundReport& rep);

/// Structural CSV held as verbatim strings, so parse + serialize is exactly
/// the identity on anything this tool emits.
struct CsvDocument {
  std::vector<std::string> preamble;
  std::string header;
  std::vector<std::vector<std::string>> rows;
};

CsvDocument parse_csv(const std::string& text);
std::string serialize_csv(const CsvDocument& doc);

}  // namespace ibcsim::cli
