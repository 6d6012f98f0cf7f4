#include "ibcsim/cli_format.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <stdexcept>

#include "ibcsim/version.hpp"

namespace ibcsim::cli {

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    if (pos == std::string::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && (s[a] == ' ' || s[a] == '\t' || s[a] == '\r')) ++a;
  while (b > a && (s[b - 1] == ' ' || s[b - 1] == '\t' || s[b - 1] == '\r')) --b;
  return s.substr(a, b - a);
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

double parse_double(const std::string& s) {
  if (s.empty()) throw std::invalid_argument("expected a number, got an empty field");
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (errno != 0 || end != s.c_str() + s.size() || !std::isfinite(v))
    throw std::invalid_argument("not a finite number: '" + s + "'");
  return v;
}

long long parse_integer(const std::string& s) {
  if (s.empty()) throw std::invalid_argument("expected an integer, got an empty field");
  errno = 0;
  char* end = nullptr;
  const long long v = std::strtoll(s.c_str(), &end, 10);
  if (errno != 0 || end != s.c_str() + s.size())
    throw std::invalid_argument("not an integer: '" + s + "'");
  return v;
}

std::vector<double> parse_snr_grid(const std::string& s) {
  const std::vector<std::string> parts = split(s, ':');
  if (parts.size() != 3) throw std::invalid_argument("snr grid must be start:step:stop, got '" + s + "'");
  const double start = parse_double(parts[0]);
  const double step = parse_double(parts[1]);
  const double stop = parse_double(parts[2]);
  if (!(step > 0.0)) throw std::invalid_argument("snr grid step must be positive");
  if (stop < start) throw std::invalid_argument("snr grid stop must not precede start");
  const double count_f = std::floor((stop - start) / step + 1e-9) + 1.0;
  if (count_f > 65536.0) throw std::invalid_argument("snr grid too long");
  std::vector<double> grid;
  grid.reserve(std::size_t(count_f));
  for (std::size_t i = 0; i < std::size_t(count_f); ++i) grid.push_back(start + double(i) * step);
  return grid;
}

std::string snr_grid_to_string(std::span<const double> grid) {
  if (grid.empty()) throw std::invalid_argument("snr_grid_to_string: empty grid");
  if (grid.size() == 1) {
    const std::string v = format_double(grid[0]);
    return v + ":1:" + v;
  }
  const double step = grid[1] - grid[0];
  bool uniform = step > 0.0;
  for (std::size_t i = 1; uniform && i < grid.size(); ++i)
    uniform = std::abs(grid[i] - grid[0] - double(i) * step) < 1e-9;
  if (uniform)
    return format_double(grid[0]) + ":" + format_double(step) + ":" + format_double(grid.back());
  std::string out = format_double(grid[0]);
  for (std::size_t i = 1; i < grid.size(); ++i) out += "," + format_double(grid[i]);
  return out;
}

ScalingSchedule parse_schedule(const std::string& s, std::size_t cap) {
  const std::vector<std::string> parts = split(s, ':');
  if (parts[0] == "fixed" && parts.size() == 2) {
    const long long n = parse_integer(parts[1]);
    if (n < 1) throw std::invalid_argument("fixed schedule needs at least one user");
    return ScalingSchedule::fixed(std::size_t(n), cap);
  }
  if (parts[0] == "powerlaw" && parts.size() == 3)
    return ScalingSchedule::power_law(parse_double(parts[1]), parse_double(parts[2]), cap);
  if (parts[0] == "exppower" && parts.size() == 4)
    return ScalingSchedule::exp_power(parse_double(parts[1]), parse_double(parts[2]),
                                      parse_double(parts[3]), cap);
  throw std::invalid_argument("unknown schedule '" + s + "' (want fixed:N, powerlaw:a:b or exppower:a:b:c)");
}

std::string schedule_to_string(const ScalingSchedule& s) {
  switch (s.kind) {
    case ScalingSchedule::Kind::fixed:
      return "fixed:" + std::to_string(s.fixed_users);
    case ScalingSchedule::Kind::power_law:
      return "powerlaw:" + format_double(s.a) + ":" + format_double(s.b);
    case ScalingSchedule::Kind::exp_power:
      return "exppower:" + format_double(s.a) + ":" + format_double(s.b) + ":" + format_double(s.c);
  }
  throw std::invalid_argument("schedule_to_string: unknown kind");
}

SchemeId parse_scheme(const std::string& s) {
  if (s == "max-snr") return SchemeId::max_snr();
  if (s == "min-inr") return SchemeId::min_inr();
  if (s == "max-sinr") return SchemeId::max_sinr();
  if (s == "min-iam") return SchemeId::min_iam();
  if (s == "random") return SchemeId::random_baseline();
  const std::vector<std::string> parts = split(s, ':');
  if (parts[0] == "two-stage" && parts.size() == 3) {
    const long long n1 = parse_integer(parts[1]);
    const long long n2 = parse_integer(parts[2]);
    if (n1 < 1 || n2 < 1) throw std::invalid_argument("two-stage sizes must be positive");
    return SchemeId::two_stage(std::size_t(n1), std::size_t(n2));
  }
  throw std::invalid_argument("unknown scheme '" + s + "'");
}

RunMode parse_run_mode(const std::string& s) {
  RunMode mode;
  if (s == "tdma1") {
    mode.kind = RunMode::Kind::tdma1;
    return mode;
  }
  if (s == "tdma2") {
    mode.kind = RunMode::Kind::tdma2;
    return mode;
  }
  mode.kind = RunMode::Kind::scheme;
  mode.scheme = parse_scheme(s);
  return mode;
}

std::vector<std::size_t> parse_size_list(const std::string& s) {
  std::vector<std::size_t> out;
  for (const std::string& part : split(s, ',')) {
    const long long v = parse_integer(trim(part));
    if (v < 1) throw std::invalid_argument("list entries must be positive integers");
    out.push_back(std::size_t(v));
  }
  return out;
}

std::map<std::string, std::string> parse_config_file(const std::string& text) {
  std::map<std::string, std::string> out;
  for (const std::string& raw : split(text, '\n')) {
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("config line is not key=value: '" + line + "'");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw std::invalid_argument("config line has an empty key");
    out[key] = trim(line.substr(eq + 1));
  }
  return out;
}

std::string version_string() { return std::string("ibcsim ") + kVersion; }

std::string config_echo(const std::string& command, const ExperimentConfig& cfg,
                        const std::string& scheme_label, const std::string& extra) {
  std::string echo = "command=" + command;
  echo += " K=" + std::to_string(cfg.transmitters);
  echo += " Nr=" + std::to_string(cfg.rx_antennas);
  echo += " Nt=" + std::to_string(cfg.tx_antennas);
  echo += " scheme=" + scheme_label;
  echo += " schedule=" + schedule_to_string(cfg.schedule);
  echo += " snr=" + snr_grid_to_string(cfg.snr_db);
  echo += " trials=" + std::to_string(cfg.trials);
  echo += " seed=" + std::to_string(cfg.seed);
  if (!extra.empty()) echo += " " + extra;
  return echo;
}

std::string rate_curve_csv(const RateCurve& curve, const std::string& command) {
  std::string out = "# " + version_string() + "\n";
  out += "# " + config_echo(command, curve.config, curve.scheme_label, "") + "\n";
  out += "snr_db,users,rate_mean,rate_stderr,rate_gain_mean,rate_loss_mean,scheme,trials,seed\n";
  for (std::size_t i = 0; i < curve.snr_db.size(); ++i) {
    out += format_double(curve.snr_db[i]);
    out += "," + std::to_string(curve.users_at_point[i]);
    out += "," + format_double(curve.rate_mean[i]);
    out += "," + format_double(curve.rate_stderr[i]);
    out += "," + format_double(curve.rate_gain_mean[i]);
    out += "," + format_double(curve.rate_loss_mean[i]);
    out += "," + curve.scheme_label;
    out += "," + std::to_string(curve.trials);
    out += "," + std::to_string(curve.config.seed);
    out += "\n";
  }
  return out;
}

std::string bound_report_csv(const BoundReport& rep) {
  std::string nlist;
  for (std::size_t i = 0; i < rep.mins.size(); ++i)
    nlist += (i ? "," : "") + std::to_string(rep.mins[i].users);

  std::string out = "# " + version_string() + "\n";
  out += "# command=validate-bounds K=" + std::to_string(rep.transmitters) +
         " Nr=" + std::to_string(rep.rx_antennas) + " N-list=" + nlist +
         " trials=" + std::to_string(rep.trials) + " seed=" + std::to_string(rep.seed) + "\n";
  out += "N,lambda,empirical_cdf,bound_cdf,empirical_min_mean,bound_mean,pass\n";
  for (const BoundReport::MinRow& row : rep.mins) {
    for (std::size_t li = 0; li < rep.lambda_grid.size(); ++li) {
      const bool pass = rep.cdf_pass[li] && row.pass;
      out += std::to_string(row.users);
      out += "," + format_double(rep.lambda_grid[li]);
      out += "," + format_double(rep.empirical_cdf[li]);
      out += "," + format_double(rep.bound_cdf[li]);
      out += "," + format_double(row.empirical_min_mean);
      out += "," + format_double(row.bound_mean);
      out += pass ? ",1" : ",0";
      out += "\n";
    }
  }
  return out;
}

CsvDocument parse_csv(const std::string& text) {
  CsvDocument doc;
  bool have_header = false;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t pos = text.find('\n', start);
    if (pos == std::string::npos) pos = text.size();
    const std::string line = text.substr(start, pos - start);
    start = pos + 1;
    if (!have_header) {
      if (!line.empty() && line[0] == '#') {
        doc.preamble.push_back(line);
      } else {
        doc.header = line;
        have_header = true;
      }
      continue;
    }
    if (line.empty()) continue;
    doc.rows.push_back(split(line, ','));
  }
  if (!have_header) throw std::invalid_argument("parse_csv: missing header line");
  return doc;
}

std::string serialize_csv(const CsvDocument& doc) {
  std::string out;
  for (const std::string& line : doc.preamble) out += line + "\n";
  out += doc.header + "\n";
  for (const std::vector<std::string>& row : doc.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ",";
      out += row[i];
    }
    out += "\n";
  }
  return out;
}

}  // namespace ibcsim::cli
