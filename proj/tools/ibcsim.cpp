/*
 * ibcsim: Monte Carlo experiments for opportunistic user selection in
 * interfering broadcast channels.
 *
 * Subcommands:
 *   rate-curve       SNR sweep of the mean selected-user rate (CSV)
 *   dof-slope        high-SNR slope of a rate curve (single line)
 *   validate-bounds  empirical checks of the alignment bounds (CSV)
 *
 * Exit codes: 0 success, 2 usage/config error (or a bound violation in
 * validate-bounds), 3 user-scaling cap exceeded.
 */

#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "ibcsim/cli_format.hpp"
#include "ibcsim/experiments.hpp"
#include "ibcsim/version.hpp"

namespace {

using namespace ibcsim;

struct Args {
  std::uint64_t transmitters = 4;
  std::uint64_t rx_antennas = 3;
  std::uint64_t tx_antennas = 1;
  std::string scheme = "max-sinr";
  std::string schedule = "fixed:10";
  std::string snr = "0:5:40";
  std::string n_list = "10,100";
  std::uint64_t trials = 2000;
  std::uint64_t seed = 0;
  std::uint64_t window = 3;
  std::uint64_t cap = 1'000'000;
  unsigned threads = 1;
  bool self_test = false;
  std::string config_path;
};

/// Option registration shared by the subcommands. Returns the option
/// pointers so config-file values can fill in anything the command line
/// left untouched.
std::map<std::string, CLI::Option*> add_common(CLI::App* cmd, Args& a, bool with_schedule) {
  std::map<std::string, CLI::Option*> opts;
  opts["K"] = cmd->add_option("--K", a.transmitters, "Transmitters");
  opts["Nr"] = cmd->add_option("--Nr", a.rx_antennas, "Receive antennas per user");
  opts["trials"] = cmd->add_option("--trials", a.trials, "Monte Carlo trials per point");
  opts["seed"] = cmd->add_option("--seed", a.seed, "Root seed for all randomness");
  opts["threads"] = cmd->add_option("--threads", a.threads, "Worker threads (speed only)");
  cmd->add_option("--config", a.config_path, "Flat key=value config file");
  if (with_schedule) {
    opts["Nt"] = cmd->add_option("--Nt", a.tx_antennas, "Transmit antennas (beams) per transmitter");
    opts["scheme"] = cmd->add_option("--scheme", a.scheme,
                                     "max-snr|min-inr|max-sinr|min-iam|two-stage:n1:n2|random|tdma1|tdma2");
    opts["schedule"] = cmd->add_option("--schedule", a.schedule, "fixed:N|powerlaw:a:b|exppower:a:b:c");
    opts["snr"] = cmd->add_option("--snr", a.snr, "SNR grid start:step:stop in dB");
    opts["cap"] = cmd->add_option("--cap", a.cap, "Upper bound on scheduled users");
  }
  return opts;
}

void apply_config_file(const Args& a, const std::map<std::string, CLI::Option*>& opts,
                       const std::map<std::string, std::function<void(const std::string&)>>& setters) {
  if (a.config_path.empty()) return;
  std::ifstream in(a.config_path);
  if (!in) throw std::invalid_argument("cannot open config file '" + a.config_path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  for (const auto& [key, value] : cli::parse_config_file(buf.str())) {
    const auto setter = setters.find(key);
    if (setter == setters.end()) throw std::invalid_argument("unknown config key '" + key + "'");
    const auto opt = opts.find(key);
    if (opt != opts.end() && opt->second->count() > 0) continue;  // flags override file
    setter->second(value);
  }
}

std::uint64_t to_count(const std::string& v, const char* key) {
  const long long n = cli::parse_integer(v);
  if (n < 0) throw std::invalid_argument(std::string("config key ") + key + " must be non-negative");
  return std::uint64_t(n);
}

std::map<std::string, std::function<void(const std::string&)>> make_setters(Args& a, bool with_schedule,
                                                                            bool with_window,
                                                                            bool with_nlist) {
  std::map<std::string, std::function<void(const std::string&)>> s;
  s["K"] = [&a](const std::string& v) { a.transmitters = to_count(v, "K"); };
  s["Nr"] = [&a](const std::string& v) { a.rx_antennas = to_count(v, "Nr"); };
  s["trials"] = [&a](const std::string& v) { a.trials = to_count(v, "trials"); };
  s["seed"] = [&a](const std::string& v) { a.seed = to_count(v, "seed"); };
  s["threads"] = [&a](const std::string& v) { a.threads = unsigned(to_count(v, "threads")); };
  if (with_schedule) {
    s["Nt"] = [&a](const std::string& v) { a.tx_antennas = to_count(v, "Nt"); };
    s["scheme"] = [&a](const std::string& v) { a.scheme = v; };
    s["schedule"] = [&a](const std::string& v) { a.schedule = v; };
    s["snr"] = [&a](const std::string& v) { a.snr = v; };
    s["cap"] = [&a](const std::string& v) { a.cap = to_count(v, "cap"); };
  }
  if (with_window) s["window"] = [&a](const std::string& v) { a.window = to_count(v, "window"); };
  if (with_nlist) s["N-list"] = [&a](const std::string& v) { a.n_list = v; };
  return s;
}

ExperimentConfig build_config(const Args& a) {
  ExperimentConfig cfg;
  cfg.transmitters = a.transmitters;
  cfg.rx_antennas = a.rx_antennas;
  cfg.tx_antennas = a.tx_antennas;
  cfg.schedule = cli::parse_schedule(a.schedule, a.cap);
  cfg.snr_db = cli::parse_snr_grid(a.snr);
  cfg.trials = a.trials;
  cfg.seed = a.seed;
  cfg.threads = a.threads;
  return cfg;
}

RateCurve run_mode_curve(const cli::RunMode& mode, ExperimentConfig& cfg) {
  if (mode.kind == cli::RunMode::Kind::scheme) {
    cfg.scheme = mode.scheme;
    return run_rate_curve(cfg);
  }
  if (cfg.tx_antennas != 1) throw std::invalid_argument("tdma baselines are single-antenna (need Nt=1)");
  return run_tdma_curve(mode.kind == cli::RunMode::Kind::tdma1 ? 1 : 2, cfg);
}

void maybe_warn_regime(const Args& a) {
  if (a.tx_antennas > 1 && a.rx_antennas >= a.transmitters * a.tx_antennas)
    std::cerr << "note: Nr >= K*Nt leaves the interference-limited regime under study\n";
}

int cmd_rate_curve(const Args& a) {
  ExperimentConfig cfg = build_config(a);
  maybe_warn_regime(a);
  const cli::RunMode mode = cli::parse_run_mode(a.scheme);
  const RateCurve curve = run_mode_curve(mode, cfg);
  const std::string csv = cli::rate_curve_csv(curve, "rate-curve");
  std::fwrite(csv.data(), 1, csv.size(), stdout);
  return 0;
}

int cmd_dof_slope(const Args& a) {
  if (a.self_test) {
    std::string out = "# " + cli::version_string() + "\n# command=dof-slope self-test=1\n";
    ExperimentConfig cfg;
    RateCurve flat;
    flat.snr_db = cfg.snr_db;
    flat.rate_mean.assign(flat.snr_db.size(), 3.0);
    out += "slope=" + cli::format_double(dof_slope(flat, a.window ? std::size_t(a.window) : 3)) + "\n";
    std::fwrite(out.data(), 1, out.size(), stdout);
    return 0;
  }
  ExperimentConfig cfg = build_config(a);
  maybe_warn_regime(a);
  const cli::RunMode mode = cli::parse_run_mode(a.scheme);
  const RateCurve curve = run_mode_curve(mode, cfg);
  const double slope = dof_slope(curve, std::size_t(a.window));

  std::string out = "# " + cli::version_string() + "\n";
  out += "# " + cli::config_echo("dof-slope", curve.config, curve.scheme_label,
                                 "window=" + std::to_string(a.window)) + "\n";
  out += "slope=" + cli::format_double(slope) + "\n";
  std::fwrite(out.data(), 1, out.size(), stdout);
  return 0;
}

int cmd_validate_bounds(const Args& a) {
  const std::vector<std::size_t> sizes = cli::parse_size_list(a.n_list);
  const BoundReport rep =
      validate_bounds(a.transmitters, a.rx_antennas, sizes, a.trials, a.seed, a.threads);
  const std::string csv = cli::bound_report_csv(rep);
  std::fwrite(csv.data(), 1, csv.size(), stdout);
  if (!rep.all_pass) {
    std::cerr << "error: one or more bounds violated beyond Monte Carlo slack\n";
    return 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Interfering-broadcast-channel user selection experiments"};
  app.set_version_flag("--version", cli::version_string());
  app.require_subcommand(1);

  Args rate_args, slope_args, bounds_args;

  CLI::App* rate = app.add_subcommand("rate-curve", "SNR sweep of mean selected-user rate (CSV)");
  auto rate_opts = add_common(rate, rate_args, true);

  CLI::App* slope = app.add_subcommand("dof-slope", "Fitted high-SNR slope of a rate curve");
  auto slope_opts = add_common(slope, slope_args, true);
  slope_opts["window"] = slope->add_option("--window", slope_args.window, "Points in the slope fit");
  slope->add_flag("--self-test", slope_args.self_test, "Fit a flat synthetic curve and exit");

  CLI::App* bounds = app.add_subcommand("validate-bounds", "Empirical alignment-bound checks (CSV)");
  auto bounds_opts = add_common(bounds, bounds_args, false);
  bounds_opts["N-list"] = bounds->add_option("--N-list", bounds_args.n_list, "Comma-separated group sizes");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (rate->parsed()) {
      apply_config_file(rate_args, rate_opts, make_setters(rate_args, true, false, false));
      return cmd_rate_curve(rate_args);
    }
    if (slope->parsed()) {
      apply_config_file(slope_args, slope_opts, make_setters(slope_args, true, true, false));
      return cmd_dof_slope(slope_args);
    }
    if (bounds->parsed()) {
      apply_config_file(bounds_args, bounds_opts, make_setters(bounds_args, false, false, true));
      return cmd_validate_bounds(bounds_args);
    }
  } catch (const CapExceededError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  std::cerr << "error: no subcommand given\n";
  return 2;
}
