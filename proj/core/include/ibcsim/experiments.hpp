#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ibcsim/selection.hpp"

namespace ibcsim {

/// Thrown when a user-scaling schedule asks for more candidates than the
/// safety cap allows. The CLI maps this to its own exit code so runaway
/// exponential schedules fail loudly.
class CapExceededError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Group size as a function of transmit power: constant, a*P^b, or the
/// exponential a*exp(P^b)*P^c.
struct ScalingSchedule {
  enum class Kind { fixed, power_law, exp_power };

  Kind kind = Kind::fixed;
  std::size_t fixed_users = 1;
  double a = 1.0, b = 0.0, c = 0.0;
  std::size_t cap = 1'000'000;

  static ScalingSchedule fixed(std::size_t users, std::size_t cap = 1'000'000);
  static ScalingSchedule power_law(double a, double b, std::size_t cap = 1'000'000);
  static ScalingSchedule exp_power(double a, double b, double c, std::size_t cap = 1'000'000);
};

/// Users at a given linear power; nearest integer, at least 1.
/// Throws CapExceededError beyond the schedule cap.
std::size_t users_at(const ScalingSchedule& schedule, double power);

struct ExperimentConfig {
  std::size_t transmitters = 4;
  std::size_t rx_antennas = 3;
  std::size_t tx_antennas = 1;
  SchemeId scheme = SchemeId::max_sinr();
  ScalingSchedule schedule = ScalingSchedule::fixed(10);
  std::vector<double> snr_db = {0, 5, 10, 15, 20, 25, 30, 35, 40};
  std::size_t trials = 2000;
  std::uint64_t seed = 0;
  unsigned threads = 1;  // execution width only; never affects results
};

/// Mean selected-user rate per transmitter across an SNR sweep, with the
/// gain/loss decomposition averaged alongside for strategy diagnostics.
struct RateCurve {
  std::vector<double> snr_db;
  std::vector<std::size_t> users_at_point;
  std::vector<double> rate_mean;
  std::vector<double> rate_stderr;
  std::vector<double> rate_gain_mean;
  std::vector<double> rate_loss_mean;
  std::size_t trials = 0;
  std::string scheme_label;
  ExperimentConfig config;
};

/// Monte Carlo sweep. Trials are keyed by (seed, point, trial) so any worker
/// count produces bitwise-identical curves; aggregation uses a fixed-order
/// pairwise sum for the same reason.
RateCurve run_rate_curve(const ExperimentConfig& cfg);

/// Least-squares slope of rate_mean against log2(P) over the last `window`
/// sweep points.
double dof_slope(const RateCurve& curve, std::size_t window);

/// Baseline: one transmitter active at a time, best of N users by receive
/// SNR with matched filtering, scaled by the 1/K activity factor.
double tdma1_rate(std::size_t transmitters, std::size_t rx_antennas, std::size_t users, double power,
                  std::size_t trials, std::uint64_t seed);

/// Baseline: rx_antennas of the K transmitters active together; the selected
/// user nulls the active interferers by zero forcing and is chosen for the
/// largest post-nulling gain; activity factor rx_antennas/K.
double tdma2_rate(std::size_t transmitters, std::size_t rx_antennas, std::size_t users, double power,
                  std::size_t trials, std::uint64_t seed);

/// Full SNR sweep of either baseline (order 1 or 2) under cfg's grid, trial
/// count and seed; scheme and schedule fields are ignored except for the
/// fixed group size.
RateCurve run_tdma_curve(int order, const ExperimentConfig& cfg);

/// Empirical checks of the closed-form alignment bounds.
struct BoundReport {
  std::size_t transmitters = 0;
  std::size_t rx_antennas = 0;
  std::size_t trials = 0;
  std::uint64_t seed = 0;

  // Distribution of a single user's alignment measure at the lambda grid.
  std::vector<double> lambda_grid;
  std::vector<double> empirical_cdf;
  std::vector<double> cdf_stderr;
  std::vector<double> bound_cdf;
  std::vector<bool> cdf_pass;

  struct MinRow {
    std::size_t users = 0;
    double empirical_min_mean = 0.0;
    double min_stderr = 0.0;
    double bound_mean = 0.0;
    bool pass = false;
  };
  std::vector<MinRow> mins;

  struct LossRow {
    std::size_t users = 0;
    double power = 0.0;
    double loss_mean = 0.0;
    double loss_stderr = 0.0;
    double bound = 0.0;
    bool pass = false;
  };
  std::vector<LossRow> losses;

  bool all_pass = false;
};

/// For each group size: the alignment-measure CDF against its lower bound,
/// the mean minimum over the group against the expectation bound, and the
/// selected-user rate loss under min-INR against its closed form.
BoundReport validate_bounds(std::size_t transmitters, std::size_t rx_antennas,
                            std::span<const std::size_t> group_sizes, std::size_t trials,
                            std::uint64_t seed, unsigned threads = 1);

/// Fixed-order pairwise sum; deterministic and accurate for long
/// accumulations regardless of how the values were produced.
double pairwise_sum(std::span<const double> values);

}  // namespace ibcsim
