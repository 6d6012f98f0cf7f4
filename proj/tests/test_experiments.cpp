#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "doctest.h"
#include "ibcsim/channel.hpp"
#include "ibcsim/experiments.hpp"

using namespace ibcsim;

namespace {

ExperimentConfig small_config() {
  ExperimentConfig cfg;
  cfg.transmitters = 4;
  cfg.rx_antennas = 3;
  cfg.scheme = SchemeId::max_sinr();
  cfg.schedule = ScalingSchedule::fixed(5);
  cfg.snr_db = {0.0, 20.0, 40.0};
  cfg.trials = 64;
  cfg.seed = 99;
  return cfg;
}

bool same_curve(const RateCurve& a, const RateCurve& b) {
  if (a.rate_mean.size() != b.rate_mean.size()) return false;
  for (std::size_t i = 0; i < a.rate_mean.size(); ++i) {
    if (a.rate_mean[i] != b.rate_mean[i]) return false;
    if (a.rate_stderr[i] != b.rate_stderr[i]) return false;
    if (a.rate_gain_mean[i] != b.rate_gain_mean[i]) return false;
    if (a.rate_loss_mean[i] != b.rate_loss_mean[i]) return false;
    if (a.users_at_point[i] != b.users_at_point[i]) return false;
  }
  return true;
}

}  // namespace

TEST_SUITE("experiments") {

TEST_CASE("scaling schedules evaluate their laws") {
  CHECK(users_at(ScalingSchedule::fixed(10), 1.0) == 10);
  CHECK(users_at(ScalingSchedule::fixed(10), 1e6) == 10);
  CHECK(users_at(ScalingSchedule::power_law(1.0, 1.0), 100.0) == 100);
  CHECK(users_at(ScalingSchedule::power_law(1.0, 0.5), 10000.0) == 100);
  CHECK(users_at(ScalingSchedule::power_law(0.5, 1.0), 100.0) == 50);
  // nearest integer, never below one
  CHECK(users_at(ScalingSchedule::power_law(1.0, 1.0), 2.49) == 2);
  CHECK(users_at(ScalingSchedule::power_law(1.0, 1.0), 2.51) == 3);
  CHECK(users_at(ScalingSchedule::power_law(0.001, 1.0), 1.0) == 1);
  // a exp(P^b) P^c
  const double want = 2.0 * std::exp(2.0) * 4.0;
  CHECK(users_at(ScalingSchedule::exp_power(2.0, 0.5, 1.0), 4.0) == std::size_t(std::llround(want)));

  CHECK_THROWS_AS((void)users_at(ScalingSchedule::fixed(10), 0.0), std::invalid_argument);
  CHECK_THROWS_AS((void)users_at(ScalingSchedule::power_law(1.0, 2.0, 1000), 100.0), CapExceededError);
  CHECK_THROWS_AS((void)users_at(ScalingSchedule::exp_power(1.0, 1.0, 0.0), 1000.0), CapExceededError);
  CHECK_THROWS_AS((void)ScalingSchedule::fixed(0), std::invalid_argument);
  CHECK_THROWS_AS((void)ScalingSchedule::power_law(0.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS((void)ScalingSchedule::fixed(5, 0), std::invalid_argument);
}

TEST_CASE("cap violations name the offending sweep point") {
  ExperimentConfig cfg = small_config();
  cfg.snr_db = {0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0};
  cfg.schedule = ScalingSchedule::power_law(1.0, 3.0);  // blows past 1e6 above P=100
  cfg.trials = 4;
  try {
    (void)run_rate_curve(cfg);
    CHECK(false);
  } catch (const CapExceededError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("snr point 25") != std::string::npos);
    CHECK(msg.find("cap") != std::string::npos);
  }
}

TEST_CASE("slope fit is exact on synthetic curves") {
  RateCurve line;
  line.snr_db = {0.0, 5.0, 10.0, 15.0, 20.0};
  for (double s : line.snr_db) line.rate_mean.push_back(3.0 + s * std::log2(10.0) / 10.0);
  CHECK(std::abs(dof_slope(line, 3) - 1.0) < 1e-12);
  CHECK(std::abs(dof_slope(line, 5) - 1.0) < 1e-12);

  RateCurve flat;
  flat.snr_db = line.snr_db;
  flat.rate_mean.assign(5, 2.5);
  CHECK(dof_slope(flat, 3) == 0.0);

  CHECK_THROWS_AS((void)dof_slope(line, 1), std::invalid_argument);
  CHECK_THROWS_AS((void)dof_slope(line, 6), std::invalid_argument);
  RateCurve ragged = line;
  ragged.rate_mean.pop_back();
  CHECK_THROWS_AS((void)dof_slope(ragged, 2), std::invalid_argument);
}

TEST_CASE("single-trial sweep equals the hand-run pipeline") {
  ExperimentConfig cfg = small_config();
  cfg.transmitters = 2;
  cfg.schedule = ScalingSchedule::fixed(1);
  cfg.snr_db = {10.0};
  cfg.trials = 1;
  cfg.scheme = SchemeId::max_snr();
  const RateCurve curve = run_rate_curve(cfg);

  RngStream rng(cfg.seed, make_stream_id(StreamPurpose::channel, 0, 0));
  const std::vector<UserChannelSet> group = sample_user_group(1, 2, 3, 10.0, rng);
  const SelectionOutcome want = select(SchemeId::max_snr(), group, rng);
  REQUIRE(curve.rate_mean.size() == 1);
  CHECK(curve.rate_mean[0] == want.rate);
  CHECK(curve.rate_gain_mean[0] == want.rate_gain);
  CHECK(curve.rate_loss_mean[0] == want.rate_loss);
  CHECK(curve.users_at_point[0] == 1);
  CHECK(curve.rate_stderr[0] == 0.0);
}

TEST_CASE("curves are bitwise reproducible for any worker count") {
  ExperimentConfig cfg = small_config();
  const RateCurve base = run_rate_curve(cfg);
  CHECK(same_curve(base, run_rate_curve(cfg)));
  cfg.threads = 4;
  CHECK(same_curve(base, run_rate_curve(cfg)));
  cfg.threads = 13;
  CHECK(same_curve(base, run_rate_curve(cfg)));

  ExperimentConfig tc = small_config();
  tc.schedule = ScalingSchedule::fixed(6);
  tc.trials = 48;
  const RateCurve t1 = run_tdma_curve(2, tc);
  tc.threads = 5;
  CHECK(same_curve(t1, run_tdma_curve(2, tc)));
}

TEST_CASE("multi-antenna sweep runs and stays reproducible") {
  ExperimentConfig cfg;
  cfg.transmitters = 2;
  cfg.tx_antennas = 2;
  cfg.rx_antennas = 2;
  cfg.scheme = SchemeId::max_sinr();
  cfg.schedule = ScalingSchedule::fixed(4);
  cfg.snr_db = {10.0, 30.0};
  cfg.trials = 32;
  cfg.seed = 5;
  const RateCurve a = run_rate_curve(cfg);
  REQUIRE(a.rate_mean.size() == 2);
  CHECK(a.rate_mean[0] > 0.0);
  CHECK(a.rate_mean[1] > a.rate_mean[0]);
  cfg.threads = 3;
  CHECK(same_curve(a, run_rate_curve(cfg)));
}

TEST_CASE("rate curve is monotone in power within noise") {
  ExperimentConfig cfg = small_config();
  cfg.trials = 200;
  const RateCurve c = run_rate_curve(cfg);
  for (std::size_t i = 1; i < c.rate_mean.size(); ++i)
    CHECK(c.rate_mean[i] >= c.rate_mean[i - 1] - 2.0 * (c.rate_stderr[i] + c.rate_stderr[i - 1]));
}

TEST_CASE("a filter frozen at low power cannot beat reselection at high power") {
  RngStream rng(503, make_stream_id(StreamPurpose::generic, 50, 0));
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<UserChannelSet> group = sample_user_group(6, 4, 3, 1.0, rng);
    const SelectionOutcome low = select(SchemeId::max_sinr(), group, rng);
    for (UserChannelSet& u : group) u.power = 100.0;
    const SelectionOutcome high = select(SchemeId::max_sinr(), group, rng);
    const RateTerms frozen = rate_terms(low.postprocess, group[low.user_index]);
    CHECK(high.rate >= frozen.rate - 1e-9);
  }
}

TEST_CASE("scheme ordering at a fixed operating point") {
  ExperimentConfig cfg = small_config();
  cfg.schedule = ScalingSchedule::fixed(6);
  cfg.snr_db = {20.0};
  cfg.trials = 300;
  const RateCurve best = run_rate_curve(cfg);
  cfg.scheme = SchemeId::min_inr();
  const RateCurve inr = run_rate_curve(cfg);
  cfg.scheme = SchemeId::max_snr();
  const RateCurve snr = run_rate_curve(cfg);
  CHECK(best.rate_mean[0] >= inr.rate_mean[0] - 2.0 * (best.rate_stderr[0] + inr.rate_stderr[0]));
  CHECK(best.rate_mean[0] >= snr.rate_mean[0] - 2.0 * (best.rate_stderr[0] + snr.rate_stderr[0]));
}

TEST_CASE("tdma baselines and their prefactors") {
  const double one = tdma1_rate(1, 3, 4, 100.0, 256, 11);
  const double four = tdma1_rate(4, 3, 4, 100.0, 256, 11);
  CHECK(four == one / 4.0);

  // single receive antenna collapses the zero-forcing baseline to the first
  CHECK(tdma2_rate(4, 1, 4, 100.0, 128, 12) == tdma1_rate(4, 1, 4, 100.0, 128, 12));

  CHECK_THROWS_AS((void)tdma1_rate(0, 3, 4, 1.0, 10, 0), std::invalid_argument);
  CHECK_THROWS_AS((void)tdma1_rate(4, 3, 4, 0.0, 10, 0), std::invalid_argument);
  CHECK_THROWS_AS((void)tdma2_rate(2, 3, 4, 1.0, 10, 0), std::invalid_argument);
  CHECK_THROWS_AS((void)tdma1_rate(4, 3, 0, 1.0, 10, 0), std::invalid_argument);
  CHECK_THROWS_AS((void)tdma1_rate(4, 3, 4, 1.0, 0, 0), std::invalid_argument);
}

TEST_CASE("tdma sweeps carry their activity-factor slopes") {
  ExperimentConfig cfg;
  cfg.transmitters = 4;
  cfg.rx_antennas = 3;
  cfg.schedule = ScalingSchedule::fixed(10);
  cfg.snr_db = {0, 5, 10, 15, 20, 25, 30, 35, 40};
  cfg.trials = 800;
  cfg.seed = 21;
  cfg.threads = 2;
  const double s1 = dof_slope(run_tdma_curve(1, cfg), 3);
  CHECK(s1 > 0.25 - 0.1);
  CHECK(s1 < 0.25 + 0.1);
  const double s2 = dof_slope(run_tdma_curve(2, cfg), 3);
  CHECK(s2 > 0.75 - 0.1);
  CHECK(s2 < 0.75 + 0.1);

  CHECK_THROWS_AS((void)run_tdma_curve(3, cfg), std::invalid_argument);
  cfg.rx_antennas = 5;
  CHECK_THROWS_AS((void)run_tdma_curve(2, cfg), std::invalid_argument);
}

TEST_CASE("sweep validation") {
  ExperimentConfig cfg = small_config();
  cfg.snr_db.clear();
  CHECK_THROWS_AS((void)run_rate_curve(cfg), std::invalid_argument);
  cfg = small_config();
  cfg.trials = 0;
  CHECK_THROWS_AS((void)run_rate_curve(cfg), std::invalid_argument);
  cfg = small_config();
  cfg.tx_antennas = 0;
  CHECK_THROWS_AS((void)run_rate_curve(cfg), std::invalid_argument);
  cfg = small_config();
  cfg.transmitters = 1;
  CHECK_THROWS_AS((void)run_rate_curve(cfg), std::invalid_argument);
}

TEST_CASE("bound validation report") {
  const std::size_t sizes[] = {8, 64};
  const BoundReport rep = validate_bounds(4, 3, sizes, 600, 31, 2);
  CHECK(rep.all_pass);
  REQUIRE(rep.lambda_grid.size() == 5);
  REQUIRE(rep.empirical_cdf.size() == 5);
  REQUIRE(rep.mins.size() == 2);
  REQUIRE(rep.losses.size() == 6);
  // the unit point of the grid is saturated on both sides
  CHECK(rep.lambda_grid.back() == 1.0);
  CHECK(rep.empirical_cdf.back() == 1.0);
  CHECK(rep.bound_cdf.back() == 1.0);
  for (std::size_t i = 1; i < 5; ++i) CHECK(rep.empirical_cdf[i] >= rep.empirical_cdf[i - 1]);
  CHECK(rep.mins[0].users == 8);
  CHECK(rep.mins[1].users == 64);
  CHECK(rep.mins[0].bound_mean == 0.125);
  CHECK(rep.mins[1].bound_mean == 0.015625);
  CHECK(rep.mins[1].empirical_min_mean < rep.mins[0].empirical_min_mean);

  // identical seeds and configs reproduce bitwise, worker count aside
  const BoundReport again = validate_bounds(4, 3, sizes, 600, 31, 5);
  CHECK(again.empirical_cdf == rep.empirical_cdf);
  for (std::size_t i = 0; i < rep.mins.size(); ++i) {
    CHECK(again.mins[i].empirical_min_mean == rep.mins[i].empirical_min_mean);
    CHECK(again.mins[i].min_stderr == rep.mins[i].min_stderr);
  }
  for (std::size_t i = 0; i < rep.losses.size(); ++i)
    CHECK(again.losses[i].loss_mean == rep.losses[i].loss_mean);

  CHECK_THROWS_AS((void)validate_bounds(3, 3, sizes, 100, 0), std::invalid_argument);
  CHECK_THROWS_AS((void)validate_bounds(4, 3, sizes, 1, 0), std::invalid_argument);
  CHECK_THROWS_AS((void)validate_bounds(4, 3, {}, 100, 0), std::invalid_argument);
  const std::size_t zero[] = {0};
  CHECK_THROWS_AS((void)validate_bounds(4, 3, zero, 100, 0), std::invalid_argument);
}

TEST_CASE("pairwise summation") {
  CHECK(pairwise_sum({}) == 0.0);
  const std::vector<double> tiny = {1.0, 2.0, 3.0};
  CHECK(pairwise_sum(tiny) == 6.0);

  RngStream rng(504, make_stream_id(StreamPurpose::generic, 51, 0));
  std::vector<double> vals(100000);
  long double want = 0.0;
  for (double& v : vals) {
    v = rng.gaussian() * 1000.0;
    want += (long double)v;
  }
  CHECK(std::abs(pairwise_sum(vals) - double(want)) < 1e-12 * std::abs(double(want)) + 1e-9);
  CHECK(pairwise_sum(vals) == pairwise_sum(vals));
}

}  // TEST_SUITE
