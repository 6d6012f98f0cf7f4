#include "ibcsim/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <limits>
#include <mutex>
#include <thread>

#include "ibcsim/alignment.hpp"
#include "ibcsim/channel.hpp"
#include "ibcsim/mimo.hpp"

namespace ibcsim {

namespace {

constexpr double kLog2Of10 = 3.321928094887362348;

double db_to_power(double snr_db) { return std::pow(10.0, snr_db / 10.0); }

/// Runs body(0..count) across `threads` workers pulling from a shared
/// counter. Work items write disjoint slots, so scheduling freedom never
/// shows up in results.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& body) {
  const unsigned width = std::max(1u, threads);
  if (width == 1 || count < 2) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex err_mutex;
  std::exception_ptr err;
  auto worker = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (!err) err = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(width);
  for (unsigned w = 0; w < width; ++w) pool.emplace_back(worker);
  for (std::thread& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

struct MeanErr {
  double mean = 0.0;
  double err = 0.0;
};

MeanErr mean_and_stderr(std::span<const double> values) {
  MeanErr out;
  const std::size_t n = values.size();
  if (n == 0) return out;
  out.mean = pairwise_sum(values) / double(n);
  if (n < 2) return out;
  std::vector<double> sq(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double d = values[i] - out.mean;
    sq[i] = d * d;
  }
  const double var = pairwise_sum(sq) / double(n - 1);
  out.err = std::sqrt(var / double(n));
  return out;
}

double tdma1_trial(RngStream& rng, std::size_t users, std::size_t rx_antennas, double power) {
  double best = 0.0;
  for (std::size_t n = 0; n < users; ++n)
    best = std::max(best, norm_squared(sample_channel_vector(rx_antennas, rng)));
  return std::log2(1.0 + power * best);
}

double tdma2_trial(RngStream& rng, std::size_t users, std::size_t rx_antennas, double power) {
  // rx_antennas transmitters are active: the serving one plus rx_antennas-1
  // interferers that the user nulls exactly before matched filtering.
  const std::vector<UserChannelSet> group = sample_user_group(users, rx_antennas, rx_antennas, power, rng);
  double best = 0.0;
  std::vector<CVec> basis;
  for (const UserChannelSet& u : group) {
    basis.clear();
    for (const CVec& g : u.interferers) {
      CVec w = g;
      for (int pass = 0; pass < 2; ++pass)
        for (const CVec& q : basis) {
          const cxd proj = dot(q, w);
          for (std::size_t r = 0; r < w.dim(); ++r) w[r] -= proj * q[r];
        }
      if (norm(w) > 1e-12) basis.push_back(normalized(w));
    }
    CVec res = u.desired;
    for (const CVec& q : basis) {
      const cxd proj = dot(q, res);
      for (std::size_t r = 0; r < res.dim(); ++r) res[r] -= proj * q[r];
    }
    best = std::max(best, norm_squared(res));
  }
  return std::log2(1.0 + power * best);
}

void validate_common(std::size_t rx_antennas, std::size_t trials, std::size_t users) {
  if (rx_antennas == 0) throw std::invalid_argument("experiments: rx_antennas must be positive");
  if (trials == 0) throw std::invalid_argument("experiments: trials must be positive");
  if (users == 0) throw std::invalid_argument("experiments: users must be positive");
}

}  // namespace

ScalingSchedule ScalingSchedule::fixed(std::size_t users, std::size_t cap) {
  if (users == 0) throw std::invalid_argument("ScalingSchedule::fixed: users must be positive");
  if (cap == 0) throw std::invalid_argument("ScalingSchedule: cap must be positive");
  ScalingSchedule s;
  s.kind = Kind::fixed;
  s.fixed_users = users;
  s.cap = cap;
  return s;
}

ScalingSchedule ScalingSchedule::power_law(double a, double b, std::size_t cap) {
  if (!(a > 0.0)) throw std::invalid_argument("ScalingSchedule::power_law: a must be positive");
  if (cap == 0) throw std::invalid_argument("ScalingSchedule: cap must be positive");
  ScalingSchedule s;
  s.kind = Kind::power_law;
  s.a = a;
  s.b = b;
  s.cap = cap;
  return s;
}

ScalingSchedule ScalingSchedule::exp_power(double a, double b, double c, std::size_t cap) {
  if (!(a > 0.0)) throw std::invalid_argument("ScalingSchedule::exp_power: a must be positive");
  if (cap == 0) throw std::invalid_argument("ScalingSchedule: cap must be positive");
  ScalingSchedule s;
  s.kind = Kind::exp_power;
  s.a = a;
  s.b = b;
  s.c = c;
  s.cap = cap;
  return s;
}

std::size_t users_at(const ScalingSchedule& schedule, double power) {
  if (!(power > 0.0)) throw std::invalid_argument("users_at: power must be positive");

  auto over_cap = [&](double requested) -> CapExceededError {
    return CapExceededError("schedule requests " + std::to_string(requested) + " users at power " +
                            std::to_string(power) + ", cap is " + std::to_string(schedule.cap));
  };

  double x = 0.0;
  switch (schedule.kind) {
    case ScalingSchedule::Kind::fixed:
      x = double(schedule.fixed_users);
      break;
    case ScalingSchedule::Kind::power_law:
      x = schedule.a * std::pow(power, schedule.b);
      break;
    case ScalingSchedule::Kind::exp_power: {
      const double expo = std::pow(power, schedule.b);
      if (expo > 700.0) throw over_cap(std::numeric_limits<double>::infinity());
      x = schedule.a * std::exp(expo) * std::pow(power, schedule.c);
      break;
    }
  }
  if (!std::isfinite(x)) throw over_cap(x);
  long long n = std::llround(x);
  if (n < 1) n = 1;
  if (std::uint64_t(n) > schedule.cap) throw over_cap(x);
  return std::size_t(n);
}

double pairwise_sum(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n <= 16) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = n / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

RateCurve run_rate_curve(const ExperimentConfig& cfg) {
  if (cfg.snr_db.empty()) throw std::invalid_argument("run_rate_curve: empty snr grid");
  if (cfg.trials == 0) throw std::invalid_argument("run_rate_curve: trials must be positive");
  if (cfg.tx_antennas == 0 || cfg.rx_antennas == 0)
    throw std::invalid_argument("run_rate_curve: antenna counts must be positive");
  if (cfg.tx_antennas == 1 && cfg.transmitters < 2)
    throw std::invalid_argument("run_rate_curve: single-antenna path needs at least two transmitters");
  if (cfg.transmitters == 0) throw std::invalid_argument("run_rate_curve: transmitters must be positive");
  if (cfg.snr_db.size() > 0xFFFF) throw std::invalid_argument("run_rate_curve: snr grid too long");

  RateCurve curve;
  curve.config = cfg;
  curve.trials = cfg.trials;
  curve.scheme_label = scheme_to_string(cfg.scheme);
  curve.snr_db = cfg.snr_db;

  std::vector<double> rate(cfg.trials), gain(cfg.trials), loss(cfg.trials);
  for (std::size_t pt = 0; pt < cfg.snr_db.size(); ++pt) {
    const double power = db_to_power(cfg.snr_db[pt]);
    std::size_t users = 0;
    try {
      users = users_at(cfg.schedule, power);
    } catch (const CapExceededError& e) {
      throw CapExceededError(std::string(e.what()) + " (snr point " + std::to_string(cfg.snr_db[pt]) + " dB)");
    }

    parallel_for(cfg.trials, cfg.threads, [&](std::size_t t) {
      RngStream rng(cfg.seed, make_stream_id(StreamPurpose::channel, pt, t));
      if (cfg.tx_antennas == 1) {
        const std::vector<UserChannelSet> group =
            sample_user_group(users, cfg.transmitters, cfg.rx_antennas, power, rng);
        const SelectionOutcome sel = select(cfg.scheme, group, rng);
        rate[t] = sel.rate;
        gain[t] = sel.rate_gain;
        loss[t] = sel.rate_loss;
      } else {
        MimoConfig mc;
        mc.transmitters = cfg.transmitters;
        mc.tx_antennas = cfg.tx_antennas;
        mc.rx_antennas = cfg.rx_antennas;
        mc.users = users;
        mc.power = power;
        const BeamUserAssignment asg = mimo_select_and_rate(mc, cfg.scheme, rng);
        rate[t] = asg.transmitter_rate;
        double g = 0.0, l = 0.0;
        for (const SelectionOutcome& sel : asg.per_beam) {
          g += sel.rate_gain;
          l += sel.rate_loss;
        }
        gain[t] = g;
        loss[t] = l;
      }
    });

    const MeanErr r = mean_and_stderr(rate);
    curve.users_at_point.push_back(users);
    curve.rate_mean.push_back(r.mean);
    curve.rate_stderr.push_back(r.err);
    curve.rate_gain_mean.push_back(mean_and_stderr(gain).mean);
    curve.rate_loss_mean.push_back(mean_and_stderr(loss).mean);
  }
  return curve;
}

double dof_slope(const RateCurve& curve, std::size_t window) {
  const std::size_t n = curve.snr_db.size();
  if (window < 2) throw std::invalid_argument("dof_slope: window must cover at least two points");
  if (window > n) throw std::invalid_argument("dof_slope: window exceeds curve length");
  if (curve.rate_mean.size() != n) throw std::invalid_argument("dof_slope: malformed curve");

  const std::size_t first = n - window;
  double xbar = 0.0, ybar = 0.0;
  for (std::size_t i = first; i < n; ++i) {
    xbar += curve.snr_db[i] * (kLog2Of10 / 10.0);
    ybar += curve.rate_mean[i];
  }
  xbar /= double(window);
  ybar /= double(window);
  double num = 0.0, den = 0.0;
  for (std::size_t i = first; i < n; ++i) {
    const double dx = curve.snr_db[i] * (kLog2Of10 / 10.0) - xbar;
    num += dx * (curve.rate_mean[i] - ybar);
    den += dx * dx;
  }
  if (!(den > 0.0)) throw std::invalid_argument("dof_slope: degenerate snr window");
  return num / den;
}

double tdma1_rate(std::size_t transmitters, std::size_t rx_antennas, std::size_t users, double power,
                  std::size_t trials, std::uint64_t seed) {
  if (transmitters == 0) throw std::invalid_argument("tdma1_rate: transmitters must be positive");
  validate_common(rx_antennas, trials, users);
  if (!(power > 0.0)) throw std::invalid_argument("tdma1_rate: power must be positive");

  std::vector<double> vals(trials);
  for (std::size_t t = 0; t < trials; ++t) {
    RngStream rng(seed, make_stream_id(StreamPurpose::channel, 0, t));
    vals[t] = tdma1_trial(rng, users, rx_antennas, power);
  }
  return mean_and_stderr(vals).mean / double(transmitters);
}

double tdma2_rate(std::size_t transmitters, std::size_t rx_antennas, std::size_t users, double power,
                  std::size_t trials, std::uint64_t seed) {
  if (transmitters == 0) throw std::invalid_argument("tdma2_rate: transmitters must be positive");
  validate_common(rx_antennas, trials, users);
  if (!(power > 0.0)) throw std::invalid_argument("tdma2_rate: power must be positive");
  if (rx_antennas > transmitters) throw std::invalid_argument("tdma2_rate: needs rx_antennas <= transmitters");
  if (rx_antennas == 1) return tdma1_rate(transmitters, 1, users, power, trials, seed);

  std::vector<double> vals(trials);
  for (std::size_t t = 0; t < trials; ++t) {
    RngStream rng(seed, make_stream_id(StreamPurpose::channel, 0, t));
    vals[t] = tdma2_trial(rng, users, rx_antennas, power);
  }
  return mean_and_stderr(vals).mean * double(rx_antennas) / double(transmitters);
}

RateCurve run_tdma_curve(int order, const ExperimentConfig& cfg) {
  if (order != 1 && order != 2) throw std::invalid_argument("run_tdma_curve: order must be 1 or 2");
  if (cfg.snr_db.empty()) throw std::invalid_argument("run_tdma_curve: empty snr grid");
  if (cfg.trials == 0) throw std::invalid_argument("run_tdma_curve: trials must be positive");
  if (cfg.transmitters == 0 || cfg.rx_antennas == 0)
    throw std::invalid_argument("run_tdma_curve: counts must be positive");
  if (order == 2 && cfg.rx_antennas > cfg.transmitters)
    throw std::invalid_argument("run_tdma_curve: needs rx_antennas <= transmitters");

  RateCurve curve;
  curve.config = cfg;
  curve.trials = cfg.trials;
  curve.scheme_label = order == 1 ? "tdma1" : "tdma2";
  curve.snr_db = cfg.snr_db;

  const bool degenerate2 = order == 2 && cfg.rx_antennas == 1;
  const double prefactor =
      order == 1 ? 1.0 / double(cfg.transmitters) : double(cfg.rx_antennas) / double(cfg.transmitters);

  std::vector<double> vals(cfg.trials);
  for (std::size_t pt = 0; pt < cfg.snr_db.size(); ++pt) {
    const double power = db_to_power(cfg.snr_db[pt]);
    std::size_t users = 0;
    try {
      users = users_at(cfg.schedule, power);
    } catch (const CapExceededError& e) {
      throw CapExceededError(std::string(e.what()) + " (snr point " + std::to_string(cfg.snr_db[pt]) + " dB)");
    }
    parallel_for(cfg.trials, cfg.threads, [&](std::size_t t) {
      RngStream rng(cfg.seed, make_stream_id(StreamPurpose::channel, pt, t));
      vals[t] = (order == 1 || degenerate2) ? tdma1_trial(rng, users, cfg.rx_antennas, power)
                                            : tdma2_trial(rng, users, cfg.rx_antennas, power);
    });
    const MeanErr r = mean_and_stderr(vals);
    curve.users_at_point.push_back(users);
    curve.rate_mean.push_back(r.mean * prefactor);
    curve.rate_stderr.push_back(r.err * prefactor);
    curve.rate_gain_mean.push_back(r.mean * prefactor);
    curve.rate_loss_mean.push_back(0.0);
  }
  return curve;
}

BoundReport validate_bounds(std::size_t transmitters, std::size_t rx_antennas,
                            std::span<const std::size_t> group_sizes, std::size_t trials,
                            std::uint64_t seed, unsigned threads) {
  if (transmitters <= rx_antennas)
    throw std::invalid_argument("validate_bounds: requires transmitters > rx_antennas");
  if (rx_antennas == 0) throw std::invalid_argument("validate_bounds: rx_antennas must be positive");
  if (trials < 2) throw std::invalid_argument("validate_bounds: needs at least two trials");
  if (group_sizes.empty()) throw std::invalid_argument("validate_bounds: empty group size list");
  for (std::size_t n : group_sizes)
    if (n == 0) throw std::invalid_argument("validate_bounds: group sizes must be positive");

  BoundReport rep;
  rep.transmitters = transmitters;
  rep.rx_antennas = rx_antennas;
  rep.trials = trials;
  rep.seed = seed;
  rep.lambda_grid = {0.1, 0.3, 0.5, 0.7, 1.0};
  bool ok = true;

  // Single-user measure distribution against the CDF bound.
  {
    std::vector<double> vals(trials);
    parallel_for(trials, threads, [&](std::size_t t) {
      RngStream rng(seed, make_stream_id(StreamPurpose::bounds, 0, t));
      const std::vector<UserChannelSet> one = sample_user_group(1, transmitters, rx_antennas, 1.0, rng);
      vals[t] = iam(interferer_directions(one[0])).lambda_star;
    });
    for (double lambda : rep.lambda_grid) {
      std::size_t hit = 0;
      for (double v : vals)
        if (v <= lambda) ++hit;
      const double p = double(hit) / double(trials);
      const double se = std::sqrt(std::max(0.0, p * (1.0 - p)) / double(trials));
      const double bound = iam_cdf_lower_bound(lambda, transmitters, rx_antennas);
      const bool pass = p + std::max(2.0 * se, 1e-12) >= bound;
      rep.empirical_cdf.push_back(p);
      rep.cdf_stderr.push_back(se);
      rep.bound_cdf.push_back(bound);
      rep.cdf_pass.push_back(pass);
      ok = ok && pass;
    }
  }

  // Mean group minimum against the expectation bound.
  for (std::size_t i = 0; i < group_sizes.size(); ++i) {
    const std::size_t users = group_sizes[i];
    std::vector<double> vals(trials);
    parallel_for(trials, threads, [&](std::size_t t) {
      RngStream rng(seed, make_stream_id(StreamPurpose::bounds, 1 + i, t));
      const std::vector<UserChannelSet> group = sample_user_group(users, transmitters, rx_antennas, 1.0, rng);
      vals[t] = min_iam_scan(group).second;
    });
    const MeanErr m = mean_and_stderr(vals);
    BoundReport::MinRow row;
    row.users = users;
    row.empirical_min_mean = m.mean;
    row.min_stderr = m.err;
    row.bound_mean = min_iam_expectation_bound(users, transmitters, rx_antennas);
    row.pass = m.mean + 2.0 * m.err < row.bound_mean;
    ok = ok && row.pass;
    rep.mins.push_back(row);
  }

  // Selected-user rate loss under min-INR against the closed-form chain.
  {
    const std::size_t loss_trials = std::min<std::size_t>(trials, 400);
    const double powers[] = {10.0, 100.0, 1000.0};
    std::vector<double> vals(loss_trials);
    for (std::size_t i = 0; i < group_sizes.size(); ++i) {
      const std::size_t users = group_sizes[i];
      for (std::size_t pi = 0; pi < 3; ++pi) {
        const double power = powers[pi];
        const std::size_t point = 1 + group_sizes.size() + i * 3 + pi;
        parallel_for(loss_trials, threads, [&](std::size_t t) {
          RngStream rng(seed, make_stream_id(StreamPurpose::bounds, point, t));
          const std::vector<UserChannelSet> group =
              sample_user_group(users, transmitters, rx_antennas, power, rng);
          vals[t] = select(SchemeId::min_inr(), group, rng).rate_loss;
        });
        const MeanErr m = mean_and_stderr(vals);
        BoundReport::LossRow row;
        row.users = users;
        row.power = power;
        row.loss_mean = m.mean;
        row.loss_stderr = m.err;
        row.bound = std::log2(1.0 + double(rx_antennas) * power * double(transmitters - 1) *
                                        std::pow(double(users), -1.0 / double(transmitters - rx_antennas)));
        row.pass = m.mean + 2.0 * m.err <= row.bound;
        ok = ok && row.pass;
        rep.losses.push_back(row);
      }
    }
  }

  rep.all_pass = ok;
  return rep;
}

}  // namespace ibcsim
