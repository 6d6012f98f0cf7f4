#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "ibcsim/alignment.hpp"
#include "ibcsim/channel.hpp"
#include "ibcsim/selection.hpp"

using namespace ibcsim;

namespace {

CVec random_unit(std::size_t dim, RngStream& rng) { return normalized(sample_channel_vector(dim, rng)); }

double max_abs(double a, double b) { return std::abs(a) > std::abs(b) ? std::abs(a) : std::abs(b); }

/// Relative-ish closeness for rate quantities that can reach tens of bits.
bool close(double a, double b, double tol) { return std::abs(a - b) <= tol * std::max(1.0, max_abs(a, b)); }

}  // namespace

TEST_SUITE("selection") {

TEST_CASE("mrc vector is the matched filter") {
  const UserChannelSet u{CVec{cxd(2.0, 0.0), cxd(0.0, 0.0)}, {}, 1.0};
  const CVec v = mrc_vector(u);
  CHECK(std::abs(v[0] - cxd(1.0, 0.0)) < 1e-15);
  CHECK(std::abs(v[1]) < 1e-15);

  RngStream rng(301, make_stream_id(StreamPurpose::generic, 30, 0));
  for (int rep = 0; rep < 20; ++rep) {
    const CVec h = sample_channel_vector(3, rng);
    const CVec m = mrc_vector({h, {}, 1.0});
    CHECK(std::abs(norm(m) - 1.0) < 1e-12);
    CHECK(std::abs(std::norm(dot(m, h)) - norm_squared(h)) < 1e-12 * norm_squared(h));
    // Cauchy-Schwarz: no unit filter collects more of the desired power
    for (int k = 0; k < 100; ++k) {
      const CVec w = random_unit(3, rng);
      CHECK(std::norm(dot(w, h)) <= norm_squared(h) + 1e-12);
    }
  }

  CHECK_THROWS_AS((void)mrc_vector({CVec{cxd(0.0, 0.0), cxd(0.0, 0.0)}, {}, 1.0}), std::invalid_argument);
}

TEST_CASE("min-inr vector reaches the smallest eigenvalue") {
  HermitianMat diag(2);
  diag.set(0, 0, 5.0);
  diag.set(1, 1, 1.0);
  const CVec e2 = min_inr_vector(diag);
  CHECK(std::abs(std::norm(e2[1]) - 1.0) < 1e-12);
  CHECK(std::abs(e2[0]) < 1e-12);

  RngStream rng(302, make_stream_id(StreamPurpose::generic, 31, 0));

  // rank one in dimension >= 2 leaves a null direction
  UserChannelSet one;
  one.power = 7.0;
  one.desired = CVec(3);
  one.interferers.push_back(sample_channel_vector(3, rng));
  const HermitianMat r1 = interference_covariance(one);
  CHECK(quadratic_form(min_inr_vector(r1), r1) <= 1e-9);

  // full-rank covariance: sampled filters never beat the eigenvector
  UserChannelSet full;
  full.power = 2.0;
  full.desired = CVec(3);
  for (int k = 0; k < 4; ++k) full.interferers.push_back(sample_channel_vector(3, rng));
  const HermitianMat r = interference_covariance(full);
  const double floor_val = quadratic_form(min_inr_vector(r), r);
  for (int k = 0; k < 10000; ++k)
    CHECK(quadratic_form(random_unit(3, rng), r) >= floor_val - 1e-6);
}

TEST_CASE("mmse-irc filter and its closed forms") {
  RngStream rng(303, make_stream_id(StreamPurpose::generic, 32, 0));

  // no interference reduces to the matched filter
  UserChannelSet clean;
  clean.power = 4.0;
  clean.desired = sample_channel_vector(3, rng);
  const CVec vm = mmse_irc_vector(clean);
  const CVec mr = mrc_vector(clean);
  for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(vm[i] - mr[i]) < 1e-12);
  CHECK(close(postprocessed_sinr(vm, clean), clean.power * norm_squared(clean.desired), 1e-12));

  // diagonal covariance: sinr = P(|a|^2/(1+r1) + |b|^2/(1+r2))
  UserChannelSet diag;
  diag.power = 3.0;
  diag.desired = CVec{cxd(1.2, -0.3), cxd(0.4, 0.9)};
  diag.interferers.push_back(CVec{cxd(std::sqrt(5.0 / 3.0), 0.0), cxd(0.0, 0.0)});
  diag.interferers.push_back(CVec{cxd(0.0, 0.0), cxd(std::sqrt(2.0 / 3.0), 0.0)});
  const double want = 3.0 * (std::norm(diag.desired[0]) / 6.0 + std::norm(diag.desired[1]) / 3.0);
  CHECK(close(postprocessed_sinr(mmse_irc_vector(diag), diag), want, 1e-12));

  // sampled filters never beat it
  for (int rep = 0; rep < 5; ++rep) {
    UserChannelSet u;
    u.power = 10.0;
    u.desired = sample_channel_vector(3, rng);
    for (int k = 0; k < 3; ++k) u.interferers.push_back(sample_channel_vector(3, rng));
    const double best = postprocessed_sinr(mmse_irc_vector(u), u);
    for (int k = 0; k < 10000; ++k)
      CHECK(postprocessed_sinr(random_unit(3, rng), u) <= best + 1e-9 * best);
  }
}

TEST_CASE("postprocessed sinr definition") {
  RngStream rng(304, make_stream_id(StreamPurpose::generic, 33, 0));
  UserChannelSet u;
  u.power = 6.0;
  u.desired = sample_channel_vector(3, rng);
  for (int k = 0; k < 3; ++k) u.interferers.push_back(sample_channel_vector(3, rng));

  // orthogonal filter collects nothing
  CVec w = sample_channel_vector(3, rng);
  const cxd proj = dot(u.desired, w);
  const double hn = norm_squared(u.desired);
  for (std::size_t i = 0; i < 3; ++i) w[i] -= proj / hn * u.desired[i];
  CHECK(postprocessed_sinr(normalized(w), u) < 1e-24);

  // log-rate inversion matches rate_terms
  for (int rep = 0; rep < 50; ++rep) {
    const CVec v = random_unit(3, rng);
    const double s = postprocessed_sinr(v, u);
    CHECK(close(std::log2(1.0 + s), rate_terms(v, u).rate, 1e-9));
  }

  CVec big = u.desired;
  CHECK_THROWS_AS((void)postprocessed_sinr(big, u), std::invalid_argument);
  CHECK_THROWS_AS((void)rate_terms(big, u), std::invalid_argument);
}

TEST_CASE("rate decomposition") {
  RngStream rng(305, make_stream_id(StreamPurpose::generic, 34, 0));

  // zero interferers: no loss term
  UserChannelSet clean;
  clean.power = 100.0;
  clean.desired = sample_channel_vector(2, rng);
  const CVec v0 = mrc_vector(clean);
  const RateTerms t0 = rate_terms(v0, clean);
  CHECK(t0.rate_loss == 0.0);
  CHECK(close(t0.rate, std::log2(1.0 + 100.0 * norm_squared(clean.desired)), 1e-12));

  // filter orthogonal to the lone interferer: loss vanishes
  UserChannelSet one;
  one.power = 50.0;
  one.desired = sample_channel_vector(2, rng);
  one.interferers.push_back(CVec{cxd(1.0, 0.0), cxd(0.0, 0.0)});
  const CVec vorth{cxd(0.0, 0.0), cxd(1.0, 0.0)};
  CHECK(rate_terms(vorth, one).rate_loss == 0.0);

  // identity rate = gain - loss across random cases and powers
  for (int rep = 0; rep < 2000; ++rep) {
    UserChannelSet u;
    u.power = std::pow(10.0, rng.uniform() * 4.0);
    u.desired = sample_channel_vector(3, rng);
    for (int k = 0; k < 3; ++k) u.interferers.push_back(sample_channel_vector(3, rng));
    const RateTerms t = rate_terms(random_unit(3, rng), u);
    CHECK(close(t.rate, t.rate_gain - t.rate_loss, 1e-9));
  }
}

TEST_CASE("selection outcome invariants hold for every scheme") {
  RngStream rng(306, make_stream_id(StreamPurpose::selection, 35, 0));
  const SchemeId schemes[] = {SchemeId::max_snr(),  SchemeId::min_inr(),     SchemeId::max_sinr(),
                              SchemeId::min_iam(),  SchemeId::two_stage(5, 2), SchemeId::random_baseline()};
  for (int rep = 0; rep < 25; ++rep) {
    const std::vector<UserChannelSet> group = sample_user_group(10, 4, 3, 10.0, rng);
    for (const SchemeId& s : schemes) {
      const SelectionOutcome o = select(s, group, rng);
      CHECK(o.user_index < 10);
      CHECK(std::abs(norm_squared(o.postprocess) - 1.0) < 1e-12);
      CHECK(o.snr >= 0.0);
      CHECK(o.inr >= 0.0);
      CHECK(close(o.rate, o.rate_gain - o.rate_loss, 1e-9));
      CHECK(close(o.rate, std::log2(1.0 + o.sinr), 1e-9));
      CHECK(close(o.sinr, o.snr / (1.0 + o.inr), 1e-12));
    }
  }
}

TEST_CASE("schemes pick what they advertise") {
  RngStream rng(307, make_stream_id(StreamPurpose::selection, 36, 0));

  // user 3 gets the strictly largest gain by construction
  std::vector<UserChannelSet> group = sample_user_group(6, 4, 3, 1.0, rng);
  std::size_t strongest = 0;
  double top = 0.0;
  for (std::size_t n = 0; n < group.size(); ++n)
    if (norm_squared(group[n].desired) > top) {
      top = norm_squared(group[n].desired);
      strongest = n;
    }
  for (std::size_t i = 0; i < 3; ++i) group[3].desired[i] = group[strongest].desired[i] * 2.0;
  CHECK(select(SchemeId::max_snr(), group, rng).user_index == 3);

  // a single candidate wins under every scheme
  const std::vector<UserChannelSet> lone = sample_user_group(1, 4, 3, 5.0, rng);
  CHECK(select(SchemeId::max_snr(), lone, rng).user_index == 0);
  CHECK(select(SchemeId::min_inr(), lone, rng).user_index == 0);
  CHECK(select(SchemeId::max_sinr(), lone, rng).user_index == 0);
  CHECK(select(SchemeId::min_iam(), lone, rng).user_index == 0);
  CHECK(select(SchemeId::two_stage(1, 1), lone, rng).user_index == 0);
  CHECK(select(SchemeId::random_baseline(), lone, rng).user_index == 0);

  // max-sinr maximizes its own criterion, which equals the closed form
  for (int rep = 0; rep < 10; ++rep) {
    const std::vector<UserChannelSet> g = sample_user_group(8, 4, 3, 10.0, rng);
    const SelectionOutcome o = select(SchemeId::max_sinr(), g, rng);
    double best = -1.0;
    std::size_t best_idx = 0;
    for (std::size_t n = 0; n < g.size(); ++n) {
      const HermitianMat r = interference_covariance(g[n]);
      const double crit = g[n].power * dot(g[n].desired, solve_identity_plus(r, g[n].desired)).real();
      CHECK(close(crit, postprocessed_sinr(mmse_irc_vector(g[n]), g[n]), 1e-9));
      if (crit > best) {
        best = crit;
        best_idx = n;
      }
    }
    CHECK(o.user_index == best_idx);
  }
}

TEST_CASE("max-sinr dominates every scheme on each realization") {
  RngStream rng(308, make_stream_id(StreamPurpose::selection, 37, 0));
  const SchemeId rivals[] = {SchemeId::max_snr(), SchemeId::min_inr(), SchemeId::min_iam(),
                             SchemeId::two_stage(5, 2), SchemeId::random_baseline()};
  for (int rep = 0; rep < 30; ++rep) {
    const std::vector<UserChannelSet> group = sample_user_group(10, 4, 3, 10.0, rng);
    const double champion = select(SchemeId::max_sinr(), group, rng).rate;
    for (const SchemeId& s : rivals) CHECK(select(s, group, rng).rate <= champion + 1e-9);
  }
}

TEST_CASE("two-stage follows its block structure") {
  RngStream rng(309, make_stream_id(StreamPurpose::selection, 38, 0));
  for (int rep = 0; rep < 20; ++rep) {
    const std::vector<UserChannelSet> group = sample_user_group(12, 4, 3, 10.0, rng);
    const std::size_t n1 = 4, n2 = 3;

    std::size_t want = 0;
    double want_val = 0.0;
    bool have = false;
    for (std::size_t b = 0; b < n2; ++b) {
      std::size_t w = b * n1;
      for (std::size_t n = b * n1 + 1; n < (b + 1) * n1; ++n)
        if (norm_squared(group[n].desired) > norm_squared(group[w].desired)) w = n;
      const double lam = hermitian_eig(interference_covariance(group[w])).eigenvalues.back();
      if (!have || lam < want_val) {
        have = true;
        want_val = lam;
        want = w;
      }
    }
    CHECK(select(SchemeId::two_stage(n1, n2), group, rng).user_index == want);
  }

  const std::vector<UserChannelSet> group = sample_user_group(10, 4, 3, 1.0, rng);
  CHECK_THROWS_AS((void)select(SchemeId::two_stage(3, 4), group, rng), std::invalid_argument);
  CHECK_THROWS_AS((void)select(SchemeId::two_stage(0, 10), group, rng), std::invalid_argument);
}

TEST_CASE("ties resolve to the lowest index") {
  RngStream rng(310, make_stream_id(StreamPurpose::selection, 39, 0));
  std::vector<UserChannelSet> group = sample_user_group(5, 4, 3, 1.0, rng);
  // plant exact copies of a dominating user at slots 1 and 3
  UserChannelSet star = group[0];
  for (std::size_t i = 0; i < 3; ++i) star.desired[i] *= 10.0;
  for (CVec& h : star.interferers)
    for (std::size_t i = 0; i < 3; ++i) h[i] *= 0.05;
  group[1] = star;
  group[3] = star;
  CHECK(select(SchemeId::max_snr(), group, rng).user_index == 1);
  CHECK(select(SchemeId::min_inr(), group, rng).user_index == 1);
  CHECK(select(SchemeId::max_sinr(), group, rng).user_index == 1);

  // the measure only sees directions, so plant the best-aligned user instead
  std::vector<UserChannelSet> mgroup = sample_user_group(5, 4, 3, 1.0, rng);
  std::size_t tight = 0;
  double tight_val = 2.0;
  for (std::size_t n = 0; n < 5; ++n) {
    const double v = iam(interferer_directions(mgroup[n])).lambda_star;
    if (v < tight_val) {
      tight_val = v;
      tight = n;
    }
  }
  std::vector<UserChannelSet> dup;
  for (std::size_t n = 0; n < 5; ++n) dup.push_back(n == 1 || n == 3 ? mgroup[tight] : mgroup[n]);
  if (tight != 1 && tight != 3) dup[tight] = mgroup[tight == 0 ? 1 : 0];
  CHECK(select(SchemeId::min_iam(), dup, rng).user_index == 1);
}

TEST_CASE("selection criteria ignore a power rescale where they must") {
  RngStream rng(311, make_stream_id(StreamPurpose::selection, 40, 0));
  const double alphas[] = {0.25, 3.7, 1000.0};
  for (int rep = 0; rep < 15; ++rep) {
    const std::vector<UserChannelSet> base = sample_user_group(8, 4, 3, 2.0, rng);
    const std::size_t snr_pick = select(SchemeId::max_snr(), base, rng).user_index;
    const std::size_t inr_pick = select(SchemeId::min_inr(), base, rng).user_index;
    const std::size_t iam_pick = select(SchemeId::min_iam(), base, rng).user_index;
    for (double a : alphas) {
      std::vector<UserChannelSet> scaled = base;
      for (UserChannelSet& u : scaled) u.power = 2.0 * a;
      CHECK(select(SchemeId::max_snr(), scaled, rng).user_index == snr_pick);
      CHECK(select(SchemeId::min_inr(), scaled, rng).user_index == inr_pick);
      CHECK(select(SchemeId::min_iam(), scaled, rng).user_index == iam_pick);
    }
  }
}

TEST_CASE("min-inr never collects more interference than the random pick") {
  RngStream rng(312, make_stream_id(StreamPurpose::selection, 41, 0));
  for (int rep = 0; rep < 40; ++rep) {
    const std::vector<UserChannelSet> group = sample_user_group(8, 4, 3, 10.0, rng);
    const double chosen = select(SchemeId::min_inr(), group, rng).inr;
    CHECK(chosen <= select(SchemeId::random_baseline(), group, rng).inr + 1e-12);
  }
}

TEST_CASE("random baseline draws exactly one index from the stream") {
  RngStream a(313, make_stream_id(StreamPurpose::selection, 42, 0));
  RngStream b(313, make_stream_id(StreamPurpose::selection, 42, 0));
  const std::vector<UserChannelSet> group = sample_user_group(5, 3, 2, 1.0, a);
  (void)sample_user_group(5, 3, 2, 1.0, b);
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t want = std::size_t(b.next_u64() % 5);
    CHECK(select(SchemeId::random_baseline(), group, a).user_index == want);
  }
}

TEST_CASE("pruned minimum-measure scan equals the exhaustive scan") {
  RngStream rng(314, make_stream_id(StreamPurpose::selection, 43, 0));
  for (int rep = 0; rep < 40; ++rep) {
    const std::vector<UserChannelSet> group = sample_user_group(6, 4, 3, 1.0, rng);
    std::size_t want = 0;
    double want_val = 2.0;
    for (std::size_t n = 0; n < group.size(); ++n) {
      const double v = iam(interferer_directions(group[n])).lambda_star;
      if (v < want_val) {
        want_val = v;
        want = n;
      }
    }
    const auto [idx, val] = min_iam_scan(group);
    CHECK(idx == want);
    CHECK(val == want_val);
  }

  // no interferers at all: the measure degenerates to zero
  std::vector<UserChannelSet> clean(3);
  for (UserChannelSet& u : clean) u.desired = CVec{cxd(1.0, 0.0), cxd(0.0, 0.0)};
  const auto [idx0, val0] = min_iam_scan(clean);
  CHECK(idx0 == 0);
  CHECK(val0 == 0.0);
}

TEST_CASE("mean rate grows with the group size") {
  // Prefix groups share draws, so the running maximum of the per-user
  // criterion makes the mean exactly monotone realization by realization.
  RngStream rng(315, make_stream_id(StreamPurpose::selection, 44, 0));
  const std::size_t sizes[] = {1, 2, 4, 8, 16, 32, 64, 128, 256};
  const int trials = 10000;
  double sums[9] = {};
  for (int t = 0; t < trials; ++t) {
    const std::vector<UserChannelSet> group = sample_user_group(256, 4, 3, 5.0, rng);
    double running = -1.0;
    std::size_t next = 0;
    for (std::size_t n = 0; n < 256; ++n) {
      const double s = postprocessed_sinr(mmse_irc_vector(group[n]), group[n]);
      if (s > running) running = s;
      if (n + 1 == sizes[next]) {
        sums[next] += std::log2(1.0 + running);
        ++next;
      }
    }
  }
  for (int i = 1; i < 9; ++i) CHECK(sums[i] >= sums[i - 1]);
}

TEST_CASE("group validation") {
  RngStream rng(316, make_stream_id(StreamPurpose::selection, 45, 0));
  const std::vector<UserChannelSet> empty;
  CHECK_THROWS_AS((void)select(SchemeId::max_snr(), empty, rng), std::invalid_argument);

  std::vector<UserChannelSet> bad = sample_user_group(3, 3, 2, 1.0, rng);
  bad[2].desired = CVec(3);
  CHECK_THROWS_AS((void)select(SchemeId::max_snr(), bad, rng), std::invalid_argument);

  std::vector<UserChannelSet> ragged = sample_user_group(3, 3, 2, 1.0, rng);
  ragged[1].interferers.pop_back();
  CHECK_THROWS_AS((void)select(SchemeId::min_inr(), ragged, rng), std::invalid_argument);
}

TEST_CASE("scheme labels") {
  CHECK(scheme_to_string(SchemeId::max_snr()) == "max-snr");
  CHECK(scheme_to_string(SchemeId::min_inr()) == "min-inr");
  CHECK(scheme_to_string(SchemeId::max_sinr()) == "max-sinr");
  CHECK(scheme_to_string(SchemeId::min_iam()) == "min-iam");
  CHECK(scheme_to_string(SchemeId::two_stage(10, 100)) == "two-stage:10:100");
  CHECK(scheme_to_string(SchemeId::random_baseline()) == "random");
}

}  // TEST_SUITE
