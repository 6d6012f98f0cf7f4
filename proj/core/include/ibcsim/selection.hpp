#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>

#include "ibcsim/channel.hpp"
#include "ibcsim/numerics.hpp"
#include "ibcsim/rng.hpp"

namespace ibcsim {

enum class SchemeKind {
  max_snr,
  min_inr,
  max_sinr,
  min_iam,
  two_stage,
  random_baseline,
};

/// Scheme selector plus the two-stage shape parameters (ignored by the
/// single-stage schemes).
struct SchemeId {
  SchemeKind kind = SchemeKind::max_sinr;
  std::size_t subgroup_size = 0;
  std::size_t subgroup_count = 0;

  static SchemeId max_snr() { return {SchemeKind::max_snr, 0, 0}; }
  static SchemeId min_inr() { return {SchemeKind::min_inr, 0, 0}; }
  static SchemeId max_sinr() { return {SchemeKind::max_sinr, 0, 0}; }
  static SchemeId min_iam() { return {SchemeKind::min_iam, 0, 0}; }
  static SchemeId two_stage(std::size_t subgroup_size, std::size_t subgroup_count) {
    return {SchemeKind::two_stage, subgroup_size, subgroup_count};
  }
  static SchemeId random_baseline() { return {SchemeKind::random_baseline, 0, 0}; }
};

struct SelectionOutcome {
  std::size_t user_index = 0;
  CVec postprocess;
  double snr = 0.0;
  double inr = 0.0;
  double sinr = 0.0;
  double rate = 0.0;
  double rate_gain = 0.0;
  double rate_loss = 0.0;
};

/// Matched filter: the serving channel direction.
CVec mrc_vector(const UserChannelSet& u);

/// Least-excited eigenvector of an interference covariance.
CVec min_inr_vector(const HermitianMat& cov);

/// MMSE-IRC filter, the normalized solution of (I + R) v ~ h.
CVec mmse_irc_vector(const UserChannelSet& u);

/// SINR after projecting onto a unit-norm postprocess vector. Throws if v is
/// not unit norm to tolerance.
double postprocessed_sinr(const CVec& v, const UserChannelSet& u);

struct RateTerms {
  double rate = 0.0;
  double rate_gain = 0.0;
  double rate_loss = 0.0;
};

/// Rate and its gain/loss decomposition for a unit-norm postprocess vector:
/// rate_gain counts signal plus interference as if useful, rate_loss is the
/// interference-only penalty, and rate = rate_gain - rate_loss.
RateTerms rate_terms(const CVec& v, const UserChannelSet& u);

/// Index and value of the smallest alignment measure over a group, scanning
/// in index order (ties keep the earliest). A cheap dual bound prunes users
/// that provably cannot beat the running minimum, which leaves the result
/// identical to the exhaustive scan.
std::pair<std::size_t, double> min_iam_scan(std::span<const UserChannelSet> group);

/// Runs one selection scheme on a candidate group. Only the random baseline
/// consumes randomness. Score ties resolve to the lowest user index.
SelectionOutcome select(const SchemeId& scheme, std::span<const UserChannelSet> group, RngStream& rng);

/// Canonical scheme label, e.g. "max-sinr" or "two-stage:10:100".
std::string scheme_to_string(const SchemeId& scheme);

}  // namespace ibcsim
