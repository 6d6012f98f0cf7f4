#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "ibcsim/channel.hpp"
#include "ibcsim/rng.hpp"
#include "ibcsim/selection.hpp"

namespace ibcsim {

/// Multi-antenna setup: every transmitter radiates tx_antennas random
/// orthonormal beams with power/tx_antennas each, so a user sees
/// transmitters * tx_antennas - 1 single-antenna interferers.
struct MimoConfig {
  std::size_t transmitters = 1;
  std::size_t tx_antennas = 1;
  std::size_t rx_antennas = 1;
  std::size_t users = 1;
  double power = 1.0;
};

/// One selected user per beam of the evaluated transmitter; the same user
/// may win several beams. transmitter_rate sums the per-beam rates.
struct BeamUserAssignment {
  std::vector<SelectionOutcome> per_beam;
  double transmitter_rate = 0.0;
};

/// Effective single-antenna channel set of one user for one serving beam.
/// matrices[k] is the rx_antennas x tx_antennas channel from transmitter k
/// (k = 0 serving); beams[k] its beam set. Interferers are the serving
/// transmitter's other beams followed by every beam of the others, and the
/// power field carries the per-beam share.
UserChannelSet effective_channels(std::span<const CMat> matrices, std::span<const BeamSet> beams,
                                  std::size_t serving_beam, double total_power);

/// Draws one channel realization plus beams, then runs `scheme` once per
/// beam of transmitter 1 over all users' effective sets. With tx_antennas
/// equal to 1 the beam is the identity scalar and the whole path consumes
/// the stream exactly like the single-antenna pipeline.
BeamUserAssignment mimo_select_and_rate(const MimoConfig& cfg, const SchemeId& scheme, RngStream& rng);

}  // namespace ibcsim
