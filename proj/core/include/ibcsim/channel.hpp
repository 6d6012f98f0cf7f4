#pragma once

#include <cstddef>
#include <vector>

#include "ibcsim/numerics.hpp"
#include "ibcsim/rng.hpp"

namespace ibcsim {

/// Per-user channel state: the serving link plus cross links from every
/// other transmitter, and the transmit power applied on each link. The
/// interferer list may be empty (single active beam, no cross traffic).
struct UserChannelSet {
  CVec desired;
  std::vector<CVec> interferers;
  double power = 1.0;
};

/// i.i.d. CN(0,1) vector of length rx_antennas.
CVec sample_channel_vector(std::size_t rx_antennas, RngStream& rng);

/// Channels for a whole candidate group. Per user: serving vector first,
/// then the transmitters - 1 cross vectors in transmitter order.
std::vector<UserChannelSet> sample_user_group(std::size_t users, std::size_t transmitters,
                                              std::size_t rx_antennas, double power, RngStream& rng);

/// Covariance of the received interference, power * sum of cross-link outer
/// products. Zero matrix when there are no interferers.
HermitianMat interference_covariance(const UserChannelSet& u);

/// Unit-normalized interferer directions, as consumed by the alignment
/// measure. Throws on a zero cross link.
std::vector<CVec> interferer_directions(const UserChannelSet& u);

/// rows x cols matrix of i.i.d. CN(0,1) entries, drawn column by column so a
/// one-column matrix consumes the stream exactly like a channel vector.
CMat sample_channel_matrix(std::size_t rows, std::size_t cols, RngStream& rng);

/// Orthonormal transmit beams distributed by the invariant (Haar) measure,
/// produced by Gram-Schmidt on a square Gaussian matrix.
struct BeamSet {
  std::vector<CVec> beams;
};

BeamSet sample_haar_beams(std::size_t tx_antennas, RngStream& rng);

}  // namespace ibcsim
