#include "ibcsim/channel.hpp"

#include <stdexcept>

namespace ibcsim {

CVec sample_channel_vector(std::size_t rx_antennas, RngStream& rng) {
  if (rx_antennas == 0) throw std::invalid_argument("sample_channel_vector: rx_antennas must be positive");
  CVec h(rx_antennas);
  for (std::size_t i = 0; i < rx_antennas; ++i) h[i] = rng.complex_gaussian();
  return h;
}

std::vector<UserChannelSet> sample_user_group(std::size_t users, std::size_t transmitters,
                                              std::size_t rx_antennas, double power, RngStream& rng) {
  if (users == 0) throw std::invalid_argument("sample_user_group: users must be positive");
  if (transmitters < 2) throw std::invalid_argument("sample_user_group: need at least two transmitters");
  if (!(power > 0.0)) throw std::invalid_argument("sample_user_group: power must be positive");

  std::vector<UserChannelSet> group;
  group.reserve(users);
  for (std::size_t n = 0; n < users; ++n) {
    UserChannelSet u;
    u.power = power;
    u.desired = sample_channel_vector(rx_antennas, rng);
    u.interferers.reserve(transmitters - 1);
    for (std::size_t k = 1; k < transmitters; ++k)
      u.interferers.push_back(sample_channel_vector(rx_antennas, rng));
    group.push_back(std::move(u));
  }
  return group;
}

HermitianMat interference_covariance(const UserChannelSet& u) {
  HermitianMat r(u.desired.dim());
  for (const CVec& h : u.interferers) {
    if (h.dim() != u.desired.dim())
      throw std::invalid_argument("interference_covariance: inconsistent antenna counts");
    r.add_scaled_outer(h, u.power);
  }
  return r;
}

std::vector<CVec> interferer_directions(const UserChannelSet& u) {
  std::vector<CVec> dirs;
  dirs.reserve(u.interferers.size());
  for (const CVec& h : u.interferers) dirs.push_back(normalized(h));
  return dirs;
}

CMat sample_channel_matrix(std::size_t rows, std::size_t cols, RngStream& rng) {
  if (rows == 0 || cols == 0) throw std::invalid_argument("sample_channel_matrix: empty shape");
  CMat h(rows, cols);
  for (std::size_t j = 0; j < cols; ++j)
    for (std::size_t i = 0; i < rows; ++i) h(i, j) = rng.complex_gaussian();
  return h;
}

BeamSet sample_haar_beams(std::size_t tx_antennas, RngStream& rng) {
  if (tx_antennas == 0) throw std::invalid_argument("sample_haar_beams: tx_antennas must be positive");
  const std::size_t n = tx_antennas;
  CMat g = sample_channel_matrix(n, n, rng);

  BeamSet out;
  out.beams.reserve(n);
  for (std::size_t j = 0; j < n; ++j) {
    CVec w = g.column(j);
    // Two Gram-Schmidt passes; the repeat keeps orthogonality near machine
    // precision even for ill-conditioned draws. The normalization divides by
    // a real positive scalar, which is exactly the phase convention that
    // makes the resulting frame Haar distributed.
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t i = 0; i < j; ++i) {
        const cxd proj = dot(out.beams[i], w);
        for (std::size_t r = 0; r < n; ++r) w[r] -= proj * out.beams[i][r];
      }
    }
    out.beams.push_back(normalized(w));
  }
  return out;
}

}  // namespace ibcsim
