#include "ibcsim/mimo.hpp"

#include <stdexcept>

namespace ibcsim {

namespace {

CVec beam_through(const CMat& h, const CVec& beam) { return h.apply(beam); }

void validate(const MimoConfig& cfg) {
  if (cfg.transmitters == 0 || cfg.tx_antennas == 0 || cfg.rx_antennas == 0 || cfg.users == 0)
    throw std::invalid_argument("mimo: all counts must be positive");
  if (!(cfg.power > 0.0)) throw std::invalid_argument("mimo: power must be positive");
  if (cfg.transmitters * cfg.tx_antennas < 1) throw std::invalid_argument("mimo: no transmit streams");
}

BeamSet identity_beam() {
  BeamSet b;
  b.beams.push_back(CVec{cxd(1.0, 0.0)});
  return b;
}

}  // namespace

UserChannelSet effective_channels(std::span<const CMat> matrices, std::span<const BeamSet> beams,
                                  std::size_t serving_beam, double total_power) {
  if (matrices.empty() || matrices.size() != beams.size())
    throw std::invalid_argument("effective_channels: need one beam set per transmitter");
  const std::size_t n_r = matrices[0].rows();
  const std::size_t n_t = matrices[0].cols();
  if (serving_beam >= n_t) throw std::invalid_argument("effective_channels: serving beam out of range");
  for (std::size_t k = 0; k < matrices.size(); ++k) {
    if (matrices[k].rows() != n_r || matrices[k].cols() != n_t || beams[k].beams.size() != n_t)
      throw std::invalid_argument("effective_channels: inconsistent shapes");
    for (const CVec& u : beams[k].beams)
      if (u.dim() != n_t) throw std::invalid_argument("effective_channels: inconsistent shapes");
  }
  if (!(total_power > 0.0)) throw std::invalid_argument("effective_channels: power must be positive");

  UserChannelSet out;
  out.power = total_power / double(n_t);
  out.desired = beam_through(matrices[0], beams[0].beams[serving_beam]);
  out.interferers.reserve(matrices.size() * n_t - 1);
  for (std::size_t k = 0; k < matrices.size(); ++k)
    for (std::size_t j = 0; j < n_t; ++j) {
      if (k == 0 && j == serving_beam) continue;
      out.interferers.push_back(beam_through(matrices[k], beams[k].beams[j]));
    }
  return out;
}

BeamUserAssignment mimo_select_and_rate(const MimoConfig& cfg, const SchemeId& scheme, RngStream& rng) {
  validate(cfg);
  const std::size_t K = cfg.transmitters, n_t = cfg.tx_antennas, n_r = cfg.rx_antennas;

  // One channel draw shared by all beams: per user, the matrix from each
  // transmitter, serving transmitter first.
  std::vector<std::vector<CMat>> h(cfg.users);
  for (std::size_t n = 0; n < cfg.users; ++n) {
    h[n].reserve(K);
    for (std::size_t k = 0; k < K; ++k) h[n].push_back(sample_channel_matrix(n_r, n_t, rng));
  }

  // The single-beam case keeps the stream identical to the plain pipeline,
  // so the identity beam stands in for a (physically irrelevant) Haar phase.
  std::vector<BeamSet> beams;
  beams.reserve(K);
  for (std::size_t k = 0; k < K; ++k)
    beams.push_back(n_t == 1 ? identity_beam() : sample_haar_beams(n_t, rng));

  BeamUserAssignment out;
  out.per_beam.reserve(n_t);
  for (std::size_t i = 0; i < n_t; ++i) {
    std::vector<UserChannelSet> group;
    group.reserve(cfg.users);
    for (std::size_t n = 0; n < cfg.users; ++n)
      group.push_back(effective_channels(h[n], beams, i, cfg.power));
    SelectionOutcome sel = select(scheme, group, rng);
    out.transmitter_rate += sel.rate;
    out.per_beam.push_back(std::move(sel));
  }
  return out;
}

}  // namespace ibcsim
