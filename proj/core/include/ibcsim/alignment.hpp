#pragma once

#include <cstddef>
#include <span>

#include "ibcsim/numerics.hpp"
#include "ibcsim/rng.hpp"

namespace ibcsim {

/// Output of the alignment measure solver. lambda_star is the best feasible
/// value of max_k |c' g_k|^2 found over unit c; certified_gap is the distance
/// to the best dual lower bound, so 0 means a certificate of optimality up to
/// rounding.
struct AlignmentResult {
  double lambda_star = 0.0;
  CVec c_star;
  int iterations = 0;
  double certified_gap = 0.0;
};

/// Probability that m independent isotropic unit vectors all fall inside the
/// spherical cap of parameter lambda around a fixed direction.
double cap_containment_probability(double lambda, std::size_t rx_antennas, std::size_t vectors);

/// Interference alignment measure of a set of cross-link directions. Inputs
/// must be unit norm (see interferer_directions); the solver draws no
/// randomness, so identical inputs give identical outputs.
AlignmentResult iam(std::span<const CVec> interferers);

/// Best dual lower bound on the alignment measure after a fixed number of
/// multiplicative-weight ascent iterations. Every iterate is a valid bound,
/// so even very few iterations give a safe (if loose) value. Used both for
/// the optimality certificate and as a cheap prune when scanning a group for
/// its minimum.
double iam_dual_lower_bound(std::span<const CVec> interferers, int iterations);

/// Sampling-based reference estimate: `samples` isotropic random starts,
/// each refined by a short fixed subgradient descent, keeping the smallest
/// objective seen. Deliberately shares no code with iam(); slower and noisy
/// from above, it brackets the solver in tests.
double iam_oracle(std::span<const CVec> interferers, std::size_t samples, RngStream& rng);

/// Lower bound on the CDF of the alignment measure of a user facing
/// transmitters - 1 isotropic interferers. Requires transmitters > rx_antennas.
double iam_cdf_lower_bound(double lambda, std::size_t transmitters, std::size_t rx_antennas);

/// Upper bound on the expected minimum alignment measure over a group of
/// `users` independent users. Requires transmitters > rx_antennas.
double min_iam_expectation_bound(std::size_t users, std::size_t transmitters, std::size_t rx_antennas);

}  // namespace ibcsim
