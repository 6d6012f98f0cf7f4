#include "ibcsim/alignment.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace ibcsim {

namespace {

constexpr std::size_t kMaxDim = 16;
constexpr std::size_t kMaxVecs = 64;

constexpr int kStageIters = 200;
constexpr double kStageMuHi = 0.25, kStageMuLo = 1e-4;
constexpr double kStageEtaHi = 0.5, kStageEtaLo = 0.05;
constexpr int kPolishIters = 120;
constexpr double kPolishMuHi = 3e-5, kPolishMuLo = 3e-9;
constexpr double kPolishEtaHi = 0.02, kPolishEtaLo = 2e-5;
constexpr int kDualIters = 80;
constexpr std::size_t kMaxSubsetStarts = 40;
constexpr std::size_t kMaxPairStarts = 48;
constexpr std::size_t kMaxCand = 96;
constexpr std::size_t kPgdStarts = 6;
constexpr int kNewtonIters = 40;
constexpr std::size_t kNewtonPoints = 3;
constexpr int kCrudeSteps = 50;
constexpr std::size_t kEscStarts = 96;

/// Normalized interferer directions in flat storage, one row per vector.
struct Flat {
  std::size_t m = 0, n = 0;
  std::array<cxd, kMaxVecs * kMaxDim> g;

  const cxd* row(std::size_t k) const { return g.data() + k * n; }
};

void load_normalized(std::span<const CVec> interferers, Flat& fl) {
  if (interferers.empty()) throw std::invalid_argument("iam: need at least one interferer");
  if (interferers.size() > kMaxVecs) throw std::invalid_argument("iam: too many interferers");
  fl.m = interferers.size();
  fl.n = interferers[0].dim();
  if (fl.n == 0 || fl.n > kMaxDim) throw std::invalid_argument("iam: bad vector dimension");
  for (std::size_t k = 0; k < fl.m; ++k) {
    const CVec& h = interferers[k];
    if (h.dim() != fl.n) throw std::invalid_argument("iam: inconsistent dimensions");
    double nn = 0.0;
    for (std::size_t j = 0; j < fl.n; ++j) nn += std::norm(h[j]);
    if (!(std::abs(nn - 1.0) <= 1e-9)) throw std::invalid_argument("iam: interferer not unit norm");
    // Rescale anyway so downstream algebra sees norms exact to rounding.
    const double inv = 1.0 / std::sqrt(nn);
    for (std::size_t j = 0; j < fl.n; ++j) fl.g[k * fl.n + j] = h[j] * inv;
  }
}

double exact_objective(const Flat& fl, const cxd* c) {
  double best = 0.0;
  for (std::size_t k = 0; k < fl.m; ++k) {
    const cxd* gk = fl.row(k);
    cxd z = 0.0;
    for (std::size_t j = 0; j < fl.n; ++j) z += std::conj(gk[j]) * c[j];
    best = std::max(best, std::norm(z));
  }
  return best;
}

/// a = sum_k w_k g_k g_k'; null weights mean all ones.
void build_weighted(const Flat& fl, const double* w, cxd* a) {
  const std::size_t n = fl.n;
  std::fill(a, a + n * n, cxd(0.0));
  for (std::size_t k = 0; k < fl.m; ++k) {
    const double wk = w ? w[k] : 1.0;
    if (wk == 0.0) continue;
    const cxd* gk = fl.row(k);
    for (std::size_t i = 0; i < n; ++i) {
      a[i * n + i] += cxd(wk * std::norm(gk[i]), 0.0);
      for (std::size_t j = i + 1; j < n; ++j) {
        const cxd u = wk * (gk[i] * std::conj(gk[j]));
        a[i * n + j] += u;
        a[j * n + i] += std::conj(u);
      }
    }
  }
}

/// Destroys a. Returns the smallest eigenvalue, writes its eigenvector.
double min_eigpair(cxd* a, std::size_t n, cxd* vmin) {
  std::array<double, kMaxDim> evals;
  std::array<cxd, kMaxDim * kMaxDim> vecs;
  detail::jacobi_hermitian(a, n, evals.data(), vecs.data());
  for (std::size_t j = 0; j < n; ++j) vmin[j] = vecs[(n - 1) * n + j];
  return evals[n - 1];
}

void renormalize(cxd* c, std::size_t n) {
  double nn = 0.0;
  for (std::size_t j = 0; j < n; ++j) nn += std::norm(c[j]);
  const double inv = 1.0 / std::sqrt(nn);
  for (std::size_t j = 0; j < n; ++j) c[j] *= inv;
}

/// Deterministic tangent-space nudge used when an iterate lands exactly on a
/// stationary saddle (gradient identically zero); pattern varies with the
/// attempt index so repeated kicks explore different directions.
void saddle_kick(cxd* c, std::size_t n, int attempt) {
  std::array<cxd, kMaxDim> p;
  for (std::size_t j = 0; j < n; ++j)
    p[j] = cxd(std::cos(1.7 * double(j) + 0.9 + attempt), std::sin(2.3 * double(j) + 0.4 + 2.0 * attempt));
  cxd along = 0.0;
  for (std::size_t j = 0; j < n; ++j) along += std::conj(c[j]) * p[j];
  double nn = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    p[j] -= along * c[j];
    nn += std::norm(p[j]);
  }
  if (!(nn > 1e-30)) return;
  const double scale = 1e-4 / std::sqrt(nn);
  for (std::size_t j = 0; j < n; ++j) c[j] += scale * p[j];
  renormalize(c, n);
}

struct BestPoint {
  double f = 2.0;  // objective never exceeds 1 for unit inputs
  std::array<cxd, kMaxDim> c{};
};

void offer(BestPoint& best, const Flat& fl, const cxd* c) {
  const double f = exact_objective(fl, c);
  if (f < best.f) {
    best.f = f;
    std::copy(c, c + fl.n, best.c.begin());
  }
}

/// Smoothed minimax descent: gradient steps on the softmax envelope of the
/// per-interferer overlaps, with the temperature annealed from mu_hi to
/// mu_lo. Tracks the exact objective of every iterate. Returns iterations
/// actually spent.
int smoothed_descent(const Flat& fl, cxd* c, int iters, double mu_hi, double mu_lo, double eta_hi,
                     double eta_lo, BestPoint& best) {
  const std::size_t m = fl.m, n = fl.n;
  std::array<cxd, kMaxVecs> z;
  std::array<double, kMaxVecs> f;
  std::array<double, kMaxVecs> w;
  std::array<cxd, kMaxDim> d;

  int kicks = 0, stall = 0, used = 0;
  for (int t = 0; t < iters; ++t) {
    ++used;
    const double frac = iters > 1 ? double(t) / double(iters - 1) : 0.0;
    const double mu = mu_hi * std::pow(mu_lo / mu_hi, frac);
    const double eta = eta_hi * std::pow(eta_lo / eta_hi, frac);

    double big = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      const cxd* gk = fl.row(k);
      cxd zk = 0.0;
      for (std::size_t j = 0; j < n; ++j) zk += std::conj(gk[j]) * c[j];
      z[k] = zk;
      f[k] = std::norm(zk);
      big = std::max(big, f[k]);
    }
    if (big < best.f) {
      best.f = big;
      std::copy(c, c + n, best.c.begin());
      stall = 0;
    } else {
      ++stall;
    }
    if (stall > 24 && 4 * t > 3 * iters) break;

    double sum = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      const double e = (f[k] - big) / mu;
      w[k] = e < -45.0 ? 0.0 : std::exp(e);
      sum += w[k];
    }

    std::fill(d.begin(), d.begin() + n, cxd(0.0));
    for (std::size_t k = 0; k < m; ++k) {
      if (w[k] == 0.0) continue;
      const double wk = w[k] / sum;
      const cxd* gk = fl.row(k);
      const cxd wz = wk * z[k];
      for (std::size_t j = 0; j < n; ++j) d[j] += wz * gk[j];
    }
    double rho = 0.0;
    for (std::size_t j = 0; j < n; ++j) rho += (std::conj(c[j]) * d[j]).real();
    double rn2 = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      d[j] -= rho * c[j];
      rn2 += std::norm(d[j]);
    }
    if (rn2 < 1e-24) {
      if (kicks >= 2) break;
      saddle_kick(c, n, kicks++);
      continue;
    }
    for (std::size_t j = 0; j < n; ++j) c[j] -= eta * d[j];
    renormalize(c, n);
  }
  return used;
}

/// Multiplicative-weights ascent on the dual: every iterate's smallest
/// weighted-covariance eigenvalue is a valid lower bound on the measure, and
/// the matching eigenvector doubles as a primal candidate. Optionally reports
/// the time-averaged weights, a stable center of the dual trajectory.
template <typename PrimalCb>
double dual_ascent_impl(const Flat& fl, int iters, PrimalCb&& primal_cb, int* used_out,
                        double* avg_out = nullptr) {
  const std::size_t m = fl.m, n = fl.n;
  std::array<double, kMaxVecs> w;
  std::array<double, kMaxVecs> s;
  std::array<cxd, kMaxDim * kMaxDim> a;
  std::array<cxd, kMaxDim> vmin;

  std::fill(w.begin(), w.begin() + m, 1.0 / double(m));
  if (avg_out) std::fill(avg_out, avg_out + m, 0.0);
  double best = 0.0;
  int stall = 0, used = 0;
  for (int t = 0; t < iters; ++t) {
    ++used;
    build_weighted(fl, w.data(), a.data());
    const double lam = min_eigpair(a.data(), n, vmin.data());
    primal_cb(vmin.data());
    const double prev = best;
    best = std::max(best, lam);
    if (best > prev + 1e-13 * (1.0 + prev)) stall = 0; else ++stall;
    if (avg_out)
      for (std::size_t k = 0; k < m; ++k) avg_out[k] += w[k];
    if (stall > 14) break;

    double smax = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      const cxd* gk = fl.row(k);
      cxd zk = 0.0;
      for (std::size_t j = 0; j < n; ++j) zk += std::conj(gk[j]) * vmin[j];
      s[k] = std::norm(zk);
      smax = std::max(smax, s[k]);
    }
    const double eta = 1.6 / std::sqrt(1.0 + double(t));
    double sum = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      w[k] *= std::exp(eta * (s[k] - smax));
      sum += w[k];
    }
    for (std::size_t k = 0; k < m; ++k) w[k] /= sum;
  }
  if (used_out) *used_out = used;
  if (avg_out) {
    double sum = 0.0;
    for (std::size_t k = 0; k < m; ++k) sum += avg_out[k];
    if (sum > 0.0)
      for (std::size_t k = 0; k < m; ++k) avg_out[k] /= sum;
  }
  return best;
}

/// Orthogonal-complement starts: for subsets of rx_antennas - 1 interferers,
/// the least-excited direction of the subset covariance nulls the subset
/// exactly. Also adds the least-excited direction of the full covariance and
/// a balanced average of the subset starts.
std::size_t build_candidates(const Flat& fl, std::array<cxd, kMaxDim>* cand, std::size_t cap) {
  const std::size_t m = fl.m, n = fl.n;
  std::size_t count = 0;

  std::array<cxd, kMaxDim * kMaxDim> a;
  std::array<cxd, kMaxDim> acc{};

  const std::size_t pick = n - 1;
  if (pick >= 1 && pick <= m) {
    std::array<std::size_t, kMaxDim> idx;
    for (std::size_t i = 0; i < pick; ++i) idx[i] = i;
    while (count + 2 < cap && count < kMaxSubsetStarts) {
      std::fill(a.begin(), a.begin() + n * n, cxd(0.0));
      for (std::size_t i = 0; i < pick; ++i) {
        const cxd* gk = fl.row(idx[i]);
        for (std::size_t r = 0; r < n; ++r) {
          a[r * n + r] += cxd(std::norm(gk[r]), 0.0);
          for (std::size_t cc = r + 1; cc < n; ++cc) {
            const cxd u = gk[r] * std::conj(gk[cc]);
            a[r * n + cc] += u;
            a[cc * n + r] += std::conj(u);
          }
        }
      }
      min_eigpair(a.data(), n, cand[count].data());
      for (std::size_t j = 0; j < n; ++j) acc[j] += cand[count][j];
      ++count;

      // next lexicographic subset
      std::size_t pos = pick;
      bool done = true;
      while (pos > 0) {
        --pos;
        if (idx[pos] != pos + m - pick) {
          done = false;
          break;
        }
      }
      if (done) break;
      ++idx[pos];
      for (std::size_t i = pos + 1; i < pick; ++i) idx[i] = idx[i - 1] + 1;
    }
  }

  if (count + 1 < cap) {
    build_weighted(fl, nullptr, a.data());
    min_eigpair(a.data(), n, cand[count].data());
    ++count;
  }

  if (count < cap) {
    double nn = 0.0;
    for (std::size_t j = 0; j < n; ++j) nn += std::norm(acc[j]);
    if (nn > 1e-12) {
      const double inv = 1.0 / std::sqrt(nn);
      for (std::size_t j = 0; j < n; ++j) cand[count][j] = acc[j] * inv;
      ++count;
    }
  }
  return count;
}

/// Balanced minimax point of a single pair inside its span: for unit g_i,
/// g_j with overlap magnitude rho, the value (1 - rho) / 2 is attained at a
/// closed-form direction. Exact for two-vector active sets, a strong start
/// otherwise.
std::size_t append_pair_candidates(const Flat& fl, std::array<cxd, kMaxDim>* cand, std::size_t count,
                                   std::size_t cap) {
  const std::size_t m = fl.m, n = fl.n;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < m && count < cap && pairs < kMaxPairStarts; ++i) {
    for (std::size_t j = i + 1; j < m && count < cap && pairs < kMaxPairStarts; ++j) {
      const cxd* gi = fl.row(i);
      const cxd* gj = fl.row(j);
      cxd alpha = 0.0;
      for (std::size_t r = 0; r < n; ++r) alpha += std::conj(gi[r]) * gj[r];
      std::array<cxd, kMaxDim> u2;
      double nn = 0.0;
      for (std::size_t r = 0; r < n; ++r) {
        u2[r] = gj[r] - alpha * gi[r];
        nn += std::norm(u2[r]);
      }
      if (nn < 1e-18) continue;
      const double rho = std::abs(alpha);
      const double binv = 1.0 / std::sqrt(nn);
      const double t = std::sqrt(std::max(0.0, 1.0 - rho) / 2.0);
      const double s = std::sqrt((1.0 + rho) / 2.0);
      const cxd phase = rho > 1e-15 ? alpha / rho : cxd(1.0, 0.0);
      double cn = 0.0;
      for (std::size_t r = 0; r < n; ++r) {
        cand[count][r] = t * gi[r] - s * phase * (u2[r] * binv);
        cn += std::norm(cand[count][r]);
      }
      const double ci = 1.0 / std::sqrt(cn);
      for (std::size_t r = 0; r < n; ++r) cand[count][r] *= ci;
      ++count;
      ++pairs;
    }
  }
  return count;
}

/// Reduced search over the span of the two least-excited eigenvectors of the
/// weighted covariance. Unit vectors of that plane form a real 2-sphere, so a
/// coarse latitude/longitude sweep reliably lands in the right basin.
std::size_t append_bloch_candidate(const Flat& fl, const double* w, std::array<cxd, kMaxDim>* cand,
                                   std::size_t count, std::size_t cap) {
  const std::size_t m = fl.m, n = fl.n;
  if (n < 2 || count >= cap) return count;

  std::array<cxd, kMaxDim * kMaxDim> a;
  std::array<double, kMaxDim> evals;
  std::array<cxd, kMaxDim * kMaxDim> vecs;
  build_weighted(fl, w, a.data());
  detail::jacobi_hermitian(a.data(), n, evals.data(), vecs.data());
  const cxd* v2 = vecs.data() + (n - 2) * n;
  const cxd* v3 = vecs.data() + (n - 1) * n;

  std::array<cxd, 2 * kMaxVecs> b;
  for (std::size_t k = 0; k < m; ++k) {
    const cxd* gk = fl.row(k);
    cxd b0 = 0.0, b1 = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      b0 += std::conj(v3[r]) * gk[r];
      b1 += std::conj(v2[r]) * gk[r];
    }
    b[2 * k] = b0;
    b[2 * k + 1] = b1;
  }

  double best_f = 2.0;
  cxd best_y0 = 1.0, best_y1 = 0.0;
  constexpr int kTheta = 16, kPhi = 32;
  for (int it = 0; it < kTheta; ++it) {
    const double half = (double(it) + 0.5) * (3.14159265358979323846 / (2.0 * kTheta));
    const double c0 = std::cos(half), s0 = std::sin(half);
    for (int ip = 0; ip < kPhi; ++ip) {
      const double phi = double(ip) * (2.0 * 3.14159265358979323846 / kPhi);
      const cxd y0(c0, 0.0);
      const cxd y1 = std::polar(s0, phi);
      double f = 0.0;
      for (std::size_t k = 0; k < m; ++k)
        f = std::max(f, std::norm(std::conj(b[2 * k]) * y0 + std::conj(b[2 * k + 1]) * y1));
      if (f < best_f) {
        best_f = f;
        best_y0 = y0;
        best_y1 = y1;
      }
    }
  }
  for (std::size_t r = 0; r < n; ++r) cand[count][r] = best_y0 * v3[r] + best_y1 * v2[r];
  renormalize(cand[count].data(), n);
  return count + 1;
}

/// In-place Cholesky solve of a small dense symmetric positive definite
/// system. Returns false when a pivot collapses.
bool solve_spd_inplace(double* a, double* b, std::size_t dim) {
  for (std::size_t i = 0; i < dim; ++i) {
    double d = a[i * dim + i];
    for (std::size_t k = 0; k < i; ++k) d -= a[i * dim + k] * a[i * dim + k];
    if (!(d > 0.0)) return false;
    const double root = std::sqrt(d);
    a[i * dim + i] = root;
    for (std::size_t j = i + 1; j < dim; ++j) {
      double v = a[j * dim + i];
      for (std::size_t k = 0; k < i; ++k) v -= a[j * dim + k] * a[i * dim + k];
      a[j * dim + i] = v / root;
    }
  }
  for (std::size_t i = 0; i < dim; ++i) {
    double v = b[i];
    for (std::size_t k = 0; k < i; ++k) v -= a[i * dim + k] * b[k];
    b[i] = v / a[i * dim + i];
  }
  for (std::size_t ii = dim; ii-- > 0;) {
    double v = b[ii];
    for (std::size_t k = ii + 1; k < dim; ++k) v -= a[k * dim + ii] * b[k];
    b[ii] = v / a[ii * dim + ii];
  }
  return true;
}

struct KktPoint {
  bool converged = false;
  double lambda = 0.0;
  int iterations = 0;
  std::array<double, kMaxVecs> weights{};  // full length, simplex when converged
};

/// Newton refinement of a balanced stationary point: drives the overlaps of
/// the caller-chosen active set to exact equality with the stationarity and
/// unit-norm conditions. On success the iterate is balanced to machine
/// precision and the clamped weights certify a dual lower bound.
KktPoint newton_equalize(const Flat& fl, cxd* c, const std::size_t* act, std::size_t a) {
  const std::size_t m = fl.m, n = fl.n;
  KktPoint out;
  if (a < 2) return out;

  std::array<double, kMaxVecs> f;
  std::array<cxd, kMaxVecs> z;
  auto overlaps = [&](const cxd* cc) {
    for (std::size_t k = 0; k < m; ++k) {
      const cxd* gk = fl.row(k);
      cxd zk = 0.0;
      for (std::size_t j = 0; j < n; ++j) zk += std::conj(gk[j]) * cc[j];
      z[k] = zk;
      f[k] = std::norm(zk);
    }
  };

  overlaps(c);
  double lam = 0.0;
  for (std::size_t k = 0; k < m; ++k) lam = std::max(lam, f[k]);
  if (!(lam > 1e-14)) return out;

  std::array<double, kMaxVecs> w;
  std::fill(w.begin(), w.begin() + a, 1.0 / double(a));

  constexpr std::size_t kRowCap = 2 * kMaxDim + kMaxVecs + 2;
  constexpr std::size_t kColCap = 2 * kMaxDim + kMaxVecs + 1;
  std::array<double, kRowCap * kColCap> jac;
  std::array<double, kRowCap> res;
  std::array<double, kColCap * kColCap> nrm;
  std::array<double, kColCap * kColCap> work;
  std::array<double, kColCap> rhs;
  std::array<double, kColCap> step;
  std::array<cxd, kMaxDim> trial;
  std::array<cxd, kMaxDim * kMaxDim> mw;

  auto residual_norm = [&](const cxd* cc, const double* ww, double ll, double* worst) {
    overlaps(cc);
    std::array<cxd, kMaxDim> stat;
    std::fill(stat.begin(), stat.begin() + n, cxd(0.0));
    for (std::size_t i = 0; i < a; ++i) {
      const std::size_t k = act[i];
      const cxd* gk = fl.row(k);
      for (std::size_t j = 0; j < n; ++j) stat[j] += ww[i] * z[k] * gk[j];
    }
    double nn = 0.0, acc = 0.0, winf = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const cxd r = stat[j] - ll * cc[j];
      acc += std::norm(r);
      winf = std::max({winf, std::abs(r.real()), std::abs(r.imag())});
      nn += std::norm(cc[j]);
    }
    for (std::size_t i = 0; i < a; ++i) {
      const double r = f[act[i]] - ll;
      acc += r * r;
      winf = std::max(winf, std::abs(r));
    }
    const double rn = nn - 1.0;
    acc += rn * rn;
    winf = std::max(winf, std::abs(rn));
    if (worst) *worst = winf;
    return std::sqrt(acc);
  };

  double worst = 0.0;
  double fnorm = residual_norm(c, w.data(), lam, &worst);
  double damping = 1e-12;

  for (int it = 0; it < kNewtonIters; ++it) {
    ++out.iterations;
    if (worst <= 1e-13) break;

    overlaps(c);
    const std::size_t rows = 2 * n + a + 2;
    const std::size_t cols = 2 * n + a + 1;
    std::fill(jac.begin(), jac.begin() + rows * cols, 0.0);
    std::fill(res.begin(), res.begin() + rows, 0.0);

    // weighted covariance over the active set
    std::fill(mw.begin(), mw.begin() + n * n, cxd(0.0));
    for (std::size_t i = 0; i < a; ++i) {
      const cxd* gk = fl.row(act[i]);
      for (std::size_t r = 0; r < n; ++r)
        for (std::size_t cc2 = 0; cc2 < n; ++cc2) mw[r * n + cc2] += w[i] * gk[r] * std::conj(gk[cc2]);
    }

    // stationarity rows
    for (std::size_t r = 0; r < n; ++r) {
      cxd sr = -lam * c[r];
      for (std::size_t cc2 = 0; cc2 < n; ++cc2) sr += mw[r * n + cc2] * c[cc2];
      res[2 * r] = sr.real();
      res[2 * r + 1] = sr.imag();
      for (std::size_t cc2 = 0; cc2 < n; ++cc2) {
        const cxd e = mw[r * n + cc2] - (r == cc2 ? cxd(lam, 0.0) : cxd(0.0));
        // derivative wrt Re(c_cc2) and Im(c_cc2)
        jac[(2 * r) * cols + 2 * cc2] = e.real();
        jac[(2 * r) * cols + 2 * cc2 + 1] = -e.imag();
        jac[(2 * r + 1) * cols + 2 * cc2] = e.imag();
        jac[(2 * r + 1) * cols + 2 * cc2 + 1] = e.real();
      }
      for (std::size_t i = 0; i < a; ++i) {
        const cxd gz = fl.row(act[i])[r] * z[act[i]];
        jac[(2 * r) * cols + 2 * n + i] = gz.real();
        jac[(2 * r + 1) * cols + 2 * n + i] = gz.imag();
      }
      jac[(2 * r) * cols + 2 * n + a] = -c[r].real();
      jac[(2 * r + 1) * cols + 2 * n + a] = -c[r].imag();
    }

    // equalization rows
    for (std::size_t i = 0; i < a; ++i) {
      const std::size_t row = 2 * n + i;
      res[row] = f[act[i]] - lam;
      const cxd* gk = fl.row(act[i]);
      for (std::size_t j = 0; j < n; ++j) {
        const cxd gz = gk[j] * z[act[i]];
        jac[row * cols + 2 * j] = 2.0 * gz.real();
        jac[row * cols + 2 * j + 1] = 2.0 * gz.imag();
      }
      jac[row * cols + 2 * n + a] = -1.0;
    }

    // unit norm row
    {
      const std::size_t row = 2 * n + a;
      double nn = 0.0;
      for (std::size_t j = 0; j < n; ++j) nn += std::norm(c[j]);
      res[row] = nn - 1.0;
      for (std::size_t j = 0; j < n; ++j) {
        jac[row * cols + 2 * j] = 2.0 * c[j].real();
        jac[row * cols + 2 * j + 1] = 2.0 * c[j].imag();
      }
    }

    // phase gauge row, residual zero
    {
      const std::size_t row = 2 * n + a + 1;
      for (std::size_t j = 0; j < n; ++j) {
        jac[row * cols + 2 * j] = -c[j].imag();
        jac[row * cols + 2 * j + 1] = c[j].real();
      }
    }

    // normal equations; the system is rank-deficient at stationary points,
    // so take Levenberg-Marquardt steps: raise the damping until a full step
    // reduces the residual, relax it again on success
    std::fill(nrm.begin(), nrm.begin() + cols * cols, 0.0);
    std::fill(rhs.begin(), rhs.begin() + cols, 0.0);
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t i = 0; i < cols; ++i) {
        const double jri = jac[r * cols + i];
        if (jri == 0.0) continue;
        rhs[i] -= jri * res[r];
        for (std::size_t j = i; j < cols; ++j) nrm[i * cols + j] += jri * jac[r * cols + j];
      }
    }
    double tr = 0.0;
    for (std::size_t i = 0; i < cols; ++i) tr += nrm[i * cols + i];
    const double scale = tr / double(cols) + 1e-300;

    bool accepted = false;
    for (int attempt = 0; attempt < 10 && !accepted; ++attempt) {
      for (std::size_t i = 0; i < cols; ++i) {
        work[i * cols + i] = nrm[i * cols + i] + damping * scale;
        for (std::size_t j = i + 1; j < cols; ++j) {
          work[i * cols + j] = nrm[i * cols + j];
          work[j * cols + i] = nrm[i * cols + j];
        }
      }
      std::copy(rhs.begin(), rhs.begin() + cols, step.begin());
      if (!solve_spd_inplace(work.data(), step.data(), cols)) {
        damping *= 10.0;
        continue;
      }
      for (std::size_t j = 0; j < n; ++j) trial[j] = c[j] + cxd(step[2 * j], step[2 * j + 1]);
      std::array<double, kMaxVecs> wt;
      for (std::size_t i = 0; i < a; ++i) wt[i] = w[i] + step[2 * n + i];
      const double lt = lam + step[2 * n + a];
      double tw = 0.0;
      const double tf = residual_norm(trial.data(), wt.data(), lt, &tw);
      if (tf < fnorm) {
        std::copy(trial.begin(), trial.begin() + n, c);
        std::copy(wt.begin(), wt.begin() + a, w.begin());
        lam = lt;
        fnorm = tf;
        worst = tw;
        accepted = true;
      } else {
        damping *= 10.0;
      }
    }
    // stalling at the numerical floor is fine; the final gate decides
    if (!accepted) break;
    damping = std::max(damping * 0.25, 1e-12);
  }

  if (!(worst <= 1e-11)) return out;
  renormalize(c, n);
  out.converged = true;
  out.lambda = lam;
  std::fill(out.weights.begin(), out.weights.begin() + m, 0.0);
  double sum = 0.0;
  for (std::size_t i = 0; i < a; ++i) {
    const double wi = std::max(w[i], 0.0);
    out.weights[act[i]] = wi;
    sum += wi;
  }
  if (sum > 0.0)
    for (std::size_t k = 0; k < m; ++k) out.weights[k] /= sum;
  else
    out.converged = false;
  return out;
}

/// Cheap exact-max subgradient descent used to settle a raw start into its
/// basin; tracks the best iterate seen.
void crude_descent(const Flat& fl, cxd* c, BestPoint& local) {
  const std::size_t m = fl.m, n = fl.n;
  double eta = 0.35;
  for (int step = 0; step <= kCrudeSteps; ++step) {
    double big = -1.0;
    std::size_t kstar = 0;
    cxd zstar = 0.0;
    for (std::size_t k = 0; k < m; ++k) {
      const cxd* gk = fl.row(k);
      cxd z = 0.0;
      for (std::size_t j = 0; j < n; ++j) z += std::conj(gk[j]) * c[j];
      const double f = std::norm(z);
      if (f > big) {
        big = f;
        kstar = k;
        zstar = z;
      }
    }
    if (big < local.f) {
      local.f = big;
      std::copy(c, c + n, local.c.begin());
    }
    if (step == kCrudeSteps) break;
    const cxd* gs = fl.row(kstar);
    double nn = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      c[j] -= eta * (zstar * gs[j] - big * c[j]);
      nn += std::norm(c[j]);
    }
    const double inv = 1.0 / std::sqrt(nn);
    for (std::size_t j = 0; j < n; ++j) c[j] *= inv;
    eta *= 0.92;
  }
}

/// Newton-refine the leading distinct endpoints. The active set at the
/// minimum is unknown, so every prefix of the endpoint's overlaps in
/// decreasing order is tried (plus a swap variant when the prefix boundary
/// is nearly tied, since an inexact endpoint can misorder the constraint
/// that is actually active); a converged point is balanced to machine
/// precision and its weights feed back a dual bound, so at a regular global
/// minimum the certified gap collapses to rounding and the sweep stops.
void newton_refine_ends(const Flat& fl, BestPoint* ends, std::size_t n_ends, BestPoint& best,
                        double& lower, int& iterations) {
  const std::size_t m = fl.m, n = fl.n;
  std::stable_sort(ends, ends + n_ends,
                   [](const BestPoint& x, const BestPoint& y) { return x.f < y.f; });
  std::array<cxd, kMaxDim> c;
  std::array<cxd, kMaxDim * kMaxDim> a;
  std::array<cxd, kMaxDim> scratch;
  std::array<double, kMaxVecs> fe;
  std::array<std::size_t, kMaxVecs> ord;
  const std::size_t amax = std::min(m, 2 * n - 1);
  std::size_t refined = 0;
  for (std::size_t i = 0; i < n_ends && refined < kNewtonPoints; ++i) {
    if (best.f - lower <= 1e-12) return;
    bool dup = false;
    for (std::size_t j = 0; j < i && !dup; ++j) {
      cxd ip = 0.0;
      for (std::size_t r = 0; r < n; ++r) ip += std::conj(ends[j].c[r]) * ends[i].c[r];
      dup = std::abs(ip) > 0.999;
    }
    if (dup) continue;
    ++refined;

    for (std::size_t k = 0; k < m; ++k) {
      const cxd* gk = fl.row(k);
      cxd zk = 0.0;
      for (std::size_t r = 0; r < n; ++r) zk += std::conj(gk[r]) * ends[i].c[r];
      fe[k] = std::norm(zk);
      ord[k] = k;
    }
    std::stable_sort(ord.begin(), ord.begin() + m,
                     [&](std::size_t x, std::size_t y) { return fe[x] > fe[y]; });

    std::array<std::size_t, kMaxVecs> act;
    for (std::size_t asz = 2; asz <= amax; ++asz) {
      std::copy(ord.begin(), ord.begin() + asz, act.begin());
      for (int variant = 0; variant < 2; ++variant) {
        if (best.f - lower <= 1e-12) return;
        if (variant == 1) {
          if (asz >= m || fe[ord[asz - 1]] - fe[ord[asz]] > 0.05 * fe[ord[0]]) break;
          act[asz - 1] = ord[asz];
        }
        std::copy(ends[i].c.begin(), ends[i].c.begin() + n, c.begin());
        const KktPoint kkt = newton_equalize(fl, c.data(), act.data(), asz);
        iterations += kkt.iterations;
        if (!kkt.converged) continue;
        offer(best, fl, c.data());
        build_weighted(fl, kkt.weights.data(), a.data());
        lower = std::max(lower, min_eigpair(a.data(), n, scratch.data()));
      }
    }
  }
}

}  // namespace

double cap_containment_probability(double lambda, std::size_t rx_antennas, std::size_t vectors) {
  if (!(lambda >= 0.0 && lambda <= 1.0))
    throw std::invalid_argument("cap_containment_probability: lambda outside [0, 1]");
  if (rx_antennas == 0) throw std::invalid_argument("cap_containment_probability: rx_antennas must be positive");
  const double inner = 1.0 - std::pow(1.0 - lambda, double(rx_antennas - 1));
  return std::pow(inner, double(vectors));
}

double iam_cdf_lower_bound(double lambda, std::size_t transmitters, std::size_t rx_antennas) {
  if (transmitters <= rx_antennas)
    throw std::invalid_argument("iam_cdf_lower_bound: requires transmitters > rx_antennas");
  return cap_containment_probability(lambda, rx_antennas, transmitters - rx_antennas);
}

double min_iam_expectation_bound(std::size_t users, std::size_t transmitters, std::size_t rx_antennas) {
  if (users == 0) throw std::invalid_argument("min_iam_expectation_bound: users must be positive");
  if (transmitters <= rx_antennas)
    throw std::invalid_argument("min_iam_expectation_bound: requires transmitters > rx_antennas");
  return std::pow(double(users), -1.0 / double(transmitters - rx_antennas));
}

double iam_dual_lower_bound(std::span<const CVec> interferers, int iterations) {
  if (iterations < 1) throw std::invalid_argument("iam_dual_lower_bound: iterations must be positive");
  Flat fl;
  load_normalized(interferers, fl);
  return dual_ascent_impl(fl, iterations, [](const cxd*) {}, nullptr);
}

AlignmentResult iam(std::span<const CVec> interferers) {
  Flat fl;
  load_normalized(interferers, fl);
  const std::size_t m = fl.m, n = fl.n;

  AlignmentResult out;
  out.c_star = CVec(n);

  // Exact-alignment shortcut: if the interferers do not span the receive
  // space, the least-excited direction nulls all of them at once.
  {
    std::array<cxd, kMaxDim * kMaxDim> a;
    std::array<double, kMaxDim> evals;
    std::array<cxd, kMaxDim * kMaxDim> vecs;
    build_weighted(fl, nullptr, a.data());
    detail::jacobi_hermitian(a.data(), n, evals.data(), vecs.data());
    if (evals[n - 1] <= 1e-13 * std::max(1.0, evals[0])) {
      for (std::size_t j = 0; j < n; ++j) out.c_star[j] = vecs[(n - 1) * n + j];
      std::array<cxd, kMaxDim> c;
      std::copy(out.c_star.entries().begin(), out.c_star.entries().end(), c.begin());
      out.lambda_star = exact_objective(fl, c.data());
      out.certified_gap = out.lambda_star;
      out.iterations = 0;
      return out;
    }
  }

  BestPoint best;
  int iterations = 0;

  // Dual ascent up front: a certified floor, primal offers from every
  // eigenvector, and averaged weights for the reduced-plane candidate.
  std::array<double, kMaxVecs> wavg;
  int dual_used = 0;
  double lower = dual_ascent_impl(
      fl, kDualIters, [&](const cxd* vmin) { offer(best, fl, vmin); }, &dual_used, wavg.data());
  iterations += dual_used;

  std::array<std::array<cxd, kMaxDim>, kMaxCand> cand;
  std::size_t n_cand = build_candidates(fl, cand.data(), kMaxCand);
  n_cand = append_pair_candidates(fl, cand.data(), n_cand, kMaxCand);
  n_cand = append_bloch_candidate(fl, wavg.data(), cand.data(), n_cand, kMaxCand);

  std::array<double, kMaxCand> cand_f;
  for (std::size_t i = 0; i < n_cand; ++i) {
    cand_f[i] = exact_objective(fl, cand[i].data());
    if (cand_f[i] < best.f) {
      best.f = cand_f[i];
      std::copy(cand[i].begin(), cand[i].begin() + n, best.c.begin());
    }
  }

  std::array<std::size_t, kMaxCand> order;
  for (std::size_t i = 0; i < n_cand; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.begin() + n_cand,
                   [&](std::size_t x, std::size_t y) { return cand_f[x] < cand_f[y]; });

  // Anneal the most promising starts, remembering where each one settles so
  // distinct basins stay visible to the Newton stage.
  std::array<BestPoint, kPgdStarts + 1> ends;
  std::size_t n_ends = 0;
  std::array<cxd, kMaxDim> c;
  const std::size_t starts = std::min<std::size_t>(kPgdStarts, n_cand);
  for (std::size_t i = 0; i < starts; ++i) {
    std::copy(cand[order[i]].begin(), cand[order[i]].begin() + n, c.begin());
    BestPoint local;
    offer(local, fl, c.data());
    iterations += smoothed_descent(fl, c.data(), kStageIters, kStageMuHi, kStageMuLo, kStageEtaHi,
                                   kStageEtaLo, local);
    if (local.f < best.f) best = local;
    ends[n_ends++] = local;
  }

  std::copy(best.c.begin(), best.c.begin() + n, c.begin());
  iterations += smoothed_descent(fl, c.data(), kPolishIters, kPolishMuHi, kPolishMuLo, kPolishEtaHi,
                                 kPolishEtaLo, best);
  ends[n_ends++] = best;

  newton_refine_ends(fl, ends.data(), n_ends, best, lower, iterations);

  // When the certificate leaves doubt, sweep a wide multistart from a fixed
  // internal seed (identical inputs still give identical outputs) to chase
  // basins the structured candidates missed, and refine the distinct
  // survivors the same way.
  if (best.f - lower > 1e-9) {
    RngStream esc(7, make_stream_id(StreamPurpose::generic, 911, 0));
    std::array<BestPoint, kEscStarts> pool;
    for (std::size_t s = 0; s < kEscStarts; ++s) {
      double nn = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        c[j] = esc.complex_gaussian();
        nn += std::norm(c[j]);
      }
      if (!(nn > 1e-280)) continue;
      const double inv = 1.0 / std::sqrt(nn);
      for (std::size_t j = 0; j < n; ++j) c[j] *= inv;
      crude_descent(fl, c.data(), pool[s]);
      iterations += kCrudeSteps;
    }
    std::stable_sort(pool.begin(), pool.end(),
                     [](const BestPoint& x, const BestPoint& y) { return x.f < y.f; });

    std::array<BestPoint, kPgdStarts> ends2;
    std::array<std::size_t, kPgdStarts> taken;
    std::size_t n2 = 0;
    for (std::size_t i = 0; i < kEscStarts && n2 < kPgdStarts; ++i) {
      if (pool[i].f > 1.0) break;
      bool dup = false;
      for (std::size_t j = 0; j < n2 && !dup; ++j) {
        cxd ip = 0.0;
        for (std::size_t r = 0; r < n; ++r) ip += std::conj(pool[taken[j]].c[r]) * pool[i].c[r];
        dup = std::abs(ip) > 0.999;
      }
      if (dup) continue;
      taken[n2] = i;
      std::copy(pool[i].c.begin(), pool[i].c.begin() + n, c.begin());
      BestPoint local = pool[i];
      iterations += smoothed_descent(fl, c.data(), kStageIters, kStageMuHi, kStageMuLo, kStageEtaHi,
                                     kStageEtaLo, local);
      if (local.f < best.f) best = local;
      ends2[n2++] = local;
    }
    newton_refine_ends(fl, ends2.data(), n2, best, lower, iterations);
  }

  for (std::size_t j = 0; j < n; ++j) out.c_star[j] = best.c[j];
  out.lambda_star = best.f;
  out.iterations = iterations;
  out.certified_gap = std::max(0.0, best.f - lower);
  return out;
}

double iam_oracle(std::span<const CVec> interferers, std::size_t samples, RngStream& rng) {
  if (interferers.empty()) throw std::invalid_argument("iam_oracle: need at least one interferer");
  if (samples == 0) throw std::invalid_argument("iam_oracle: samples must be positive");
  const std::size_t m = interferers.size();
  const std::size_t n = interferers[0].dim();

  std::vector<cxd> g(m * n);
  for (std::size_t k = 0; k < m; ++k) {
    if (interferers[k].dim() != n) throw std::invalid_argument("iam_oracle: inconsistent dimensions");
    double nn = 0.0;
    for (std::size_t j = 0; j < n; ++j) nn += std::norm(interferers[k][j]);
    if (!(std::abs(nn - 1.0) <= 1e-9)) throw std::invalid_argument("iam_oracle: interferer not unit norm");
    const double inv = 1.0 / std::sqrt(nn);
    for (std::size_t j = 0; j < n; ++j) g[k * n + j] = interferers[k][j] * inv;
  }

  std::vector<cxd> cv(n);
  double best = 2.0;
  for (std::size_t s = 0; s < samples; ++s) {
    double nn = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      cv[j] = rng.complex_gaussian();
      nn += std::norm(cv[j]);
    }
    if (!(nn > 1e-280)) continue;
    double inv = 1.0 / std::sqrt(nn);
    for (std::size_t j = 0; j < n; ++j) cv[j] *= inv;

    double eta = 0.35;
    for (int step = 0; step <= 50; ++step) {
      double big = -1.0;
      std::size_t kstar = 0;
      cxd zstar = 0.0;
      for (std::size_t k = 0; k < m; ++k) {
        cxd z = 0.0;
        for (std::size_t j = 0; j < n; ++j) z += std::conj(g[k * n + j]) * cv[j];
        const double f = std::norm(z);
        if (f > big) {
          big = f;
          kstar = k;
          zstar = z;
        }
      }
      best = std::min(best, big);
      if (step == 50) break;

      nn = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const cxd grad = zstar * g[kstar * n + j] - big * cv[j];
        cv[j] -= eta * grad;
        nn += std::norm(cv[j]);
      }
      inv = 1.0 / std::sqrt(nn);
      for (std::size_t j = 0; j < n; ++j) cv[j] *= inv;
      eta *= 0.92;
    }
  }
  return best;
}

}  // namespace ibcsim
