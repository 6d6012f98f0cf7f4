#include "ibcsim/numerics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace ibcsim {

namespace {

constexpr std::size_t kMaxDim = 16;

}  // namespace

double norm_squared(const CVec& v) {
  double s = 0.0;
  for (std::size_t i = 0; i < v.dim(); ++i) s += std::norm(v[i]);
  return s;
}

double norm(const CVec& v) { return std::sqrt(norm_squared(v)); }

cxd dot(const CVec& a, const CVec& b) {
  if (a.dim() != b.dim()) throw std::invalid_argument("dot: dimension mismatch");
  cxd s = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) s += std::conj(a[i]) * b[i];
  return s;
}

CVec normalized(const CVec& v) {
  double n = norm(v);
  if (!(n > 1e-150)) throw std::invalid_argument("normalized: zero vector");
  CVec out(v.dim());
  for (std::size_t i = 0; i < v.dim(); ++i) out[i] = v[i] / n;
  return out;
}

CVec CMat::column(std::size_t j) const {
  if (j >= cols_) throw std::invalid_argument("CMat::column: index out of range");
  CVec out(rows_);
  for (std::size_t i = 0; i < rows_; ++i) out[i] = a_[i * cols_ + j];
  return out;
}

void CMat::set_column(std::size_t j, const CVec& v) {
  if (j >= cols_ || v.dim() != rows_) throw std::invalid_argument("CMat::set_column: shape mismatch");
  for (std::size_t i = 0; i < rows_; ++i) a_[i * cols_ + j] = v[i];
}

CVec CMat::apply(const CVec& x) const {
  if (x.dim() != cols_) throw std::invalid_argument("CMat::apply: dimension mismatch");
  CVec out(rows_);
  for (std::size_t i = 0; i < rows_; ++i) {
    cxd s = 0.0;
    for (std::size_t j = 0; j < cols_; ++j) s += a_[i * cols_ + j] * x[j];
    out[i] = s;
  }
  return out;
}

void HermitianMat::set(std::size_t i, std::size_t j, cxd value) {
  if (i >= dim_ || j >= dim_) throw std::invalid_argument("HermitianMat::set: index out of range");
  if (i == j) {
    a_[i * dim_ + i] = cxd(value.real(), 0.0);
  } else {
    a_[i * dim_ + j] = value;
    a_[j * dim_ + i] = std::conj(value);
  }
}

void HermitianMat::add_scaled_outer(const CVec& h, double weight) {
  if (h.dim() != dim_) throw std::invalid_argument("HermitianMat::add_scaled_outer: dimension mismatch");
  for (std::size_t i = 0; i < dim_; ++i) {
    a_[i * dim_ + i] += cxd(weight * std::norm(h[i]), 0.0);
    for (std::size_t j = i + 1; j < dim_; ++j) {
      cxd u = weight * (h[i] * std::conj(h[j]));
      a_[i * dim_ + j] += u;
      a_[j * dim_ + i] += std::conj(u);
    }
  }
}

void HermitianMat::add_identity(double value) {
  for (std::size_t i = 0; i < dim_; ++i) a_[i * dim_ + i] += value;
}

CVec HermitianMat::apply(const CVec& x) const {
  if (x.dim() != dim_) throw std::invalid_argument("HermitianMat::apply: dimension mismatch");
  CVec out(dim_);
  for (std::size_t i = 0; i < dim_; ++i) {
    cxd s = 0.0;
    for (std::size_t j = 0; j < dim_; ++j) s += a_[i * dim_ + j] * x[j];
    out[i] = s;
  }
  return out;
}

double HermitianMat::trace() const {
  double t = 0.0;
  for (std::size_t i = 0; i < dim_; ++i) t += a_[i * dim_ + i].real();
  return t;
}

double HermitianMat::frobenius_norm() const {
  double s = 0.0;
  for (const cxd& v : a_) s += std::norm(v);
  return std::sqrt(s);
}

namespace detail {

void jacobi_hermitian(cxd* a, std::size_t dim, double* evals, cxd* vecs) {
  if (dim == 0 || dim > kMaxDim) throw std::invalid_argument("jacobi_hermitian: bad dimension");
  const std::size_t n = dim;

  // Rotation accumulator; column k converges to eigenvector k.
  std::array<cxd, kMaxDim * kMaxDim> v{};
  for (std::size_t i = 0; i < n; ++i) v[i * n + i] = 1.0;

  double fro2 = 0.0;
  for (std::size_t i = 0; i < n * n; ++i) fro2 += std::norm(a[i]);
  const double off_target2 = fro2 * 1e-28 + 1e-300;

  const int max_sweeps = 48;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off2 = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off2 += std::norm(a[p * n + q]);
    if (off2 <= off_target2) break;

    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const cxd apq = a[p * n + q];
        const double r = std::abs(apq);
        if (!(r > 0.0) || r * r <= off_target2 / double(n * n)) continue;

        const double app = a[p * n + p].real();
        const double aqq = a[q * n + q].real();
        const double tau = (aqq - app) / (2.0 * r);
        const double t = (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        const cxd e = apq / r;
        const cxd ec = std::conj(e);

        for (std::size_t j = 0; j < n; ++j) {
          if (j == p || j == q) continue;
          const cxd ajp = a[j * n + p];
          const cxd ajq = a[j * n + q];
          const cxd njp = c * ajp - s * (ec * ajq);
          const cxd njq = s * (e * ajp) + c * ajq;
          a[j * n + p] = njp;
          a[p * n + j] = std::conj(njp);
          a[j * n + q] = njq;
          a[q * n + j] = std::conj(njq);
        }
        a[p * n + p] = app - t * r;
        a[q * n + q] = aqq + t * r;
        a[p * n + q] = 0.0;
        a[q * n + p] = 0.0;

        for (std::size_t j = 0; j < n; ++j) {
          const cxd vjp = v[j * n + p];
          const cxd vjq = v[j * n + q];
          v[j * n + p] = c * vjp - s * (ec * vjq);
          v[j * n + q] = s * (e * vjp) + c * vjq;
        }
      }
    }
  }

  std::array<std::size_t, kMaxDim> order;
  for (std::size_t k = 0; k < n; ++k) order[k] = k;
  std::stable_sort(order.begin(), order.begin() + n, [&](std::size_t x, std::size_t y) {
    return a[x * n + x].real() > a[y * n + y].real();
  });

  for (std::size_t rank = 0; rank < n; ++rank) {
    const std::size_t k = order[rank];
    evals[rank] = a[k * n + k].real();
    cxd* row = vecs + rank * n;

    double nrm2 = 0.0;
    for (std::size_t j = 0; j < n; ++j) nrm2 += std::norm(v[j * n + k]);
    const double inv = 1.0 / std::sqrt(nrm2);

    double top = 0.0;
    for (std::size_t j = 0; j < n; ++j) top = std::max(top, std::abs(v[j * n + k]));
    cxd phase = 1.0;
    for (std::size_t j = 0; j < n; ++j) {
      const cxd x = v[j * n + k];
      if (std::abs(x) > 1e-12 * top) {
        phase = std::conj(x) / std::abs(x);
        break;
      }
    }
    for (std::size_t j = 0; j < n; ++j) row[j] = v[j * n + k] * phase * inv;
  }
}

}  // namespace detail

EigenDecomposition hermitian_eig(const HermitianMat& m) {
  const std::size_t n = m.dim();
  if (n == 0 || n > kMaxDim) throw std::invalid_argument("hermitian_eig: bad dimension");

  std::array<cxd, kMaxDim * kMaxDim> a;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a[i * n + j] = m(i, j);

  std::array<double, kMaxDim> evals;
  std::array<cxd, kMaxDim * kMaxDim> vecs;
  detail::jacobi_hermitian(a.data(), n, evals.data(), vecs.data());

  EigenDecomposition out;
  out.eigenvalues.assign(evals.begin(), evals.begin() + n);
  out.eigenvectors.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    CVec vec(n);
    for (std::size_t j = 0; j < n; ++j) vec[j] = vecs[k * n + j];
    out.eigenvectors.push_back(std::move(vec));
  }
  return out;
}

CVec solve_identity_plus(const HermitianMat& m, const CVec& b) {
  const std::size_t n = m.dim();
  if (n == 0 || n > kMaxDim) throw std::invalid_argument("solve_identity_plus: bad dimension");
  if (b.dim() != n) throw std::invalid_argument("solve_identity_plus: dimension mismatch");

  // Cholesky of I + M; the identity shift keeps it positive definite for any
  // positive semidefinite M.
  std::array<cxd, kMaxDim * kMaxDim> L{};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      cxd s = m(i, j);
      if (i == j) s += 1.0;
      for (std::size_t k = 0; k < j; ++k) s -= L[i * n + k] * std::conj(L[j * n + k]);
      if (i == j) {
        const double d = s.real();
        if (!(d > 0.0)) throw std::invalid_argument("solve_identity_plus: matrix is not positive semidefinite");
        L[i * n + i] = std::sqrt(d);
      } else {
        L[i * n + j] = s / L[j * n + j].real();
      }
    }
  }

  std::array<cxd, kMaxDim> y;
  for (std::size_t i = 0; i < n; ++i) {
    cxd s = b[i];
    for (std::size_t k = 0; k < i; ++k) s -= L[i * n + k] * y[k];
    y[i] = s / L[i * n + i].real();
  }

  CVec x(n);
  for (std::size_t ii = n; ii-- > 0;) {
    cxd s = y[ii];
    for (std::size_t k = ii + 1; k < n; ++k) s -= std::conj(L[k * n + ii]) * x[k];
    x[ii] = s / L[ii * n + ii].real();
  }
  return x;
}

double quadratic_form(const CVec& v, const HermitianMat& m) {
  if (v.dim() != m.dim()) throw std::invalid_argument("quadratic_form: dimension mismatch");
  cxd z = 0.0;
  for (std::size_t i = 0; i < v.dim(); ++i) {
    cxd row = 0.0;
    for (std::size_t j = 0; j < v.dim(); ++j) row += m(i, j) * v[j];
    z += std::conj(v[i]) * row;
  }
  const double scale = m.frobenius_norm() * norm_squared(v);
  if (std::abs(z.imag()) > 1e-9 * scale + 1e-300)
    throw std::invalid_argument("quadratic_form: non-negligible imaginary part");
  return z.real();
}

}  // namespace ibcsim
