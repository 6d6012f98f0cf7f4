#pragma once

#include <complex>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace ibcsim {

using cxd = std::complex<double>;

/// Dense complex column vector. All dimensions in this library are tiny
/// (antenna counts), so plain contiguous storage is enough.
class CVec {
 public:
  CVec() = default;
  explicit CVec(std::size_t dim) : e_(dim) {}
  CVec(std::initializer_list<cxd> init) : e_(init) {}

  std::size_t dim() const { return e_.size(); }
  cxd& operator[](std::size_t i) { return e_[i]; }
  const cxd& operator[](std::size_t i) const { return e_[i]; }
  std::span<cxd> entries() { return e_; }
  std::span<const cxd> entries() const { return e_; }

 private:
  std::vector<cxd> e_;
};

double norm_squared(const CVec& v);
double norm(const CVec& v);

/// Inner product a'b, conjugating the first argument.
cxd dot(const CVec& a, const CVec& b);

/// v / ||v||. Throws std::invalid_argument on (near-)zero input.
CVec normalized(const CVec& v);

/// General rectangular complex matrix, row major. Used for per-link MIMO
/// channels and beam collections; no heavy linear algebra lives here.
class CMat {
 public:
  CMat() = default;
  CMat(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), a_(rows * cols) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  cxd& operator()(std::size_t i, std::size_t j) { return a_[i * cols_ + j]; }
  const cxd& operator()(std::size_t i, std::size_t j) const { return a_[i * cols_ + j]; }

  CVec column(std::size_t j) const;
  void set_column(std::size_t j, const CVec& v);

  /// Matrix-vector product.
  CVec apply(const CVec& x) const;

 private:
  std::size_t rows_ = 0, cols_ = 0;
  std::vector<cxd> a_;
};

/// Hermitian matrix with storage that is exactly conjugate-symmetric: every
/// write mirrors the conjugate entry and diagonal imaginary parts are pinned
/// to zero, so downstream quadratic forms cannot drift off the real axis.
class HermitianMat {
 public:
  HermitianMat() = default;
  explicit HermitianMat(std::size_t dim) : dim_(dim), a_(dim * dim) {}

  std::size_t dim() const { return dim_; }
  const cxd& operator()(std::size_t i, std::size_t j) const { return a_[i * dim_ + j]; }

  void set(std::size_t i, std::size_t j, cxd value);

  /// this += weight * h h'. Keeps exact conjugate symmetry.
  void add_scaled_outer(const CVec& h, double weight);

  void add_identity(double value);

  /// A x without any symmetry shortcuts.
  CVec apply(const CVec& x) const;

  double trace() const;
  double frobenius_norm() const;

 private:
  std::size_t dim_ = 0;
  std::vector<cxd> a_;
};

/// Eigenvalues sorted descending; eigenvectors[i] pairs with eigenvalues[i],
/// unit norm, first nonzero component rotated to the positive real axis.
struct EigenDecomposition {
  std::vector<double> eigenvalues;
  std::vector<CVec> eigenvectors;
};

/// Full eigensystem of a Hermitian matrix via cyclic Jacobi rotations.
/// Deterministic for identical input bytes; intended for dim <= 16.
EigenDecomposition hermitian_eig(const HermitianMat& m);

/// Solves (I + M) x = b with M Hermitian positive semidefinite, by Cholesky.
CVec solve_identity_plus(const HermitianMat& m, const CVec& b);

/// v' M v as a real number. The imaginary part is checked against a scaled
/// tolerance and its magnitude must be negligible; otherwise this throws.
double quadratic_form(const CVec& v, const HermitianMat& m);

namespace detail {

/// In-place cyclic Jacobi on a row-major dim x dim Hermitian block held in
/// caller storage. `a` is destroyed. `evals` gets descending eigenvalues and
/// row i of `vecs` the matching unit eigenvector (phase-fixed). Exists so hot
/// loops can run the solver without touching the heap.
void jacobi_hermitian(cxd* a, std::size_t dim, double* evals, cxd* vecs);

}  // namespace detail

}  // namespace ibcsim
