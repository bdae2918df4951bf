#pragma once
// Dense complex matrices and the small set of operations the detector and
// rate estimator need: products, pivoted LU (determinant / inverse),
// Hermitian checks, Cholesky factors and quadratic forms.  Row-major
// storage so a matrix row is a contiguous span (received blocks keep one
// time sample per row and the hot paths walk rows).

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

#include "abjam/errors.hpp"

namespace abjam {

using cdouble = std::complex<double>;

class CMatrix {
 public:
  CMatrix() = default;
  CMatrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_(rows * cols) {}

  static CMatrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  cdouble& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  const cdouble& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<cdouble> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const cdouble> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

  std::vector<cdouble>& data() { return data_; }
  const std::vector<cdouble>& data() const { return data_; }

  bool same_shape(const CMatrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<cdouble> data_;
};

// read-only view over externally owned row-major complex data
struct CMatrixView {
  const cdouble* ptr = nullptr;
  std::size_t rows = 0;
  std::size_t cols = 0;

  CMatrixView() = default;
  CMatrixView(const cdouble* p, std::size_t r, std::size_t c) : ptr(p), rows(r), cols(c) {}
  CMatrixView(const CMatrix& m) : ptr(m.data().data()), rows(m.rows()), cols(m.cols()) {}

  std::span<const cdouble> row(std::size_t i) const { return {ptr + i * cols, cols}; }
};

CMatrix conj_transpose(const CMatrix& a);
CMatrix matmul(const CMatrix& a, const CMatrix& b);
CMatrix add(const CMatrix& a, const CMatrix& b);
CMatrix subtract(const CMatrix& a, const CMatrix& b);
CMatrix scale(const CMatrix& a, cdouble factor);
std::vector<cdouble> matvec(const CMatrix& a, std::span<const cdouble> x);

// largest entry magnitude; 0 for an empty matrix
double max_abs(const CMatrix& a);

// A == A^H entrywise within rel_tol * max(1, max_abs(A))
bool is_hermitian(const CMatrix& a, double rel_tol = 1e-12);

// determinant via partially pivoted elimination; returns 0 on an exactly
// vanishing pivot rather than throwing (singular matrices have det 0)
cdouble det(const CMatrix& a);

// ln|det A|, -inf when singular
double log_abs_det(const CMatrix& a);

// inverse via pivoted LU; throws SingularMatrixError when the best pivot
// falls below 1e-14 or |det| below 1e-30
CMatrix inverse(const CMatrix& a);

// lower-triangular L with L L^H = A for Hermitian positive definite A;
// throws SingularMatrixError when a diagonal term is not positive
CMatrix cholesky(const CMatrix& a);

// y^H A y (scalar); sizes must agree
cdouble quad_form(std::span<const cdouble> y, const CMatrix& a);

// real part of y^H A y, the value the Gaussian log-density needs
double quad_form_real(std::span<const cdouble> y, const CMatrix& a);

}  // namespace abjam
