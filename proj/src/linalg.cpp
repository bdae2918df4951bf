#include "abjam/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace abjam {

namespace {

void require_square(const CMatrix& a, const char* op) {
  if (a.rows() != a.cols())
    throw DimensionError(std::string(op) + ": matrix must be square, got " +
                         std::to_string(a.rows()) + "x" + std::to_string(a.cols()));
}

// shared elimination core: returns row-echelon pivots (product = det up to
// sign) without building L; `fail_below` > 0 turns tiny pivots into errors
struct EchelonResult {
  std::vector<cdouble> pivots;
  int sign = 1;
  bool singular = false;
};

EchelonResult eliminate(CMatrix a, double fail_below) {
  const std::size_t n = a.rows();
  EchelonResult res;
  res.pivots.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t best = k;
    double best_mag = std::abs(a(k, k));
    for (std::size_t i = k + 1; i < n; ++i) {
      const double mag = std::abs(a(i, k));
      if (mag > best_mag) {
        best = i;
        best_mag = mag;
      }
    }
    if (fail_below > 0.0 && best_mag < fail_below)
      throw SingularMatrixError("inverse: elimination pivot " + std::to_string(best_mag) +
                                " below " + std::to_string(fail_below));
    if (best_mag == 0.0) {
      res.singular = true;
      return res;
    }
    if (best != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(a(k, j), a(best, j));
      res.sign = -res.sign;
    }
    const cdouble pivot = a(k, k);
    res.pivots.push_back(pivot);
    for (std::size_t i = k + 1; i < n; ++i) {
      const cdouble factor = a(i, k) / pivot;
      if (factor == cdouble(0.0, 0.0)) continue;
      for (std::size_t j = k; j < n; ++j) a(i, j) -= factor * a(k, j);
    }
  }
  return res;
}

}  // namespace

CMatrix CMatrix::identity(std::size_t n) {
  CMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

CMatrix conj_transpose(const CMatrix& a) {
  CMatrix out(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = std::conj(a(i, j));
  return out;
}

CMatrix matmul(const CMatrix& a, const CMatrix& b) {
  if (a.cols() != b.rows())
    throw DimensionError("matmul: inner dimensions disagree (" + std::to_string(a.cols()) +
                         " vs " + std::to_string(b.rows()) + ")");
  CMatrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const cdouble aik = a(i, k);
      if (aik == cdouble(0.0, 0.0)) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
    }
  }
  return out;
}

CMatrix add(const CMatrix& a, const CMatrix& b) {
  if (!a.same_shape(b)) throw DimensionError("add: shapes disagree");
  CMatrix out = a;
  for (std::size_t i = 0; i < out.data().size(); ++i) out.data()[i] += b.data()[i];
  return out;
}

CMatrix subtract(const CMatrix& a, const CMatrix& b) {
  if (!a.same_shape(b)) throw DimensionError("subtract: shapes disagree");
  CMatrix out = a;
  for (std::size_t i = 0; i < out.data().size(); ++i) out.data()[i] -= b.data()[i];
  return out;
}

CMatrix scale(const CMatrix& a, cdouble factor) {
  CMatrix out = a;
  for (auto& v : out.data()) v *= factor;
  return out;
}

std::vector<cdouble> matvec(const CMatrix& a, std::span<const cdouble> x) {
  if (a.cols() != x.size()) throw DimensionError("matvec: size mismatch");
  std::vector<cdouble> out(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    cdouble acc = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) acc += a(i, j) * x[j];
    out[i] = acc;
  }
  return out;
}

double max_abs(const CMatrix& a) {
  double best = 0.0;
  for (const auto& v : a.data()) best = std::max(best, std::abs(v));
  return best;
}

bool is_hermitian(const CMatrix& a, double rel_tol) {
  if (a.rows() != a.cols()) return false;
  const double tol = rel_tol * std::max(1.0, max_abs(a));
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = i; j < a.cols(); ++j)
      if (std::abs(a(i, j) - std::conj(a(j, i))) > tol) return false;
  return true;
}

cdouble det(const CMatrix& a) {
  require_square(a, "det");
  if (a.rows() == 0) return 1.0;
  EchelonResult res = eliminate(a, 0.0);
  if (res.singular) return 0.0;
  cdouble d = static_cast<double>(res.sign);
  for (const cdouble& p : res.pivots) d *= p;
  return d;
}

double log_abs_det(const CMatrix& a) {
  require_square(a, "log_abs_det");
  if (a.rows() == 0) return 0.0;
  EchelonResult res = eliminate(a, 0.0);
  if (res.singular) return -std::numeric_limits<double>::infinity();
  double acc = 0.0;
  for (const cdouble& p : res.pivots) acc += std::log(std::abs(p));
  return acc;
}

CMatrix inverse(const CMatrix& a) {
  require_square(a, "inverse");
  const std::size_t n = a.rows();
  if (n == 0) return a;

  // factor in place with partial pivoting; keep the permutation to solve
  CMatrix lu = a;
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  double log_det = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t best = k;
    double best_mag = std::abs(lu(k, k));
    for (std::size_t i = k + 1; i < n; ++i) {
      const double mag = std::abs(lu(i, k));
      if (mag > best_mag) {
        best = i;
        best_mag = mag;
      }
    }
    if (best_mag < 1e-14)
      throw SingularMatrixError("inverse: elimination pivot " + std::to_string(best_mag) +
                                " below 1e-14");
    if (best != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(lu(k, j), lu(best, j));
      std::swap(perm[k], perm[best]);
    }
    log_det += std::log(std::abs(lu(k, k)));
    for (std::size_t i = k + 1; i < n; ++i) {
      lu(i, k) /= lu(k, k);
      const cdouble factor = lu(i, k);
      for (std::size_t j = k + 1; j < n; ++j) lu(i, j) -= factor * lu(k, j);
    }
  }
  if (log_det < std::log(1e-30))
    throw SingularMatrixError("inverse: |det| below 1e-30");

  // solve A X = I column by column through the factors
  CMatrix out(n, n);
  std::vector<cdouble> work(n);
  for (std::size_t c = 0; c < n; ++c) {
    for (std::size_t i = 0; i < n; ++i) work[i] = (perm[i] == c) ? 1.0 : 0.0;
    for (std::size_t i = 1; i < n; ++i)  // forward: L y = P e_c
      for (std::size_t j = 0; j < i; ++j) work[i] -= lu(i, j) * work[j];
    for (std::size_t ii = n; ii-- > 0;) {  // backward: U x = y
      for (std::size_t j = ii + 1; j < n; ++j) work[ii] -= lu(ii, j) * work[j];
      work[ii] /= lu(ii, ii);
    }
    for (std::size_t i = 0; i < n; ++i) out(i, c) = work[i];
  }
  return out;
}

CMatrix cholesky(const CMatrix& a) {
  require_square(a, "cholesky");
  if (!is_hermitian(a, 1e-10))
    throw DimensionError("cholesky: matrix is not Hermitian");
  const std::size_t n = a.rows();
  CMatrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double diag = a(j, j).real();
    for (std::size_t k = 0; k < j; ++k) diag -= std::norm(l(j, k));
    if (diag <= 0.0)
      throw SingularMatrixError("cholesky: matrix is not positive definite (d=" +
                                std::to_string(diag) + " at " + std::to_string(j) + ")");
    const double ljj = std::sqrt(diag);
    l(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      cdouble acc = a(i, j);
      for (std::size_t k = 0; k < j; ++k) acc -= l(i, k) * std::conj(l(j, k));
      l(i, j) = acc / ljj;
    }
  }
  return l;
}

cdouble quad_form(std::span<const cdouble> y, const CMatrix& a) {
  if (a.rows() != a.cols() || a.rows() != y.size())
    throw DimensionError("quad_form: need square matrix matching vector length");
  cdouble acc = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    cdouble row_acc = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) row_acc += a(i, j) * y[j];
    acc += std::conj(y[i]) * row_acc;
  }
  return acc;
}

double quad_form_real(std::span<const cdouble> y, const CMatrix& a) {
  return quad_form(y, a).real();
}

}  // namespace abjam
