#include "abjam/features.hpp"

#include <cmath>
#include <string>

namespace abjam {

CMatrix sample_covariance(CMatrixView y) {
  if (y.rows == 0 || y.cols == 0)
    throw DimensionError("sample_covariance: empty sample block");
  CMatrix c(y.cols, y.cols);
  for (std::size_t n = 0; n < y.rows; ++n) {
    const cdouble* row = y.ptr + n * y.cols;
    for (std::size_t i = 0; i < y.cols; ++i)
      for (std::size_t j = 0; j < y.cols; ++j) c(i, j) += row[i] * std::conj(row[j]);
  }
  const double inv_n = 1.0 / static_cast<double>(y.rows);
  for (auto& v : c.data()) v *= inv_n;
  return c;
}

PilotCovariances pilot_covariances(const ReceivedBlock& block, const BackscatterFrame& frame) {
  const std::size_t p = frame.pilot_count;
  if (frame.encoded.size() != block.config.frame_bits)
    throw DimensionError("pilot_covariances: frame and block lengths disagree");
  if (p > block.config.frame_bits)
    throw DimensionError("pilot_covariances: more pilots than symbols");

  const std::size_t m = block.config.antennas;
  const std::size_t n = block.config.spreading;
  CMatrix sum0(m, m), sum1(m, m);
  std::size_t count0 = 0, count1 = 0;  // pilot symbols per state
  for (std::size_t i = 0; i < p; ++i) {
    CMatrix& sum = frame.encoded[i] == 0 ? sum0 : sum1;
    (frame.encoded[i] == 0 ? count0 : count1) += 1;
    const CMatrixView y = block.symbol(i);
    for (std::size_t r = 0; r < n; ++r) {
      const cdouble* row = y.ptr + r * m;
      for (std::size_t a = 0; a < m; ++a)
        for (std::size_t b = 0; b < m; ++b) sum(a, b) += row[a] * std::conj(row[b]);
    }
  }
  if (count0 == 0 || count1 == 0)
    throw DegenerateInputError("pilot_covariances: pilot state " +
                               std::string(count0 == 0 ? "0" : "1") + " has no symbols");

  // average over the samples actually seen per state (the balanced-pattern
  // form 2/(P N) assumes equal shares), plus the unit-noise identity
  PilotCovariances out{CMatrix::identity(m), CMatrix::identity(m)};
  const double w0 = 1.0 / (static_cast<double>(count0) * static_cast<double>(n));
  const double w1 = 1.0 / (static_cast<double>(count1) * static_cast<double>(n));
  for (std::size_t i = 0; i < out.k0.data().size(); ++i) {
    out.k0.data()[i] += sum0.data()[i] * w0;
    out.k1.data()[i] += sum1.data()[i] * w1;
  }
  return out;
}

std::pair<CMatrix, CMatrix> whiten(const CMatrix& c, const CMatrix& kt0, const CMatrix& kt1) {
  return whiten_inv(c, inverse(kt0), inverse(kt1));
}

std::pair<CMatrix, CMatrix> whiten_inv(const CMatrix& c, const CMatrix& kt0_inv,
                                       const CMatrix& kt1_inv) {
  return {matmul(c, kt0_inv), matmul(c, kt1_inv)};
}

FeatureSequence featurize(const CMatrix& c0, const CMatrix& c1) {
  if (!c0.same_shape(c1)) throw DimensionError("featurize: matrices must share a shape");
  if (c0.rows() == 0) throw DimensionError("featurize: empty matrices");
  FeatureSequence seq;
  seq.steps = 2 * c0.rows() * c0.cols();
  seq.values.reserve(seq.steps * 3);
  for (const CMatrix* mat : {&c0, &c1}) {
    for (const cdouble& v : mat->data()) {
      seq.values.push_back(v.real());
      seq.values.push_back(v.imag());
      seq.values.push_back(std::abs(v));
    }
  }
  return seq;
}

}  // namespace abjam
